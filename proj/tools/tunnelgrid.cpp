// tunnelgrid: batch front end. Exit codes: 0 ok, 2 splitting unresolved, 1 error.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "tunnelgrid/cli/commands.hpp"

namespace {

std::size_t default_threads() {
    if (const char* env = std::getenv("TUNNELGRID_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0) return static_cast<std::size_t>(n);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring TUNNELGRID_THREADS='" << env << "'\n";
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
    namespace tc = tunnelgrid::cli;
    CLI::App app{"Tunnel splittings of configurational two-level systems on finite-difference grids"};
    app.require_subcommand(1, 1);

    std::string config;
    std::string out;
    std::size_t threads = 0;
    std::uint64_t seed = 0;
    bool force = false;
    app.add_option("--config", config, "run configuration (INI)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory (default: [case] out, else ./out/<case>)");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads (env TUNNELGRID_THREADS)")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Lanczos start-vector seed");
    app.add_flag("--force", force, "overwrite existing result files");
    app.fallthrough();

    for (const auto& name : tc::command_names()) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const auto cfg = tc::load_config(config);
        tc::RunOptions opt;
        opt.out = !out.empty() ? std::filesystem::path(out) : cfg.out ? *cfg.out : std::filesystem::path("out") / cfg.name;
        opt.force = force;
        opt.threads = *threads_opt ? threads : default_threads();
        if (*seed_opt) opt.seed = seed;
        const auto command = app.get_subcommands().front()->get_name();
        return tc::dispatch(command, cfg, opt, std::cout);
    } catch (const tunnelgrid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tc::exit_error;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return tc::exit_error;
    }
}
