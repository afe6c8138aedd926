#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "tunnelgrid/cli/commands.hpp"

using namespace tunnelgrid;
using namespace tunnelgrid::cli;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

struct Run {
    int code = -1;
    std::string log;
};

Run run(const std::string& command, const std::string& config, const std::filesystem::path& out, bool force = false) {
    RunOptions opt;
    opt.out = out;
    opt.force = force;
    std::ostringstream log;
    Run r;
    r.code = dispatch(command, parse_config(config), opt, log);
    r.log = log.str();
    return r;
}

const std::string harmonic_cfg = R"([case]
name = ladder
[potential]
model = harmonic
quanta = 10
[grid]
counts = 201
[solver]
k = 5
seed = 1
)";

const std::string coupled_cfg = R"([case]
name = oh
[potential]
model = coupled
preset = oh_like
[grid]
counts = 7,13,7,11
[solver]
k = 4
seed = 12345
)";

int tool(const std::string& args, const std::filesystem::path& dir) {
    const std::string cmd = std::string(TUNNELGRID_TOOL) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, StrictSchema) {
    EXPECT_NO_THROW(parse_config(harmonic_cfg));
    for (const std::string bad : {"[grid]\ncount = 3\n", "[grids]\ncounts = 3\n", "[potential]\nmodel = harmonic\nquanta = 10\nv_b = 3\n",
                                  "[grid]\norder = 3\n", "[solver]\nk = two\n", "[potential]\nmodel = nope\n", "[fls]\ndelta = 1,2\n"}) {
        try {
            parse_config(bad);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ConfigError) << bad;
        }
    }
}

TEST(Config, ParsedValues) {
    const auto c = parse_config(coupled_cfg + "[subspace]\nactive = q_y, Q\npins = q_x:0.1\n");
    EXPECT_EQ(c.name, "oh");
    EXPECT_EQ(c.grid.counts, (std::vector<std::size_t>{7, 13, 7, 11}));
    EXPECT_EQ(c.solver.seed, 12345u);
    EXPECT_EQ(c.subspace.active, (std::vector<std::string>{"q_y", "Q"}));
    EXPECT_EQ(c.subspace.pins.at("q_x"), 0.1);
}

TEST(Solve, HarmonicLadderInCsv) {
    oracle::TempDir dir("solve");
    const auto r = run("solve", harmonic_cfg, dir.path());
    EXPECT_EQ(r.code, exit_ok);
    EXPECT_NE(r.log.find("J_meV=NA"), std::string::npos);
    const auto rows = csv_rows(slurp(dir.path() / "spectrum.csv"));
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0][0], "index");
    for (int n = 0; n < 5; ++n) EXPECT_NEAR(std::stod(rows[static_cast<std::size_t>(n) + 1][1]), 10.0 * (n + 0.5), 0.005 * 10.0 * (n + 0.5));
    for (const char* f : {"spectrum.json", "spectrum.csv", "manifest.json"}) EXPECT_TRUE(std::filesystem::exists(dir.path() / f));
}

TEST(Solve, CoupledFixtureReportsSplitting) {
    oracle::TempDir dir("solve");
    const auto r = run("solve", coupled_cfg, dir.path());
    EXPECT_EQ(r.code, exit_ok);
    const auto pos = r.log.find("J_meV=");
    ASSERT_NE(pos, std::string::npos);
    const double j = std::stod(r.log.substr(pos + 6));
    EXPECT_GT(j, 0.0);
    const auto spec = nlohmann::json::parse(slurp(dir.path() / "spectrum.json"));
    EXPECT_EQ(spec["splitting"]["status"], "ok");
    EXPECT_DOUBLE_EQ(spec["splitting"]["J_meV"].get<double>(), j);
    EXPECT_EQ(spec["states"][0]["parity"], "symmetric");
    EXPECT_EQ(spec["states"][1]["parity"], "antisymmetric");
    const auto manifest = nlohmann::json::parse(slurp(dir.path() / "manifest.json"));
    EXPECT_EQ(manifest["seed"], 12345u);
    EXPECT_EQ(manifest["residuals"].size(), 4u);
}

TEST(Solve, DeterministicAndHashTagged) {
    oracle::TempDir a("det"), b("det");
    run("solve", coupled_cfg, a.path());
    run("solve", coupled_cfg, b.path());
    const std::string hash = sha256_hex(coupled_cfg);
    for (const char* f : {"spectrum.json", "spectrum.csv", "manifest.json"}) {
        const auto text = slurp(a.path() / f);
        EXPECT_EQ(text, slurp(b.path() / f)) << f;
        EXPECT_NE(text.find(hash), std::string::npos) << f;
    }
}

TEST(Solve, RefusesToOverwriteWithoutForce) {
    oracle::TempDir dir("force");
    run("solve", harmonic_cfg, dir.path());
    const auto before = slurp(dir.path() / "spectrum.json");
    try {
        run("solve", harmonic_cfg, dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IoError);
    }
    EXPECT_EQ(run("solve", harmonic_cfg, dir.path(), true).code, exit_ok);
    EXPECT_EQ(slurp(dir.path() / "spectrum.json"), before);
}

TEST(SweepMass, ThreeRowsAndFit) {
    oracle::TempDir dir("sweep");
    const std::string cfg = coupled_cfg + "[mass]\nmasses = 180.948, 50.942, 92.906, 50.942\n";
    const auto r = run("sweep-mass", cfg, dir.path());
    EXPECT_EQ(r.code, exit_ok);
    EXPECT_NE(r.log.find("dropped 1 duplicate"), std::string::npos);
    const auto rows = csv_rows(slurp(dir.path() / "sweep.csv"));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"mass_amu", "scale_factor", "J_meV", "converged_flag"}));
    for (std::size_t i = 2; i < 4; ++i) EXPECT_LT(std::stod(rows[i][2]), std::stod(rows[i - 1][2]));
    const auto j = nlohmann::json::parse(slurp(dir.path() / "sweep.json"));
    EXPECT_GT(j["fit"]["r2"].get<double>(), 0.99);
    EXPECT_EQ(j["duplicates_dropped"], 1);
}

TEST(SweepMass, SingleMassRejected) {
    oracle::TempDir dir("sweep");
    try {
        run("sweep-mass", coupled_cfg + "[mass]\nmasses = 92.906\n", dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientPoints);
    }
    EXPECT_FALSE(std::filesystem::exists(dir.path() / "sweep.csv"));
}

TEST(Reduce, RowsDescendFromOneToFourDimensions) {
    oracle::TempDir dir("reduce");
    const std::string cfg = coupled_cfg + "[reduce]\nsubspaces = 1D:q_y | 2D:q_y,Q | 3D:q_x,q_y,q_z | 4D:q_x,q_y,q_z,Q\n";
    const auto r = run("reduce", cfg, dir.path());
    EXPECT_EQ(r.code, exit_ok);
    const auto j = nlohmann::json::parse(slurp(dir.path() / "reduce.json"));
    ASSERT_EQ(j["rows"].size(), 4u);
    std::map<std::string, double> js;
    for (const auto& row : j["rows"]) js[row["name"]] = row["J_meV"];
    EXPECT_GT(js["1D"], js["2D"]);
    EXPECT_GT(js["2D"], js["4D"]);
    EXPECT_GT(js["1D"], js["3D"]);
    EXPECT_GT(js["3D"], js["4D"]);
    EXPECT_EQ(j["rows"][0]["dims"], 1);
    EXPECT_TRUE(j["rows"][0]["pins"].contains("Q"));
}

TEST(Reduce, BadRequestsAreErrors) {
    oracle::TempDir dir("reduce");
    for (const std::string extra : {"[reduce]\nsubspaces = 1D:q_w\n", "[reduce]\nsubspaces = \n"}) {
        EXPECT_THROW(run("reduce", coupled_cfg + extra, dir.path()), Error) << extra;
        EXPECT_FALSE(std::filesystem::exists(dir.path() / "reduce.csv"));
    }
}

TEST(SmallCommands, FlsDensityStrain) {
    oracle::TempDir dir("small");
    run("fls", "[fls]\nsource = ring\nj = 1\n", dir.path() / "fls");
    const auto fls = nlohmann::json::parse(slurp(dir.path() / "fls" / "fls.json"));
    EXPECT_EQ(fls["levels_meV"], nlohmann::json::parse("[-1.0, 0.0, 0.0, 1.0]"));

    run("density", "[density]\nrho = 0.43\neps0 = 4.5\n", dir.path() / "density");
    const auto d = nlohmann::json::parse(slurp(dir.path() / "density" / "density.json"));
    EXPECT_NEAR(d["density_per_eV_nm3"].get<double>(), 60.8, 0.02 * 60.8);

    const auto s = run("strain", slurp(std::filesystem::path(TUNNELGRID_CONFIGS) / "strain.ini"), dir.path() / "strain");
    const auto pos = s.log.find("quench_strain=");
    ASSERT_NE(pos, std::string::npos) << s.log;
    EXPECT_NEAR(std::stod(s.log.substr(pos + 14)), 2.05e-5, 1e-12);
    const auto rows = csv_rows(slurp(dir.path() / "strain" / "strain.csv"));
    ASSERT_GE(rows.size(), 3u);
    for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_GT(std::stod(rows[i][2]), std::stod(rows[i - 1][2]));
}

TEST(Tool, MalformedConfigExitsOneWithoutOutputs) {
    oracle::TempDir dir("tool");
    const auto cfg = dir.path() / "bad.ini";
    std::ofstream(cfg) << "[grid]\ncounts = 201\nspacing = 3\n";
    const auto out = dir.path() / "out";
    EXPECT_EQ(tool("solve --config " + cfg.string() + " --out " + out.string(), dir.path()), 1);
    EXPECT_FALSE(std::filesystem::exists(out));
    EXPECT_NE(slurp(dir.path() / "stderr.txt").find("ConfigError"), std::string::npos);
}

TEST(Tool, ExitCodesAndSeedOverride) {
    oracle::TempDir dir("tool");
    const auto configs = std::filesystem::path(TUNNELGRID_CONFIGS);
    EXPECT_EQ(tool("solve --config " + (configs / "harmonic_1d.ini").string() + " --out " + (dir.path() / "a").string() + " --seed 9",
                   dir.path()),
              0);
    const auto m = nlohmann::json::parse(slurp(dir.path() / "a" / "manifest.json"));
    EXPECT_EQ(m["seed"], 9u);
    // second run into the same directory is refused
    EXPECT_EQ(tool("solve --config " + (configs / "harmonic_1d.ini").string() + " --out " + (dir.path() / "a").string(), dir.path()), 1);
    EXPECT_EQ(tool("nonsense --config " + (configs / "harmonic_1d.ini").string(), dir.path()), 1);
    const auto bad = dir.path() / "bad_reduce.ini";
    std::ofstream(bad) << coupled_cfg << "[reduce]\nsubspaces = 1D:q_w\n";
    EXPECT_EQ(tool("reduce --config " + bad.string() + " --out " + (dir.path() / "r").string(), dir.path()), 1);
}
