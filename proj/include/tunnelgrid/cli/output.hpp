#pragma once

// Hashing and atomic, overwrite-guarded output files.

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "tunnelgrid/error.hpp"

namespace tunnelgrid::cli {

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::IoError, "SHA-256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

/// Named file contents, written together at the end of a command.
class OutputSet {
public:
    void add(const std::string& name, std::string content) { files_[name] = std::move(content); }
    const std::map<std::string, std::string>& files() const noexcept { return files_; }

    /// Fails before anything is written if a target exists and !force.
    static void guard(const std::filesystem::path& dir, const std::vector<std::string>& names, bool force) {
        if (force) return;
        for (const auto& n : names) {
            if (std::filesystem::exists(dir / n)) {
                throw Error(ErrorCode::IoError, (dir / n).string() + " exists; pass --force to overwrite");
            }
        }
    }

    /// Temp file + rename per file.
    void commit(const std::filesystem::path& dir) const {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
        for (const auto& [name, content] : files_) {
            const auto target = dir / name;
            const auto tmp = dir / ("." + name + ".tmp");
            {
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
                out << content;
                out.flush();
                if (!out) throw Error(ErrorCode::IoError, "short write on " + tmp.string());
            }
            std::filesystem::rename(tmp, target, ec);
            if (ec) {
                std::filesystem::remove(tmp);
                throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " into place: " + ec.message());
            }
        }
    }

private:
    std::map<std::string, std::string> files_;
};

}  // namespace tunnelgrid::cli
