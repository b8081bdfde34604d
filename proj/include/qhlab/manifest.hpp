#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "qhlab/errors.hpp"

namespace qhlab {

// 64-bit FNV-1a content hash
inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw schema_error("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// MANIFEST file: one "hash16hex  relative-name" line per output
class Manifest {
public:
    void record(const std::string& dir, const std::string& name) {
        const std::string bytes =
            read_file_bytes((std::filesystem::path(dir) / name).string());
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a(bytes)));
        entries_[name] = buf;
    }

    void write(const std::string& dir) const {
        std::ofstream os(std::filesystem::path(dir) / "MANIFEST");
        for (const auto& [name, hash] : entries_)
            os << hash << "  " << name << "\n";
    }

    // verifies every listed hash; returns list of mismatching names
    static std::vector<std::string> check(const std::string& dir) {
        std::ifstream is(std::filesystem::path(dir) / "MANIFEST");
        if (!is) throw schema_error("no MANIFEST in " + dir);
        std::vector<std::string> bad;
        std::string line;
        while (std::getline(is, line)) {
            if (line.size() < 19) continue;
            const std::string hash = line.substr(0, 16);
            const std::string name = line.substr(18);
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx",
                          static_cast<unsigned long long>(fnv1a(read_file_bytes(
                              (std::filesystem::path(dir) / name).string()))));
            if (hash != buf) bad.push_back(name);
        }
        return bad;
    }

private:
    std::map<std::string, std::string> entries_;
};

} // namespace qhlab
