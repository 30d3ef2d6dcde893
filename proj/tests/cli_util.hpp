#pragma once

// Runs the mtod binary (path from the MTOD_BIN compile definition) and
// compares its outputs.

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cli {

inline int run(const std::string& args, const std::string& log = "/dev/null") {
    const std::string cmd = "MTOD_LOG=quiet '" MTOD_BIN "' " + args + " >" + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Relative path -> bytes for every regular file under `dir`.
inline std::vector<std::pair<std::string, std::string>> tree(const std::filesystem::path& dir) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out.emplace_back(std::filesystem::relative(e.path(), dir).string(), slurp(e.path()));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Same files with the same bytes, ignoring manifest.json (its argv names
// the output directory).
inline bool same_outputs(const std::filesystem::path& a, const std::filesystem::path& b) {
    auto ta = tree(a), tb = tree(b);
    auto drop = [](auto& t) {
        std::erase_if(t, [](const auto& kv) { return kv.first == "manifest.json"; });
    };
    drop(ta);
    drop(tb);
    return !ta.empty() && ta == tb;
}

}  // namespace cli
