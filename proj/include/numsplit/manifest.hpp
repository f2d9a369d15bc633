// manifest.hpp - JSON sidecar describing one CLI run
//
// Records the resolved config (normalized units), the tool version, timing
// per command and every output file with its SHA-256 digest. The manifest
// itself can be fed back as --config to repeat the run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace numsplit {

std::string version_string();

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const std::string& bytes);

struct OutputRecord {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes{0};
};

struct RunManifest {
    std::string command;
    nlohmann::json config;  // normalized
    std::vector<OutputRecord> outputs;
    std::vector<std::pair<std::string, double>> timing;  // label, seconds
    std::vector<std::string> notes;

    void add_output(const std::filesystem::path& out_dir, const std::string& relative);
    nlohmann::json to_json() const;
    void write(const std::filesystem::path& path) const;
};

}  // namespace numsplit
