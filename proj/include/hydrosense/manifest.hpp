/**
 * @file manifest.hpp
 * @brief Run manifest written at the end of every successful CLI command.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hydrosense {

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

struct Artifact {
    std::string path;  ///< relative to the output directory, '/' separated
    std::string sha256;
};

struct RunManifest {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::string output_dir;
    std::vector<Artifact> artifacts;
    double wall_seconds = 0.0;

    std::string to_json() const;
    static RunManifest from_json(std::string_view text);
};

inline constexpr const char* kManifestName = "manifest.json";

/// Hashes every file in `outputs` (paths under out_dir), writes manifest.json
/// atomically and re-verifies the hashes. Throws on any mismatch.
RunManifest write_manifest(RunManifest m, const std::filesystem::path& out_dir,
                           const std::vector<std::filesystem::path>& outputs);

/// True when every artifact listed in <dir>/manifest.json still hashes to the recorded value.
bool verify_manifest(const std::filesystem::path& dir);

}  // namespace hydrosense
