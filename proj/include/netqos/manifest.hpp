#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace netqos {

inline constexpr const char* kToolName = "netqos";
inline constexpr const char* kToolVersion = "1.0.0";

/// Reproduction record written beside every output. Contains only
/// run-identifying data that is stable across machines and directories:
/// subcommand, seeds, config hashes, and out-dir-relative artifact paths with
/// content hashes. Never wall-clock times or absolute paths, so repeated runs
/// are byte-identical.
struct Manifest {
    std::string command; // subcommand name, e.g. "simulate"
    std::vector<std::pair<std::string, std::string>> params; // insertion order kept
    std::vector<std::pair<std::string, std::uint64_t>> artifacts; // rel path, fnv1a64
};

/// Hashes dir/rel and appends it to the artifact list.
void add_artifact(Manifest& manifest, const std::string& dir, const std::string& rel);

/// Hashes a standalone file, recording only its basename.
void add_artifact_file(Manifest& manifest, const std::string& path);

std::string manifest_json(const Manifest& manifest);

/// Writes dir/manifest.json for directory outputs.
void write_manifest(const Manifest& manifest, const std::string& dir);

/// Writes <path>.manifest.json next to a single-file output.
void write_manifest_for_file(const Manifest& manifest, const std::string& path);

} // namespace netqos
