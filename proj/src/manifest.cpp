#include "netqos/manifest.hpp"

#include "netqos/common.hpp"

#include <json.hpp>

#include <filesystem>

namespace netqos {

void add_artifact(Manifest& manifest, const std::string& dir, const std::string& rel) {
    const std::string bytes = read_text_file((std::filesystem::path(dir) / rel).string());
    manifest.artifacts.emplace_back(rel, fnv1a64(bytes));
}

void add_artifact_file(Manifest& manifest, const std::string& path) {
    const std::string bytes = read_text_file(path);
    manifest.artifacts.emplace_back(std::filesystem::path(path).filename().string(),
                                    fnv1a64(bytes));
}

std::string manifest_json(const Manifest& manifest) {
    nlohmann::ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["command"] = manifest.command;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : manifest.params) params[k] = v;
    j["params"] = params;
    nlohmann::ordered_json artifacts = nlohmann::ordered_json::array();
    for (const auto& [rel, hash] : manifest.artifacts) {
        nlohmann::ordered_json a;
        a["path"] = rel;
        a["fnv1a64"] = hex64(hash);
        artifacts.push_back(a);
    }
    j["artifacts"] = artifacts;
    return j.dump(2) + "\n";
}

void write_manifest(const Manifest& manifest, const std::string& dir) {
    write_text_file((std::filesystem::path(dir) / "manifest.json").string(),
                    manifest_json(manifest));
}

void write_manifest_for_file(const Manifest& manifest, const std::string& path) {
    write_text_file(path + ".manifest.json", manifest_json(manifest));
}

} // namespace netqos
