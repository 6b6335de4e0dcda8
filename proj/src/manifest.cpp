#include "cryptoscan/manifest.hpp"

#include <ctime>
#include <fstream>
#include <set>

#include "json.hpp"

#include "cryptoscan/digest.hpp"
#include "cryptoscan/errors.hpp"

namespace cryptoscan {

namespace {

using nlohmann::json;

std::string utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buffer;
}

json to_json(const StageRecord& record) {
    return json{{"inputs", record.inputs},
                {"outputs", record.outputs},
                {"completed_at", record.completed_at}};
}

StageRecord stage_from_json(const json& obj) {
    StageRecord record;
    if (obj.contains("inputs"))
        record.inputs =
            obj["inputs"].get<std::map<std::string, std::string>>();
    if (obj.contains("outputs"))
        record.outputs =
            obj["outputs"].get<std::map<std::string, std::string>>();
    if (obj.contains("completed_at"))
        record.completed_at = obj["completed_at"].get<std::string>();
    return record;
}

// Freshness walk shared by the public checks. `trail` guards against
// cycles (a stage listing its own output as an input).
void verify_fresh(const RunManifest& manifest,
                  const std::filesystem::path& run_dir,
                  const std::string& stage, std::set<std::string>& trail) {
    if (!trail.insert(stage).second) return;
    const StageRecord* record = manifest.find(stage);
    if (record == nullptr)
        throw DataError("stage '" + stage + "' has not run in this run directory");

    for (const auto& [key, recorded_hash] : record->outputs) {
        std::filesystem::path file = resolve_manifest_key(run_dir, key);
        if (!std::filesystem::exists(file))
            throw DataError("artifact " + key + " produced by '" + stage +
                            "' is missing; re-run " + stage);
        if (sha256_file(file) != recorded_hash)
            throw StalePipelineError("artifact " + key +
                                     " was modified after '" + stage +
                                     "' ran; re-run " + stage);
    }
    for (const auto& [key, recorded_hash] : record->inputs) {
        std::filesystem::path file = resolve_manifest_key(run_dir, key);
        if (!std::filesystem::exists(file))
            throw DataError("input " + key + " consumed by '" + stage +
                            "' is missing");
        if (sha256_file(file) != recorded_hash)
            throw StalePipelineError("input " + key + " changed since '" +
                                     stage + "' ran; re-run " + stage);
        if (auto producer = manifest.producer_of(key))
            verify_fresh(manifest, run_dir, *producer, trail);
    }
}

} // namespace

std::filesystem::path manifest_path(const std::filesystem::path& run_dir) {
    return run_dir / "manifest.json";
}

std::filesystem::path resolve_manifest_key(const std::filesystem::path& run_dir,
                                           const std::string& key) {
    std::filesystem::path p(key);
    return p.is_absolute() ? p : run_dir / p;
}

RunManifest RunManifest::load(const std::filesystem::path& run_dir) {
    RunManifest manifest;
    std::ifstream in(manifest_path(run_dir));
    if (!in) return manifest;
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw DataError("manifest.json is unreadable; delete it to reset the run");
    if (doc.contains("config_hash"))
        manifest.config_hash = doc["config_hash"].get<std::string>();
    if (doc.contains("stages"))
        for (const auto& [name, record] : doc["stages"].items())
            manifest.stages[name] = stage_from_json(record);
    return manifest;
}

void RunManifest::save(const std::filesystem::path& run_dir) const {
    json doc;
    doc["config_hash"] = config_hash;
    json stage_obj = json::object();
    for (const auto& [name, record] : stages) stage_obj[name] = to_json(record);
    doc["stages"] = stage_obj;

    std::ofstream out(manifest_path(run_dir), std::ios::trunc);
    if (!out)
        throw DataError("cannot write " + manifest_path(run_dir).string());
    out << doc.dump(2) << '\n';
}

const StageRecord* RunManifest::find(const std::string& stage) const {
    auto it = stages.find(stage);
    return it == stages.end() ? nullptr : &it->second;
}

std::optional<std::string> RunManifest::producer_of(const std::string& key) const {
    for (const auto& [name, record] : stages)
        if (record.outputs.count(key)) return name;
    return std::nullopt;
}

void record_stage(RunManifest& manifest, const std::filesystem::path& run_dir,
                  const std::string& stage, const std::vector<std::string>& inputs,
                  const std::vector<std::string>& outputs) {
    StageRecord record;
    for (const std::string& key : inputs)
        record.inputs[key] = sha256_file(resolve_manifest_key(run_dir, key));
    for (const std::string& key : outputs)
        record.outputs[key] = sha256_file(resolve_manifest_key(run_dir, key));
    record.completed_at = utc_now();
    manifest.stages[stage] = std::move(record);
}

void require_fresh_stage(const RunManifest& manifest,
                         const std::filesystem::path& run_dir,
                         const std::string& stage) {
    std::set<std::string> trail;
    verify_fresh(manifest, run_dir, stage, trail);
}

void require_artifact(const RunManifest& manifest,
                      const std::filesystem::path& run_dir,
                      const std::string& artifact,
                      const std::string& expected_producer) {
    const StageRecord* record = manifest.find(expected_producer);
    if (record == nullptr || !record->outputs.count(artifact))
        throw DataError("missing " + artifact + "; run '" + expected_producer +
                        "' first");
    require_fresh_stage(manifest, run_dir, expected_producer);
}

} // namespace cryptoscan
