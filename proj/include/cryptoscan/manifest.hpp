#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cryptoscan {

// What one pipeline stage consumed and produced, by content hash.
// Input keys are run-dir-relative for artifacts and absolute for
// external files (export, config, templates); output keys are always
// run-dir-relative. completed_at is informational only and never
// feeds hash comparisons.
struct StageRecord {
    std::map<std::string, std::string> inputs;  // path key -> sha256
    std::map<std::string, std::string> outputs; // path key -> sha256
    std::string completed_at;                   // ISO-8601 UTC
};

// Per-run ledger enforcing the pipeline contract: a stage may only
// consume artifacts whose current hash matches what the producing stage
// recorded, and whose producer's own inputs are still unchanged. A
// mismatch anywhere upstream is a stale pipeline, fixed by re-running
// the named stage.
struct RunManifest {
    std::string config_hash;
    std::map<std::string, StageRecord> stages;

    // Missing manifest.json loads as an empty manifest.
    static RunManifest load(const std::filesystem::path& run_dir);
    void save(const std::filesystem::path& run_dir) const;

    const StageRecord* find(const std::string& stage) const;

    // Stage that recorded `key` among its outputs, if any.
    std::optional<std::string> producer_of(const std::string& key) const;
};

std::filesystem::path manifest_path(const std::filesystem::path& run_dir);

// Resolves a manifest key against the run directory (absolute keys pass
// through).
std::filesystem::path resolve_manifest_key(const std::filesystem::path& run_dir,
                                           const std::string& key);

// Hashes the given files and replaces the stage's record. Keys follow
// the StageRecord convention; every file must exist.
void record_stage(RunManifest& manifest, const std::filesystem::path& run_dir,
                  const std::string& stage, const std::vector<std::string>& inputs,
                  const std::vector<std::string>& outputs);

// Checks that `stage` ran and is fresh: all its recorded outputs and
// inputs still hash as recorded, recursively through producing stages.
// Throws DataError when the stage never ran or a file vanished, and
// StalePipelineError naming the stage to re-run on any hash mismatch.
void require_fresh_stage(const RunManifest& manifest,
                         const std::filesystem::path& run_dir,
                         const std::string& stage);

// require_fresh_stage for the producer of `artifact` (run-dir-relative),
// which must be `expected_producer`.
void require_artifact(const RunManifest& manifest,
                      const std::filesystem::path& run_dir,
                      const std::string& artifact,
                      const std::string& expected_producer);

} // namespace cryptoscan
