#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cryptoscan/evaluation.hpp"
#include "cryptoscan/gateway.hpp"

namespace cryptoscan {

// A full pipeline run: ensemble, templates, statistical knobs, and the
// directory every stage reads from and writes to. Loaded from a JSON
// config file; endpoints and seeds can be overridden per-run through
// CRYPTOSCAN_ENDPOINT_<MODEL_ID> / CRYPTOSCAN_SEED_<STAGE> environment
// variables (ids uppercased, non-alphanumerics as '_').
struct RunConfig {
    std::filesystem::path run_dir;
    std::filesystem::path templates_dir;
    std::vector<ModelConfig> models;
    double significance = 0.001;
    ScoreWeights weights;
    std::map<std::string, std::uint64_t> seeds; // stages: sample, cv
    std::size_t per_stratum = 65;
    std::size_t k_folds = 5;
    std::size_t k_members = 3;
    MockProfile mock; // shared knobs; seed comes from each mock endpoint
    bool strict_parse = false;

    std::size_t ensemble_n() const { return models.size(); }
    std::uint64_t seed_for(const std::string& stage) const;

    // Parses, applies environment overrides, and validates (unique model
    // ids, per-model invariants, weight sum, positive knobs).
    static RunConfig load(const std::filesystem::path& config_path);

    void validate() const;
};

} // namespace cryptoscan
