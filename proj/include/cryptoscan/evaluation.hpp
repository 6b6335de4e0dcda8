#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cryptoscan/votes.hpp"

namespace cryptoscan {

enum class LabelSource { manual, imported };

struct GroundTruthLabel {
    std::string package;
    bool label = false;
    std::string note;
    LabelSource source = LabelSource::manual;
};

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
};

// Ratios with zero denominators are absent, never silently 0: a candidate
// that predicts everything positive has no specificity, not a perfect one.
struct MetricSet {
    std::optional<double> accuracy;
    std::optional<double> specificity;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

struct ScoreWeights {
    double recall_weight = 0.7;
    double specificity_weight = 0.3;

    void validate() const; // weights must sum to 1
};

struct EnsembleCandidate {
    std::vector<std::string> members;
    ConfusionMatrix confusion;
    MetricSet metrics;
    std::optional<double> score;
};

struct SelectionResult {
    std::vector<EnsembleCandidate> ranked; // best first
    std::vector<std::string> warnings;     // unscorable candidates etc.
};

struct CvReport {
    std::size_t k_folds = 0;
    std::vector<MetricSet> per_fold;
    MetricSet mean;
    MetricSet std_dev; // population std across folds
    std::vector<std::vector<std::string>> selected_per_fold;
    std::vector<std::string> warnings;
};

struct StratifiedSample {
    std::vector<std::string> packages; // strata in ascending vote order
    std::map<std::size_t, std::vector<std::string>> by_stratum;
    std::vector<std::string> warnings; // strata short of the quota
};

// Draws per_stratum packages uniformly (seeded, reproducible) from every
// true-vote stratum 0..n of a complete vote table. Short strata
// contribute everything they have plus a warning.
StratifiedSample stratified_sample(const VoteTable& table,
                                   std::size_t per_stratum,
                                   std::uint64_t seed);

// Confusion counts and derived metrics of predictions against labels.
// Every labeled package needs a prediction; missing ones raise a
// ContractError listing the offenders. Extra predictions are ignored.
std::pair<ConfusionMatrix, MetricSet> metrics(
    const std::map<std::string, bool>& predictions,
    const std::vector<GroundTruthLabel>& truth);

// Weighted screening score over recall and specificity. Throws DataError
// when either component is absent.
double score(const MetricSet& m, const ScoreWeights& weights);

// Majority predictions of a member subset for every truth package.
// Throws ContractError when a truth package is missing from the table or
// a member id is unknown.
std::map<std::string, bool> majority_predictions(
    const VoteTable& table, const std::vector<std::string>& members,
    const std::vector<GroundTruthLabel>& truth);

// Scores every size-k subset of the table's models against the labels and
// ranks candidates by score, then F1, then lexicographic member order, so
// equal inputs always rank identically. Candidates whose score cannot be
// computed are excluded with a warning.
SelectionResult select_ensemble(const VoteTable& table,
                                const std::vector<GroundTruthLabel>& truth,
                                std::size_t k_members,
                                const ScoreWeights& weights);

// Label-stratified k-fold cross-validation of the selection procedure:
// each fold re-selects the best k_members subset on the other folds and
// is evaluated on the held-out fold. Folds partition the labeled packages
// with sizes differing by at most one and class counts within one of an
// even split. Throws DataError when either class has fewer than k_folds
// members.
CvReport stratified_kfold_cv(const VoteTable& table,
                             const std::vector<GroundTruthLabel>& truth,
                             std::size_t k_folds, std::size_t k_members,
                             const ScoreWeights& weights, std::uint64_t seed);

} // namespace cryptoscan
