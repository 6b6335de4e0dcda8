#include "cryptoscan/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "cryptoscan/errors.hpp"
#include "cryptoscan/rng.hpp"

namespace cryptoscan {

namespace {

std::optional<double> ratio(std::size_t numerator, std::size_t denominator) {
    if (denominator == 0) return std::nullopt;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

// Enumerates k-subsets of {0..n-1} in lexicographic order.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
    std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

// Mean/std of one optional metric across folds: absent in any fold makes
// the aggregate absent, so a silent zero can never sneak into a report.
void aggregate_metric(const std::vector<MetricSet>& folds,
                      std::optional<double> MetricSet::*field, MetricSet& mean,
                      MetricSet& std_dev, std::vector<std::string>& warnings,
                      const char* name) {
    std::vector<double> values;
    for (const MetricSet& fold : folds) {
        if (!(fold.*field).has_value()) {
            warnings.push_back(std::string(name) +
                               " undefined in at least one fold; omitted "
                               "from the aggregate");
            return;
        }
        values.push_back(*(fold.*field));
    }
    double mu = 0.0;
    for (double v : values) mu += v;
    mu /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mu) * (v - mu);
    var /= static_cast<double>(values.size());
    mean.*field = mu;
    std_dev.*field = std::sqrt(var);
}

} // namespace

void ScoreWeights::validate() const {
    if (recall_weight < 0.0 || specificity_weight < 0.0 ||
        std::fabs(recall_weight + specificity_weight - 1.0) > 1e-9)
        throw ConfigError("score weights must be non-negative and sum to 1");
}

StratifiedSample stratified_sample(const VoteTable& table,
                                   std::size_t per_stratum,
                                   std::uint64_t seed) {
    if (per_stratum == 0)
        throw ConfigError("per_stratum sample quota must be positive");
    const std::size_t n = table.model_count();
    if (n == 0 || table.rows.empty())
        throw DataError("cannot sample from an empty vote table");

    std::map<std::size_t, std::vector<std::string>> strata;
    for (const auto& [package, votes] : table.rows) {
        std::size_t k = 0;
        for (const std::optional<bool>& v : votes) {
            if (!v.has_value())
                throw ContractError("stratified_sample needs a complete table; '" +
                                    package + "' has an empty cell");
            if (*v) ++k;
        }
        strata[k].push_back(package);
    }

    StratifiedSample sample;
    std::mt19937_64 eng(seed);
    for (std::size_t k = 0; k <= n; ++k) {
        auto it = strata.find(k);
        if (it == strata.end()) {
            sample.warnings.push_back("stratum " + std::to_string(k) +
                                      " is empty (quota " +
                                      std::to_string(per_stratum) + ")");
            continue;
        }
        std::vector<std::string>& members = it->second; // already name-sorted
        if (members.size() <= per_stratum) {
            if (members.size() < per_stratum)
                sample.warnings.push_back(
                    "stratum " + std::to_string(k) + " has only " +
                    std::to_string(members.size()) + " of " +
                    std::to_string(per_stratum) + " requested packages");
            sample.by_stratum[k] = members;
        } else {
            shuffle_deterministic(members, eng);
            std::vector<std::string> chosen(members.begin(),
                                            members.begin() +
                                                static_cast<std::ptrdiff_t>(
                                                    per_stratum));
            std::sort(chosen.begin(), chosen.end());
            sample.by_stratum[k] = std::move(chosen);
        }
        for (const std::string& name : sample.by_stratum[k])
            sample.packages.push_back(name);
    }
    return sample;
}

std::pair<ConfusionMatrix, MetricSet> metrics(
    const std::map<std::string, bool>& predictions,
    const std::vector<GroundTruthLabel>& truth) {
    if (truth.empty()) throw DataError("cannot evaluate against zero labels");

    ConfusionMatrix cm;
    std::vector<std::string> missing;
    for (const GroundTruthLabel& gt : truth) {
        auto it = predictions.find(gt.package);
        if (it == predictions.end()) {
            missing.push_back(gt.package);
            continue;
        }
        if (gt.label)
            it->second ? ++cm.tp : ++cm.fn;
        else
            it->second ? ++cm.fp : ++cm.tn;
    }
    if (!missing.empty()) {
        std::string joined;
        for (const std::string& name : missing) {
            if (!joined.empty()) joined += ", ";
            joined += name;
        }
        throw ContractError("no prediction for labeled package(s): " + joined);
    }

    MetricSet m;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.specificity = ratio(cm.tn, cm.tn + cm.fp);
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    return {cm, m};
}

double score(const MetricSet& m, const ScoreWeights& weights) {
    weights.validate();
    if (!m.recall.has_value())
        throw DataError("score needs recall, which is absent");
    if (!m.specificity.has_value())
        throw DataError("score needs specificity, which is absent");
    return weights.recall_weight * *m.recall +
           weights.specificity_weight * *m.specificity;
}

std::map<std::string, bool> majority_predictions(
    const VoteTable& table, const std::vector<std::string>& members,
    const std::vector<GroundTruthLabel>& truth) {
    std::vector<std::size_t> indices;
    for (const std::string& member : members) {
        auto it = std::find(table.model_ids.begin(), table.model_ids.end(),
                            member);
        if (it == table.model_ids.end())
            throw ContractError("unknown ensemble member: " + member);
        indices.push_back(
            static_cast<std::size_t>(it - table.model_ids.begin()));
    }

    std::map<std::string, bool> predictions;
    for (const GroundTruthLabel& gt : truth) {
        auto row = table.rows.find(gt.package);
        if (row == table.rows.end())
            throw ContractError("labeled package missing from vote table: " +
                                gt.package);
        std::vector<bool> votes;
        for (std::size_t idx : indices) {
            const std::optional<bool>& v = row->second[idx];
            if (!v.has_value())
                throw ContractError("vote cell for '" + gt.package +
                                    "' is empty; filter the table first");
            votes.push_back(*v);
        }
        predictions[gt.package] =
            majority_vote(votes, members.size()).decision;
    }
    return predictions;
}

SelectionResult select_ensemble(const VoteTable& table,
                                const std::vector<GroundTruthLabel>& truth,
                                std::size_t k_members,
                                const ScoreWeights& weights) {
    weights.validate();
    const std::size_t n = table.model_count();
    if (k_members == 0 || k_members > n)
        throw ConfigError("cannot select " + std::to_string(k_members) +
                          " members from " + std::to_string(n) + " models");
    if (truth.empty())
        throw DataError("ensemble selection needs at least one label");

    SelectionResult result;
    std::vector<std::size_t> idx(k_members);
    for (std::size_t i = 0; i < k_members; ++i) idx[i] = i;
    do {
        EnsembleCandidate candidate;
        for (std::size_t i : idx) candidate.members.push_back(table.model_ids[i]);
        auto [cm, m] =
            metrics(majority_predictions(table, candidate.members, truth),
                    truth);
        candidate.confusion = cm;
        candidate.metrics = m;
        if (m.recall.has_value() && m.specificity.has_value()) {
            candidate.score = score(m, weights);
            result.ranked.push_back(std::move(candidate));
        } else {
            std::string joined;
            for (const std::string& member : candidate.members) {
                if (!joined.empty()) joined += "+";
                joined += member;
            }
            result.warnings.push_back("candidate " + joined +
                                      " has no defined score; excluded "
                                      "from ranking");
        }
    } while (next_combination(idx, n));

    std::sort(result.ranked.begin(), result.ranked.end(),
              [](const EnsembleCandidate& a, const EnsembleCandidate& b) {
                  if (*a.score != *b.score) return *a.score > *b.score;
                  double fa = a.metrics.f1.value_or(-1.0);
                  double fb = b.metrics.f1.value_or(-1.0);
                  if (fa != fb) return fa > fb;
                  return a.members < b.members;
              });
    return result;
}

CvReport stratified_kfold_cv(const VoteTable& table,
                             const std::vector<GroundTruthLabel>& truth,
                             std::size_t k_folds, std::size_t k_members,
                             const ScoreWeights& weights, std::uint64_t seed) {
    if (k_folds < 2) throw ConfigError("cross-validation needs k_folds >= 2");

    // Split by class, shuffle each deterministically, then deal with one
    // rotating cursor so fold sizes differ by at most one overall while
    // each class stays within one of an even split.
    std::vector<std::string> positives, negatives;
    for (const GroundTruthLabel& gt : truth)
        (gt.label ? positives : negatives).push_back(gt.package);
    std::sort(positives.begin(), positives.end());
    std::sort(negatives.begin(), negatives.end());

    if (positives.size() < k_folds || negatives.size() < k_folds)
        throw DataError("stratification impossible: need at least " +
                        std::to_string(k_folds) +
                        " labels of each class, have " +
                        std::to_string(positives.size()) + " positive / " +
                        std::to_string(negatives.size()) + " negative");

    std::mt19937_64 eng(seed);
    shuffle_deterministic(positives, eng);
    shuffle_deterministic(negatives, eng);

    std::map<std::string, bool> label_of;
    for (const GroundTruthLabel& gt : truth) label_of[gt.package] = gt.label;

    std::vector<std::vector<std::string>> folds(k_folds);
    std::size_t cursor = 0;
    for (const std::string& name : positives)
        folds[cursor++ % k_folds].push_back(name);
    for (const std::string& name : negatives)
        folds[cursor++ % k_folds].push_back(name);

    CvReport report;
    report.k_folds = k_folds;
    for (std::size_t f = 0; f < k_folds; ++f) {
        std::vector<GroundTruthLabel> train, test;
        for (std::size_t g = 0; g < k_folds; ++g) {
            for (const std::string& name : folds[g]) {
                GroundTruthLabel gt;
                gt.package = name;
                gt.label = label_of.at(name);
                (g == f ? test : train).push_back(gt);
            }
        }

        SelectionResult selection =
            select_ensemble(table, train, k_members, weights);
        for (const std::string& warning : selection.warnings)
            report.warnings.push_back("fold " + std::to_string(f) + ": " +
                                      warning);
        if (selection.ranked.empty())
            throw DataError("fold " + std::to_string(f) +
                            ": no candidate ensemble could be scored");

        const std::vector<std::string>& winner = selection.ranked[0].members;
        report.selected_per_fold.push_back(winner);
        auto [cm, m] =
            metrics(majority_predictions(table, winner, test), test);
        (void)cm;
        report.per_fold.push_back(m);
    }

    aggregate_metric(report.per_fold, &MetricSet::accuracy, report.mean,
                     report.std_dev, report.warnings, "accuracy");
    aggregate_metric(report.per_fold, &MetricSet::specificity, report.mean,
                     report.std_dev, report.warnings, "specificity");
    aggregate_metric(report.per_fold, &MetricSet::precision, report.mean,
                     report.std_dev, report.warnings, "precision");
    aggregate_metric(report.per_fold, &MetricSet::recall, report.mean,
                     report.std_dev, report.warnings, "recall");
    aggregate_metric(report.per_fold, &MetricSet::f1, report.mean,
                     report.std_dev, report.warnings, "f1");
    return report;
}

} // namespace cryptoscan
