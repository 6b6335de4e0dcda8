#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cryptoscan {

// One model's verdicts, keyed by package. relevance is empty for invalid
// or missing responses; the package name is always preserved.
struct ModelResponseRow {
    std::string package;
    std::optional<bool> relevance;
    std::string justification;
};

struct ModelResponseTable {
    std::string model_id;
    std::vector<ModelResponseRow> rows;
};

// Merged verdicts: rows[package][i] is model_ids[i]'s vote, or empty when
// that model produced nothing usable. std::map keeps package order (and
// therefore every derived artifact) deterministic.
struct VoteTable {
    std::vector<std::string> model_ids;
    std::map<std::string, std::vector<std::optional<bool>>> rows;

    std::size_t model_count() const { return model_ids.size(); }
};

struct MajorityDecision {
    std::string package;
    int true_votes = 0;
    bool decision = false;
    int threshold = 0; // floor(n/2) + 1
};

// Union of per-model tables. Packages missing from a model get an empty
// cell. Throws ConfigError on a duplicate model_id.
VoteTable merge(const std::vector<ModelResponseTable>& tables);

struct FilterResult {
    VoteTable table;                             // complete rows only
    std::size_t discarded = 0;                   // rows with any empty cell
    std::vector<std::string> discarded_packages; // sidecar for re-query
};

FilterResult filter_complete(const VoteTable& table);

// Strict majority: decision iff true_votes >= floor(n/2) + 1. With even n
// a tie falls short of the threshold and resolves to false; callers
// surface a warning for even ensembles. Throws ContractError when
// votes.size() != n or n == 0. The returned decision has no package name;
// callers attach it.
MajorityDecision majority_vote(const std::vector<bool>& votes, std::size_t n);

int majority_threshold(std::size_t n);

// Consolidated CSV: package,<model ids...>,true_votes,majority with
// True/False cells. Incomplete rows keep their empty cells and leave the
// two derived columns blank.
void write_consolidated_csv(std::ostream& out, const VoteTable& table);
VoteTable read_consolidated_csv(std::istream& in);

} // namespace cryptoscan
