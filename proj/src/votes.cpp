#include "cryptoscan/votes.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "cryptoscan/csv.hpp"
#include "cryptoscan/errors.hpp"

namespace cryptoscan {

VoteTable merge(const std::vector<ModelResponseTable>& tables) {
    VoteTable merged;
    std::set<std::string> seen;
    for (const ModelResponseTable& table : tables) {
        if (!seen.insert(table.model_id).second)
            throw ConfigError("duplicate model_id in merge: " + table.model_id);
        merged.model_ids.push_back(table.model_id);
    }

    const std::size_t n = merged.model_ids.size();
    for (std::size_t i = 0; i < tables.size(); ++i) {
        for (const ModelResponseRow& row : tables[i].rows) {
            auto [it, inserted] = merged.rows.try_emplace(
                row.package, std::vector<std::optional<bool>>(n));
            it->second[i] = row.relevance; // later duplicate rows win
        }
    }
    return merged;
}

FilterResult filter_complete(const VoteTable& table) {
    FilterResult result;
    result.table.model_ids = table.model_ids;
    for (const auto& [package, votes] : table.rows) {
        bool complete = std::all_of(votes.begin(), votes.end(),
                                    [](const std::optional<bool>& v) {
                                        return v.has_value();
                                    });
        if (complete) {
            result.table.rows.emplace(package, votes);
        } else {
            ++result.discarded;
            result.discarded_packages.push_back(package);
        }
    }
    return result;
}

int majority_threshold(std::size_t n) {
    return static_cast<int>(n / 2) + 1;
}

MajorityDecision majority_vote(const std::vector<bool>& votes, std::size_t n) {
    if (n == 0)
        throw ContractError("majority_vote needs at least one model");
    if (votes.size() != n)
        throw ContractError("majority_vote got " + std::to_string(votes.size()) +
                            " votes for an ensemble of " + std::to_string(n));

    MajorityDecision decision;
    decision.threshold = majority_threshold(n);
    decision.true_votes =
        static_cast<int>(std::count(votes.begin(), votes.end(), true));
    decision.decision = decision.true_votes >= decision.threshold;
    return decision;
}

void write_consolidated_csv(std::ostream& out, const VoteTable& table) {
    std::vector<std::string> header = {"package"};
    header.insert(header.end(), table.model_ids.begin(), table.model_ids.end());
    header.push_back("true_votes");
    header.push_back("majority");
    write_csv_row(out, header);

    const std::size_t n = table.model_count();
    for (const auto& [package, votes] : table.rows) {
        std::vector<std::string> row = {package};
        bool complete = true;
        std::vector<bool> present;
        for (const std::optional<bool>& v : votes) {
            if (v.has_value()) {
                row.push_back(*v ? "True" : "False");
                present.push_back(*v);
            } else {
                row.push_back("");
                complete = false;
            }
        }
        if (complete) {
            MajorityDecision decision = majority_vote(present, n);
            row.push_back(std::to_string(decision.true_votes));
            row.push_back(decision.decision ? "True" : "False");
        } else {
            row.push_back("");
            row.push_back("");
        }
        write_csv_row(out, row);
    }
}

VoteTable read_consolidated_csv(std::istream& in) {
    auto header = read_csv_record(in);
    if (!header || header->size() < 3 || (*header)[0] != "package")
        throw DataError("consolidated vote CSV has no valid header");
    if (header->back() != "majority" ||
        (*header)[header->size() - 2] != "true_votes")
        throw DataError(
            "consolidated vote CSV must end with true_votes,majority");

    VoteTable table;
    table.model_ids.assign(header->begin() + 1, header->end() - 2);
    const std::size_t n = table.model_count();
    if (n == 0) throw DataError("consolidated vote CSV lists no models");

    while (auto record = read_csv_record(in)) {
        if (record->size() == 1 && (*record)[0].empty()) continue;
        if (record->size() != n + 3)
            throw DataError("vote CSV row for '" + (*record)[0] +
                            "' has the wrong number of fields");
        std::vector<std::optional<bool>> votes(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string& cell = (*record)[i + 1];
            if (cell == "True")
                votes[i] = true;
            else if (cell == "False")
                votes[i] = false;
            else if (!cell.empty())
                throw DataError("vote CSV cell for '" + (*record)[0] +
                                "' is neither True, False, nor empty");
        }
        table.rows[(*record)[0]] = std::move(votes);
    }
    return table;
}

} // namespace cryptoscan
