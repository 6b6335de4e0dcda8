#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "cryptoscan/errors.hpp"
#include "cryptoscan/votes.hpp"

using namespace cryptoscan;

namespace {

// Independent oracle: strict majority by direct count.
bool oracle_majority(const std::vector<bool>& votes) {
    std::size_t trues = 0;
    for (bool v : votes)
        if (v) ++trues;
    return trues >= votes.size() / 2 + 1;
}

std::vector<bool> bits(unsigned mask, std::size_t n) {
    std::vector<bool> votes(n);
    for (std::size_t i = 0; i < n; ++i) votes[i] = (mask >> i) & 1u;
    return votes;
}

ModelResponseTable table_of(
    const std::string& model_id,
    std::vector<std::pair<std::string, std::optional<bool>>> cells) {
    ModelResponseTable table;
    table.model_id = model_id;
    for (auto& [pkg, vote] : cells) table.rows.push_back({pkg, vote, ""});
    return table;
}

} // namespace

TEST_CASE("majority_vote matches the exhaustive oracle up to n = 5") {
    for (std::size_t n = 1; n <= 5; ++n) {
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            std::vector<bool> votes = bits(mask, n);
            MajorityDecision d = majority_vote(votes, n);
            CAPTURE(n);
            CAPTURE(mask);
            CHECK(d.decision == oracle_majority(votes));
            CHECK(d.true_votes ==
                  static_cast<int>(std::count(votes.begin(), votes.end(), true)));
            CHECK(d.threshold == static_cast<int>(n / 2 + 1));
        }
    }
}

TEST_CASE("majority thresholds are floor(n/2) + 1") {
    CHECK(majority_threshold(1) == 1);
    CHECK(majority_threshold(2) == 2);
    CHECK(majority_threshold(3) == 2);
    CHECK(majority_threshold(4) == 3);
    CHECK(majority_threshold(5) == 3);
    CHECK(majority_threshold(6) == 4);
    CHECK(majority_threshold(7) == 4);
}

TEST_CASE("even ensembles resolve ties to false") {
    CHECK_FALSE(majority_vote({true, false}, 2).decision);
    CHECK_FALSE(majority_vote({true, true, false, false}, 4).decision);
    CHECK(majority_vote({true, true, true, false}, 4).decision);
}

TEST_CASE("odd ensembles are self-dual under vote negation") {
    for (std::size_t n : {1u, 3u, 5u}) {
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            std::vector<bool> votes = bits(mask, n);
            std::vector<bool> negated = votes;
            negated.flip();
            CHECK(majority_vote(votes, n).decision !=
                  majority_vote(negated, n).decision);
        }
    }
}

TEST_CASE("majority is monotone and permutation-invariant") {
    std::mt19937_64 eng(97);
    for (int trial = 0; trial < 10000; ++trial) {
        std::size_t n = 1 + eng() % 7;
        std::vector<bool> votes(n);
        for (std::size_t i = 0; i < n; ++i) votes[i] = eng() & 1;
        bool before = majority_vote(votes, n).decision;

        std::vector<bool> shuffled = votes;
        std::shuffle(shuffled.begin(), shuffled.end(), eng);
        CHECK(majority_vote(shuffled, n).decision == before);

        std::vector<std::size_t> false_idx;
        for (std::size_t i = 0; i < n; ++i)
            if (!votes[i]) false_idx.push_back(i);
        if (!false_idx.empty()) {
            std::vector<bool> promoted = votes;
            promoted[false_idx[eng() % false_idx.size()]] = true;
            if (before) CHECK(majority_vote(promoted, n).decision);
        }
    }
}

TEST_CASE("majority_vote rejects inconsistent arity") {
    CHECK_THROWS_AS(majority_vote({}, 0), ContractError);
    CHECK_THROWS_AS(majority_vote({true}, 2), ContractError);
    CHECK_THROWS_AS(majority_vote({true, false, true}, 2), ContractError);
}

TEST_CASE("merge aligns packages across models with empty cells for gaps") {
    std::vector<ModelResponseTable> tables;
    tables.push_back(table_of("m1", {{"a", true}, {"b", false}, {"c", true}}));
    tables.push_back(table_of("m2", {{"a", true}, {"c", std::nullopt}}));

    VoteTable merged = merge(tables);
    CHECK(merged.model_ids == std::vector<std::string>{"m1", "m2"});
    REQUIRE(merged.rows.size() == 3);
    CHECK(merged.rows.at("a") ==
          std::vector<std::optional<bool>>{true, true});
    CHECK(merged.rows.at("b") ==
          std::vector<std::optional<bool>>{false, std::nullopt});
    CHECK(merged.rows.at("c") ==
          std::vector<std::optional<bool>>{true, std::nullopt});
}

TEST_CASE("merge lets a later duplicate row win and rejects duplicate models") {
    std::vector<ModelResponseTable> tables;
    tables.push_back(table_of("m1", {{"a", false}, {"a", true}}));
    VoteTable merged = merge(tables);
    CHECK(merged.rows.at("a") == std::vector<std::optional<bool>>{true});

    tables.push_back(table_of("m1", {{"a", true}}));
    CHECK_THROWS_AS(merge(tables), ConfigError);
}

TEST_CASE("filter_complete splits complete rows from incomplete ones") {
    std::vector<ModelResponseTable> tables;
    tables.push_back(table_of("m1", {{"a", true}, {"b", true}, {"c", false}}));
    tables.push_back(table_of("m2", {{"a", false}, {"c", false}}));

    FilterResult filtered = filter_complete(merge(tables));
    CHECK(filtered.table.rows.size() == 2);
    CHECK(filtered.discarded == 1);
    CHECK(filtered.discarded_packages == std::vector<std::string>{"b"});

    FilterResult again = filter_complete(filtered.table);
    CHECK(again.discarded == 0);
    CHECK(again.table.rows.size() == filtered.table.rows.size());
}

TEST_CASE("merge plus filter reproduces an independent vote recount") {
    std::mt19937_64 eng(1234);
    std::vector<ModelResponseTable> tables;
    const std::size_t models = 3, packages = 50;
    for (std::size_t m = 0; m < models; ++m) {
        ModelResponseTable t;
        t.model_id = "m" + std::to_string(m);
        for (std::size_t p = 0; p < packages; ++p) {
            std::optional<bool> vote;
            if (eng() % 10 != 0) vote = (eng() & 1) != 0; // ~10% invalid
            t.rows.push_back({"pkg" + std::to_string(p), vote, ""});
        }
        tables.push_back(std::move(t));
    }

    FilterResult filtered = filter_complete(merge(tables));
    std::size_t complete_recount = 0;
    for (std::size_t p = 0; p < packages; ++p) {
        std::string pkg = "pkg" + std::to_string(p);
        std::size_t valid = 0, trues = 0;
        for (const ModelResponseTable& t : tables) {
            const ModelResponseRow& row = t.rows[p];
            if (row.relevance.has_value()) {
                ++valid;
                if (*row.relevance) ++trues;
            }
        }
        if (valid != models) {
            CHECK(filtered.table.rows.count(pkg) == 0);
            continue;
        }
        ++complete_recount;
        const auto& cells = filtered.table.rows.at(pkg);
        std::size_t cell_trues = 0;
        for (const auto& c : cells)
            if (c.value()) ++cell_trues;
        CHECK(cell_trues == trues);
    }
    CHECK(filtered.table.rows.size() == complete_recount);
    CHECK(filtered.discarded == packages - complete_recount);
}

TEST_CASE("consolidated CSV has the exact documented shape") {
    VoteTable table;
    table.model_ids = {"m1", "m2"};
    table.rows["alpha"] = {true, true};
    table.rows["beta"] = {true, std::nullopt};
    table.rows["gamma"] = {false, true};

    std::ostringstream out;
    write_consolidated_csv(out, table);
    CHECK(out.str() == "package,m1,m2,true_votes,majority\n"
                       "alpha,True,True,2,True\n"
                       "beta,True,,,\n"
                       "gamma,False,True,1,False\n");
}

TEST_CASE("consolidated CSV round-trips including empty cells") {
    VoteTable table;
    table.model_ids = {"m1", "m2", "m3"};
    table.rows["a"] = {true, false, true};
    table.rows["b, with comma"] = {std::nullopt, false, std::nullopt};
    table.rows["c \"quoted\""] = {false, false, false};

    std::ostringstream out;
    write_consolidated_csv(out, table);
    std::istringstream in(out.str());
    VoteTable back = read_consolidated_csv(in);

    CHECK(back.model_ids == table.model_ids);
    REQUIRE(back.rows.size() == table.rows.size());
    for (const auto& [pkg, votes] : table.rows) CHECK(back.rows.at(pkg) == votes);
}

TEST_CASE("consolidated CSV reader rejects malformed input") {
    std::istringstream no_header("");
    CHECK_THROWS_AS(read_consolidated_csv(no_header), DataError);

    std::istringstream bad_tail("package,m1,true_votes,confidence\n");
    CHECK_THROWS_AS(read_consolidated_csv(bad_tail), DataError);

    std::istringstream no_models("package,true_votes,majority\n");
    CHECK_THROWS_AS(read_consolidated_csv(no_models), DataError);

    std::istringstream short_row("package,m1,m2,true_votes,majority\n"
                                 "a,True\n");
    CHECK_THROWS_AS(read_consolidated_csv(short_row), DataError);

    std::istringstream bad_cell("package,m1,m2,true_votes,majority\n"
                                "a,True,maybe,,\n");
    CHECK_THROWS_AS(read_consolidated_csv(bad_cell), DataError);
}
