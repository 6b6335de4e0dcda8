#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cryptoscan/evaluation.hpp"
#include "cryptoscan/ingest.hpp"
#include "cryptoscan/votes.hpp"

namespace cryptoscan {

// File-backed ground-truth labels (CSV: package,label,note,source).
// append() flushes after every row so an interrupted session loses at
// most the answer being typed.
class LabelStore {
  public:
    explicit LabelStore(std::filesystem::path csv_path);

    const std::vector<GroundTruthLabel>& labels() const { return labels_; }
    bool contains(const std::string& package) const;

    // Persists one label immediately. Throws DataError when the row
    // cannot be written (disk full, permissions) so the caller can stop
    // instead of silently dropping answers.
    void append(const GroundTruthLabel& label);

    // Merges labels from another CSV with source=imported; packages
    // already labeled are skipped. Returns the number added. The file is
    // rewritten sorted by package so imports are byte-reproducible.
    std::size_t import_csv(const std::filesystem::path& path);

    static std::vector<GroundTruthLabel> read_csv(std::istream& in);
    static void write_csv(std::ostream& out,
                          const std::vector<GroundTruthLabel>& labels);

  private:
    void rewrite_sorted();

    std::filesystem::path path_;
    std::vector<GroundTruthLabel> labels_;
    std::ofstream appender_;
};

struct LabelSessionOptions {
    bool reveal_votes = false; // verdicts stay hidden unless asked for
};

struct LabelSessionStats {
    std::size_t labeled = 0;
    std::size_t skipped = 0;
    std::size_t remaining = 0; // unlabeled after the session
    bool quit_requested = false;
};

// Interactive labeling over the sampled packages that have no label yet.
// Shows name, description and dependencies (votes only with
// reveal_votes), accepts y/n/skip/quit, and persists through `store`
// after every answer. Already-labeled packages never come up again, so
// an interrupted session resumes where it stopped.
LabelSessionStats run_label_session(
    const std::vector<std::string>& sample,
    const std::map<std::string, PackageRecord>& package_index,
    const VoteTable* votes, LabelStore& store, std::istream& in,
    std::ostream& out, const LabelSessionOptions& options = {});

} // namespace cryptoscan
