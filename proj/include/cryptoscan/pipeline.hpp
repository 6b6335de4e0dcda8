#pragma once

#include <filesystem>
#include <string>

#include "cryptoscan/run_config.hpp"

namespace cryptoscan {

// Exclusive ownership of a run directory for one subcommand, taken with
// O_CREAT|O_EXCL so two concurrent invocations cannot interleave
// artifact writes. Released (and the lock file removed) on destruction.
class RunLock {
  public:
    explicit RunLock(const std::filesystem::path& run_dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

  private:
    std::filesystem::path lock_path_;
    int fd_ = -1;
};

// State shared by every subcommand: the validated config and the hash
// of the file it was loaded from (recorded in the run manifest so
// config drift between stages is visible).
struct PipelineContext {
    RunConfig config;
    std::filesystem::path config_path;
    std::string config_hash;

    static PipelineContext make(const std::filesystem::path& config_path);
};

struct LabelCommandOptions {
    std::filesystem::path import_file; // empty: interactive session
    bool reveal_votes = false;
};

// Stage entry points, one per subcommand. Each takes the run lock,
// verifies its upstream artifacts through the manifest, writes its own
// artifacts, and records them. Errors surface as Error subclasses; the
// CLI maps their codes to process exits.
void cmd_ingest(const PipelineContext& ctx,
                const std::filesystem::path& export_file);
void cmd_query(const PipelineContext& ctx, bool only_failed);
void cmd_aggregate(const PipelineContext& ctx);
void cmd_stats(const PipelineContext& ctx);
void cmd_sample(const PipelineContext& ctx);
void cmd_label(const PipelineContext& ctx, const LabelCommandOptions& options);
void cmd_evaluate(const PipelineContext& ctx);
void cmd_select(const PipelineContext& ctx);
void cmd_cv(const PipelineContext& ctx);
void cmd_report(const PipelineContext& ctx);

} // namespace cryptoscan
