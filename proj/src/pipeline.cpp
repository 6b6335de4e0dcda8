#include "cryptoscan/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cryptoscan/csv.hpp"
#include "cryptoscan/digest.hpp"
#include "cryptoscan/errors.hpp"
#include "cryptoscan/evaluation.hpp"
#include "cryptoscan/gateway.hpp"
#include "cryptoscan/ingest.hpp"
#include "cryptoscan/labeling.hpp"
#include "cryptoscan/manifest.hpp"
#include "cryptoscan/prompt.hpp"
#include "cryptoscan/response_parser.hpp"
#include "cryptoscan/stats.hpp"
#include "cryptoscan/votes.hpp"

namespace cryptoscan {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Artifact names, relative to the run directory. Stage freshness is
// tracked against these keys in the manifest.
constexpr const char* kPackages = "packages.json";
constexpr const char* kCorpusSummary = "corpus_summary.json";
constexpr const char* kErrorTally = "error_tally.csv";
constexpr const char* kVotes = "votes.csv";
constexpr const char* kVotesSummary = "votes_summary.json";
constexpr const char* kIncomplete = "incomplete_packages.txt";
constexpr const char* kStats = "stats.json";
constexpr const char* kGofCells = "gof_cells.csv";
constexpr const char* kSample = "sample.json";
constexpr const char* kLabels = "labels.csv";
constexpr const char* kEvaluation = "evaluation.json";
constexpr const char* kSelection = "selection.json";
constexpr const char* kCv = "cv.json";
constexpr const char* kRunSummary = "run_summary.json";

std::string response_key(const std::string& model_id) {
    return "responses/" + model_id + ".csv";
}

// Shortest-round-trip style formatting for CSV cells; artifacts must be
// byte-stable across runs.
std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.6g", value);
    return buffer;
}

void write_json_artifact(const fs::path& run_dir, const std::string& key,
                         const json& doc) {
    fs::path file = run_dir / key;
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("write failed for " + file.string());
}

json read_json_artifact(const fs::path& run_dir, const std::string& key) {
    std::ifstream in(run_dir / key);
    if (!in) throw DataError("cannot read " + (run_dir / key).string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw DataError((run_dir / key).string() + " is not valid JSON");
    return doc;
}

json packages_to_json(const std::vector<PackageRecord>& records) {
    json arr = json::array();
    for (const PackageRecord& record : records) {
        json entry;
        entry["name"] = record.name;
        entry["raw_name"] = record.raw_name;
        entry["version"] =
            record.version ? json(*record.version) : json(nullptr);
        entry["description"] = record.description;
        entry["dependencies"] = record.dependencies;
        arr.push_back(std::move(entry));
    }
    return arr;
}

std::vector<PackageRecord> read_packages(const fs::path& run_dir) {
    json arr = read_json_artifact(run_dir, kPackages);
    if (!arr.is_array()) throw DataError("packages.json must hold an array");
    std::vector<PackageRecord> records;
    records.reserve(arr.size());
    for (const json& entry : arr) {
        PackageRecord record;
        record.name = entry.at("name").get<std::string>();
        record.raw_name = entry.value("raw_name", record.name);
        if (entry.contains("version") && !entry["version"].is_null())
            record.version = entry["version"].get<std::string>();
        record.description = entry.value("description", std::string());
        if (entry.contains("dependencies"))
            record.dependencies =
                entry["dependencies"].get<std::vector<std::string>>();
        records.push_back(std::move(record));
    }
    return records;
}

// Per-model responses CSV. Relevance is empty for invalid rows; category
// names the parse-failure bucket or "transport-error".
const std::vector<std::string> kResponseHeader = {
    "package", "relevance",         "justification",
    "attempts", "final_temperature", "category"};

std::vector<std::string> response_row(const std::string& package,
                                      const RetryResult& result) {
    std::vector<std::string> row(6);
    row[0] = package;
    if (result.response) {
        row[1] = result.response->cryptographic_relevance ? "True" : "False";
        row[2] = result.response->justification;
    } else if (result.outcome.transport_error) {
        row[5] = "transport-error";
    } else if (result.failure) {
        row[5] = to_string(result.failure->category);
    }
    row[3] = std::to_string(result.outcome.attempts_used);
    row[4] = format_double(result.outcome.final_temperature);
    return row;
}

void write_response_csv(const fs::path& file,
                        const std::vector<std::vector<std::string>>& rows) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    write_csv_row(out, kResponseHeader);
    for (const auto& row : rows) write_csv_row(out, row);
    if (!out) throw DataError("write failed for " + file.string());
}

std::vector<std::vector<std::string>> read_response_rows(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read " + file.string());
    auto header = read_csv_record(in);
    if (!header || *header != kResponseHeader)
        throw DataError(file.string() + " has an unexpected header");
    std::vector<std::vector<std::string>> rows;
    while (auto record = read_csv_record(in)) {
        if (record->size() != kResponseHeader.size())
            throw DataError(file.string() + " has a malformed row");
        rows.push_back(std::move(*record));
    }
    return rows;
}

ModelResponseTable rows_to_table(const std::string& model_id,
                                 const std::vector<std::vector<std::string>>& rows) {
    ModelResponseTable table;
    table.model_id = model_id;
    for (const auto& row : rows) {
        ModelResponseRow entry;
        entry.package = row[0];
        if (row[1] == "True")
            entry.relevance = true;
        else if (row[1] == "False")
            entry.relevance = false;
        else if (!row[1].empty())
            throw DataError("unrecognized relevance cell '" + row[1] +
                            "' in responses of " + model_id);
        entry.justification = row[2];
        table.rows.push_back(std::move(entry));
    }
    return table;
}

std::vector<ModelResponseTable> read_all_responses(const fs::path& run_dir,
                                                   const RunConfig& config) {
    std::vector<ModelResponseTable> tables;
    for (const ModelConfig& model : config.models)
        tables.push_back(rows_to_table(
            model.model_id,
            read_response_rows(run_dir / response_key(model.model_id))));
    return tables;
}

// Table-1-shaped tally: one row per model plus the ensemble-level "agg"
// row (valid = packages every model answered, invalid = the rest).
void write_error_tally(const fs::path& run_dir,
                       const std::vector<ModelResponseTable>& tables) {
    std::ofstream out(run_dir / kErrorTally, std::ios::trunc);
    if (!out) throw DataError("cannot write error_tally.csv");
    write_csv_row(out, {"model", "valid", "invalid", "error_rate"});
    for (const ModelResponseTable& table : tables) {
        ModelErrorTally tally{table.model_id, 0, 0};
        for (const ModelResponseRow& row : table.rows)
            row.relevance ? ++tally.valid : ++tally.invalid;
        write_csv_row(out, {tally.model_id, std::to_string(tally.valid),
                            std::to_string(tally.invalid),
                            format_percent(tally.error_rate())});
    }
    FilterResult filtered = filter_complete(merge(tables));
    std::size_t total = filtered.table.rows.size() + filtered.discarded;
    double rate = total == 0
                      ? 0.0
                      : static_cast<double>(filtered.discarded) / total;
    write_csv_row(out, {"agg", std::to_string(filtered.table.rows.size()),
                        std::to_string(filtered.discarded),
                        format_percent(rate)});
}

std::vector<std::string> template_input_keys(const fs::path& templates_dir) {
    std::vector<std::string> keys;
    for (const auto& entry : fs::directory_iterator(templates_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".prompt")
            keys.push_back(fs::absolute(entry.path()).string());
    std::sort(keys.begin(), keys.end());
    return keys;
}

struct VotesView {
    VoteTable merged;
    FilterResult filtered;
};

VotesView read_votes(const fs::path& run_dir) {
    std::ifstream in(run_dir / kVotes);
    if (!in) throw DataError("cannot read votes.csv");
    VotesView view;
    view.merged = read_consolidated_csv(in);
    view.filtered = filter_complete(view.merged);
    return view;
}

std::vector<GroundTruthLabel> read_labels(const fs::path& run_dir) {
    std::ifstream in(run_dir / kLabels);
    if (!in) throw DataError("cannot read labels.csv; run 'label' first");
    std::vector<GroundTruthLabel> labels = LabelStore::read_csv(in);
    if (labels.empty())
        throw DataError("labels.csv holds no labels; run 'label' first");
    return labels;
}

// Ground-truth labels must name packages present in the complete vote
// table, otherwise metrics would be computed against phantom rows.
void require_truth_known(const VoteTable& table,
                         const std::vector<GroundTruthLabel>& truth) {
    std::vector<std::string> unknown;
    for (const GroundTruthLabel& label : truth)
        if (!table.rows.count(label.package)) unknown.push_back(label.package);
    if (unknown.empty()) return;
    std::string detail;
    for (std::size_t i = 0; i < unknown.size() && i < 5; ++i)
        detail += (i ? ", " : "") + unknown[i];
    if (unknown.size() > 5) detail += ", ...";
    throw DataError("labels reference packages outside the complete vote table: " +
                    detail);
}

json metric_json(const MetricSet& metrics) {
    auto field = [](const std::optional<double>& value) {
        return value ? json(*value) : json(nullptr);
    };
    return json{{"Acc", field(metrics.accuracy)},
                {"Spec", field(metrics.specificity)},
                {"Prec", field(metrics.precision)},
                {"Recall", field(metrics.recall)},
                {"F1", field(metrics.f1)}};
}

json confusion_json(const ConfusionMatrix& cm) {
    return json{{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

json gof_json(const GofResult& gof) {
    return json{{"chi2", gof.chi2},
                {"df", gof.df},
                {"p_value", gof.p_value},
                {"alpha_level", gof.alpha_level},
                {"critical_value", gof.critical_value},
                {"rejected", gof.rejected},
                {"merged_cells", gof.merged_cells},
                {"cells_after_merge", gof.cells_after_merge},
                {"n_estimated_params", gof.n_estimated_params}};
}

// Stage preamble: take the lock, load the manifest, surface config
// drift. Every subcommand funnels through here.
struct StageScope {
    StageScope(const PipelineContext& ctx)
        : run_dir(ctx.config.run_dir), lock(run_dir),
          manifest(RunManifest::load(run_dir)) {
        if (!manifest.config_hash.empty() &&
            manifest.config_hash != ctx.config_hash)
            std::cerr << "warning: config file changed since this run "
                         "directory was created\n";
        manifest.config_hash = ctx.config_hash;
    }

    fs::path run_dir;
    RunLock lock;
    RunManifest manifest;
};

} // namespace

RunLock::RunLock(const std::filesystem::path& run_dir) {
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec)
        throw DataError("cannot create run directory " + run_dir.string());
    lock_path_ = run_dir / ".lock";
    fd_ = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
        if (errno == EEXIST)
            throw DataError("run directory is locked (" + lock_path_.string() +
                            " exists); remove the lock file if no run is active");
        throw DataError("cannot create lock file " + lock_path_.string());
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    ssize_t written = ::write(fd_, pid.data(), pid.size());
    (void)written; // advisory content only
}

RunLock::~RunLock() {
    if (fd_ >= 0) {
        ::close(fd_);
        ::unlink(lock_path_.c_str());
    }
}

PipelineContext PipelineContext::make(const std::filesystem::path& config_path) {
    PipelineContext ctx;
    ctx.config = RunConfig::load(config_path);
    ctx.config_path = config_path;
    ctx.config_hash = sha256_file(config_path);
    return ctx;
}

void cmd_ingest(const PipelineContext& ctx,
                const std::filesystem::path& export_file) {
    if (!fs::exists(export_file))
        throw DataError("export file not found: " + export_file.string());
    std::ifstream in(export_file);
    if (!in) throw DataError("cannot read " + export_file.string());
    ParsedExport corpus = load_corpus(in);

    StageScope scope(ctx);
    write_json_artifact(scope.run_dir, kPackages,
                        packages_to_json(corpus.records));
    write_json_artifact(
        scope.run_dir, kCorpusSummary,
        json{{"total_raw", corpus.summary.total_raw},
             {"total_deduplicated", corpus.summary.total_deduplicated},
             {"dropped_malformed", corpus.summary.dropped_malformed}});
    record_stage(scope.manifest, scope.run_dir, "ingest",
                 {fs::absolute(export_file).string()},
                 {kPackages, kCorpusSummary});
    scope.manifest.save(scope.run_dir);
    std::cout << "ingest: " << corpus.records.size() << " packages ("
              << corpus.summary.total_raw << " raw, "
              << corpus.summary.dropped_malformed << " malformed)\n";
}

void cmd_query(const PipelineContext& ctx, bool only_failed) {
    StageScope scope(ctx);
    require_artifact(scope.manifest, scope.run_dir, kPackages, "ingest");
    std::vector<PackageRecord> packages = read_packages(scope.run_dir);
    auto templates = load_template_set(ctx.config.templates_dir);

    ParseOptions parse_options;
    parse_options.allow_yes_no = !ctx.config.strict_parse;
    ParseFn parse = [parse_options](const std::string& raw,
                                    const std::string& expected_package) {
        return repair_and_parse(raw, expected_package, parse_options);
    };

    std::vector<PackageRecord> targets = packages;
    if (only_failed) {
        require_artifact(scope.manifest, scope.run_dir, kIncomplete,
                         "aggregate");
        std::set<std::string> failed;
        std::ifstream list(scope.run_dir / kIncomplete);
        for (std::string line; std::getline(list, line);)
            if (!line.empty()) failed.insert(line);
        targets.clear();
        for (const PackageRecord& record : packages)
            if (failed.count(record.name)) targets.push_back(record);
        if (targets.empty()) {
            std::cout << "query: no failed packages to re-query\n";
            return;
        }
        // The full run must exist before a targeted re-query can patch it.
        for (const ModelConfig& model : ctx.config.models)
            require_artifact(scope.manifest, scope.run_dir,
                             response_key(model.model_id), "query");
    }

    std::vector<ModelRunResult> results = run_ensemble_queries(
        ctx.config.models, templates, targets, parse, ctx.config.mock);

    bool all_unreachable = !targets.empty();
    for (const ModelRunResult& result : results)
        all_unreachable =
            all_unreachable && result.transport_failures == targets.size();
    if (all_unreachable)
        throw TransportError(
            "every request to every endpoint failed; no responses recorded");

    for (std::size_t m = 0; m < results.size(); ++m) {
        const ModelRunResult& result = results[m];
        fs::path file = scope.run_dir / response_key(result.model_id);
        std::vector<std::vector<std::string>> rows;
        if (only_failed) {
            rows = read_response_rows(file);
            std::map<std::string, std::size_t> index;
            for (std::size_t i = 0; i < rows.size(); ++i)
                index[rows[i][0]] = i;
            for (std::size_t i = 0; i < targets.size(); ++i) {
                auto it = index.find(targets[i].name);
                if (it == index.end())
                    throw DataError("package " + targets[i].name +
                                    " missing from " + file.string());
                rows[it->second] = response_row(targets[i].name, result.rows[i]);
            }
        } else {
            rows.reserve(targets.size());
            for (std::size_t i = 0; i < targets.size(); ++i)
                rows.push_back(response_row(targets[i].name, result.rows[i]));
        }
        write_response_csv(file, rows);
    }

    std::vector<ModelResponseTable> tables =
        read_all_responses(scope.run_dir, ctx.config);
    write_error_tally(scope.run_dir, tables);

    // The incomplete list is deliberately not recorded as an input: it
    // only targets the re-query, and recording it would make query and
    // aggregate each other's upstream. Its freshness is checked above,
    // at the moment it is read.
    std::vector<std::string> inputs = {kPackages};
    for (const std::string& key : template_input_keys(ctx.config.templates_dir))
        inputs.push_back(key);
    std::vector<std::string> outputs = {kErrorTally};
    for (const ModelConfig& model : ctx.config.models)
        outputs.push_back(response_key(model.model_id));
    record_stage(scope.manifest, scope.run_dir, "query", inputs, outputs);
    scope.manifest.save(scope.run_dir);

    for (const ModelResponseTable& table : tables) {
        std::size_t valid = 0;
        for (const ModelResponseRow& row : table.rows)
            if (row.relevance) ++valid;
        std::cout << "query: " << table.model_id << " valid=" << valid
                  << " invalid=" << table.rows.size() - valid << "\n";
    }
}

void cmd_aggregate(const PipelineContext& ctx) {
    StageScope scope(ctx);
    std::vector<std::string> inputs;
    for (const ModelConfig& model : ctx.config.models) {
        require_artifact(scope.manifest, scope.run_dir,
                         response_key(model.model_id), "query");
        inputs.push_back(response_key(model.model_id));
    }

    std::vector<ModelResponseTable> tables =
        read_all_responses(scope.run_dir, ctx.config);
    VoteTable merged = merge(tables);
    FilterResult filtered = filter_complete(merged);

    std::size_t n = merged.model_count();
    if (n % 2 == 0)
        std::cerr << "warning: even ensemble size " << n
                  << "; tied votes resolve to not-relevant\n";

    std::size_t majority_true = 0;
    for (const auto& [package, votes] : filtered.table.rows) {
        std::vector<bool> cast;
        cast.reserve(votes.size());
        for (const auto& vote : votes) cast.push_back(*vote);
        if (majority_vote(cast, n).decision) ++majority_true;
    }

    {
        std::ofstream out(scope.run_dir / kVotes, std::ios::trunc);
        if (!out) throw DataError("cannot write votes.csv");
        write_consolidated_csv(out, merged);
    }
    {
        std::ofstream out(scope.run_dir / kIncomplete, std::ios::trunc);
        if (!out) throw DataError("cannot write incomplete_packages.txt");
        for (const std::string& package : filtered.discarded_packages)
            out << package << "\n";
    }
    write_json_artifact(
        scope.run_dir, kVotesSummary,
        json{{"ensemble_n", n},
             {"threshold", majority_threshold(n)},
             {"model_ids", merged.model_ids},
             {"packages", merged.rows.size()},
             {"complete", filtered.table.rows.size()},
             {"discarded", filtered.discarded},
             {"majority_true", majority_true},
             {"majority_false", filtered.table.rows.size() - majority_true},
             {"even_ensemble", n % 2 == 0}});

    record_stage(scope.manifest, scope.run_dir, "aggregate", inputs,
                 {kVotes, kVotesSummary, kIncomplete});
    scope.manifest.save(scope.run_dir);
    std::cout << "aggregate: " << merged.rows.size() << " packages, "
              << filtered.table.rows.size() << " complete, "
              << filtered.discarded << " discarded\n";
}

void cmd_stats(const PipelineContext& ctx) {
    StageScope scope(ctx);
    require_artifact(scope.manifest, scope.run_dir, kVotes, "aggregate");
    VotesView votes = read_votes(scope.run_dir);
    if (votes.filtered.table.rows.empty())
        throw DataError("no complete vote rows; nothing to fit");

    VoteHistogram hist = histogram(votes.filtered.table);
    BinomialFit binomial = fit_binomial(hist);
    double alpha_level = ctx.config.significance;

    json doc;
    doc["significance"] = alpha_level;
    doc["histogram"] = json{{"n", hist.n},
                            {"counts", hist.counts},
                            {"total", hist.total()},
                            {"mean", hist.mean()},
                            {"variance", hist.variance()}};
    doc["binomial"] = json{{"p_hat", binomial.p_hat}};

    std::vector<std::vector<std::string>> cell_rows;
    auto emit_cells = [&](const std::string& fit,
                          const std::vector<double>& probs) {
        double total = static_cast<double>(hist.total());
        for (std::size_t k = 0; k < probs.size(); ++k)
            cell_rows.push_back({fit, std::to_string(k),
                                 std::to_string(hist.counts[k]),
                                 format_double(total * probs[k])});
    };

    std::vector<double> binomial_probs =
        binomial_cell_probs(hist.n, binomial.p_hat);
    emit_cells("binomial", binomial_probs);
    try {
        doc["gof_binomial"] =
            gof_json(chi2_gof(hist, binomial_probs, 1, alpha_level));
    } catch (const DataError& e) {
        doc["gof_binomial"] = json{{"error", e.what()}};
    }

    try {
        BetaBinomialFit bb = fit_betabinomial(hist);
        doc["betabinomial"] = json{{"alpha", bb.alpha},
                                   {"beta", bb.beta},
                                   {"log_likelihood", bb.log_likelihood},
                                   {"converged", bb.converged},
                                   {"iterations", bb.iterations}};
        std::vector<double> bb_probs =
            betabinomial_cell_probs(hist.n, bb.alpha, bb.beta);
        emit_cells("betabinomial", bb_probs);
        try {
            doc["gof_betabinomial"] =
                gof_json(chi2_gof(hist, bb_probs, 2, alpha_level));
        } catch (const DataError& e) {
            doc["gof_betabinomial"] = json{{"error", e.what()}};
        }
    } catch (const DataError& e) {
        doc["betabinomial"] = json{{"error", e.what()}};
        doc["gof_betabinomial"] = json{{"error", "fit unavailable"}};
    }

    if (hist.n < 2) {
        doc["design_effect"] = json{{"error", "ensemble size below 2"}};
    } else {
        try {
            DesignEffectReport deff = design_effect(hist, binomial);
            doc["design_effect"] = json{{"var_obs", deff.var_obs},
                                        {"var_ind", deff.var_ind},
                                        {"deff", deff.deff},
                                        {"n_eff", deff.n_eff},
                                        {"rho", deff.rho}};
        } catch (const DataError& e) {
            doc["design_effect"] = json{{"error", e.what()}};
        }
    }

    {
        std::ofstream cells(scope.run_dir / kGofCells, std::ios::trunc);
        if (!cells) throw DataError("cannot write gof_cells.csv");
        write_csv_row(cells, {"fit", "k", "observed", "expected"});
        for (const auto& row : cell_rows) write_csv_row(cells, row);
    }
    write_json_artifact(scope.run_dir, kStats, doc);
    record_stage(scope.manifest, scope.run_dir, "stats", {kVotes},
                 {kStats, kGofCells});
    scope.manifest.save(scope.run_dir);

    std::ostringstream note;
    note << "stats: N=" << hist.total();
    if (doc["design_effect"].contains("rho"))
        note << " deff=" << format_double(doc["design_effect"]["deff"].get<double>())
             << " rho=" << format_double(doc["design_effect"]["rho"].get<double>());
    std::cout << note.str() << "\n";
}

void cmd_sample(const PipelineContext& ctx) {
    StageScope scope(ctx);
    require_artifact(scope.manifest, scope.run_dir, kVotes, "aggregate");
    VotesView votes = read_votes(scope.run_dir);
    if (votes.filtered.table.rows.empty())
        throw DataError("no complete vote rows; nothing to sample");

    std::uint64_t seed = ctx.config.seed_for("sample");
    StratifiedSample sample =
        stratified_sample(votes.filtered.table, ctx.config.per_stratum, seed);

    json by_stratum = json::object();
    for (const auto& [k, names] : sample.by_stratum)
        by_stratum[std::to_string(k)] = names;
    write_json_artifact(scope.run_dir, kSample,
                        json{{"seed", seed},
                             {"per_stratum", ctx.config.per_stratum},
                             {"total", sample.packages.size()},
                             {"packages", sample.packages},
                             {"by_stratum", by_stratum},
                             {"warnings", sample.warnings}});
    record_stage(scope.manifest, scope.run_dir, "sample", {kVotes}, {kSample});
    scope.manifest.save(scope.run_dir);
    for (const std::string& warning : sample.warnings)
        std::cerr << "warning: " << warning << "\n";
    std::cout << "sample: " << sample.packages.size() << " packages\n";
}

void cmd_label(const PipelineContext& ctx, const LabelCommandOptions& options) {
    StageScope scope(ctx);
    require_artifact(scope.manifest, scope.run_dir, kSample, "sample");
    require_artifact(scope.manifest, scope.run_dir, kPackages, "ingest");
    require_artifact(scope.manifest, scope.run_dir, kVotes, "aggregate");

    json sample_doc = read_json_artifact(scope.run_dir, kSample);
    std::vector<std::string> sample =
        sample_doc.at("packages").get<std::vector<std::string>>();
    VotesView votes = read_votes(scope.run_dir);

    LabelStore store(scope.run_dir / kLabels);
    std::vector<std::string> inputs = {kSample};

    if (!options.import_file.empty()) {
        if (!fs::exists(options.import_file))
            throw DataError("import file not found: " +
                            options.import_file.string());
        std::size_t added = store.import_csv(options.import_file);
        require_truth_known(votes.filtered.table, store.labels());
        inputs.push_back(fs::absolute(options.import_file).string());
        std::cout << "label: imported " << added << " labels ("
                  << store.labels().size() << " total)\n";
    } else {
        std::map<std::string, PackageRecord> index;
        for (PackageRecord& record : read_packages(scope.run_dir))
            index[record.name] = std::move(record);
        LabelSessionOptions session;
        session.reveal_votes = options.reveal_votes;
        LabelSessionStats stats = run_label_session(
            sample, index, options.reveal_votes ? &votes.filtered.table : nullptr,
            store, std::cin, std::cout, session);
        std::cout << "label: " << stats.labeled << " labeled, "
                  << stats.skipped << " skipped, " << stats.remaining
                  << " remaining\n";
    }

    record_stage(scope.manifest, scope.run_dir, "label", inputs, {kLabels});
    scope.manifest.save(scope.run_dir);
}

void cmd_evaluate(const PipelineContext& ctx) {
    StageScope scope(ctx);
    require_artifact(scope.manifest, scope.run_dir, kVotes, "aggregate");
    require_artifact(scope.manifest, scope.run_dir, kLabels, "label");
    VotesView votes = read_votes(scope.run_dir);
    std::vector<GroundTruthLabel> truth = read_labels(scope.run_dir);
    require_truth_known(votes.filtered.table, truth);

    const VoteTable& table = votes.filtered.table;
    auto [confusion, majority_metrics] =
        metrics(majority_predictions(table, table.model_ids, truth), truth);

    json per_model = json::object();
    for (std::size_t i = 0; i < table.model_ids.size(); ++i) {
        std::map<std::string, bool> predictions;
        for (const GroundTruthLabel& label : truth)
            predictions[label.package] = *table.rows.at(label.package)[i];
        auto [cm, ms] = metrics(predictions, truth);
        json entry = metric_json(ms);
        entry["confusion"] = confusion_json(cm);
        per_model[table.model_ids[i]] = std::move(entry);
    }

    json majority = metric_json(majority_metrics);
    majority["confusion"] = confusion_json(confusion);
    try {
        majority["Score"] = score(majority_metrics, ctx.config.weights);
    } catch (const DataError&) {
        majority["Score"] = nullptr;
    }

    write_json_artifact(
        scope.run_dir, kEvaluation,
        json{{"labeled", truth.size()},
             {"weights", json{{"recall", ctx.config.weights.recall_weight},
                              {"specificity",
                               ctx.config.weights.specificity_weight}}},
             {"majority", majority},
             {"per_model", per_model}});
    record_stage(scope.manifest, scope.run_dir, "evaluate", {kVotes, kLabels},
                 {kEvaluation});
    scope.manifest.save(scope.run_dir);
    std::cout << "evaluate: " << truth.size() << " labeled packages\n";
}

void cmd_select(const PipelineContext& ctx) {
    StageScope scope(ctx);
    require_artifact(scope.manifest, scope.run_dir, kVotes, "aggregate");
    require_artifact(scope.manifest, scope.run_dir, kLabels, "label");
    VotesView votes = read_votes(scope.run_dir);
    std::vector<GroundTruthLabel> truth = read_labels(scope.run_dir);
    require_truth_known(votes.filtered.table, truth);

    SelectionResult result = select_ensemble(
        votes.filtered.table, truth, ctx.config.k_members, ctx.config.weights);

    json candidates = json::array();
    for (const EnsembleCandidate& candidate : result.ranked) {
        json entry = metric_json(candidate.metrics);
        entry["members"] = candidate.members;
        entry["Score"] =
            candidate.score ? json(*candidate.score) : json(nullptr);
        entry["confusion"] = confusion_json(candidate.confusion);
        candidates.push_back(std::move(entry));
    }
    json doc{{"k_members", ctx.config.k_members},
             {"weights", json{{"recall", ctx.config.weights.recall_weight},
                              {"specificity",
                               ctx.config.weights.specificity_weight}}},
             {"candidates", candidates},
             {"warnings", result.warnings}};
    doc["winner"] = result.ranked.empty() ? json(nullptr)
                                          : json(result.ranked.front().members);

    write_json_artifact(scope.run_dir, kSelection, doc);
    record_stage(scope.manifest, scope.run_dir, "select", {kVotes, kLabels},
                 {kSelection});
    scope.manifest.save(scope.run_dir);
    for (const std::string& warning : result.warnings)
        std::cerr << "warning: " << warning << "\n";
    if (!result.ranked.empty()) {
        std::cout << "select: winner";
        for (const std::string& member : result.ranked.front().members)
            std::cout << " " << member;
        std::cout << "\n";
    }
}

void cmd_cv(const PipelineContext& ctx) {
    StageScope scope(ctx);
    require_artifact(scope.manifest, scope.run_dir, kVotes, "aggregate");
    require_artifact(scope.manifest, scope.run_dir, kLabels, "label");
    VotesView votes = read_votes(scope.run_dir);
    std::vector<GroundTruthLabel> truth = read_labels(scope.run_dir);
    require_truth_known(votes.filtered.table, truth);

    std::uint64_t seed = ctx.config.seed_for("cv");
    CvReport report = stratified_kfold_cv(votes.filtered.table, truth,
                                          ctx.config.k_folds,
                                          ctx.config.k_members,
                                          ctx.config.weights, seed);

    json per_fold = json::array();
    for (const MetricSet& fold : report.per_fold)
        per_fold.push_back(metric_json(fold));
    write_json_artifact(scope.run_dir, kCv,
                        json{{"k_folds", report.k_folds},
                             {"seed", seed},
                             {"per_fold", per_fold},
                             {"mean", metric_json(report.mean)},
                             {"std", metric_json(report.std_dev)},
                             {"selected_per_fold", report.selected_per_fold},
                             {"warnings", report.warnings}});
    record_stage(scope.manifest, scope.run_dir, "cv", {kVotes, kLabels}, {kCv});
    scope.manifest.save(scope.run_dir);
    for (const std::string& warning : report.warnings)
        std::cerr << "warning: " << warning << "\n";
    std::cout << "cv: " << report.k_folds << " folds\n";
}

void cmd_report(const PipelineContext& ctx) {
    StageScope scope(ctx);
    require_artifact(scope.manifest, scope.run_dir, kCorpusSummary, "ingest");
    require_artifact(scope.manifest, scope.run_dir, kErrorTally, "query");
    require_artifact(scope.manifest, scope.run_dir, kVotesSummary, "aggregate");
    require_artifact(scope.manifest, scope.run_dir, kStats, "stats");
    require_artifact(scope.manifest, scope.run_dir, kSample, "sample");
    require_artifact(scope.manifest, scope.run_dir, kLabels, "label");
    require_artifact(scope.manifest, scope.run_dir, kEvaluation, "evaluate");
    require_artifact(scope.manifest, scope.run_dir, kSelection, "select");
    require_artifact(scope.manifest, scope.run_dir, kCv, "cv");

    json tally = json::array();
    {
        std::ifstream in(scope.run_dir / kErrorTally);
        if (!in) throw DataError("cannot read error_tally.csv");
        auto header = read_csv_record(in);
        while (auto row = read_csv_record(in)) {
            if (row->size() != 4)
                throw DataError("error_tally.csv has a malformed row");
            tally.push_back(json{{"model", (*row)[0]},
                                 {"valid", std::stoull((*row)[1])},
                                 {"invalid", std::stoull((*row)[2])},
                                 {"error_rate", (*row)[3]}});
        }
    }

    json doc{{"corpus", read_json_artifact(scope.run_dir, kCorpusSummary)},
             {"responses", tally},
             {"votes", read_json_artifact(scope.run_dir, kVotesSummary)},
             {"statistics", read_json_artifact(scope.run_dir, kStats)},
             {"sample", read_json_artifact(scope.run_dir, kSample)},
             {"labeled", read_labels(scope.run_dir).size()},
             {"evaluation", read_json_artifact(scope.run_dir, kEvaluation)},
             {"selection", read_json_artifact(scope.run_dir, kSelection)},
             {"cross_validation", read_json_artifact(scope.run_dir, kCv)}};
    write_json_artifact(scope.run_dir, kRunSummary, doc);
    record_stage(scope.manifest, scope.run_dir, "report",
                 {kCorpusSummary, kErrorTally, kVotesSummary, kStats, kSample,
                  kLabels, kEvaluation, kSelection, kCv},
                 {kRunSummary});
    scope.manifest.save(scope.run_dir);
    std::cout << "report: run_summary.json written\n";
}

} // namespace cryptoscan
