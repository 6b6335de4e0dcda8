// cryptoscan: classify packages as cryptographically relevant through an
// ensemble of chat-completion models, majority-vote the verdicts, and
// validate the ensemble statistically. Each subcommand is one pipeline
// stage over a shared run directory; artifacts are plain JSON/CSV files
// tied together by content hashes.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cryptoscan/errors.hpp"
#include "cryptoscan/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"package crypto-relevance scanner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string run_dir_override;
    bool strict_parse = false;
    app.add_option("--config", config_path, "run configuration (JSON)")
        ->required();
    app.add_option("--run-dir", run_dir_override,
                   "override the config's run directory");
    app.add_flag("--strict-parse", strict_parse,
                 "disable the yes/no relevance coercion");

    std::string export_file;
    CLI::App* ingest = app.add_subcommand(
        "ingest", "normalize a package export into the run corpus");
    ingest->add_option("export", export_file, "TSV or JSON package export")
        ->required();

    bool only_failed = false;
    CLI::App* query = app.add_subcommand(
        "query", "ask every model about every package");
    query->add_flag("--only-failed", only_failed,
                    "re-query only the discarded-package sidecar list");

    CLI::App* aggregate = app.add_subcommand(
        "aggregate", "merge model responses into the consolidated vote table");
    CLI::App* stats = app.add_subcommand(
        "stats", "fit vote-count distributions and the design effect");
    CLI::App* sample = app.add_subcommand(
        "sample", "draw the stratified ground-truth sample");

    cryptoscan::LabelCommandOptions label_options;
    std::string import_file;
    CLI::App* label = app.add_subcommand(
        "label", "label sampled packages (interactive or imported)");
    label->add_option("--import", import_file,
                      "CSV of package,label[,note] rows to merge");
    label->add_flag("--reveal-votes", label_options.reveal_votes,
                    "show per-model verdicts while labeling");

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "score per-model and majority predictions against labels");
    CLI::App* select = app.add_subcommand(
        "select", "rank all k-member sub-ensembles by weighted score");
    CLI::App* cv = app.add_subcommand(
        "cv", "stratified k-fold cross-validation of ensemble selection");
    CLI::App* report = app.add_subcommand(
        "report", "bundle every stage artifact into one run summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // usage problems are bad input
    }

    try {
        cryptoscan::PipelineContext ctx =
            cryptoscan::PipelineContext::make(config_path);
        if (!run_dir_override.empty()) ctx.config.run_dir = run_dir_override;
        if (strict_parse) ctx.config.strict_parse = true;
        label_options.import_file = import_file;

        if (ingest->parsed()) cryptoscan::cmd_ingest(ctx, export_file);
        if (query->parsed()) cryptoscan::cmd_query(ctx, only_failed);
        if (aggregate->parsed()) cryptoscan::cmd_aggregate(ctx);
        if (stats->parsed()) cryptoscan::cmd_stats(ctx);
        if (sample->parsed()) cryptoscan::cmd_sample(ctx);
        if (label->parsed()) cryptoscan::cmd_label(ctx, label_options);
        if (evaluate->parsed()) cryptoscan::cmd_evaluate(ctx);
        if (select->parsed()) cryptoscan::cmd_select(ctx);
        if (cv->parsed()) cryptoscan::cmd_cv(ctx);
        if (report->parsed()) cryptoscan::cmd_report(ctx);
        return 0;
    } catch (const cryptoscan::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
