#include "cryptoscan/labeling.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "cryptoscan/csv.hpp"
#include "cryptoscan/errors.hpp"

namespace cryptoscan {

namespace {

const char* kHeader = "package,label,note,source";

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return s;
}

std::vector<std::string> label_row(const GroundTruthLabel& label) {
    return {label.package, label.label ? "True" : "False", label.note,
            label.source == LabelSource::manual ? "manual" : "imported"};
}

} // namespace

LabelStore::LabelStore(std::filesystem::path csv_path)
    : path_(std::move(csv_path)) {
    if (std::filesystem::exists(path_)) {
        std::ifstream in(path_);
        if (!in) throw DataError("cannot read label file: " + path_.string());
        labels_ = read_csv(in);
    }
    appender_.open(path_, std::ios::app);
    if (!appender_)
        throw DataError("cannot open label file for writing: " +
                        path_.string());
    if (labels_.empty() && std::filesystem::file_size(path_) == 0) {
        appender_ << kHeader << '\n';
        appender_.flush();
    }
}

bool LabelStore::contains(const std::string& package) const {
    return std::any_of(labels_.begin(), labels_.end(),
                       [&package](const GroundTruthLabel& l) {
                           return l.package == package;
                       });
}

void LabelStore::append(const GroundTruthLabel& label) {
    write_csv_row(appender_, label_row(label));
    appender_.flush();
    if (!appender_)
        throw DataError("failed to persist label for '" + label.package +
                        "' to " + path_.string());
    labels_.push_back(label);
}

std::size_t LabelStore::import_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read label import file: " + path.string());

    std::size_t added = 0;
    for (GroundTruthLabel label : read_csv(in)) {
        if (contains(label.package)) continue;
        label.source = LabelSource::imported;
        labels_.push_back(std::move(label));
        ++added;
    }
    rewrite_sorted();
    return added;
}

std::vector<GroundTruthLabel> LabelStore::read_csv(std::istream& in) {
    std::vector<GroundTruthLabel> labels;
    std::set<std::string> seen;
    bool first = true;
    while (auto record = read_csv_record(in)) {
        if (record->size() == 1 && (*record)[0].empty()) continue;
        if (first && !record->empty() && (*record)[0] == "package") {
            first = false;
            continue;
        }
        first = false;
        if (record->size() < 2)
            throw DataError("label row needs at least package and label");

        GroundTruthLabel label;
        label.package = (*record)[0];
        if (label.package.empty())
            throw DataError("label row with empty package name");
        std::string value = to_lower((*record)[1]);
        if (value == "true" || value == "yes" || value == "1")
            label.label = true;
        else if (value == "false" || value == "no" || value == "0")
            label.label = false;
        else
            throw DataError("label for '" + label.package +
                            "' must be True or False, got '" + (*record)[1] +
                            "'");
        if (record->size() > 2) label.note = (*record)[2];
        if (record->size() > 3)
            label.source = (*record)[3] == "imported" ? LabelSource::imported
                                                      : LabelSource::manual;
        if (!seen.insert(label.package).second)
            throw DataError("duplicate label for package '" + label.package +
                            "'");
        labels.push_back(std::move(label));
    }
    return labels;
}

void LabelStore::write_csv(std::ostream& out,
                           const std::vector<GroundTruthLabel>& labels) {
    out << kHeader << '\n';
    for (const GroundTruthLabel& label : labels)
        write_csv_row(out, label_row(label));
}

void LabelStore::rewrite_sorted() {
    std::sort(labels_.begin(), labels_.end(),
              [](const GroundTruthLabel& a, const GroundTruthLabel& b) {
                  return a.package < b.package;
              });
    appender_.close();
    {
        std::ofstream out(path_, std::ios::trunc);
        if (!out)
            throw DataError("cannot rewrite label file: " + path_.string());
        write_csv(out, labels_);
    }
    appender_.open(path_, std::ios::app);
    if (!appender_)
        throw DataError("cannot reopen label file: " + path_.string());
}

LabelSessionStats run_label_session(
    const std::vector<std::string>& sample,
    const std::map<std::string, PackageRecord>& package_index,
    const VoteTable* votes, LabelStore& store, std::istream& in,
    std::ostream& out, const LabelSessionOptions& options) {
    LabelSessionStats stats;

    std::vector<std::string> pending;
    for (const std::string& name : sample)
        if (!store.contains(name)) pending.push_back(name);

    std::size_t done = 0;
    for (const std::string& name : pending) {
        ++done;
        out << "\n[" << done << "/" << pending.size() << "] " << name << "\n";
        auto pkg = package_index.find(name);
        if (pkg != package_index.end()) {
            out << "  description: "
                << (pkg->second.description.empty() ? "(none)"
                                                    : pkg->second.description)
                << "\n";
            if (!pkg->second.dependencies.empty()) {
                out << "  dependencies: ";
                for (std::size_t i = 0; i < pkg->second.dependencies.size();
                     ++i) {
                    if (i) out << ", ";
                    out << pkg->second.dependencies[i];
                }
                out << "\n";
            }
        }
        if (options.reveal_votes && votes) {
            auto row = votes->rows.find(name);
            if (row != votes->rows.end()) {
                out << "  votes: ";
                for (std::size_t i = 0; i < row->second.size(); ++i) {
                    if (i) out << ", ";
                    out << votes->model_ids[i] << "=";
                    if (row->second[i].has_value())
                        out << (*row->second[i] ? "True" : "False");
                    else
                        out << "-";
                }
                out << "\n";
            }
        }

        bool answered = false;
        while (!answered) {
            out << "  cryptographically relevant? [y/n/skip/quit] " << std::flush;
            std::string answer;
            if (!std::getline(in, answer)) {
                stats.quit_requested = true;
                break;
            }
            answer = to_lower(answer);
            if (answer == "y" || answer == "yes") {
                store.append({name, true, "", LabelSource::manual});
                ++stats.labeled;
                answered = true;
            } else if (answer == "n" || answer == "no") {
                store.append({name, false, "", LabelSource::manual});
                ++stats.labeled;
                answered = true;
            } else if (answer == "skip" || answer == "s") {
                ++stats.skipped;
                answered = true;
            } else if (answer == "quit" || answer == "q") {
                stats.quit_requested = true;
                break;
            } else {
                out << "  please answer y, n, skip, or quit\n";
            }
        }
        if (stats.quit_requested) break;
    }

    for (const std::string& name : sample)
        if (!store.contains(name)) ++stats.remaining;
    return stats;
}

} // namespace cryptoscan
