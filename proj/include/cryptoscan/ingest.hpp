#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cryptoscan {

// One software package from a distribution export, after name
// normalization. `raw_name` preserves the exported NEVRA string;
// `name` is the stable key every downstream stage joins on.
struct PackageRecord {
    std::string raw_name;
    std::string name;
    std::optional<std::string> version;
    std::string description;
    std::vector<std::string> dependencies;
};

struct CorpusSummary {
    std::size_t total_raw = 0;          // entries seen in the export
    std::size_t total_deduplicated = 0; // records after name dedupe
    std::size_t dropped_malformed = 0;  // entries rejected, never silent
};

struct ParsedExport {
    std::vector<PackageRecord> records;
    CorpusSummary summary;
};

// Architecture suffixes recognized when stripping NEVRA tails.
const std::set<std::string>& default_architectures();

// Reduces a NEVRA string (name-[epoch:]version-release.arch) to its name.
// Splitting is right-to-left because names may themselves contain hyphens:
// the trailing ".arch" is dropped when listed in `architectures`, then the
// "-version-release" tail is dropped when both fields start with a digit
// (the version may carry an "N:" epoch, which also starts with a digit).
// Throws DataError on empty or separator-only input. Idempotent.
std::string normalize_name(const std::string& raw);
std::string normalize_name(const std::string& raw,
                           const std::set<std::string>& architectures);

// Three-way version comparison: split on '.' and '-', compare numeric
// segments numerically and everything else lexicographically. A missing
// segment loses to any present segment.
int compare_versions(const std::string& a, const std::string& b);

// Parses a package export: TSV lines
//   raw_name<TAB>version<TAB>description<TAB>dep1,dep2,...
// or a JSON array of {name, version, description, dependencies} objects
// (detected by a leading '['). Malformed entries are counted in
// dropped_malformed. Control characters in descriptions and dependency
// names become spaces so every record stays single-line in CSV artifacts.
// Throws DataError when the stream is unreadable or no entry is
// well-formed. The returned summary has total_deduplicated == 0; dedupe
// fills it in.
ParsedExport parse_package_export(std::istream& in);

// Collapses duplicate names, keeping description and dependencies from
// the record with the highest version. Versionless records lose to
// versioned ones. Output is sorted by name, so any permutation of the
// input yields identical output.
std::vector<PackageRecord> dedupe(std::vector<PackageRecord> records);

// parse_package_export + dedupe with a completed summary.
ParsedExport load_corpus(std::istream& in);

} // namespace cryptoscan
