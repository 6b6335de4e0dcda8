#include "cryptoscan/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>

#include "json.hpp"

#include "cryptoscan/errors.hpp"

namespace cryptoscan {

namespace {

bool is_separator_char(char c) {
    return c == '-' || c == '.' || c == ':' || c == '_';
}

bool digit_led(const std::string& s) {
    return !s.empty() && std::isdigit(static_cast<unsigned char>(s[0]));
}

std::string scrub_control_chars(std::string s) {
    for (char& c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x20 || u == 0x7f) c = ' ';
    }
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::vector<std::string> parse_dependency_list(const std::string& field) {
    std::vector<std::string> deps;
    for (const std::string& part : split(field, ',')) {
        std::string dep = trim(scrub_control_chars(part));
        if (!dep.empty()) deps.push_back(std::move(dep));
    }
    return deps;
}

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
    });
}

// Splits a version string on '.' and '-' for segment-wise comparison.
std::vector<std::string> version_segments(const std::string& v) {
    std::vector<std::string> segs;
    std::string cur;
    for (char c : v) {
        if (c == '.' || c == '-') {
            segs.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    segs.push_back(cur);
    return segs;
}

int compare_numeric_segments(const std::string& a, const std::string& b) {
    // Compare as integers without overflow: strip leading zeros, then
    // longer string wins, then lexicographic.
    std::size_t ia = a.find_first_not_of('0');
    std::size_t ib = b.find_first_not_of('0');
    std::string ta = ia == std::string::npos ? "" : a.substr(ia);
    std::string tb = ib == std::string::npos ? "" : b.substr(ib);
    if (ta.size() != tb.size()) return ta.size() < tb.size() ? -1 : 1;
    if (ta != tb) return ta < tb ? -1 : 1;
    return 0;
}

// True when `candidate` should replace `incumbent` as the record kept for
// a name. Ties break deterministically so dedupe is permutation-stable.
bool replaces(const PackageRecord& candidate, const PackageRecord& incumbent) {
    if (candidate.version.has_value() != incumbent.version.has_value())
        return candidate.version.has_value();
    if (candidate.version && incumbent.version) {
        int cmp = compare_versions(*candidate.version, *incumbent.version);
        if (cmp != 0) return cmp > 0;
    }
    if (candidate.description != incumbent.description)
        return candidate.description > incumbent.description;
    return candidate.raw_name > incumbent.raw_name;
}

void parse_tsv(std::istream& in, ParsedExport& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        out.summary.total_raw++;

        std::vector<std::string> fields = split(line, '\t');
        if (fields.size() > 4 || trim(fields[0]).empty()) {
            out.summary.dropped_malformed++;
            continue;
        }
        PackageRecord rec;
        rec.raw_name = trim(fields[0]);
        try {
            rec.name = normalize_name(rec.raw_name);
        } catch (const DataError&) {
            out.summary.dropped_malformed++;
            continue;
        }
        if (fields.size() > 1 && !trim(fields[1]).empty())
            rec.version = trim(fields[1]);
        if (fields.size() > 2)
            rec.description = trim(scrub_control_chars(fields[2]));
        if (fields.size() > 3) rec.dependencies = parse_dependency_list(fields[3]);
        out.records.push_back(std::move(rec));
    }
}

void parse_json(std::istream& in, ParsedExport& out) {
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw DataError("package export is not valid JSON");
    if (!doc.is_array())
        throw DataError("JSON package export must be a top-level array");

    for (const auto& entry : doc) {
        out.summary.total_raw++;
        if (!entry.is_object() || !entry.contains("name") ||
            !entry["name"].is_string() ||
            trim(entry["name"].get<std::string>()).empty()) {
            out.summary.dropped_malformed++;
            continue;
        }
        PackageRecord rec;
        rec.raw_name = trim(entry["name"].get<std::string>());
        try {
            rec.name = normalize_name(rec.raw_name);
        } catch (const DataError&) {
            out.summary.dropped_malformed++;
            continue;
        }

        bool malformed = false;
        if (entry.contains("version") && !entry["version"].is_null()) {
            if (!entry["version"].is_string())
                malformed = true;
            else if (!trim(entry["version"].get<std::string>()).empty())
                rec.version = trim(entry["version"].get<std::string>());
        }
        if (entry.contains("description") && !entry["description"].is_null()) {
            if (!entry["description"].is_string())
                malformed = true;
            else
                rec.description =
                    trim(scrub_control_chars(entry["description"].get<std::string>()));
        }
        if (entry.contains("dependencies") && !entry["dependencies"].is_null()) {
            if (!entry["dependencies"].is_array()) {
                malformed = true;
            } else {
                for (const auto& dep : entry["dependencies"]) {
                    if (!dep.is_string()) {
                        malformed = true;
                        break;
                    }
                    std::string d = trim(scrub_control_chars(dep.get<std::string>()));
                    if (!d.empty()) rec.dependencies.push_back(std::move(d));
                }
            }
        }
        if (malformed) {
            out.summary.dropped_malformed++;
            continue;
        }
        out.records.push_back(std::move(rec));
    }
}

} // namespace

const std::set<std::string>& default_architectures() {
    static const std::set<std::string> archs = {
        "x86_64", "i686", "aarch64", "armv7hl",
        "ppc64le", "s390x", "noarch", "src",
    };
    return archs;
}

std::string normalize_name(const std::string& raw) {
    return normalize_name(raw, default_architectures());
}

std::string normalize_name(const std::string& raw,
                           const std::set<std::string>& architectures) {
    if (raw.empty())
        throw DataError("cannot normalize empty package name");
    if (std::all_of(raw.begin(), raw.end(), is_separator_char))
        throw DataError("package name '" + raw + "' contains only separators");

    std::string s = raw;

    std::size_t dot = s.rfind('.');
    if (dot != std::string::npos && architectures.count(s.substr(dot + 1)))
        s = s.substr(0, dot);

    // Right-to-left: last hyphen field is the release, the one before it
    // the version. Both start with a digit in NEVRA (epochs are "N:"),
    // which is what keeps hyphenated names like java-1.8.0-openjdk intact
    // and makes the reduction idempotent.
    std::size_t last = s.rfind('-');
    if (last != std::string::npos && last > 0) {
        std::size_t prev = s.rfind('-', last - 1);
        if (prev != std::string::npos && prev > 0) {
            std::string version = s.substr(prev + 1, last - prev - 1);
            std::string release = s.substr(last + 1);
            if (digit_led(version) && digit_led(release)) s = s.substr(0, prev);
        }
    }

    if (s.empty() || std::all_of(s.begin(), s.end(), is_separator_char))
        throw DataError("package name '" + raw + "' reduces to an empty name");
    return s;
}

int compare_versions(const std::string& a, const std::string& b) {
    std::vector<std::string> sa = version_segments(a);
    std::vector<std::string> sb = version_segments(b);
    std::size_t len = std::max(sa.size(), sb.size());
    for (std::size_t i = 0; i < len; ++i) {
        if (i >= sa.size()) return -1; // shorter loses: 1.2 < 1.2.1
        if (i >= sb.size()) return 1;
        const std::string& x = sa[i];
        const std::string& y = sb[i];
        if (x == y) continue;
        if (all_digits(x) && all_digits(y)) return compare_numeric_segments(x, y);
        return x < y ? -1 : 1;
    }
    return 0;
}

ParsedExport parse_package_export(std::istream& in) {
    if (!in)
        throw DataError("package export stream is unreadable");

    // Detect format from the first non-whitespace character.
    int c;
    while ((c = in.peek()) != std::char_traits<char>::eof() &&
           std::isspace(static_cast<unsigned char>(c)))
        in.get();

    ParsedExport out;
    if (c == '[' || c == '{')
        parse_json(in, out);
    else
        parse_tsv(in, out);

    if (in.bad())
        throw DataError("I/O error while reading package export");
    if (out.records.empty())
        throw DataError("package export contains no well-formed entries");
    return out;
}

std::vector<PackageRecord> dedupe(std::vector<PackageRecord> records) {
    std::map<std::string, PackageRecord> by_name;
    for (PackageRecord& rec : records) {
        auto it = by_name.find(rec.name);
        if (it == by_name.end())
            by_name.emplace(rec.name, std::move(rec));
        else if (replaces(rec, it->second))
            it->second = std::move(rec);
    }
    std::vector<PackageRecord> out;
    out.reserve(by_name.size());
    for (auto& [name, rec] : by_name) out.push_back(std::move(rec));
    return out;
}

ParsedExport load_corpus(std::istream& in) {
    ParsedExport parsed = parse_package_export(in);
    parsed.records = dedupe(std::move(parsed.records));
    parsed.summary.total_deduplicated = parsed.records.size();
    return parsed;
}

} // namespace cryptoscan
