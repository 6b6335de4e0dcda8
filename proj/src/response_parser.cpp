#include "cryptoscan/response_parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "json.hpp"

namespace cryptoscan {

namespace {

using nlohmann::json;

std::string excerpt(const std::string& raw) {
    return raw.size() <= 200 ? raw : raw.substr(0, 200);
}

ParseResult fail(ParseFailureCategory category, std::string detail,
                 const std::string& raw) {
    return ParseResult(ParseFailure{category, std::move(detail), excerpt(raw)});
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isspace(c) != 0;
    });
}

// Stage 1/2: take the substring from the first '{' to its balancing '}',
// which also discards fences and prose outside the braces. When the text
// runs out with open delimiters, append at most two synthesized closers.
// Returns false when there is no '{' or more than two closers are missing.
// `stripped` reports whether any non-whitespace text was discarded.
bool extract_block(const std::string& raw, std::string& block,
                   bool& synthesized, bool& stripped) {
    std::size_t start = raw.find('{');
    if (start == std::string::npos) return false;
    stripped = !is_blank(raw.substr(0, start));

    std::vector<char> open_stack;
    bool in_string = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string) {
            if (c == '\\' && i + 1 < raw.size())
                ++i;
            else if (c == '"')
                in_string = false;
            continue;
        }
        switch (c) {
        case '"':
            in_string = true;
            break;
        case '{':
            open_stack.push_back('}');
            break;
        case '[':
            open_stack.push_back(']');
            break;
        case '}':
        case ']':
            if (!open_stack.empty() && open_stack.back() == c)
                open_stack.pop_back();
            if (open_stack.empty()) {
                block = raw.substr(start, i - start + 1);
                synthesized = false;
                if (!is_blank(raw.substr(i + 1))) stripped = true;
                return true;
            }
            break;
        default:
            break;
        }
    }

    // Unterminated string: close it before closing delimiters.
    std::string tail = in_string ? "\"" : "";
    if (open_stack.size() > 2) return false;
    while (!open_stack.empty()) {
        tail.push_back(open_stack.back());
        open_stack.pop_back();
    }
    block = raw.substr(start) + tail;
    synthesized = true;
    return true;
}

// Stage 3: quote bare identifiers in key position (directly after '{' or
// ',', ignoring whitespace). Values and string contents are untouched.
std::string quote_unquoted_keys(const std::string& text) {
    std::string out;
    out.reserve(text.size() + 16);
    bool in_string = false;
    bool key_position = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            out.push_back(c);
            if (c == '\\' && i + 1 < text.size())
                out.push_back(text[++i]);
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
            key_position = false;
            out.push_back(c);
            continue;
        }
        if (c == '{' || c == ',') {
            key_position = true;
            out.push_back(c);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            out.push_back(c);
            continue;
        }
        if (key_position &&
            (std::isalpha(static_cast<unsigned char>(c)) || c == '_')) {
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) ||
                    text[j] == '_' || text[j] == '-'))
                ++j;
            std::size_t k = j;
            while (k < text.size() &&
                   std::isspace(static_cast<unsigned char>(text[k])))
                ++k;
            if (k < text.size() && text[k] == ':') {
                out.push_back('"');
                out.append(text, i, j - i);
                out.push_back('"');
                i = j - 1;
                key_position = false;
                continue;
            }
        }
        key_position = false;
        out.push_back(c);
    }
    return out;
}

// Stage 4: smart quotes to their ASCII equivalents (UTF-8 sequences).
std::string normalize_smart_quotes(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        // U+201C/U+201D/U+201E -> '"' ; U+2018/U+2019 -> '\''
        if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xe2 &&
            static_cast<unsigned char>(text[i + 1]) == 0x80) {
            unsigned char b = static_cast<unsigned char>(text[i + 2]);
            if (b == 0x9c || b == 0x9d || b == 0x9e) {
                out.push_back('"');
                i += 3;
                continue;
            }
            if (b == 0x98 || b == 0x99) {
                out.push_back('\'');
                i += 3;
                continue;
            }
        }
        out.push_back(text[i]);
        ++i;
    }
    return out;
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return s;
}

// Stage 5: canonicalize keys, case-insensitively, through the alias map.
std::string canonical_key(const std::string& key) {
    std::string k = to_lower(key);
    if (k == "cryptographic_relevance" || k == "crypto_relevance" ||
        k == "cryptographic-relevance" || k == "relevance")
        return "cryptographic_relevance";
    if (k == "package" || k == "name" || k == "package_name") return "package";
    if (k == "justification") return "justification";
    return key;
}

json parse_strict(const std::string& text) {
    return json::parse(text, nullptr, false);
}

} // namespace

const char* to_string(ParseFailureCategory category) {
    switch (category) {
    case ParseFailureCategory::no_json_found: return "no-json-found";
    case ParseFailureCategory::unbalanced: return "unbalanced";
    case ParseFailureCategory::missing_field: return "missing-field";
    case ParseFailureCategory::unrecognized_relevance_value:
        return "unrecognized-relevance-value";
    case ParseFailureCategory::empty_response: return "empty-response";
    }
    return "unknown";
}

ParseResult repair_and_parse(const std::string& raw,
                             const std::string& expected_package,
                             const ParseOptions& options) {
    if (raw.empty() || is_blank(raw))
        return fail(ParseFailureCategory::empty_response, "response is empty",
                    raw);

    std::string block;
    bool synthesized = false;
    bool stripped_surroundings = false;
    if (!extract_block(raw, block, synthesized, stripped_surroundings)) {
        if (raw.find('{') == std::string::npos)
            return fail(ParseFailureCategory::no_json_found,
                        "no '{' in response", raw);
        return fail(ParseFailureCategory::unbalanced,
                    "more than two closing delimiters missing", raw);
    }

    // One flag per pipeline stage; later stages run only while the text
    // still fails a strict parse, so well-formed input stays untouched.
    bool quoted_keys = false;
    bool ascii_quotes = false;
    bool aliased_fields = false;
    bool coerced_relevance = false;
    bool backfilled_package = false;

    json doc = parse_strict(block);
    if (doc.is_discarded()) {
        std::string quoted = quote_unquoted_keys(block);
        if (quoted != block) {
            quoted_keys = true;
            block = std::move(quoted);
            doc = parse_strict(block);
        }
    }
    if (doc.is_discarded()) {
        std::string ascii = normalize_smart_quotes(block);
        if (ascii != block) {
            ascii_quotes = true;
            block = std::move(ascii);
            doc = parse_strict(block);
        }
    }
    if (doc.is_discarded())
        return fail(ParseFailureCategory::no_json_found,
                    "text between braces is not valid JSON after repair", raw);
    if (!doc.is_object())
        return fail(ParseFailureCategory::no_json_found,
                    "JSON block is not an object", raw);

    json canon = json::object();
    for (auto& [key, value] : doc.items()) {
        std::string ck = canonical_key(key);
        if (ck != key) aliased_fields = true;
        if (!canon.contains(ck)) canon[ck] = value;
    }

    if (!canon.contains("cryptographic_relevance"))
        return fail(ParseFailureCategory::missing_field,
                    "cryptographic_relevance is missing", raw);

    const json& rel = canon["cryptographic_relevance"];
    bool relevance;
    if (rel.is_boolean()) {
        relevance = rel.get<bool>();
    } else if (rel.is_string()) {
        const std::string v = rel.get<std::string>();
        if (v == "True" || v == "true") {
            relevance = true;
        } else if (v == "False" || v == "false") {
            relevance = false;
        } else if (options.allow_yes_no && v == "yes") {
            relevance = true;
        } else if (options.allow_yes_no && v == "no") {
            relevance = false;
        } else {
            return fail(ParseFailureCategory::unrecognized_relevance_value,
                        "cannot interpret relevance value '" + v + "'", raw);
        }
        coerced_relevance = true;
    } else {
        return fail(ParseFailureCategory::unrecognized_relevance_value,
                    "relevance value is neither boolean nor string", raw);
    }

    ParsedResponse response;
    response.cryptographic_relevance = relevance;
    if (canon.contains("package") && canon["package"].is_string() &&
        !canon["package"].get<std::string>().empty()) {
        response.package = canon["package"].get<std::string>();
    } else {
        if (expected_package.empty())
            return fail(ParseFailureCategory::missing_field,
                        "package is missing and no expected name is available",
                        raw);
        response.package = expected_package;
        backfilled_package = true;
    }
    if (canon.contains("justification") && canon["justification"].is_string())
        response.justification = canon["justification"].get<std::string>();

    int stages = static_cast<int>(synthesized) +
                 static_cast<int>(stripped_surroundings) +
                 static_cast<int>(quoted_keys) + static_cast<int>(ascii_quotes) +
                 static_cast<int>(aliased_fields) +
                 static_cast<int>(coerced_relevance) +
                 static_cast<int>(backfilled_package);
    return ParseResult(std::move(response), stages);
}

ParseResult strict_parse(const std::string& raw) {
    if (raw.empty() || is_blank(raw))
        return fail(ParseFailureCategory::empty_response, "response is empty",
                    raw);
    json doc = parse_strict(raw);
    if (doc.is_discarded() || !doc.is_object())
        return fail(ParseFailureCategory::no_json_found,
                    "not a strictly well-formed JSON object", raw);
    if (!doc.contains("package") || !doc["package"].is_string() ||
        doc["package"].get<std::string>().empty())
        return fail(ParseFailureCategory::missing_field, "package is missing",
                    raw);
    if (!doc.contains("cryptographic_relevance"))
        return fail(ParseFailureCategory::missing_field,
                    "cryptographic_relevance is missing", raw);
    if (!doc["cryptographic_relevance"].is_boolean())
        return fail(ParseFailureCategory::unrecognized_relevance_value,
                    "relevance is not a JSON boolean", raw);

    ParsedResponse response;
    response.package = doc["package"].get<std::string>();
    response.cryptographic_relevance = doc["cryptographic_relevance"].get<bool>();
    if (doc.contains("justification") && doc["justification"].is_string())
        response.justification = doc["justification"].get<std::string>();
    return ParseResult(std::move(response), 0);
}

std::string serialize_response(const ParsedResponse& response) {
    json doc;
    doc["package"] = response.package;
    doc["cryptographic_relevance"] = response.cryptographic_relevance;
    doc["justification"] = response.justification;
    return doc.dump();
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", fraction * 100.0);
    return buf;
}

} // namespace cryptoscan
