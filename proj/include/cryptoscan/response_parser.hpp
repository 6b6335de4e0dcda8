#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cryptoscan {

struct ParsedResponse {
    std::string package;
    bool cryptographic_relevance = false;
    std::string justification; // may be empty
};

enum class ParseFailureCategory {
    no_json_found,
    unbalanced,
    missing_field,
    unrecognized_relevance_value,
    empty_response,
};

const char* to_string(ParseFailureCategory category);

struct ParseFailure {
    ParseFailureCategory category;
    std::string detail;
    std::string raw_excerpt; // at most 200 bytes of the offending text
};

// Either a ParsedResponse or the reason parsing failed. Never an exception:
// a model emitting garbage must not abort a 65k-package run.
class ParseResult {
  public:
    ParseResult(ParsedResponse response, int repair_stages)
        : value_(std::move(response)), repair_stages_(repair_stages) {}
    explicit ParseResult(ParseFailure failure) : value_(std::move(failure)) {}

    bool ok() const { return std::holds_alternative<ParsedResponse>(value_); }
    const ParsedResponse& response() const {
        return std::get<ParsedResponse>(value_);
    }
    const ParseFailure& failure() const { return std::get<ParseFailure>(value_); }

    // Number of repair stages that actually modified the text; 0 for a
    // strictly well-formed response.
    int repair_stages_applied() const { return repair_stages_; }

  private:
    std::variant<ParsedResponse, ParseFailure> value_;
    int repair_stages_ = 0;
};

struct ParseOptions {
    // Strict mode turns off the yes/no -> boolean coercion.
    bool allow_yes_no = true;
};

// Tolerant parse of one raw model response. Repairs are applied in a fixed
// order, each only when the text still fails to parse:
//   1. extract the substring between the first '{' and its balancing '}',
//      synthesizing at most two missing closing delimiters
//   2. drop code fences and prose outside the braces (a side effect of 1)
//   3. quote unquoted keys
//   4. normalize smart quotes to ASCII
//   5. map field aliases case-insensitively (crypto_relevance,
//      cryptographic-relevance, relevance; name, package_name)
//   6. coerce "True"/"False"/"true"/"false"/true/false/"yes"/"no" to bool
//   7. fall back to expected_package when the package field is absent
// Success requires a resolvable relevance value.
ParseResult repair_and_parse(const std::string& raw,
                             const std::string& expected_package,
                             const ParseOptions& options = {});

// Strict parse: no repairs, no aliases, no coercion beyond JSON booleans.
// Used by tests to confirm round-trips and conservative behavior.
ParseResult strict_parse(const std::string& raw);

std::string serialize_response(const ParsedResponse& response);

// Per-model accounting for a batch of responses, mirroring the error-rate
// table in the run report.
struct ModelErrorTally {
    std::string model_id;
    std::size_t valid = 0;
    std::size_t invalid = 0;

    double error_rate() const {
        std::size_t total = valid + invalid;
        return total == 0 ? 0.0 : static_cast<double>(invalid) / total;
    }
};

// "0.11%"-style rendering with two decimals.
std::string format_percent(double fraction);

} // namespace cryptoscan
