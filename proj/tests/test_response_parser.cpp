#include <string>

#include "doctest.h"

#include "cryptoscan/response_parser.hpp"

using namespace cryptoscan;

namespace {

// Annotated corpus: raw model output, the verdict it must resolve to, how
// many repair stages may touch it, and the fields that must come out.
// Stage counts are part of the contract: 0 proves well-formed output is
// never rewritten.
struct OkCase {
    const char* raw;
    bool relevance;
    int stages;
    const char* package = "pkg";
    const char* justification = nullptr; // nullptr: not asserted
};

const OkCase kOkCases[] = {
    // Strictly well-formed: zero repairs.
    {R"({"package": "pkg", "cryptographic_relevance": true, "justification": "uses TLS"})",
     true, 0, "pkg", "uses TLS"},
    {R"({"package": "pkg", "cryptographic_relevance": false, "justification": ""})",
     false, 0, "pkg", ""},
    {"\n  {\"package\": \"pkg\", \"cryptographic_relevance\": true, "
     "\"justification\": \"x\"}\n",
     true, 0},
    {R"({"package": "pkg", "cryptographic_relevance": true, "justification": "x", "confidence": 0.9})",
     true, 0},
    {"{\r\n \"package\": \"pkg\",\r\n \"cryptographic_relevance\": true\r\n}\r\n",
     true, 0},
    {R"({"package":"pkg","cryptographic_relevance":true,"justification":"uses {AES} cipher"})",
     true, 0, "pkg", "uses {AES} cipher"},
    {R"({"package":"pkg","cryptographic_relevance":true,"justification":42})",
     true, 0, "pkg", ""}, // non-string justification is dropped
    {R"({"package":"pkg","cryptographic_relevance":true,"justification":"libsodium é"})",
     true, 0, "pkg", "libsodium \xc3\xa9"},

    // Fences and prose around the object.
    {"```json\n{\"package\": \"pkg\", \"cryptographic_relevance\": true, "
     "\"justification\": \"x\"}\n```",
     true, 1},
    {"Sure! Here's my answer:\n{\"package\": \"pkg\", "
     "\"cryptographic_relevance\": false, \"justification\": \"x\"}",
     false, 1},
    {"{\"package\": \"pkg\", \"cryptographic_relevance\": true}\nHope this helps!",
     true, 1},
    {"{\"package\": \"pkg\", \"cryptographic_relevance\": true} {\"another\": 1}",
     true, 1}, // only the first balanced object counts

    // Synthesized closing delimiters.
    {R"({"package": "pkg", "cryptographic_relevance": true)", true, 1},
    {R"({"package": "pkg", "cryptographic_relevance": true, "justification": "uses)",
     true, 1, "pkg", "uses"}, // unterminated string gets closed too

    // Unquoted keys.
    {R"({package: "pkg", cryptographic_relevance: true, justification: "x"})",
     true, 1},
    {"```\n{package: \"pkg\", cryptographic_relevance: true}\n```", true, 2},

    // Field aliases, case-insensitive.
    {R"({"name": "pkg", "crypto_relevance": true, "justification": "x"})",
     true, 1},
    {R"({"Package": "pkg", "Cryptographic_Relevance": false})", false, 1},
    {R"({"cryptographic-relevance": true, "package": "pkg"})", true, 1},
    {R"({"relevance": "yes", "package": "pkg"})", true, 2}, // alias + coercion

    // String-to-boolean coercion.
    {R"({"package": "pkg", "cryptographic_relevance": "True"})", true, 1},
    {R"({"package": "pkg", "cryptographic_relevance": "true"})", true, 1},
    {R"({"package": "pkg", "cryptographic_relevance": "False"})", false, 1},
    {R"({"package": "pkg", "cryptographic_relevance": "false"})", false, 1},
    {R"({"package": "pkg", "cryptographic_relevance": "yes"})", true, 1},
    {R"({"package": "pkg", "cryptographic_relevance": "no"})", false, 1},

    // Package backfill from the expected name.
    {R"({"cryptographic_relevance": true})", true, 1},
    {R"({"cryptographic_relevance": true, "package": ""})", true, 1},
    {R"({"package": 42, "cryptographic_relevance": true})", true, 1},
    {R"({"name": "", "cryptographic_relevance": true})", true, 2},
};

struct FailCase {
    const char* raw;
    ParseFailureCategory category;
};

const FailCase kFailCases[] = {
    {"{\"a\": {\"b\": {\"c\": 1", ParseFailureCategory::unbalanced},
    {R"({"package": "pkg", "cryptographic_relevance": "definitely"})",
     ParseFailureCategory::unrecognized_relevance_value},
    {R"({"package": "pkg", "cryptographic_relevance": 1})",
     ParseFailureCategory::unrecognized_relevance_value},
    {R"({"package": "pkg", "cryptographic_relevance": null})",
     ParseFailureCategory::unrecognized_relevance_value},
    {R"({"package": "pkg", "justification": "x"})",
     ParseFailureCategory::missing_field},
    {"I cannot answer this question.", ParseFailureCategory::no_json_found},
    {"", ParseFailureCategory::empty_response},
    {"   \n\t ", ParseFailureCategory::empty_response},
    {"{]", ParseFailureCategory::no_json_found},
    {"[1, 2, 3]", ParseFailureCategory::no_json_found},
};

} // namespace

TEST_CASE("repair_and_parse resolves the annotated corpus") {
    for (const OkCase& c : kOkCases) {
        CAPTURE(c.raw);
        ParseResult r = repair_and_parse(c.raw, "pkg");
        REQUIRE(r.ok());
        CHECK(r.response().cryptographic_relevance == c.relevance);
        CHECK(r.response().package == c.package);
        CHECK(r.repair_stages_applied() == c.stages);
        if (c.justification) CHECK(r.response().justification == c.justification);
    }
}

TEST_CASE("repair_and_parse fails with the right category") {
    for (const FailCase& c : kFailCases) {
        CAPTURE(c.raw);
        ParseResult r = repair_and_parse(c.raw, "pkg");
        REQUIRE_FALSE(r.ok());
        CHECK(r.failure().category == c.category);
        CHECK(r.failure().raw_excerpt.size() <= 200);
    }
}

TEST_CASE("smart quotes are normalized before parsing") {
    std::string quoted_value = "{\"package\": \"pkg\", "
                               "\"cryptographic_relevance\": "
                               "\xe2\x80\x9ctrue\xe2\x80\x9d}";
    ParseResult r = repair_and_parse(quoted_value, "pkg");
    REQUIRE(r.ok());
    CHECK(r.response().cryptographic_relevance);
    CHECK(r.repair_stages_applied() == 2); // quote fix + string coercion

    std::string quoted_keys = "{\xe2\x80\x9cpackage\xe2\x80\x9d: "
                              "\xe2\x80\x9cpkg\xe2\x80\x9d, "
                              "\xe2\x80\x9c" "cryptographic_relevance\xe2\x80\x9d: "
                              "true}";
    r = repair_and_parse(quoted_keys, "pkg");
    REQUIRE(r.ok());
    CHECK(r.response().package == "pkg");
    CHECK(r.repair_stages_applied() == 1);
}

TEST_CASE("backfill requires an expected package name") {
    ParseResult r = repair_and_parse(R"({"cryptographic_relevance": true})", "");
    REQUIRE_FALSE(r.ok());
    CHECK(r.failure().category == ParseFailureCategory::missing_field);
}

TEST_CASE("strict mode disables yes/no coercion") {
    ParseOptions opts;
    opts.allow_yes_no = false;
    ParseResult r = repair_and_parse(
        R"({"package": "pkg", "cryptographic_relevance": "yes"})", "pkg", opts);
    REQUIRE_FALSE(r.ok());
    CHECK(r.failure().category ==
          ParseFailureCategory::unrecognized_relevance_value);

    // "True"/"False" stay coercible even in strict mode.
    r = repair_and_parse(
        R"({"package": "pkg", "cryptographic_relevance": "True"})", "pkg", opts);
    REQUIRE(r.ok());
    CHECK(r.response().cryptographic_relevance);
}

TEST_CASE("strict_parse accepts only canonical output") {
    ParseResult ok = strict_parse(
        R"({"package": "pkg", "cryptographic_relevance": true, "justification": "x"})");
    REQUIRE(ok.ok());
    CHECK(ok.repair_stages_applied() == 0);

    CHECK(strict_parse(R"({"package": "pkg", "cryptographic_relevance": "true"})")
              .failure()
              .category == ParseFailureCategory::unrecognized_relevance_value);
    CHECK(strict_parse(R"({package: "pkg", cryptographic_relevance: true})")
              .failure()
              .category == ParseFailureCategory::no_json_found);
    CHECK(strict_parse(R"({"cryptographic_relevance": true})")
              .failure()
              .category == ParseFailureCategory::missing_field);
    CHECK(strict_parse("```json\n{}\n```").failure().category ==
          ParseFailureCategory::no_json_found);
    CHECK(strict_parse("").failure().category ==
          ParseFailureCategory::empty_response);
}

TEST_CASE("serialize then parse is the identity and needs no repairs") {
    for (const OkCase& c : kOkCases) {
        ParseResult first = repair_and_parse(c.raw, "pkg");
        REQUIRE(first.ok());
        std::string text = serialize_response(first.response());

        ParseResult strict = strict_parse(text);
        REQUIRE(strict.ok());
        CHECK(strict.response().package == first.response().package);
        CHECK(strict.response().cryptographic_relevance ==
              first.response().cryptographic_relevance);
        CHECK(strict.response().justification == first.response().justification);

        ParseResult repaired = repair_and_parse(text, "pkg");
        REQUIRE(repaired.ok());
        CHECK(repaired.repair_stages_applied() == 0);
    }
}

TEST_CASE("parsing is deterministic") {
    for (const OkCase& c : kOkCases) {
        ParseResult a = repair_and_parse(c.raw, "pkg");
        ParseResult b = repair_and_parse(c.raw, "pkg");
        REQUIRE(a.ok());
        REQUIRE(b.ok());
        CHECK(a.response().package == b.response().package);
        CHECK(a.response().cryptographic_relevance ==
              b.response().cryptographic_relevance);
        CHECK(a.repair_stages_applied() == b.repair_stages_applied());
    }
}

TEST_CASE("failure category names are stable") {
    CHECK(std::string(to_string(ParseFailureCategory::no_json_found)) ==
          "no-json-found");
    CHECK(std::string(to_string(ParseFailureCategory::unbalanced)) ==
          "unbalanced");
    CHECK(std::string(to_string(ParseFailureCategory::missing_field)) ==
          "missing-field");
    CHECK(std::string(to_string(
              ParseFailureCategory::unrecognized_relevance_value)) ==
          "unrecognized-relevance-value");
    CHECK(std::string(to_string(ParseFailureCategory::empty_response)) ==
          "empty-response");
}

TEST_CASE("error tallies reproduce the reported per-model rates") {
    struct Row {
        std::size_t valid;
        std::size_t invalid;
        const char* rate;
    };
    // valid + invalid is 65294 for every model in the run this mirrors.
    const Row rows[] = {
        {65222, 72, "0.11%"},   {65199, 95, "0.15%"},  {65094, 200, "0.31%"},
        {64974, 320, "0.49%"},  {64157, 1137, "1.74%"}, {63529, 1765, "2.70%"},
    };
    for (const Row& row : rows) {
        ModelErrorTally tally{"m", row.valid, row.invalid};
        CHECK(tally.valid + tally.invalid == 65294);
        CHECK(format_percent(tally.error_rate()) == row.rate);
    }

    ModelErrorTally empty{"m", 0, 0};
    CHECK(empty.error_rate() == 0.0);
    CHECK(format_percent(empty.error_rate()) == "0.00%");
}
