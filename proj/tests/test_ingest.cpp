#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"

#include "cryptoscan/errors.hpp"
#include "cryptoscan/ingest.hpp"
#include "cryptoscan/rng.hpp"

using namespace cryptoscan;

namespace {

struct NevraCase {
    const char* raw;
    const char* expected;
};

// Expected names derived by hand from the NEVRA reduction rule: strip a
// known ".arch" suffix, then strip "-version-release" only when both
// fields start with a digit and a name remains in front of them.
const NevraCase kNevraCases[] = {
    {"bash-5.1.8-6.el9.x86_64", "bash"},
    {"openssl-libs-3.0.7-27.el9.x86_64", "openssl-libs"},
    {"java-1.8.0-openjdk-1.8.0.372.b07-1.el9.x86_64", "java-1.8.0-openjdk"},
    {"java-1.8.0-openjdk", "java-1.8.0-openjdk"},
    {"gcc", "gcc"},
    {"gcc-11.3.1-4.3.el9.aarch64", "gcc"},
    {"tzdata-2023c-1.el9.noarch", "tzdata"},
    {"python3-pip-21.2.3-7.el9.noarch", "python3-pip"},
    {"kernel-5.14.0-284.11.1.el9_2.src", "kernel"},
    {"foo-1.2-3.sparc", "foo"}, // unknown arch folds into the release field
    {"a-1-1.x86_64", "a"},
    {"zlib-1.2.11-40.el9.i686", "zlib"},
    {"perl-IO-Socket-SSL-2.073-2.el9.noarch", "perl-IO-Socket-SSL"},
    {"bind-32:9.16.23-11.el9.x86_64", "bind"},
    {"NetworkManager-1:1.42.2-1.el9.x86_64", "NetworkManager"},
    {"httpd-2.4.53-7.el9", "httpd"},
    {"libstdc++-11.3.1-4.3.el9.x86_64", "libstdc++"},
    {"python3.11-3.11.2-2.el9.x86_64", "python3.11"},
    {"glibc-2.34-60.el9.armv7hl", "glibc"},
    {"openssh-8.7p1-30.el9.ppc64le", "openssh"},
    {"curl-7.76.1-23.el9.s390x", "curl"},
    {"vim", "vim"},
    {"package-beta-2", "package-beta-2"}, // version field not digit-led
    {"tool-1.0-rc1", "tool-1.0-rc1"},     // release field not digit-led
    {"name-1.0", "name-1.0"},             // no version-release pair
    {"pkg.noarch", "pkg"},
    {"1.2.3-4.x86_64", "1.2.3-4"}, // nothing left of the pair
    {"glib2-2.68.4-6.el9.x86_64", "glib2"},
    {"libxml2-2.9.13-3.el9.i686", "libxml2"},
    {"rust-std-static-1.66.1-1.el9.x86_64", "rust-std-static"},
    {"podman-2:4.4.1-8.el9.aarch64", "podman"},
    {"grub2-efi-x64-1:2.06-61.el9.x86_64", "grub2-efi-x64"},
    {"nss-softokn-freebl-3.90.0-6.el9.i686", "nss-softokn-freebl"},
    {"dotnet-runtime-7.0-7.0.7-1.el9.x86_64", "dotnet-runtime-7.0"},
    {"mesa-libGL-23.1.4-1.el9.x86_64", "mesa-libGL"},
    {"xorg-x11-server-Xorg-1.20.11-19.el9.x86_64", "xorg-x11-server-Xorg"},
    {"python3-3.9.16-1.el9.src", "python3"},
    {"compat-openssl11-1:1.1.1k-4.el9.x86_64", "compat-openssl11"},
    {"gnupg2-2.3.3-4.el9.x86_64", "gnupg2"},
    {"ca-certificates-2023.2.60-90.1.el9.noarch", "ca-certificates"},
    {"crypto-policies-20230731-1.git94f0e2c.el9.noarch", "crypto-policies"},
    {"kmod-kvdo-8.2.1.6-98.el9.x86_64", "kmod-kvdo"},
    {"pam_u2f-1.1.0-3.el9.x86_64", "pam_u2f"},
    {"p11-kit-trust-0.25.3-2.el9.x86_64", "p11-kit-trust"},
    {"libsss_idmap-2.9.1-2.el9.i686", "libsss_idmap"},
    {"fence-agents-all-4.10.0-43.el9.x86_64", "fence-agents-all"},
    {"NetworkManager-wifi-1:1.42.2-1.el9.aarch64", "NetworkManager-wifi"},
    {"gtk-update-icon-cache-3.24.31-2.el9.x86_64", "gtk-update-icon-cache"},
    {"e2fsprogs-libs-1.46.5-3.el9.x86_64", "e2fsprogs-libs"},
};

} // namespace

TEST_CASE("normalize_name reduces the oracle table exactly") {
    for (const NevraCase& c : kNevraCases) {
        CAPTURE(c.raw);
        CHECK(normalize_name(c.raw) == c.expected);
    }
}

TEST_CASE("normalize_name is idempotent on every oracle case") {
    for (const NevraCase& c : kNevraCases) {
        CAPTURE(c.raw);
        std::string once = normalize_name(c.raw);
        CHECK(normalize_name(once) == once);
    }
}

TEST_CASE("normalize_name strips one architecture suffix per pass") {
    // Real NEVRA strings carry at most one ".arch"; a doubled suffix is
    // reduced one layer at a time.
    CHECK(normalize_name("pkg.x86_64.x86_64") == "pkg.x86_64");
    CHECK(normalize_name("pkg.x86_64") == "pkg");
}

TEST_CASE("normalize_name rejects degenerate input") {
    CHECK_THROWS_AS(normalize_name(""), DataError);
    CHECK_THROWS_AS(normalize_name("-"), DataError);
    CHECK_THROWS_AS(normalize_name("..."), DataError);
    CHECK_THROWS_AS(normalize_name("-._:"), DataError);
    CHECK_THROWS_AS(normalize_name("--1.0-1"), DataError); // reduces to "-"
}

TEST_CASE("normalize_name honors a custom architecture set") {
    std::set<std::string> archs = {"sparc"};
    CHECK(normalize_name("foo-1.2-3.sparc", archs) == "foo");
    // An unrecognized arch folds into the release field, which still
    // starts with a digit, so the version-release strip fires anyway.
    CHECK(normalize_name("bash-5.1.8-6.el9.x86_64", archs) == "bash");
}

TEST_CASE("compare_versions follows the segment oracle") {
    struct Case {
        const char* a;
        const char* b;
        int sign;
    };
    const Case cases[] = {
        {"1.0", "1.0", 0},    {"1.0", "1.1", -1},   {"1.10", "1.9", 1},
        {"1.0.1", "1.0", 1},  {"1.0", "1.0.0", -1}, {"09", "9", 0},
        {"9", "10", -1},      {"1.0a", "1.0b", -1}, {"1.alpha", "1.1", 1},
        {"1:1.0", "2:0.1", -1}, {"1.0-2", "1.0-10", -1}, {"", "1", -1},
        {"2.068", "2.68", 0}, {"10.0", "9.9", 1},
    };
    auto sign = [](int v) { return v < 0 ? -1 : v > 0 ? 1 : 0; };
    for (const Case& c : cases) {
        CAPTURE(c.a);
        CAPTURE(c.b);
        CHECK(sign(compare_versions(c.a, c.b)) == c.sign);
        CHECK(sign(compare_versions(c.b, c.a)) == -c.sign);
    }
}

TEST_CASE("tsv export parses, counts malformed rows, scrubs control chars") {
    std::string tsv =
        "pkg-a-1.0-1.x86_64\t1.0\tAlpha de\x01scription\tdep1, dep2\n"
        "pkg-b-2.0-1.x86_64\t2.0\tBeta tool\n"
        "pkg-c-1.0-1.x86_64\n"
        "\n"
        "bad\tx\ty\tz\tfifth-field\n"
        "-\t1.0\n"
        "pkg-d-1.0-1.x86_64\t\tno version\n";
    std::istringstream in(tsv);
    ParsedExport parsed = parse_package_export(in);

    CHECK(parsed.summary.total_raw == 6); // blank line never counted
    CHECK(parsed.summary.dropped_malformed == 2);
    REQUIRE(parsed.records.size() == 4);
    CHECK(parsed.records[0].name == "pkg-a");
    CHECK(parsed.records[0].raw_name == "pkg-a-1.0-1.x86_64");
    CHECK(parsed.records[0].version == "1.0");
    CHECK(parsed.records[0].description == "Alpha de scription");
    CHECK(parsed.records[0].dependencies ==
          std::vector<std::string>{"dep1", "dep2"});
    CHECK_FALSE(parsed.records[2].version.has_value());
    CHECK_FALSE(parsed.records[3].version.has_value()); // empty field
}

TEST_CASE("json export parses with per-entry validation") {
    std::string doc = R"([
      {"name": "pkg-a-1.0-1.x86_64", "version": "1.0",
       "description": "Alpha", "dependencies": ["d1", "d2"]},
      {"version": "2.0"},
      {"name": "pkg-b-1.0-1.x86_64", "dependencies": "not-an-array"},
      {"name": "pkg-c-1.0-1.x86_64", "version": 7},
      {"name": "pkg-d-1.0-1.x86_64", "description": null}
    ])";
    std::istringstream in(doc);
    ParsedExport parsed = parse_package_export(in);

    CHECK(parsed.summary.total_raw == 5);
    CHECK(parsed.summary.dropped_malformed == 3);
    REQUIRE(parsed.records.size() == 2);
    CHECK(parsed.records[0].name == "pkg-a");
    CHECK(parsed.records[0].dependencies ==
          std::vector<std::string>{"d1", "d2"});
    CHECK(parsed.records[1].name == "pkg-d");
    CHECK(parsed.records[1].description.empty());
}

TEST_CASE("exports with no usable entries are an error") {
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_package_export(empty), DataError);

    std::istringstream all_bad("-\t1.0\n");
    CHECK_THROWS_AS(parse_package_export(all_bad), DataError);

    std::istringstream not_array("{\"name\": \"x\"}");
    CHECK_THROWS_AS(parse_package_export(not_array), DataError);

    std::istringstream broken("[{\"name\": ");
    CHECK_THROWS_AS(parse_package_export(broken), DataError);
}

TEST_CASE("dedupe keeps the highest version and beats versionless") {
    std::vector<PackageRecord> records;
    records.push_back({"x-1.0-1.x86_64", "x", std::string("1.0"), "old", {}});
    records.push_back({"x-1.2-1.x86_64", "x", std::string("1.2"), "new", {}});
    records.push_back({"x", "x", std::nullopt, "bare", {}});
    records.push_back({"y", "y", std::nullopt, "only", {}});

    std::vector<PackageRecord> out = dedupe(records);
    REQUIRE(out.size() == 2);
    CHECK(out[0].name == "x");
    CHECK(out[0].version == "1.2");
    CHECK(out[0].description == "new");
    CHECK(out[1].name == "y");
}

TEST_CASE("dedupe output is invariant under input permutation") {
    std::vector<PackageRecord> records;
    for (int i = 0; i < 30; ++i) {
        std::string name = "pkg" + std::to_string(i % 10);
        records.push_back({name, name, std::to_string(i),
                           "desc" + std::to_string(i), {}});
    }
    std::vector<PackageRecord> base = dedupe(records);

    std::mt19937_64 eng(5);
    for (int round = 0; round < 20; ++round) {
        shuffle_deterministic(records, eng);
        std::vector<PackageRecord> again = dedupe(records);
        REQUIRE(again.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(again[i].name == base[i].name);
            CHECK(again[i].version == base[i].version);
            CHECK(again[i].description == base[i].description);
        }
    }
}

TEST_CASE("load_corpus dedupes 200 raw entries with 10 duplicates to 190") {
    std::ostringstream tsv;
    for (int i = 0; i < 190; ++i) {
        tsv << "pkg" << i << "-1." << i % 5 << "-1.x86_64\t1." << i % 5
            << "\tdescription " << i << "\t\n";
    }
    for (int i = 0; i < 10; ++i) { // duplicate names, lower versions
        tsv << "pkg" << i << "-0.9-1.x86_64\t0.9\tstale " << i << "\t\n";
    }
    std::istringstream in(tsv.str());
    ParsedExport corpus = load_corpus(in);

    CHECK(corpus.summary.total_raw == 200);
    CHECK(corpus.summary.total_deduplicated == 190);
    CHECK(corpus.records.size() == 190);

    // Independent recount: unique normalized names in the raw input.
    std::set<std::string> unique;
    for (int i = 0; i < 190; ++i) unique.insert("pkg" + std::to_string(i));
    CHECK(unique.size() == corpus.records.size());

    // The duplicate's higher-version description must have won.
    auto it = std::find_if(corpus.records.begin(), corpus.records.end(),
                           [](const PackageRecord& r) { return r.name == "pkg0"; });
    REQUIRE(it != corpus.records.end());
    CHECK(it->description == "description 0");

    CHECK(std::is_sorted(corpus.records.begin(), corpus.records.end(),
                         [](const PackageRecord& a, const PackageRecord& b) {
                             return a.name < b.name;
                         }));
}
