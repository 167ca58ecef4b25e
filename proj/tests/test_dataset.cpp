#include <catch_amalgamated.hpp>

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "mtd/dataset.hpp"

using namespace mtd;

namespace {

// Three entries: full v3 metrics, v2-only metrics, and no CVSS block at all.
const char* kFixtureFeed = R"({
  "CVE_data_type": "CVE",
  "CVE_Items": [
    {
      "cve": {"CVE_data_meta": {"ID": "CVE-2021-1111"}},
      "impact": {
        "baseMetricV3": {"cvssV3": {"baseScore": 9.8}, "impactScore": 5.9},
        "baseMetricV2": {"cvssV2": {"baseScore": 10.0}, "impactScore": 10.0}
      }
    },
    {
      "cve": {"CVE_data_meta": {"ID": "CVE-2019-2222"}},
      "impact": {"baseMetricV2": {"cvssV2": {"baseScore": 7.5}, "impactScore": 6.4}}
    },
    {
      "cve": {"CVE_data_meta": {"ID": "CVE-2020-3333"}},
      "impact": {}
    }
  ]
})";

struct TempFile {
    std::string path;
    explicit TempFile(std::string p, const std::string& content = "") : path(std::move(p)) {
        if (!content.empty()) {
            std::ofstream out(path, std::ios::binary);
            out << content;
        }
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("feed parsing prefers v3 metrics and skips entries without CVSS") {
    TempFile f("feed_fixture.json", kFixtureFeed);
    const ParsedFeed feed = parse_nvd_feed(f.path);
    REQUIRE(feed.records.size() == 2);
    CHECK(feed.skipped == 1);

    CHECK(feed.records[0].id == "CVE-2021-1111");
    CHECK(feed.records[0].year == 2021);
    CHECK(feed.records[0].base_score == 9.8);   // v3 wins over the v2 block
    CHECK(feed.records[0].impact_score == 5.9);

    CHECK(feed.records[1].id == "CVE-2019-2222");
    CHECK(feed.records[1].year == 2019);
    CHECK(feed.records[1].base_score == 7.5);
    CHECK(feed.records[1].impact_score == 6.4);
}

TEST_CASE("gzip-compressed feeds parse identically") {
    const std::string path = "feed_fixture.json.gz";
    gzFile gz = gzopen(path.c_str(), "wb");
    REQUIRE(gz != nullptr);
    gzwrite(gz, kFixtureFeed, static_cast<unsigned>(std::strlen(kFixtureFeed)));
    gzclose(gz);
    const ParsedFeed feed = parse_nvd_feed(path);
    CHECK(feed.records.size() == 2);
    CHECK(feed.skipped == 1);
    std::remove(path.c_str());
}

TEST_CASE("malformed and unsupported feeds fail loudly") {
    TempFile bad("feed_bad.json", "{\"CVE_Items\": [ oops");
    CHECK_THROWS_WITH(parse_nvd_feed(bad.path),
                      Catch::Matchers::ContainsSubstring("malformed JSON at byte"));

    TempFile other("feed_other.json", "{\"vulnerabilities\": []}");
    CHECK_THROWS_WITH(parse_nvd_feed(other.path),
                      Catch::Matchers::ContainsSubstring("unsupported feed schema"));
}

TEST_CASE("pool CSV round-trips and deduplicates on save") {
    GlobalVulnPool pool{{"CVE-2021-1111", 2021, 9.8, 5.9},
                        {"CVE-2019-2222", 2019, 7.5, 6.4},
                        {"CVE-2021-1111", 2021, 1.0, 1.0}};  // duplicate id, dropped
    TempFile f("pool_roundtrip.csv");
    save_pool(pool, f.path);
    const GlobalVulnPool back = load_pool(f.path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "CVE-2021-1111");
    CHECK(back[0].impact_score == 5.9);
    CHECK(back[1].id == "CVE-2019-2222");

    TempFile notpool("notpool.csv", "foo,bar\n1,2\n");
    CHECK_THROWS(load_pool(notpool.path));
}

TEST_CASE("feed-directory ingestion walks json and json.gz files") {
    namespace fs = std::filesystem;
    const std::string dir = "feeds_tmp";
    fs::create_directories(dir);
    {
        std::ofstream out(dir + "/a.json");
        out << kFixtureFeed;
    }
    const ParsedFeed feed = ingest_feed_dir(dir);
    CHECK(feed.records.size() == 2);
    fs::remove_all(dir);
    CHECK_THROWS(ingest_feed_dir("no_such_dir_xyz"));
}

TEST_CASE("synthetic generation respects requested ranges and validates") {
    GeneratorParams p;
    p.mode = RewardMode::GeneralSum;
    p.configs_lo = 4;
    p.configs_hi = 6;
    p.types_lo = 2;
    p.types_hi = 3;
    p.vulns_lo = 30;
    p.vulns_hi = 40;
    p.seed = 99;
    const GameInstance g = generate_synthetic_instance(p);
    CHECK_NOTHROW(validate_instance(g));
    CHECK(g.num_configs >= 4);
    CHECK(g.num_configs <= 6);
    CHECK(g.num_attacker_types >= 2);
    CHECK(g.num_attacker_types <= 3);
    CHECK(g.num_vulns >= 30);
    CHECK(g.num_vulns <= 40);
    CHECK(g.meta.at("mode") == "general");
    for (double x : g.vuln_defender_reward) {
        CHECK(x <= 0.0);
        CHECK(x >= -1.0);
    }
    // same seed, same instance
    const GameInstance h = generate_synthetic_instance(p);
    CHECK(h.vuln_sets == g.vuln_sets);
    CHECK(h.vuln_defender_reward == g.vuln_defender_reward);
}

TEST_CASE("zero-sum instances negate the defender reward entrywise") {
    GeneratorParams p;
    p.mode = RewardMode::ZeroSum;
    p.configs_lo = p.configs_hi = 5;
    p.types_lo = p.types_hi = 2;
    p.vulns_lo = p.vulns_hi = 50;
    p.seed = 7;
    const GameInstance g = generate_synthetic_instance(p);
    for (int v = 0; v < g.num_vulns; ++v)
        CHECK(g.vuln_attacker_reward[v] == -g.vuln_defender_reward[v]);
}

TEST_CASE("switching cost modes") {
    RngStream rng(11);
    auto zero = switching_cost_gen(4, rng, SwitchMode::Zero);
    for (const auto& row : zero)
        for (double x : row) CHECK(x == 0.0);

    auto constant = switching_cost_gen(4, rng, SwitchMode::Constant, 0.3);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(constant[i][j] == (i == j ? 0.0 : 0.3));

    auto uniform = switching_cost_gen(4, rng, SwitchMode::Uniform);
    for (int i = 0; i < 4; ++i) {
        CHECK(uniform[i][i] == 0.0);
        for (int j = 0; j < 4; ++j) {
            CHECK(uniform[i][j] == uniform[j][i]);
            CHECK(uniform[i][j] >= 0.0);
            CHECK(uniform[i][j] <= 1.0);
        }
    }
    CHECK_THROWS(switching_cost_gen(3, rng, SwitchMode::Constant, 1.5));
}

TEST_CASE("nvd-mode generation maps CVSS scores into rewards") {
    GlobalVulnPool pool;
    RngStream r(123);
    for (int i = 0; i < 200; ++i)
        pool.push_back({"CVE-2021-" + std::to_string(10000 + i), 2021, r.real01() * 10.0,
                        r.real01() * 10.0});
    GeneratorParams p;
    p.configs_lo = p.configs_hi = 5;
    p.types_lo = p.types_hi = 2;
    p.vulns_lo = p.vulns_hi = 60;
    p.seed = 42;
    const GameInstance g = generate_nvd_instance(pool, p);
    CHECK_NOTHROW(validate_instance(g));
    REQUIRE(g.meta.contains("cve_ids"));
    const auto ids = g.meta.at("cve_ids").get<std::vector<std::string>>();
    REQUIRE(static_cast<int>(ids.size()) == g.num_vulns);
    // rewards reconstructable from the sampled records
    std::map<std::string, CveRecord> by_id;
    for (const auto& rec : pool) by_id[rec.id] = rec;
    for (int v = 0; v < g.num_vulns; ++v) {
        const auto& rec = by_id.at(ids[v]);
        CHECK(g.vuln_defender_reward[v] == Catch::Approx(-rec.impact_score / 10.0));
        CHECK(g.vuln_attacker_reward[v] == Catch::Approx(rec.base_score / 10.0));
    }
    // distinct CVEs per instance
    std::set<std::string> uniq(ids.begin(), ids.end());
    CHECK(uniq.size() == ids.size());

    GlobalVulnPool tiny(pool.begin(), pool.begin() + 10);
    CHECK_THROWS(generate_nvd_instance(tiny, p));
    CHECK_THROWS_AS(generate_synthetic_instance(p), std::invalid_argument);  // p.mode still Nvd
}

TEST_CASE("exclusion probability controls config vulnerability density") {
    GeneratorParams p;
    p.mode = RewardMode::GeneralSum;
    p.configs_lo = p.configs_hi = 10;
    p.types_lo = p.types_hi = 2;
    p.vulns_lo = p.vulns_hi = 200;
    p.exclusion = 0.3;
    p.seed = 5;
    const GameInstance g = generate_synthetic_instance(p);
    long long covered = 0;
    for (const auto& vs : g.vuln_sets) covered += static_cast<long long>(vs.size());
    const double total = static_cast<double>(g.num_configs) * g.num_vulns;
    const double frac = covered / total;  // expect 1 - exclusion
    const double sd = std::sqrt(0.3 * 0.7 / total);
    CHECK(std::abs(frac - 0.7) < 3.0 * sd + 1e-3);
}
