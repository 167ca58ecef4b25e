#pragma once

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "mtd/game.hpp"
#include "mtd/rng.hpp"

namespace mtd {

struct CveRecord {
    std::string id;
    int year = 0;
    double base_score = 0.0;    // CVSS base score, 0..10
    double impact_score = 0.0;  // CVSS impact sub-score, 0..10
};

using GlobalVulnPool = std::vector<CveRecord>;

struct ParsedFeed {
    std::vector<CveRecord> records;
    int skipped = 0;  // entries lacking usable CVSS metrics
};

// Reads a whole file, transparently inflating gzip (zlib also passes plain
// files through unchanged).
inline std::string read_maybe_gz(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open feed file: " + path);
    std::string out;
    char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw std::runtime_error("decompression failed: " + path);
    return out;
}

inline int year_from_cve_id(const std::string& id) {
    // CVE-2014-0160 -> 2014
    const auto a = id.find('-');
    if (a == std::string::npos) return 0;
    const auto b = id.find('-', a + 1);
    if (b == std::string::npos) return 0;
    try {
        return std::stoi(id.substr(a + 1, b - a - 1));
    } catch (...) {
        return 0;
    }
}

// NVD JSON 1.1 feed parser. Prefers CVSS v3 metrics, falls back to v2, and
// skips (counting) entries that carry neither. Feed order is preserved.
inline ParsedFeed parse_nvd_feed(const std::string& path) {
    const std::string text = read_maybe_gz(path);
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": malformed JSON at byte " + std::to_string(e.byte));
    }
    if (!root.is_object() || !root.contains("CVE_Items") || !root["CVE_Items"].is_array())
        throw std::runtime_error(path + ": unsupported feed schema (no CVE_Items array)");

    ParsedFeed out;
    for (const auto& item : root["CVE_Items"]) {
        std::string id;
        if (item.contains("cve") && item["cve"].contains("CVE_data_meta") &&
            item["cve"]["CVE_data_meta"].contains("ID"))
            id = item["cve"]["CVE_data_meta"]["ID"].get<std::string>();
        if (id.empty()) {
            ++out.skipped;
            continue;
        }
        double bs = -1.0, is = -1.0;
        if (item.contains("impact")) {
            const auto& imp = item["impact"];
            if (imp.contains("baseMetricV3") && imp["baseMetricV3"].contains("cvssV3") &&
                imp["baseMetricV3"]["cvssV3"].contains("baseScore") &&
                imp["baseMetricV3"].contains("impactScore")) {
                bs = imp["baseMetricV3"]["cvssV3"]["baseScore"].get<double>();
                is = imp["baseMetricV3"]["impactScore"].get<double>();
            } else if (imp.contains("baseMetricV2") && imp["baseMetricV2"].contains("cvssV2") &&
                       imp["baseMetricV2"]["cvssV2"].contains("baseScore") &&
                       imp["baseMetricV2"].contains("impactScore")) {
                bs = imp["baseMetricV2"]["cvssV2"]["baseScore"].get<double>();
                is = imp["baseMetricV2"]["impactScore"].get<double>();
            }
        }
        if (bs < 0.0 || bs > 10.0 || is < 0.0 || is > 10.0) {
            ++out.skipped;
            continue;
        }
        out.records.push_back({id, year_from_cve_id(id), bs, is});
    }
    return out;
}

// Normalized pool cache: cve_id,year,base_score,impact_score. Writing
// deduplicates by id, keeping the first occurrence.
inline void save_pool(const GlobalVulnPool& pool, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "cve_id,year,base_score,impact_score\n";
    std::unordered_set<std::string> seen;
    for (const auto& r : pool) {
        if (!seen.insert(r.id).second) continue;
        out << r.id << ',' << r.year << ',' << r.base_score << ',' << r.impact_score << '\n';
    }
}

inline GlobalVulnPool load_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pool file: " + path);
    GlobalVulnPool pool;
    std::string line;
    if (!std::getline(in, line)) return pool;  // empty file -> empty pool
    if (line.rfind("cve_id,", 0) != 0) throw std::runtime_error(path + ": not a pool CSV (bad header)");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        CveRecord r;
        std::string field;
        if (!std::getline(ss, r.id, ',')) continue;
        if (!std::getline(ss, field, ',')) continue;
        r.year = std::stoi(field);
        if (!std::getline(ss, field, ',')) continue;
        r.base_score = std::stod(field);
        if (!std::getline(ss, field, ',')) continue;
        r.impact_score = std::stod(field);
        pool.push_back(std::move(r));
    }
    return pool;
}

// Parses every *.json / *.json.gz under dir, in filename order.
inline ParsedFeed ingest_feed_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir)) throw std::runtime_error("feed directory does not exist: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string name = e.path().filename().string();
        if (name.ends_with(".json") || name.ends_with(".json.gz")) files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    ParsedFeed all;
    for (const auto& f : files) {
        ParsedFeed one = parse_nvd_feed(f);
        all.skipped += one.skipped;
        for (auto& r : one.records) all.records.push_back(std::move(r));
    }
    return all;
}

enum class RewardMode { Nvd, GeneralSum, ZeroSum };
enum class SwitchMode { Uniform, Constant, Zero };

inline std::string to_string(RewardMode m) {
    switch (m) {
        case RewardMode::Nvd: return "nvd";
        case RewardMode::GeneralSum: return "general";
        default: return "zero";
    }
}
inline std::string to_string(SwitchMode m) {
    switch (m) {
        case SwitchMode::Uniform: return "uniform";
        case SwitchMode::Constant: return "constant";
        default: return "zero";
    }
}

struct GeneratorParams {
    int configs_lo = 10, configs_hi = 20;
    int types_lo = 3, types_hi = 6;
    int vulns_lo = 500, vulns_hi = 800;
    double exclusion = -1.0;  // <0 -> 0.01 for nvd, 0.05 for synthetic
    double skill_mean = 0.5, skill_sd = 0.25;
    double cap_sd_frac = 0.1;  // sd of capable-count, as a fraction of |V|
    RewardMode mode = RewardMode::Nvd;
    SwitchMode switch_mode = SwitchMode::Uniform;
    double switch_const = 0.5;
    std::uint64_t seed = 2022;
};

inline double effective_exclusion(const GeneratorParams& p) {
    if (p.exclusion >= 0.0) return p.exclusion;
    return p.mode == RewardMode::Nvd ? 0.01 : 0.05;
}

inline std::vector<std::vector<double>> switching_cost_gen(int n, RngStream& rng, SwitchMode mode,
                                                           double constant = 0.5) {
    if (n < 1) throw std::invalid_argument("switching_cost_gen: n must be >= 1");
    if (mode == SwitchMode::Constant && (constant < 0.0 || constant > 1.0))
        throw std::invalid_argument("switching_cost_gen: constant outside [0, 1]");
    std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double x = 0.0;
            if (mode == SwitchMode::Uniform)
                x = rng.real01();
            else if (mode == SwitchMode::Constant)
                x = constant;
            s[i][j] = s[j][i] = x;
        }
    }
    return s;
}

namespace detail {

inline int sample_range(RngStream& rng, int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("generator: empty range");
    return lo + rng.index(hi - lo + 1);
}

inline GameInstance generate_core(const GeneratorParams& params, const GlobalVulnPool* pool) {
    RngStream rng(derive_seed(params.seed, "instance-gen"));
    GameInstance g;
    g.num_configs = sample_range(rng, params.configs_lo, params.configs_hi);
    g.num_attacker_types = sample_range(rng, params.types_lo, params.types_hi);
    g.num_vulns = sample_range(rng, params.vulns_lo, params.vulns_hi);

    json cve_ids = json::array();
    g.vuln_defender_reward.resize(g.num_vulns);
    g.vuln_attacker_reward.resize(g.num_vulns);
    if (params.mode == RewardMode::Nvd) {
        if (!pool) throw std::invalid_argument("nvd mode requires a vulnerability pool");
        if (static_cast<int>(pool->size()) < g.num_vulns)
            throw std::runtime_error("vulnerability pool too small: have " + std::to_string(pool->size()) +
                                     ", need " + std::to_string(g.num_vulns));
        const auto picks = rng.sample_without_replacement(static_cast<int>(pool->size()), g.num_vulns);
        for (int v = 0; v < g.num_vulns; ++v) {
            const CveRecord& r = (*pool)[picks[v]];
            g.vuln_defender_reward[v] = -std::clamp(r.impact_score, 0.0, 10.0) / 10.0;
            g.vuln_attacker_reward[v] = std::clamp(r.base_score, 0.0, 10.0) / 10.0;
            cve_ids.push_back(r.id);
        }
    } else {
        for (int v = 0; v < g.num_vulns; ++v) {
            g.vuln_defender_reward[v] = -rng.real01();
            g.vuln_attacker_reward[v] = params.mode == RewardMode::ZeroSum ? -g.vuln_defender_reward[v]
                                                                           : rng.real01();
        }
    }

    g.capabilities.resize(g.num_attacker_types);
    for (int a = 0; a < g.num_attacker_types; ++a) {
        const double skill = rng.truncated_normal(params.skill_mean, params.skill_sd, 0.0, 1.0);
        const double raw =
            rng.truncated_normal(skill * g.num_vulns, params.cap_sd_frac * g.num_vulns, 1.0,
                                 static_cast<double>(g.num_vulns));
        const int count = std::clamp(static_cast<int>(std::llround(raw)), 1, g.num_vulns);
        auto caps = rng.sample_without_replacement(g.num_vulns, count);
        std::sort(caps.begin(), caps.end());
        g.capabilities[a] = std::move(caps);
    }

    const double excl = effective_exclusion(params);
    g.vuln_sets.resize(g.num_configs);
    for (int c = 0; c < g.num_configs; ++c) {
        do {
            g.vuln_sets[c].clear();
            for (int v = 0; v < g.num_vulns; ++v)
                if (!rng.bernoulli(excl)) g.vuln_sets[c].push_back(v);
        } while (g.vuln_sets[c].empty());
    }

    g.switching_cost = switching_cost_gen(g.num_configs, rng, params.switch_mode, params.switch_const);
    g.type_distribution.assign(g.num_attacker_types, 1.0 / g.num_attacker_types);
    g.initial_config = 0;
    g.meta = json{{"id", to_string(params.mode) + "-" + std::to_string(params.seed)},
                  {"mode", to_string(params.mode)},
                  {"generator_seed", params.seed},
                  {"exclusion", excl},
                  {"switch_mode", to_string(params.switch_mode)}};
    if (params.mode == RewardMode::Nvd) g.meta["cve_ids"] = std::move(cve_ids);
    g.finalize();
    validate_instance(g);
    return g;
}

}  // namespace detail

inline GameInstance generate_nvd_instance(const GlobalVulnPool& pool, const GeneratorParams& params) {
    GeneratorParams p = params;
    p.mode = RewardMode::Nvd;
    return detail::generate_core(p, &pool);
}

inline GameInstance generate_synthetic_instance(const GeneratorParams& params) {
    if (params.mode == RewardMode::Nvd)
        throw std::invalid_argument("synthetic generator: mode must be general or zero-sum");
    return detail::generate_core(params, nullptr);
}

}  // namespace mtd
