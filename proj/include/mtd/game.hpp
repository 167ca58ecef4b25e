#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mtd {

using json = nlohmann::json;

// One security game instance: which vulnerabilities each system configuration
// exposes, which ones each attacker type can exploit, and the per-
// vulnerability payoffs. Rewards factorize: the defender's loss for a
// successful exploit of v is vuln_defender_reward[v] regardless of who
// exploited it or under which configuration, and failed attacks pay 0 to
// both sides.
struct GameInstance {
    int num_configs = 0;
    int num_vulns = 0;
    int num_attacker_types = 0;

    std::vector<std::vector<int>> vuln_sets;     // per config, sorted vuln ids
    std::vector<std::vector<int>> capabilities;  // per attacker type, sorted vuln ids
    std::vector<double> type_distribution;       // over attacker types, sums to 1

    std::vector<double> vuln_defender_reward;  // per vuln, in [-1, 0]
    std::vector<double> vuln_attacker_reward;  // per vuln, in [0, 1]

    std::vector<std::vector<double>> switching_cost;  // n x n, diagonal 0, in [0, 1]
    int initial_config = 0;

    json meta = json::object();

    // Derived membership masks, rebuilt by finalize().
    std::vector<std::vector<std::uint8_t>> vuln_in_config;  // [config][vuln]
    std::vector<std::vector<std::uint8_t>> can_exploit;     // [type][vuln]

    void finalize() {
        vuln_in_config.assign(num_configs, std::vector<std::uint8_t>(num_vulns, 0));
        for (int c = 0; c < num_configs; ++c)
            for (int v : vuln_sets[c]) vuln_in_config[c][v] = 1;
        can_exploit.assign(num_attacker_types, std::vector<std::uint8_t>(num_vulns, 0));
        for (int a = 0; a < num_attacker_types; ++a)
            for (int v : capabilities[a]) can_exploit[a][v] = 1;
    }

    bool exploit_succeeds(int type, int vuln, int config) const {
        return vuln_in_config[config][vuln] && can_exploit[type][vuln];
    }

    double defender_reward(int type, int vuln, int config) const {
        return exploit_succeeds(type, vuln, config) ? vuln_defender_reward[vuln] : 0.0;
    }

    double attacker_reward(int type, int vuln, int config) const {
        return exploit_succeeds(type, vuln, config) ? vuln_attacker_reward[vuln] : 0.0;
    }
};

// Throws std::runtime_error on the first structural violation found.
inline void validate_instance(const GameInstance& g) {
    auto fail = [](const std::string& msg) { throw std::runtime_error("invalid instance: " + msg); };

    if (g.num_configs <= 0) fail("num_configs must be positive");
    if (g.num_vulns <= 0) fail("num_vulns must be positive");
    if (g.num_attacker_types <= 0) fail("num_attacker_types must be positive");
    if (static_cast<int>(g.vuln_sets.size()) != g.num_configs) fail("vuln_sets size mismatch");
    if (static_cast<int>(g.capabilities.size()) != g.num_attacker_types) fail("capabilities size mismatch");
    if (static_cast<int>(g.type_distribution.size()) != g.num_attacker_types)
        fail("type_distribution size mismatch");
    if (static_cast<int>(g.vuln_defender_reward.size()) != g.num_vulns)
        fail("vuln_defender_reward size mismatch");
    if (static_cast<int>(g.vuln_attacker_reward.size()) != g.num_vulns)
        fail("vuln_attacker_reward size mismatch");
    if (static_cast<int>(g.switching_cost.size()) != g.num_configs) fail("switching_cost row count mismatch");

    auto sorted_valid_ids = [&](const std::vector<int>& ids) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0 || ids[i] >= g.num_vulns) return false;
            if (i > 0 && ids[i] <= ids[i - 1]) return false;
        }
        return true;
    };
    for (int c = 0; c < g.num_configs; ++c) {
        if (g.vuln_sets[c].empty()) fail("config " + std::to_string(c) + " exposes no vulnerabilities");
        if (!sorted_valid_ids(g.vuln_sets[c]))
            fail("vuln_sets[" + std::to_string(c) + "] not sorted unique in range");
    }
    for (int a = 0; a < g.num_attacker_types; ++a) {
        if (g.capabilities[a].empty()) fail("attacker type " + std::to_string(a) + " has no capabilities");
        if (!sorted_valid_ids(g.capabilities[a]))
            fail("capabilities[" + std::to_string(a) + "] not sorted unique in range");
    }

    double mass = 0.0;
    for (double p : g.type_distribution) {
        if (p < 0.0) fail("type_distribution has a negative entry");
        mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-9) fail("type_distribution does not sum to 1");

    for (double r : g.vuln_defender_reward)
        if (r < -1.0 || r > 0.0) fail("vuln_defender_reward outside [-1, 0]");
    for (double r : g.vuln_attacker_reward)
        if (r < 0.0 || r > 1.0) fail("vuln_attacker_reward outside [0, 1]");

    for (int i = 0; i < g.num_configs; ++i) {
        if (static_cast<int>(g.switching_cost[i].size()) != g.num_configs)
            fail("switching_cost row " + std::to_string(i) + " length mismatch");
        if (g.switching_cost[i][i] != 0.0) fail("switching_cost diagonal must be 0");
        for (double s : g.switching_cost[i])
            if (s < 0.0 || s > 1.0) fail("switching_cost outside [0, 1]");
    }
    if (g.initial_config < 0 || g.initial_config >= g.num_configs) fail("initial_config out of range");

    if (g.vuln_in_config.size() != static_cast<std::size_t>(g.num_configs) ||
        g.can_exploit.size() != static_cast<std::size_t>(g.num_attacker_types))
        fail("membership masks stale; call finalize()");
}

// What happened in one round of play.
struct RoundRecord {
    int round = 0;  // 1-based
    int attacker_type = 0;
    int defender_config = 0;
    int attacked_vuln = 0;
    double defender_reward = 0.0;
    double attacker_reward = 0.0;
    double switch_cost = 0.0;
};

using Trace = std::vector<RoundRecord>;

// Total defender utility: per-round rewards net of movement costs.
inline double total_utility(const Trace& trace) {
    double tu = 0.0;
    for (const auto& r : trace) tu += r.defender_reward - r.switch_cost;
    return tu;
}

inline void to_json(json& j, const GameInstance& g) {
    j = json{{"num_configs", g.num_configs},
             {"num_vulns", g.num_vulns},
             {"num_attacker_types", g.num_attacker_types},
             {"vuln_sets", g.vuln_sets},
             {"capabilities", g.capabilities},
             {"type_distribution", g.type_distribution},
             {"vuln_defender_reward", g.vuln_defender_reward},
             {"vuln_attacker_reward", g.vuln_attacker_reward},
             {"switching_cost", g.switching_cost},
             {"initial_config", g.initial_config},
             {"meta", g.meta}};
}

inline void from_json(const json& j, GameInstance& g) {
    j.at("num_configs").get_to(g.num_configs);
    j.at("num_vulns").get_to(g.num_vulns);
    j.at("num_attacker_types").get_to(g.num_attacker_types);
    j.at("vuln_sets").get_to(g.vuln_sets);
    j.at("capabilities").get_to(g.capabilities);
    j.at("type_distribution").get_to(g.type_distribution);
    j.at("vuln_defender_reward").get_to(g.vuln_defender_reward);
    j.at("vuln_attacker_reward").get_to(g.vuln_attacker_reward);
    j.at("switching_cost").get_to(g.switching_cost);
    j.at("initial_config").get_to(g.initial_config);
    g.meta = j.value("meta", json::object());
    g.finalize();
}

inline GameInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file: " + path);
    json j = json::parse(in);
    GameInstance g = j.get<GameInstance>();
    validate_instance(g);
    return g;
}

inline void save_instance(const GameInstance& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << json(g).dump(2) << '\n';
}

}  // namespace mtd
