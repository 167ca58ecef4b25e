#pragma once

#include <algorithm>
#include <limits>

#include "mtd/game.hpp"
#include "mtd/rng.hpp"

namespace mtd {

// Budgeted vulnerability-fixing problem. Estimates come from a trained
// revealed-feedback defender (or a supplied file), never from true reward
// tables; the instance contributes only its vulnerability sets and the type
// distribution.
struct PatchProblem {
    const GameInstance* game = nullptr;
    std::vector<std::vector<double>> estimates;  // [vuln][type], <= 0
    std::vector<double> prices;
    double budget = 0.0;
};

struct FixSet {
    std::vector<int> vulns;
    double total_price = 0.0;
    double objective = 0.0;
};

inline void check_problem(const PatchProblem& p) {
    if (!p.game) throw std::invalid_argument("patch problem: missing instance");
    if (static_cast<int>(p.estimates.size()) != p.game->num_vulns)
        throw std::invalid_argument("patch problem: estimates row count != num_vulns");
    for (const auto& row : p.estimates)
        if (static_cast<int>(row.size()) != p.game->num_attacker_types)
            throw std::invalid_argument("patch problem: estimates column count != num_attacker_types");
    if (static_cast<int>(p.prices.size()) != p.game->num_vulns)
        throw std::invalid_argument("patch problem: price vector length != num_vulns");
    for (double x : p.prices)
        if (x < 0.0) throw std::invalid_argument("patch problem: negative price");
    if (p.budget < 0.0) throw std::invalid_argument("patch problem: negative budget");
}

// Fixing a vulnerability zeroes its estimate everywhere.
inline std::vector<std::vector<double>> patched_estimates(const std::vector<std::vector<double>>& r,
                                                          const std::vector<int>& fixed) {
    auto out = r;
    for (int v : fixed)
        std::fill(out[v].begin(), out[v].end(), 0.0);
    return out;
}

namespace detail {

// Type-weighted worst patched estimate of one configuration.
inline double config_value(const PatchProblem& p, const std::vector<char>& fixed, int c) {
    double u = 0.0;
    for (int a = 0; a < p.game->num_attacker_types; ++a) {
        double worst = std::numeric_limits<double>::infinity();
        for (int v : p.game->vuln_sets[c]) {
            const double x = fixed[v] ? 0.0 : p.estimates[v][a];
            if (x < worst) worst = x;
        }
        u += p.game->type_distribution[a] * worst;
    }
    return u;
}

}  // namespace detail

// Worst configuration's value: the quantity the fix set maximizes.
inline double choose_vul_objective(const PatchProblem& p, const std::vector<char>& fixed) {
    double worst = std::numeric_limits<double>::infinity();
    for (int c = 0; c < p.game->num_configs; ++c) worst = std::min(worst, detail::config_value(p, fixed, c));
    return worst;
}

// The rejected variant: best configuration's value (and which one attains it).
inline std::pair<double, int> max_max_min_objective(const PatchProblem& p, const std::vector<char>& fixed) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int c = 0; c < p.game->num_configs; ++c) {
        const double u = detail::config_value(p, fixed, c);
        if (u > best) {
            best = u;
            arg = c;
        }
    }
    return {best, arg};
}

inline std::vector<char> as_mask(int num_vulns, const std::vector<int>& vulns) {
    std::vector<char> m(num_vulns, 0);
    for (int v : vulns) m[v] = 1;
    return m;
}

// One attacker type: repeatedly fix the minimum-estimate vulnerability (ties:
// least price, then lowest index); stop when the next pick is unaffordable.
// Provably optimal in this special case.
inline FixSet greedy_one_attacker(const PatchProblem& p) {
    check_problem(p);
    if (p.game->num_attacker_types != 1)
        throw std::invalid_argument("greedy_one_attacker requires exactly one attacker type");
    const int nv = p.game->num_vulns;
    std::vector<char> fixed(nv, 0);
    FixSet out;
    double remaining = p.budget;
    for (int iter = 0; iter < nv; ++iter) {
        int pick = -1;
        for (int v = 0; v < nv; ++v) {
            if (fixed[v]) continue;
            if (pick < 0 || p.estimates[v][0] < p.estimates[pick][0] ||
                (p.estimates[v][0] == p.estimates[pick][0] && p.prices[v] < p.prices[pick]))
                pick = v;
        }
        if (pick < 0 || p.prices[pick] > remaining) break;
        fixed[pick] = 1;
        remaining -= p.prices[pick];
        out.vulns.push_back(pick);
        out.total_price += p.prices[pick];
    }
    std::sort(out.vulns.begin(), out.vulns.end());
    out.objective = choose_vul_objective(p, fixed);
    return out;
}

// General greedy: each iteration fixes the single vulnerability whose
// addition maximizes the objective. Ties prefer the most negative weighted
// estimate (which is what makes the one-type case coincide with
// greedy_one_attacker), then least price, then lowest index. Stops when the
// chosen pick is unaffordable.
inline FixSet greedy_multi(const PatchProblem& p) {
    check_problem(p);
    const int nv = p.game->num_vulns, nc = p.game->num_configs, na = p.game->num_attacker_types;
    std::vector<char> fixed(nv, 0);
    std::vector<double> weighted(nv, 0.0);  // sum_a P_a * r_{v,a}
    for (int v = 0; v < nv; ++v)
        for (int a = 0; a < na; ++a) weighted[v] += p.game->type_distribution[a] * p.estimates[v][a];

    // Two smallest unfixed estimates per (config, type), so evaluating a
    // candidate fix is O(|C|*tau) instead of a full rescan.
    std::vector<double> min1(static_cast<std::size_t>(nc) * na), min2(min1.size());
    std::vector<int> min1v(min1.size());
    std::vector<int> fixed_in_config(nc, 0);
    auto rebuild = [&] {
        for (int c = 0; c < nc; ++c) {
            for (int a = 0; a < na; ++a) {
                const std::size_t idx = static_cast<std::size_t>(c) * na + a;
                double m1 = std::numeric_limits<double>::infinity(), m2 = m1;
                int m1v = -1;
                for (int v : p.game->vuln_sets[c]) {
                    if (fixed[v]) continue;
                    const double x = p.estimates[v][a];
                    if (x < m1 || (x == m1 && m1v < 0)) {
                        m2 = m1;
                        m1 = x;
                        m1v = v;
                    } else if (x < m2) {
                        m2 = x;
                    }
                }
                min1[idx] = m1;
                min2[idx] = m2;
                min1v[idx] = m1v;
            }
        }
    };
    rebuild();

    // Objective after additionally fixing `cand`.
    auto value_with = [&](int cand) {
        double worst = std::numeric_limits<double>::infinity();
        for (int c = 0; c < nc; ++c) {
            const bool in_c = p.game->vuln_in_config[c][cand];
            const bool any_fixed = fixed_in_config[c] > 0 || in_c;
            double u = 0.0;
            for (int a = 0; a < na; ++a) {
                const std::size_t idx = static_cast<std::size_t>(c) * na + a;
                double m = (in_c && min1v[idx] == cand) ? min2[idx] : min1[idx];
                if (any_fixed) m = std::min(m, 0.0);
                if (std::isinf(m)) m = 0.0;  // every vulnerability of c fixed
                u += p.game->type_distribution[a] * m;
            }
            worst = std::min(worst, u);
        }
        return worst;
    };

    FixSet out;
    double remaining = p.budget;
    for (int iter = 0; iter < nv; ++iter) {
        int pick = -1;
        double pick_val = 0.0;
        for (int v = 0; v < nv; ++v) {
            if (fixed[v]) continue;
            const double val = value_with(v);
            if (pick < 0 || val > pick_val ||
                (val == pick_val && (weighted[v] < weighted[pick] ||
                                     (weighted[v] == weighted[pick] && p.prices[v] < p.prices[pick])))) {
                pick = v;
                pick_val = val;
            }
        }
        if (pick < 0 || p.prices[pick] > remaining) break;
        fixed[pick] = 1;
        remaining -= p.prices[pick];
        out.vulns.push_back(pick);
        out.total_price += p.prices[pick];
        for (int c = 0; c < nc; ++c)
            if (p.game->vuln_in_config[c][pick]) ++fixed_in_config[c];
        rebuild();
    }
    std::sort(out.vulns.begin(), out.vulns.end());
    out.objective = choose_vul_objective(p, fixed);
    return out;
}

enum class PatchObjective { ChooseVul, MaxMaxMin };

// Exhaustive oracle over all feasible subsets; first optimum in mask order.
inline FixSet brute_force_choose_vul(const PatchProblem& p,
                                     PatchObjective kind = PatchObjective::ChooseVul) {
    check_problem(p);
    const int nv = p.game->num_vulns;
    if (nv > 25) throw std::invalid_argument("brute force limited to 25 vulnerabilities, got " +
                                             std::to_string(nv));
    double best_val = -std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    double best_price = 0.0;
    std::vector<char> fixed(nv, 0);
    for (std::uint32_t mask = 0; mask < (1u << nv); ++mask) {
        double price = 0.0;
        for (int v = 0; v < nv; ++v) {
            fixed[v] = (mask >> v) & 1u;
            if (fixed[v]) price += p.prices[v];
        }
        if (price > p.budget) continue;
        const double val = kind == PatchObjective::ChooseVul ? choose_vul_objective(p, fixed)
                                                             : max_max_min_objective(p, fixed).first;
        if (val > best_val) {
            best_val = val;
            best_mask = mask;
            best_price = price;
        }
    }
    FixSet out;
    for (int v = 0; v < nv; ++v)
        if ((best_mask >> v) & 1u) out.vulns.push_back(v);
    out.total_price = best_price;
    out.objective = best_val;
    return out;
}

// Baseline for the fixing experiment: uniform picks without replacement until
// the next pick would exceed the budget.
inline FixSet random_fix(const PatchProblem& p, RngStream& rng) {
    check_problem(p);
    const int nv = p.game->num_vulns;
    std::vector<int> pool(nv);
    for (int v = 0; v < nv; ++v) pool[v] = v;
    FixSet out;
    double remaining = p.budget;
    std::vector<char> fixed(nv, 0);
    int left = nv;
    while (left > 0) {
        const int i = rng.index(left);
        const int v = pool[i];
        if (p.prices[v] > remaining) break;
        std::swap(pool[i], pool[left - 1]);
        --left;
        fixed[v] = 1;
        remaining -= p.prices[v];
        out.vulns.push_back(v);
        out.total_price += p.prices[v];
    }
    std::sort(out.vulns.begin(), out.vulns.end());
    out.objective = choose_vul_objective(p, fixed);
    return out;
}

}  // namespace mtd
