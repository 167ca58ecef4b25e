#pragma once

#include <limits>

#include "mtd/defender.hpp"

namespace mtd {

struct FplMaxMinParams {
    double gamma = 0.006;
    double eta = 0.03;
};

// Perturbed max-min selection over a [vuln][type] estimate table: with
// probability gamma a uniform configuration; otherwise one exponential draw
// per (v, a) pair (v-major), u_c = sum_a P_a * min_{v in V_c}(est - z), and
// argmax_c of u_c minus the switching cost from prev. Ties break low.
inline int maxmin_select(const std::vector<std::vector<double>>& estimates, int prev,
                         const GameInstance& game, const FplMaxMinParams& params, RngStream& rng) {
    const int n = game.num_configs;
    if (rng.bernoulli(params.gamma)) return rng.index(n);
    const int nv = game.num_vulns, na = game.num_attacker_types;
    // One perturbation per (v, a) pair, shared by every configuration this
    // round; noise is applied inside the min.
    std::vector<double> pert(static_cast<std::size_t>(nv) * na);
    for (int v = 0; v < nv; ++v)
        for (int a = 0; a < na; ++a)
            pert[static_cast<std::size_t>(v) * na + a] = estimates[v][a] - rng.exponential(params.eta);
    int best = 0;
    double best_u = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < n; ++c) {
        double u = 0.0;
        for (int a = 0; a < na; ++a) {
            double worst = std::numeric_limits<double>::infinity();
            for (int v : game.vuln_sets[c]) {
                const double x = pert[static_cast<std::size_t>(v) * na + a];
                if (x < worst) worst = x;
            }
            u += game.type_distribution[a] * worst;
        }
        u -= game.switching_cost[prev][c];
        if (u > best_u) {
            best_u = u;
            best = c;
        }
    }
    return best;
}

// Revealed-feedback FPL defender: maintains per-(vulnerability, type) reward
// estimates from observed exploits and picks the configuration maximizing the
// type-weighted worst perturbed estimate, net of the switching cost.
//
// The estimate for (v, a) divides the accumulated raw reward of that pair by
// n_v * p_{v,a}, where n_v counts rounds whose deployed configuration exposed
// v and p_{v,a} = P_a * attacks(v,a)/rounds_attacked(a) is the empirical
// attack probability re-applied retroactively to every past round. Because
// the retroactive probability is the same for all rounds, the full
// recomputation collapses to that closed form.
class FplMaxMinDefender : public Defender {
  public:
    FplMaxMinDefender(const GameInstance* game, FplMaxMinParams params) : params_(params) {
        if (params_.eta <= 0.0) throw std::invalid_argument("fpl-maxmin: eta must be > 0");
        if (params_.gamma < 0.0 || params_.gamma > 1.0)
            throw std::invalid_argument("fpl-maxmin: gamma must be in [0, 1]");
        game_ = game;
        const int v = game->num_vulns, a = game->num_attacker_types;
        sum_reward_.assign(v, std::vector<double>(a, 0.0));
        attacks_.assign(v, std::vector<long long>(a, 0));
        type_rounds_.assign(a, 0);
        exposure_.assign(v, 0);
        prev_ = game->initial_config;
    }

    std::string name() const override { return "fpl-maxmin"; }
    FeedbackLevel feedback_level() const override { return FeedbackLevel::Revealed; }
    RewardChannel reward_channel() const override { return RewardChannel::Raw; }

    double estimate(int v, int a) const {
        if (attacks_[v][a] == 0 || exposure_[v] == 0) return 0.0;
        const double p = game_->type_distribution[a] * static_cast<double>(attacks_[v][a]) /
                         static_cast<double>(type_rounds_[a]);
        if (p <= 0.0) return 0.0;
        return sum_reward_[v][a] / (static_cast<double>(exposure_[v]) * p);
    }

    std::vector<std::vector<double>> estimates_matrix() const {
        std::vector<std::vector<double>> m(game_->num_vulns,
                                           std::vector<double>(game_->num_attacker_types, 0.0));
        for (int v = 0; v < game_->num_vulns; ++v)
            for (int a = 0; a < game_->num_attacker_types; ++a) m[v][a] = estimate(v, a);
        return m;
    }

    int select(RngStream& rng) override {
        last_ = maxmin_select(estimates_matrix(), prev_, *game_, params_, rng);
        return last_;
    }

    void update_revealed(const RevealedFeedback& fb) override {
        ++type_rounds_[fb.attacker_type];
        ++attacks_[fb.vuln][fb.attacker_type];
        sum_reward_[fb.vuln][fb.attacker_type] += fb.reward;
        for (int v : game_->vuln_sets[last_]) ++exposure_[v];
        prev_ = last_;
        t_ = fb.round;
    }

    std::unique_ptr<Defender> clone() const override { return std::make_unique<FplMaxMinDefender>(*this); }

    json state() const override {
        return json{{"name", name()},
                    {"estimates", estimates_matrix()},
                    {"attacks", attacks_},
                    {"type_rounds", type_rounds_},
                    {"exposure", exposure_},
                    {"prev", prev_},
                    {"t", t_},
                    {"gamma", params_.gamma},
                    {"eta", params_.eta}};
    }

  private:
    FplMaxMinParams params_;
    std::vector<std::vector<double>> sum_reward_;   // [v][type] raw rewards received
    std::vector<std::vector<long long>> attacks_;   // [v][type] observed attacks
    std::vector<long long> type_rounds_;            // rounds each type attacked
    std::vector<long long> exposure_;               // rounds deploying a config exposing v
    long long t_ = 0;
    int prev_ = 0;
    int last_ = 0;
};

}  // namespace mtd
