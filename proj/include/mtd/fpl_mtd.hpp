#pragma once

#include <cmath>
#include <limits>

#include "mtd/defender.hpp"

namespace mtd {

struct FplParams {
    double gamma = 0.007;   // exploration probability
    double eta = 0.1;       // mean of the exponential perturbation
    long long gr_cap = 0;   // resampling cap M; 0 -> ceil(n*T/gamma)
};

// Selector state: per-configuration reward estimates plus the previously
// deployed configuration the switching-cost term is charged against.
struct FplState {
    std::vector<double> estimates;
    int prev = 0;
    long long t = 0;  // rounds absorbed into the estimates
};

inline long long default_gr_cap(int num_configs, int horizon, double gamma) {
    const double g = std::max(gamma, 1e-9);
    return static_cast<long long>(std::ceil(static_cast<double>(num_configs) * std::max(horizon, 1) / g));
}

// One draw of the selection rule: explore uniformly with probability gamma,
// otherwise perturb each estimate with exponential noise and take the argmax,
// charging s(prev, c) when subtract_switch is set. Ties -> lowest index.
inline int fpl_select(const FplState& st, const GameInstance& game, const FplParams& params,
                      bool subtract_switch, RngStream& rng) {
    const int n = static_cast<int>(st.estimates.size());
    if (rng.bernoulli(params.gamma)) return rng.index(n);
    int best = 0;
    double best_u = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < n; ++c) {
        double u = st.estimates[c] - rng.exponential(params.eta);
        if (subtract_switch) u -= game.switching_cost[st.prev][c];
        if (u > best_u) {
            best_u = u;
            best = c;
        }
    }
    return best;
}

// Geometric resampling: re-run the selection against the frozen state until
// the realized choice recurs; the 1-based index of the first match estimates
// 1/Pr[chosen]. Gives up at `cap` and returns it.
inline long long gr_mtd(const FplState& st, const GameInstance& game, const FplParams& params,
                        bool subtract_switch, int chosen, long long cap, RngStream& rng) {
    for (long long k = 1; k <= cap; ++k)
        if (fpl_select(st, game, params, subtract_switch, rng) == chosen) return k;
    return cap;
}

// r_hat_d <- ((t-1)*r_hat_d + K*reward*1{d = chosen}) / t for every d.
inline void fpl_update(FplState& st, int chosen, double reward, long long k, long long t) {
    const double tm1 = static_cast<double>(t - 1);
    const double tt = static_cast<double>(t);
    for (std::size_t d = 0; d < st.estimates.size(); ++d) {
        double num = tm1 * st.estimates[d];
        if (static_cast<int>(d) == chosen) num += static_cast<double>(k) * reward;
        st.estimates[d] = num / tt;
    }
    st.t = t;
}

// Switch-aware FPL defender: selection internalizes the switching cost, the
// estimates are fed the raw round reward weighted by the resampling count.
class FplMtdDefender : public Defender {
  public:
    FplMtdDefender(const GameInstance* game, FplParams params, int horizon) : params_(params) {
        if (params_.eta <= 0.0) throw std::invalid_argument("fpl: eta must be > 0");
        if (params_.gamma < 0.0 || params_.gamma > 1.0)
            throw std::invalid_argument("fpl: gamma must be in [0, 1]");
        game_ = game;
        st_.estimates.assign(game->num_configs, 0.0);
        st_.prev = game->initial_config;
        cap_ = params_.gr_cap > 0 ? params_.gr_cap : default_gr_cap(game->num_configs, horizon, params_.gamma);
    }

    std::string name() const override { return "fpl-mtd"; }
    RewardChannel reward_channel() const override { return RewardChannel::Raw; }

    int select(RngStream& rng) override {
        last_ = fpl_select(st_, *game_, params_, true, rng);
        return last_;
    }

    void update_bandit(const BanditFeedback& fb, RngStream& gr) override {
        // st_ still holds the pre-round snapshot (estimates and prev) the
        // selection actually used, which is what the resampler must replay.
        const long long k = gr_mtd(st_, *game_, params_, true, last_, cap_, gr);
        fpl_update(st_, last_, fb.reward, k, fb.round);
        st_.prev = last_;
    }

    std::unique_ptr<Defender> clone() const override { return std::make_unique<FplMtdDefender>(*this); }

    json state() const override {
        return json{{"name", name()},          {"estimates", st_.estimates}, {"prev", st_.prev},
                    {"t", st_.t},              {"gamma", params_.gamma},     {"eta", params_.eta},
                    {"gr_cap", cap_}};
    }

    const FplState& selector_state() const { return st_; }

  private:
    FplParams params_;
    FplState st_;
    long long cap_ = 1;
    int last_ = 0;
};

}  // namespace mtd
