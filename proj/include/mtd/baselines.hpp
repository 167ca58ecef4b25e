#pragma once

#include <algorithm>
#include <cmath>

#include "mtd/fpl_mtd.hpp"

namespace mtd {

// FPL+GR: the selection ignores switching costs entirely; the movement cost
// only reaches the strategy through the net reward it is fed.
class FplGrDefender : public Defender {
  public:
    FplGrDefender(const GameInstance* game, FplParams params, int horizon) : params_(params) {
        if (params_.eta <= 0.0) throw std::invalid_argument("fpl: eta must be > 0");
        if (params_.gamma < 0.0 || params_.gamma > 1.0)
            throw std::invalid_argument("fpl: gamma must be in [0, 1]");
        game_ = game;
        st_.estimates.assign(game->num_configs, 0.0);
        st_.prev = game->initial_config;
        cap_ = params_.gr_cap > 0 ? params_.gr_cap : default_gr_cap(game->num_configs, horizon, params_.gamma);
    }

    std::string name() const override { return "fpl-gr"; }

    int select(RngStream& rng) override {
        last_ = fpl_select(st_, *game_, params_, false, rng);
        return last_;
    }

    void update_bandit(const BanditFeedback& fb, RngStream& gr) override {
        const long long k = gr_mtd(st_, *game_, params_, false, last_, cap_, gr);
        fpl_update(st_, last_, fb.reward, k, fb.round);
        st_.prev = last_;
    }

    std::unique_ptr<Defender> clone() const override { return std::make_unique<FplGrDefender>(*this); }

    json state() const override {
        return json{{"name", name()},          {"estimates", st_.estimates}, {"prev", st_.prev},
                    {"t", st_.t},              {"gamma", params_.gamma},     {"eta", params_.eta},
                    {"gr_cap", cap_}};
    }

  private:
    FplParams params_;
    FplState st_;
    long long cap_ = 1;
    int last_ = 0;
};

struct SExp3Params {
    double kappa = 0.1;  // uniform exploration mix
    double lr = 0.0;     // 0 -> sqrt(ln n / (n * num_batches))
    int batch = 0;       // 0 -> ceil(T^(1/3))
};

// Exp3 over batches: the arm is frozen for B consecutive rounds so switching
// costs are only paid at batch boundaries; the batch-average net reward is
// importance-weighted into log-domain weights.
class SExp3Defender : public Defender {
  public:
    SExp3Defender(const GameInstance* game, SExp3Params params, int horizon) : params_(params) {
        game_ = game;
        horizon_ = std::max(horizon, 1);
        batch_ = params.batch > 0 ? params.batch
                                  : static_cast<int>(std::ceil(std::cbrt(static_cast<double>(horizon_))));
        const int n = game->num_configs;
        const double num_batches = std::ceil(static_cast<double>(horizon_) / batch_);
        lr_ = params.lr > 0.0 ? params.lr : std::sqrt(std::log(static_cast<double>(n)) / (n * num_batches));
        logw_.assign(n, 0.0);
        current_ = game->initial_config;
    }

    std::string name() const override { return "sexp3"; }

    std::vector<double> probabilities() const {
        const int n = static_cast<int>(logw_.size());
        const double mx = *std::max_element(logw_.begin(), logw_.end());
        double z = 0.0;
        std::vector<double> p(n);
        for (int c = 0; c < n; ++c) {
            p[c] = std::exp(logw_[c] - mx);
            z += p[c];
        }
        for (int c = 0; c < n; ++c) p[c] = (1.0 - params_.kappa) * p[c] / z + params_.kappa / n;
        return p;
    }

    int select(RngStream& rng) override {
        if (round_in_batch_ == 0) {
            const auto p = probabilities();
            current_ = rng.categorical(p);
            prob_current_ = p[current_];
            batch_sum_ = 0.0;
        }
        return current_;
    }

    void update_bandit(const BanditFeedback& fb, RngStream&) override {
        batch_sum_ += fb.reward;
        ++round_in_batch_;
        if (round_in_batch_ == batch_ || fb.round >= horizon_) {
            const double avg = batch_sum_ / round_in_batch_;
            // net reward lives in [-2, 0]; Exp3 wants a gain in [0, 1]
            const double x = std::clamp((avg + 2.0) / 2.0, 0.0, 1.0);
            logw_[current_] += lr_ * x / prob_current_;
            round_in_batch_ = 0;
        }
    }

    std::unique_ptr<Defender> clone() const override { return std::make_unique<SExp3Defender>(*this); }

    json state() const override {
        return json{{"name", name()},   {"log_weights", logw_},      {"kappa", params_.kappa},
                    {"lr", lr_},        {"batch", batch_},           {"current", current_},
                    {"round_in_batch", round_in_batch_}};
    }

    int batch_size() const { return batch_; }

  private:
    SExp3Params params_;
    std::vector<double> logw_;
    double lr_ = 0.0;
    int batch_ = 1;
    int horizon_ = 1;
    int current_ = 0;
    double prob_current_ = 1.0;
    double batch_sum_ = 0.0;
    int round_in_batch_ = 0;
};

struct RobustRlParams {
    double alpha = 0.2;
    double lambda = 0.8;  // discount
    double epsilon = 0.1;
};

// Epsilon-greedy tabular Q over configurations; the "state" is collapsed to a
// single node, so Q(c) tracks the discounted net reward of deploying c.
class RobustRlDefender : public Defender {
  public:
    RobustRlDefender(const GameInstance* game, RobustRlParams params) : params_(params) {
        game_ = game;
        q_.assign(game->num_configs, 0.0);
    }

    std::string name() const override { return "robust-rl"; }

    int select(RngStream& rng) override {
        const int n = static_cast<int>(q_.size());
        if (rng.bernoulli(params_.epsilon)) {
            last_ = rng.index(n);
        } else {
            last_ = static_cast<int>(std::max_element(q_.begin(), q_.end()) - q_.begin());
        }
        return last_;
    }

    void update_bandit(const BanditFeedback& fb, RngStream&) override {
        const double target = fb.reward + params_.lambda * *std::max_element(q_.begin(), q_.end());
        q_[last_] = (1.0 - params_.alpha) * q_[last_] + params_.alpha * target;
    }

    std::unique_ptr<Defender> clone() const override { return std::make_unique<RobustRlDefender>(*this); }

    json state() const override {
        return json{{"name", name()},        {"q", q_},
                    {"alpha", params_.alpha}, {"lambda", params_.lambda},
                    {"epsilon", params_.epsilon}};
    }

  private:
    RobustRlParams params_;
    std::vector<double> q_;
    int last_ = 0;
};

// Randomized-deployment baseline biased away from configurations that have
// been exploited while deployed: weight 1/(1 + exploit count).
class BiasedAslrDefender : public Defender {
  public:
    explicit BiasedAslrDefender(const GameInstance* game) {
        game_ = game;
        counts_.assign(game->num_configs, 0);
    }

    std::string name() const override { return "biased-aslr"; }

    int select(RngStream& rng) override {
        std::vector<double> w(counts_.size());
        double z = 0.0;
        for (std::size_t c = 0; c < counts_.size(); ++c) {
            w[c] = 1.0 / (1.0 + static_cast<double>(counts_[c]));
            z += w[c];
        }
        for (auto& x : w) x /= z;
        last_ = rng.categorical(w);
        return last_;
    }

    void update_bandit(const BanditFeedback& fb, RngStream&) override {
        if (fb.exploited) ++counts_[last_];
    }

    std::unique_ptr<Defender> clone() const override { return std::make_unique<BiasedAslrDefender>(*this); }

    json state() const override { return json{{"name", name()}, {"exploit_counts", counts_}}; }

  private:
    std::vector<long long> counts_;
    int last_ = 0;
};

class UniformDefender : public Defender {
  public:
    explicit UniformDefender(const GameInstance* game) { game_ = game; }
    std::string name() const override { return "uniform"; }
    int select(RngStream& rng) override { return rng.index(game_->num_configs); }
    std::unique_ptr<Defender> clone() const override { return std::make_unique<UniformDefender>(*this); }
    json state() const override { return json{{"name", name()}}; }
};

// Replays an externally supplied mixed strategy (e.g. a precomputed
// Stackelberg or BSS-Q solution).
class FixedMixedDefender : public Defender {
  public:
    FixedMixedDefender(const GameInstance* game, std::vector<double> probs) : probs_(std::move(probs)) {
        game_ = game;
        if (static_cast<int>(probs_.size()) != game->num_configs)
            throw std::invalid_argument("fixed-mixed: probability vector length != num_configs");
        double mass = 0.0;
        for (double p : probs_) {
            if (p < 0.0) throw std::invalid_argument("fixed-mixed: negative probability");
            mass += p;
        }
        if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("fixed-mixed: probabilities must sum to 1");
    }

    std::string name() const override { return "fixed-mixed"; }
    int select(RngStream& rng) override { return rng.categorical(probs_); }
    std::unique_ptr<Defender> clone() const override { return std::make_unique<FixedMixedDefender>(*this); }
    json state() const override { return json{{"name", name()}, {"probs", probs_}}; }

  private:
    std::vector<double> probs_;
};

}  // namespace mtd
