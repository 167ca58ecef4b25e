#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "mtd/game.hpp"
#include "mtd/rng.hpp"

namespace mtd {

// Per-round view handed to an attacker: the deployed-configuration history
// summarized as per-vulnerability exposure counts over rounds 1..t-1. The
// current round's deployment is deliberately absent (simultaneous play).
struct AttackerContext {
    const GameInstance* game = nullptr;
    int type = 0;
    int round = 1;             // t, 1-based
    int rounds_completed = 0;  // t - 1
    const std::vector<long long>* vuln_exposure = nullptr;
};

// Probability that v is exposed under the defender's empirical mixed
// strategy; uniform over configurations when there is no history yet.
inline double empirical_exposure(const AttackerContext& ctx, int v) {
    if (ctx.rounds_completed == 0) {
        int k = 0;
        for (int c = 0; c < ctx.game->num_configs; ++c) k += ctx.game->vuln_in_config[c][v];
        return static_cast<double>(k) / ctx.game->num_configs;
    }
    return static_cast<double>((*ctx.vuln_exposure)[v]) / ctx.rounds_completed;
}

inline double expected_attack_reward(const AttackerContext& ctx, int v) {
    return ctx.game->vuln_attacker_reward[v] * empirical_exposure(ctx, v);
}

class Attacker {
  public:
    virtual ~Attacker() = default;
    virtual std::string name() const = 0;
    virtual int select(const AttackerContext& ctx, RngStream& rng) = 0;
    // Called only on rounds where this type attacked; `gr` is a private
    // resampling stream for strategies that need one.
    virtual void update(const AttackerContext&, int /*vuln*/, double /*reward*/, RngStream& /*gr*/) {}
    virtual void rebind(const GameInstance* game) { game_ = game; }
    virtual std::unique_ptr<Attacker> clone() const = 0;

  protected:
    const GameInstance* game_ = nullptr;
};

// Argmax of expected reward against the defender's empirical mixed strategy.
class BestResponseAttacker : public Attacker {
  public:
    BestResponseAttacker(const GameInstance* game, int type) : type_(type) { game_ = game; }
    std::string name() const override { return "best-response"; }

    int select(const AttackerContext& ctx, RngStream&) override {
        const auto& cap = game_->capabilities[type_];
        int best = cap[0];
        double best_u = -std::numeric_limits<double>::infinity();
        for (int v : cap) {
            const double u = expected_attack_reward(ctx, v);
            if (u > best_u) {
                best_u = u;
                best = v;
            }
        }
        return best;
    }

    std::unique_ptr<Attacker> clone() const override { return std::make_unique<BestResponseAttacker>(*this); }

  private:
    int type_ = 0;
};

class RandomAttacker : public Attacker {
  public:
    RandomAttacker(const GameInstance* game, int type) : type_(type) { game_ = game; }
    std::string name() const override { return "random"; }

    int select(const AttackerContext&, RngStream& rng) override {
        const auto& cap = game_->capabilities[type_];
        return cap[rng.index(static_cast<int>(cap.size()))];
    }

    std::unique_ptr<Attacker> clone() const override { return std::make_unique<RandomAttacker>(*this); }

  private:
    int type_ = 0;
};

struct QrParams {
    double lambda = 5.0;  // rationality; 0 = uniform, large = best response
};

// Quantal response: softmax over expected rewards.
class QrAttacker : public Attacker {
  public:
    QrAttacker(const GameInstance* game, int type, QrParams params) : type_(type), params_(params) {
        game_ = game;
    }
    std::string name() const override { return "qr"; }

    int select(const AttackerContext& ctx, RngStream& rng) override {
        const auto& cap = game_->capabilities[type_];
        std::vector<double> u(cap.size());
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cap.size(); ++i) {
            u[i] = params_.lambda * expected_attack_reward(ctx, cap[i]);
            mx = std::max(mx, u[i]);
        }
        double z = 0.0;
        for (auto& x : u) {
            x = std::exp(x - mx);
            z += x;
        }
        for (auto& x : u) x /= z;
        return cap[rng.categorical(u)];
    }

    std::unique_ptr<Attacker> clone() const override { return std::make_unique<QrAttacker>(*this); }

  private:
    int type_ = 0;
    QrParams params_;
};

// Prefers vulnerabilities that would have been exposed often, with +1
// smoothing so the empty history is uniform.
class BiasedStochasticAttacker : public Attacker {
  public:
    BiasedStochasticAttacker(const GameInstance* game, int type) : type_(type) { game_ = game; }
    std::string name() const override { return "biased-stochastic"; }

    int select(const AttackerContext& ctx, RngStream& rng) override {
        const auto& cap = game_->capabilities[type_];
        std::vector<double> w(cap.size());
        double z = 0.0;
        for (std::size_t i = 0; i < cap.size(); ++i) {
            const long long e = ctx.rounds_completed == 0 ? 0 : (*ctx.vuln_exposure)[cap[i]];
            w[i] = 1.0 + static_cast<double>(e);
            z += w[i];
        }
        for (auto& x : w) x /= z;
        return cap[rng.categorical(w)];
    }

    std::unique_ptr<Attacker> clone() const override {
        return std::make_unique<BiasedStochasticAttacker>(*this);
    }

  private:
    int type_ = 0;
};

struct FplUeParams {
    double gamma = 0.01;
    double eta = 0.1;
    long long gr_cap = 0;  // 0 -> ceil(|capabilities| * horizon / gamma)
};

// FPL with uniform exploration on the attacker side: per-vulnerability reward
// estimates over the capability set, updated by geometric-resampling
// importance weighting on this type's private attack clock.
class FplUeAttacker : public Attacker {
  public:
    FplUeAttacker(const GameInstance* game, int type, FplUeParams params, int horizon)
        : type_(type), params_(params) {
        game_ = game;
        const int m = static_cast<int>(game->capabilities[type].size());
        est_.assign(m, 0.0);
        cap_ = params.gr_cap > 0
                   ? params.gr_cap
                   : static_cast<long long>(std::ceil(static_cast<double>(m) * std::max(horizon, 1) /
                                                      std::max(params.gamma, 1e-9)));
    }

    std::string name() const override { return "fpl-ue"; }

    int select(const AttackerContext&, RngStream& rng) override {
        last_pos_ = simulate_select(rng);
        return game_->capabilities[type_][last_pos_];
    }

    void update(const AttackerContext&, int, double reward, RngStream& gr) override {
        ++clock_;
        long long k = cap_;
        for (long long i = 1; i <= cap_; ++i) {
            if (simulate_select(gr) == last_pos_) {
                k = i;
                break;
            }
        }
        const double tm1 = static_cast<double>(clock_ - 1);
        for (std::size_t i = 0; i < est_.size(); ++i) {
            double num = tm1 * est_[i];
            if (static_cast<int>(i) == last_pos_) num += static_cast<double>(k) * reward;
            est_[i] = num / static_cast<double>(clock_);
        }
    }

    std::unique_ptr<Attacker> clone() const override { return std::make_unique<FplUeAttacker>(*this); }

  private:
    int simulate_select(RngStream& rng) const {
        const int m = static_cast<int>(est_.size());
        if (rng.bernoulli(params_.gamma)) return rng.index(m);
        int best = 0;
        double best_u = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            const double u = est_[i] + rng.exponential(params_.eta);
            if (u > best_u) {
                best_u = u;
                best = i;
            }
        }
        return best;
    }

    int type_ = 0;
    FplUeParams params_;
    std::vector<double> est_;  // indexed by capability-list position
    long long clock_ = 0;      // rounds this type has attacked
    long long cap_ = 1;
    int last_pos_ = 0;
};

// Replays a fixed mixed strategy over this type's capability set.
class FixedMixedAttacker : public Attacker {
  public:
    FixedMixedAttacker(const GameInstance* game, int type, std::vector<double> probs)
        : type_(type), probs_(std::move(probs)) {
        game_ = game;
        const auto& cap = game->capabilities[type];
        if (probs_.size() != cap.size())
            throw std::invalid_argument("fixed-mixed attacker: probability vector length != capability count");
        double mass = 0.0;
        for (double p : probs_) {
            if (p < 0.0) throw std::invalid_argument("fixed-mixed attacker: negative probability");
            mass += p;
        }
        if (std::abs(mass - 1.0) > 1e-9)
            throw std::invalid_argument("fixed-mixed attacker: probabilities must sum to 1");
    }

    std::string name() const override { return "fixed-mixed"; }

    int select(const AttackerContext&, RngStream& rng) override {
        return game_->capabilities[type_][rng.categorical(probs_)];
    }

    std::unique_ptr<Attacker> clone() const override { return std::make_unique<FixedMixedAttacker>(*this); }

  private:
    int type_ = 0;
    std::vector<double> probs_;
};

}  // namespace mtd
