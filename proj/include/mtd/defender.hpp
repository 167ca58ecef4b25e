#pragma once

#include <memory>
#include <string>

#include "mtd/game.hpp"
#include "mtd/rng.hpp"

namespace mtd {

// What the engine tells a defender strategy after each round.
enum class FeedbackLevel {
    Bandit,   // reward only
    Revealed  // reward + attacker type + attacked vulnerability
};

// Which reward a bandit-level strategy consumes: the raw round reward, or the
// reward net of the switching cost it just paid.
enum class RewardChannel { Raw, NetOfSwitchCost };

struct BanditFeedback {
    double reward = 0.0;
    bool exploited = false;  // deployed configuration was successfully exploited
    int round = 0;           // 1-based
};

struct RevealedFeedback {
    double reward = 0.0;  // raw defender reward
    int attacker_type = 0;
    int vuln = 0;
    int round = 0;
};

class Defender {
  public:
    virtual ~Defender() = default;
    virtual std::string name() const = 0;
    virtual FeedbackLevel feedback_level() const { return FeedbackLevel::Bandit; }
    virtual RewardChannel reward_channel() const { return RewardChannel::NetOfSwitchCost; }

    virtual int select(RngStream& rng) = 0;
    // `gr` is the strategy's private resampling stream; strategies that do no
    // resampling ignore it.
    virtual void update_bandit(const BanditFeedback&, RngStream& /*gr*/) {}
    virtual void update_revealed(const RevealedFeedback&) {}

    // Point the strategy at a replacement instance (same dimensions), e.g.
    // after vulnerability fixing produced a patched copy.
    virtual void rebind(const GameInstance* game) { game_ = game; }

    virtual std::unique_ptr<Defender> clone() const = 0;
    virtual json state() const = 0;

  protected:
    const GameInstance* game_ = nullptr;
};

}  // namespace mtd
