#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mtd/dataset.hpp"
#include "mtd/engine.hpp"
#include "test_util.hpp"

using namespace mtd;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Bandit-side probe: records exactly what the engine hands the strategy.
struct ProbeDefender : Defender {
    std::vector<BanditFeedback> bandit_calls;
    int revealed_calls = 0;
    explicit ProbeDefender(const GameInstance* g) { game_ = g; }
    std::string name() const override { return "probe"; }
    int select(RngStream&) override { return 0; }
    void update_bandit(const BanditFeedback& fb, RngStream&) override { bandit_calls.push_back(fb); }
    void update_revealed(const RevealedFeedback&) override { ++revealed_calls; }
    std::unique_ptr<Defender> clone() const override { return std::make_unique<ProbeDefender>(*this); }
    json state() const override { return json::object(); }
};

struct ProbeRevealedDefender : Defender {
    std::vector<RevealedFeedback> revealed_calls;
    int bandit_calls = 0;
    explicit ProbeRevealedDefender(const GameInstance* g) { game_ = g; }
    std::string name() const override { return "probe-revealed"; }
    FeedbackLevel feedback_level() const override { return FeedbackLevel::Revealed; }
    int select(RngStream&) override { return 0; }
    void update_bandit(const BanditFeedback&, RngStream&) override { ++bandit_calls; }
    void update_revealed(const RevealedFeedback& fb) override { revealed_calls.push_back(fb); }
    std::unique_ptr<Defender> clone() const override {
        return std::make_unique<ProbeRevealedDefender>(*this);
    }
    json state() const override { return json::object(); }
};

// Attacker probe: asserts the view covers exactly the first t-1 rounds.
struct ProbeAttacker : Attacker {
    int vuln_set_size;
    explicit ProbeAttacker(const GameInstance* g, int deployed_set_size)
        : vuln_set_size(deployed_set_size) {
        game_ = g;
    }
    std::string name() const override { return "probe"; }
    int select(const AttackerContext& ctx, RngStream&) override {
        REQUIRE(ctx.rounds_completed == ctx.round - 1);
        long long total = 0;
        for (long long e : *ctx.vuln_exposure) total += e;
        // the defender below always deploys config 0
        REQUIRE(total == static_cast<long long>(ctx.rounds_completed) * vuln_set_size);
        return game_->capabilities[0][0];
    }
    std::unique_ptr<Attacker> clone() const override { return std::make_unique<ProbeAttacker>(*this); }
};

}  // namespace

TEST_CASE("zero-round runs are empty") {
    const auto g = example_one();
    RunSpec spec;
    spec.game = &g;
    spec.horizon = 0;
    spec.keep_trace = true;
    const RunResult res = run(spec);
    CHECK(res.total_utility == 0.0);
    CHECK(res.trace.empty());
    CHECK(res.switches == 0);
}

TEST_CASE("identical specs give identical traces and files") {
    const auto g = example_one();
    RunSpec spec;
    spec.game = &g;
    spec.defender = "fpl-mtd";
    spec.attacker = "best-response";
    spec.horizon = 200;
    spec.seed = 77;
    spec.keep_trace = true;
    const RunResult a = run(spec);
    const RunResult b = run(spec);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].defender_config == b.trace[i].defender_config);
        CHECK(a.trace[i].attacked_vuln == b.trace[i].attacked_vuln);
        CHECK(a.trace[i].defender_reward == b.trace[i].defender_reward);
    }
    CHECK(a.total_utility == b.total_utility);

    const json cfg{{"seed", 77}};
    write_trace_csv("trace_a.csv", a.trace, cfg);
    write_trace_csv("trace_b.csv", b.trace, cfg);
    CHECK(slurp("trace_a.csv") == slurp("trace_b.csv"));
    std::remove("trace_a.csv");
    std::remove("trace_b.csv");
}

TEST_CASE("trace CSV carries a running cumulative utility") {
    const auto g = example_one();
    RunSpec spec;
    spec.game = &g;
    spec.horizon = 50;
    spec.keep_trace = true;
    const RunResult res = run(spec);
    write_trace_csv("trace_c.csv", res.trace, json::object());
    std::ifstream in("trace_c.csv");
    std::string line, last;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        if (!line.empty() && line[0] != '#') last = line;
    }
    CHECK(lines == 52);  // config comment + header + 50 rows
    const double cum = std::stod(last.substr(last.rfind(',') + 1));
    CHECK(cum == Catch::Approx(res.total_utility));
    std::remove("trace_c.csv");
}

TEST_CASE("per-round reward matches the closed-form expectation") {
    // uniform defender, uniform attacker: E[r] = -0.4 by direct enumeration
    const auto g = make_game({{0, 1}, {1}}, {{0, 1}}, {1.0}, {-0.4, -0.6}, {0.4, 0.6});
    RunSpec spec;
    spec.game = &g;
    spec.defender = "uniform";
    spec.attacker = "random";
    spec.horizon = 100000;
    spec.paired = false;
    const RunResult res = run(spec);
    CHECK(std::abs(res.total_utility / spec.horizon - (-0.4)) < 0.008);
}

TEST_CASE("attacker types are sampled from the declared distribution") {
    const auto g = make_game({{0}, {1}}, {{0}, {1}}, {0.2, 0.8}, {-0.5, -0.5}, {0.5, 0.5});
    RunSpec spec;
    spec.game = &g;
    spec.defender = "uniform";
    spec.attacker = "random";
    spec.horizon = 10000;
    spec.paired = false;
    spec.keep_trace = true;
    const RunResult res = run(spec);
    int t0 = 0;
    for (const auto& rec : res.trace) t0 += rec.attacker_type == 0;
    CHECK(std::abs(t0 / 10000.0 - 0.2) < 0.012);  // 3 sigma
}

TEST_CASE("bandit defenders see rewards and the exploit bit, nothing else") {
    auto g = example_one();
    g.switching_cost = {{0.0, 0.25}, {0.25, 0.0}};
    auto probe = std::make_unique<ProbeDefender>(&g);
    auto* p = probe.get();
    Session s(&g, std::move(probe), make_attackers("fixed-mixed", &g, 10, json{{"probs", {1.0, 0.0, 0.0}}}),
              5, true);
    s.run(10);
    CHECK(p->revealed_calls == 0);
    REQUIRE(p->bandit_calls.size() == 10);
    const auto& tr = s.trace();
    for (int t = 0; t < 10; ++t) {
        // default channel: net of switching cost; probe always deploys c0,
        // and the attacker always hits v0, which c0 exposes
        CHECK(p->bandit_calls[t].reward ==
              Catch::Approx(tr[t].defender_reward - tr[t].switch_cost));
        CHECK(p->bandit_calls[t].exploited);
        CHECK(p->bandit_calls[t].round == t + 1);
    }
}

TEST_CASE("revealed defenders additionally see type and vulnerability") {
    const auto g = make_game({{0, 1}}, {{0}, {1}}, {0.5, 0.5}, {-0.7, -0.3}, {0.7, 0.3});
    auto probe = std::make_unique<ProbeRevealedDefender>(&g);
    auto* p = probe.get();
    Session s(&g, std::move(probe), make_attackers("random", &g, 20, json::object()), 5, true);
    s.run(20);
    CHECK(p->bandit_calls == 0);
    REQUIRE(p->revealed_calls.size() == 20);
    const auto& tr = s.trace();
    for (int t = 0; t < 20; ++t) {
        CHECK(p->revealed_calls[t].reward == tr[t].defender_reward);  // raw, not net
        CHECK(p->revealed_calls[t].attacker_type == tr[t].attacker_type);
        CHECK(p->revealed_calls[t].vuln == tr[t].attacked_vuln);
    }
}

TEST_CASE("the attacker view never includes the current deployment") {
    const auto g = example_one();
    auto defender = std::make_unique<FixedMixedDefender>(&g, std::vector<double>{1.0, 0.0});
    std::vector<std::unique_ptr<Attacker>> attackers;
    attackers.push_back(std::make_unique<ProbeAttacker>(&g, 2));  // |V_c0| = 2
    Session s(&g, std::move(defender), std::move(attackers), 3, false);
    s.run(25);  // assertions live in the probe
    CHECK(s.round() == 25);
}

TEST_CASE("paired runs share the type and attacker randomness") {
    const auto g = make_game({{0}, {1}}, {{0}, {1}}, {0.5, 0.5}, {-0.5, -0.5}, {0.5, 0.5});
    RunSpec spec;
    spec.game = &g;
    spec.attacker = "random";
    spec.horizon = 300;
    spec.seed = 2022;
    spec.keep_trace = true;
    spec.paired = false;

    spec.defender = "fpl-mtd";
    const RunResult a = run(spec);
    spec.defender = "uniform";
    const RunResult b = run(spec);
    for (int t = 0; t < 300; ++t) CHECK(a.trace[t].attacker_type == b.trace[t].attacker_type);
}

TEST_CASE("a paired uniform run against itself cancels exactly") {
    const auto g = example_one();
    RunSpec spec;
    spec.game = &g;
    spec.defender = "uniform";
    spec.attacker = "random";
    spec.horizon = 500;
    const RunResult res = run(spec);
    CHECK(res.performance == 0.0);
    CHECK(res.total_utility == res.uniform_utility);
}

TEST_CASE("independent uniform runs differ only by noise") {
    const auto g = example_one();
    std::vector<double> diffs;
    for (int r = 0; r < 50; ++r) {
        RunSpec spec;
        spec.game = &g;
        spec.defender = "uniform";
        spec.attacker = "random";
        spec.horizon = 300;
        spec.paired = false;
        spec.seed = derive_seed(2022, "null-a", r);
        const double a = run(spec).total_utility;
        spec.seed = derive_seed(2022, "null-b", r);
        const double b = run(spec).total_utility;
        diffs.push_back(a - b);
    }
    const auto ms = detail::mean_se(diffs);
    REQUIRE(ms.se.has_value());
    CHECK(std::abs(ms.mean) <= 2.0 * *ms.se + 1e-12);
}

TEST_CASE("accounting for switching costs reduces actual switching") {
    GeneratorParams gp;
    gp.mode = RewardMode::ZeroSum;
    gp.configs_lo = gp.configs_hi = 5;
    gp.types_lo = gp.types_hi = 2;
    gp.vulns_lo = gp.vulns_hi = 40;
    gp.switch_mode = SwitchMode::Constant;
    gp.switch_const = 0.5;
    gp.seed = 31;
    const GameInstance g = generate_synthetic_instance(gp);

    double mtd_switches = 0.0, gr_switches = 0.0;
    for (int r = 0; r < 20; ++r) {
        RunSpec spec;
        spec.game = &g;
        spec.attacker = "random";
        spec.horizon = 500;
        spec.paired = false;
        spec.seed = derive_seed(9000, "switch", r);
        spec.defender = "fpl-mtd";
        mtd_switches += run(spec).switches;
        spec.defender = "fpl-gr";
        gr_switches += run(spec).switches;
    }
    CHECK(mtd_switches / 20.0 < gr_switches / 20.0);
}

TEST_CASE("evaluation grid shapes and pooling") {
    const auto g1 = example_one();
    auto g2 = example_one();
    g2.meta["id"] = "example-two";

    EvalSpec spec;
    spec.instances = {&g1, &g2};
    spec.defenders = {{"uniform", json::object()}};
    spec.attackers = {{"random", json::object()}};
    spec.horizon = 50;
    spec.repeats = 3;
    spec.workers = 1;
    const EvalResult res = evaluate(spec);
    CHECK(res.rows.size() == 6);
    REQUIRE(res.cells.size() == 3);  // one per instance + pooled
    CHECK(res.cells[2].dataset == "all");
    CHECK(res.cells[2].runs == 6);
    REQUIRE(res.cells[0].se_performance.has_value());

    double mean = 0.0;
    for (const auto& row : res.rows) mean += row.performance;
    mean /= res.rows.size();
    CHECK(res.cells[2].mean_performance == Catch::Approx(mean));

    // single repeat: no standard error
    spec.instances = {&g1};
    spec.repeats = 1;
    const EvalResult one = evaluate(spec);
    REQUIRE(one.cells.size() == 1);
    CHECK_FALSE(one.cells[0].se_performance.has_value());
    CHECK(one.cells[0].runs == 1);
}

TEST_CASE("a single-cell sweep reduces to evaluation") {
    const auto g = example_one();
    SweepSpec spec;
    spec.instances = {&g};
    spec.gammas = {0.007};
    spec.etas = {0.1};
    spec.horizon = 100;
    spec.repeats = 3;
    spec.workers = 1;
    const auto cells = sweep(spec);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].rank == 1);

    // same seeds by hand
    double mean = 0.0;
    for (int r = 0; r < 3; ++r) {
        RunSpec rs;
        rs.game = &g;
        rs.defender = "fpl-mtd";
        rs.defender_params = json{{"gamma", 0.007}, {"eta", 0.1}};
        rs.attacker = "random";
        rs.horizon = 100;
        rs.paired = false;
        rs.seed = pair_seed(spec.master_seed, 0, 0, r);
        mean += run(rs).total_utility;
    }
    CHECK(cells[0].mean_total_utility == Catch::Approx(mean / 3.0));
}

TEST_CASE("sweep ranks cells by mean total utility") {
    const auto g = example_one();
    SweepSpec spec;
    spec.instances = {&g};
    spec.gammas = {0.005, 0.01};
    spec.etas = {0.05, 0.1};
    spec.horizon = 60;
    spec.repeats = 2;
    spec.workers = 1;
    const auto cells = sweep(spec);
    REQUIRE(cells.size() == 4);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK(cells[i].rank == static_cast<int>(i) + 1);
        if (i > 0) CHECK(cells[i - 1].mean_total_utility >= cells[i].mean_total_utility);
    }
}

TEST_CASE("factories reject unknown names and bad parameters") {
    const auto g = example_one();
    CHECK_THROWS_AS(make_defender("nope", &g, 100, json::object()), std::invalid_argument);
    CHECK_THROWS_AS(make_attacker("nope", &g, 0, 100, json::object()), std::invalid_argument);
    CHECK_THROWS_AS(make_defender("fpl-mtd", &g, 100, json{{"eta", -1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_defender("fixed-mixed", &g, 100, json{{"probs", {0.5, 0.2}}}),
                    std::invalid_argument);
    const auto d = make_defender("fpl-maxmin", &g, 100, json::object());
    CHECK(d->feedback_level() == FeedbackLevel::Revealed);
}

TEST_CASE("zero-budget improvement branches are identical") {
    const auto g = make_game({{0, 1}, {1, 2}}, {{0, 1, 2}}, {1.0},
                             {-0.9, -0.5, -0.2}, {0.9, 0.5, 0.2});
    ImprovementSpec spec;
    spec.game = &g;
    spec.train_rounds = 50;
    spec.resume_rounds = 50;
    spec.budget = 0.0;
    spec.repeats = 5;
    spec.workers = 1;
    const ImprovementResult res = improvement_experiment(spec);
    CHECK(res.greedy_mean == 0.0);
    CHECK(res.random_mean == 0.0);
    for (double x : res.greedy) CHECK(x == 0.0);
    for (double x : res.random) CHECK(x == 0.0);
}
