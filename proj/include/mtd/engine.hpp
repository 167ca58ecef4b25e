#pragma once

#include <atomic>
#include <charconv>
#include <functional>
#include <optional>
#include <thread>

#include "mtd/attackers.hpp"
#include "mtd/baselines.hpp"
#include "mtd/fpl_maxmin.hpp"
#include "mtd/fpl_mtd.hpp"
#include "mtd/vuln_select.hpp"

namespace mtd {

// ---- strategy factories ----------------------------------------------------

inline std::unique_ptr<Defender> make_defender(const std::string& name, const GameInstance* game,
                                               int horizon, const json& params) {
    auto d = [&](const char* key, double def) { return params.value(key, def); };
    if (name == "fpl-mtd") {
        FplParams p{d("gamma", 0.007), d("eta", 0.1), params.value("gr_cap", 0LL)};
        return std::make_unique<FplMtdDefender>(game, p, horizon);
    }
    if (name == "fpl-maxmin") {
        FplMaxMinParams p{d("gamma", 0.006), d("eta", 0.03)};
        return std::make_unique<FplMaxMinDefender>(game, p);
    }
    if (name == "fpl-gr") {
        FplParams p{d("gamma", 0.007), d("eta", 0.1), params.value("gr_cap", 0LL)};
        return std::make_unique<FplGrDefender>(game, p, horizon);
    }
    if (name == "sexp3") {
        SExp3Params p{d("kappa", 0.1), d("lr", 0.0), params.value("batch", 0)};
        return std::make_unique<SExp3Defender>(game, p, horizon);
    }
    if (name == "robust-rl") {
        RobustRlParams p{d("alpha", 0.2), d("lambda", 0.8), d("epsilon", 0.1)};
        return std::make_unique<RobustRlDefender>(game, p);
    }
    if (name == "biased-aslr") return std::make_unique<BiasedAslrDefender>(game);
    if (name == "uniform") return std::make_unique<UniformDefender>(game);
    if (name == "fixed-mixed") {
        if (!params.contains("probs")) throw std::invalid_argument("fixed-mixed defender needs \"probs\"");
        return std::make_unique<FixedMixedDefender>(game, params["probs"].get<std::vector<double>>());
    }
    throw std::invalid_argument(
        "unknown defender '" + name +
        "' (valid: fpl-mtd, fpl-maxmin, sexp3, fpl-gr, robust-rl, biased-aslr, uniform, fixed-mixed)");
}

inline std::unique_ptr<Attacker> make_attacker(const std::string& name, const GameInstance* game,
                                               int type, int horizon, const json& params) {
    if (name == "best-response") return std::make_unique<BestResponseAttacker>(game, type);
    if (name == "random") return std::make_unique<RandomAttacker>(game, type);
    if (name == "qr") {
        QrParams p{params.value("lambda", 5.0)};
        return std::make_unique<QrAttacker>(game, type, p);
    }
    if (name == "biased-stochastic") return std::make_unique<BiasedStochasticAttacker>(game, type);
    if (name == "fpl-ue") {
        FplUeParams p{params.value("gamma", 0.01), params.value("eta", 0.1), params.value("gr_cap", 0LL)};
        return std::make_unique<FplUeAttacker>(game, type, p, horizon);
    }
    if (name == "fixed-mixed") {
        if (!params.contains("probs")) throw std::invalid_argument("fixed-mixed attacker needs \"probs\"");
        return std::make_unique<FixedMixedAttacker>(game, type,
                                                    params["probs"].get<std::vector<double>>());
    }
    throw std::invalid_argument("unknown attacker '" + name +
                                "' (valid: best-response, fpl-ue, random, qr, biased-stochastic, "
                                "fixed-mixed)");
}

inline std::vector<std::unique_ptr<Attacker>> make_attackers(const std::string& name,
                                                             const GameInstance* game, int horizon,
                                                             const json& params) {
    std::vector<std::unique_ptr<Attacker>> out;
    for (int a = 0; a < game->num_attacker_types; ++a)
        out.push_back(make_attacker(name, game, a, horizon, params));
    return out;
}

// ---- session ----------------------------------------------------------------

// A resumable repeated game. The master seed fans out into one stream per
// role (type sampler, defender, defender resampling, one per attacker type)
// so two sessions built from the same seed share attacker randomness even
// when their defenders differ.
class Session {
  public:
    Session(const GameInstance* game, std::unique_ptr<Defender> defender,
            std::vector<std::unique_ptr<Attacker>> attackers, std::uint64_t seed, bool keep_trace)
        : game_(game),
          defender_(std::move(defender)),
          attackers_(std::move(attackers)),
          type_rng_(derive_seed(seed, "types")),
          defender_rng_(derive_seed(seed, "defender")),
          gr_rng_(derive_seed(seed, "gr")),
          keep_trace_(keep_trace),
          prev_(game->initial_config) {
        for (int a = 0; a < game->num_attacker_types; ++a) {
            attacker_rng_.emplace_back(derive_seed(seed, "attacker", static_cast<std::uint64_t>(a)));
            attacker_gr_rng_.emplace_back(
                derive_seed(seed, "attacker-gr", static_cast<std::uint64_t>(a)));
        }
        exposure_.assign(game->num_vulns, 0);
    }

    Session(const Session& o)
        : game_(o.game_),
          defender_(o.defender_->clone()),
          type_rng_(o.type_rng_),
          defender_rng_(o.defender_rng_),
          gr_rng_(o.gr_rng_),
          attacker_rng_(o.attacker_rng_),
          attacker_gr_rng_(o.attacker_gr_rng_),
          exposure_(o.exposure_),
          trace_(o.trace_),
          keep_trace_(o.keep_trace_),
          prev_(o.prev_),
          round_(o.round_),
          total_(o.total_),
          switches_(o.switches_) {
        for (const auto& a : o.attackers_) attackers_.push_back(a->clone());
    }
    Session& operator=(const Session&) = delete;

    // Swap in a patched copy of the instance (same dimensions).
    void rebind(const GameInstance* game) {
        game_ = game;
        defender_->rebind(game);
        for (auto& a : attackers_) a->rebind(game);
    }

    void step() {
        ++round_;
        const int type = type_rng_.categorical(game_->type_distribution);
        const int d = defender_->select(defender_rng_);
        const double s = game_->switching_cost[prev_][d];
        AttackerContext ctx{game_, type, round_, round_ - 1, &exposure_};
        const int v = attackers_[type]->select(ctx, attacker_rng_[type]);
        const double r_def = game_->defender_reward(type, v, d);
        const double r_att = game_->attacker_reward(type, v, d);
        const bool hit = game_->exploit_succeeds(type, v, d);
        if (defender_->feedback_level() == FeedbackLevel::Revealed) {
            defender_->update_revealed({r_def, type, v, round_});
        } else {
            const double fb =
                defender_->reward_channel() == RewardChannel::Raw ? r_def : r_def - s;
            defender_->update_bandit({fb, hit, round_}, gr_rng_);
        }
        attackers_[type]->update(ctx, v, r_att, attacker_gr_rng_[type]);
        for (int vv : game_->vuln_sets[d]) ++exposure_[vv];
        total_ += r_def - s;
        if (d != prev_) ++switches_;
        if (keep_trace_) trace_.push_back({round_, type, d, v, r_def, r_att, s});
        prev_ = d;
    }

    void run(int rounds) {
        for (int i = 0; i < rounds; ++i) step();
    }

    double total_utility() const { return total_; }
    int switches() const { return switches_; }
    int round() const { return round_; }
    const Trace& trace() const { return trace_; }
    const Defender& defender() const { return *defender_; }
    Defender& defender() { return *defender_; }

  private:
    const GameInstance* game_;
    std::unique_ptr<Defender> defender_;
    std::vector<std::unique_ptr<Attacker>> attackers_;
    RngStream type_rng_;
    RngStream defender_rng_;
    RngStream gr_rng_;
    std::vector<RngStream> attacker_rng_;
    std::vector<RngStream> attacker_gr_rng_;
    std::vector<long long> exposure_;
    Trace trace_;
    bool keep_trace_;
    int prev_;
    int round_ = 0;
    double total_ = 0.0;
    int switches_ = 0;
};

// ---- single runs -------------------------------------------------------------

struct RunSpec {
    const GameInstance* game = nullptr;
    std::string defender = "fpl-mtd";
    json defender_params = json::object();
    std::string attacker = "random";
    json attacker_params = json::object();
    int horizon = 1000;
    std::uint64_t seed = 2022;
    bool paired = true;  // also run the uniform defender on shared attacker streams
    bool keep_trace = false;
};

struct RunResult {
    double total_utility = 0.0;
    double uniform_utility = 0.0;
    double performance = 0.0;
    int switches = 0;
    Trace trace;  // populated when keep_trace
};

inline RunResult run(const RunSpec& spec) {
    if (spec.horizon < 0) throw std::invalid_argument("run: negative horizon");
    Session s(spec.game, make_defender(spec.defender, spec.game, spec.horizon, spec.defender_params),
              make_attackers(spec.attacker, spec.game, spec.horizon, spec.attacker_params), spec.seed,
              spec.keep_trace);
    s.run(spec.horizon);
    RunResult out;
    out.total_utility = s.total_utility();
    out.switches = s.switches();
    if (spec.keep_trace) out.trace = s.trace();
    if (spec.paired) {
        Session u(spec.game, std::make_unique<UniformDefender>(spec.game),
                  make_attackers(spec.attacker, spec.game, spec.horizon, spec.attacker_params),
                  spec.seed, false);
        u.run(spec.horizon);
        out.uniform_utility = u.total_utility();
        out.performance = out.total_utility - out.uniform_utility;
    }
    return out;
}

// ---- batch evaluation ---------------------------------------------------------

inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Seed for one (instance, attacker, repeat) cell; defenders do not enter the
// derivation, so every defender faces identical attacker randomness.
inline std::uint64_t pair_seed(std::uint64_t master, int instance, int attacker, int repeat) {
    std::uint64_t s = derive_seed(master, "inst", static_cast<std::uint64_t>(instance));
    s = derive_seed(s, "att", static_cast<std::uint64_t>(attacker));
    return derive_seed(s, "rep", static_cast<std::uint64_t>(repeat));
}

struct NamedStrategy {
    std::string name;
    json params = json::object();
};

struct EvalSpec {
    std::vector<const GameInstance*> instances;
    std::vector<NamedStrategy> defenders;
    std::vector<NamedStrategy> attackers;
    int horizon = 1000;
    int repeats = 10;
    std::uint64_t master_seed = 2022;
    bool paired = true;
    int workers = 1;
};

struct RunRow {
    std::string dataset, defender, attacker;
    std::uint64_t seed = 0;
    int horizon = 0;
    double total_utility = 0.0, uniform_utility = 0.0, performance = 0.0;
    int switches = 0;
};

struct EvalCell {
    std::string defender, attacker, dataset;  // dataset "all" pools every instance
    int runs = 0;
    double mean_performance = 0.0;
    std::optional<double> se_performance;
    double mean_total_utility = 0.0;
};

struct EvalResult {
    std::vector<RunRow> rows;
    std::vector<EvalCell> cells;
};

inline std::string instance_id(const GameInstance& g) {
    if (g.meta.contains("id")) return g.meta["id"].get<std::string>();
    return "instance";
}

namespace detail {

struct MeanSe {
    int n = 0;
    double mean = 0.0;
    std::optional<double> se;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe out;
    out.n = static_cast<int>(xs.size());
    if (out.n == 0) return out;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= out.n;
    out.mean = m;
    if (out.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m) * (x - m);
        out.se = std::sqrt(ss / (out.n - 1)) / std::sqrt(static_cast<double>(out.n));
    }
    return out;
}

}  // namespace detail

inline EvalResult evaluate(const EvalSpec& spec) {
    if (spec.repeats < 1) throw std::invalid_argument("evaluate: repeats must be >= 1");
    if (spec.instances.empty()) throw std::invalid_argument("evaluate: no instances");
    const int nd = static_cast<int>(spec.defenders.size());
    const int na = static_cast<int>(spec.attackers.size());
    const int ni = static_cast<int>(spec.instances.size());
    const int tasks = nd * na * ni * spec.repeats;
    std::vector<RunRow> rows(static_cast<std::size_t>(tasks));
    parallel_for(tasks, spec.workers, [&](int idx) {
        const int r = idx % spec.repeats;
        const int i = idx / spec.repeats % ni;
        const int a = idx / spec.repeats / ni % na;
        const int d = idx / spec.repeats / ni / na;
        RunSpec rs;
        rs.game = spec.instances[i];
        rs.defender = spec.defenders[d].name;
        rs.defender_params = spec.defenders[d].params;
        rs.attacker = spec.attackers[a].name;
        rs.attacker_params = spec.attackers[a].params;
        rs.horizon = spec.horizon;
        rs.seed = pair_seed(spec.master_seed, i, a, r);
        rs.paired = spec.paired;
        const RunResult res = run(rs);
        rows[static_cast<std::size_t>(idx)] =
            RunRow{instance_id(*spec.instances[i]), rs.defender, rs.attacker, rs.seed, rs.horizon,
                   res.total_utility, res.uniform_utility, res.performance, res.switches};
    });

    EvalResult out;
    out.rows = std::move(rows);
    // per-dataset cells, then pooled "all" cells, in input order
    for (int d = 0; d < nd; ++d) {
        for (int a = 0; a < na; ++a) {
            std::vector<double> pooled_perf, pooled_tu;
            for (int i = 0; i < ni; ++i) {
                std::vector<double> perf, tu;
                for (int r = 0; r < spec.repeats; ++r) {
                    const auto& row = out.rows[static_cast<std::size_t>(
                        ((d * na + a) * ni + i) * spec.repeats + r)];
                    perf.push_back(row.performance);
                    tu.push_back(row.total_utility);
                }
                pooled_perf.insert(pooled_perf.end(), perf.begin(), perf.end());
                pooled_tu.insert(pooled_tu.end(), tu.begin(), tu.end());
                const auto ms = detail::mean_se(perf);
                const auto mt = detail::mean_se(tu);
                out.cells.push_back({spec.defenders[d].name, spec.attackers[a].name,
                                     instance_id(*spec.instances[i]), ms.n, ms.mean, ms.se, mt.mean});
            }
            if (ni > 1) {
                const auto ms = detail::mean_se(pooled_perf);
                const auto mt = detail::mean_se(pooled_tu);
                out.cells.push_back({spec.defenders[d].name, spec.attackers[a].name, "all", ms.n,
                                     ms.mean, ms.se, mt.mean});
            }
        }
    }
    return out;
}

// ---- hyperparameter sweep ------------------------------------------------------

struct SweepSpec {
    std::vector<const GameInstance*> instances;
    std::vector<double> gammas;
    std::vector<double> etas;
    std::string defender = "fpl-mtd";
    json defender_base_params = json::object();
    std::string attacker = "random";
    json attacker_params = json::object();
    int horizon = 500;
    int repeats = 5;
    std::uint64_t master_seed = 2022;
    int workers = 1;
};

struct SweepCell {
    double gamma = 0.0, eta = 0.0;
    double mean_total_utility = 0.0;
    int rank = 0;
};

inline std::vector<SweepCell> sweep(const SweepSpec& spec) {
    if (spec.gammas.empty() || spec.etas.empty()) throw std::invalid_argument("sweep: empty grid");
    if (spec.instances.empty()) throw std::invalid_argument("sweep: no instances");
    const int ng = static_cast<int>(spec.gammas.size());
    const int ne = static_cast<int>(spec.etas.size());
    const int ni = static_cast<int>(spec.instances.size());
    const int cells = ng * ne;
    const int per_cell = ni * spec.repeats;
    std::vector<double> sums(static_cast<std::size_t>(cells), 0.0);
    std::vector<std::vector<double>> cell_tu(static_cast<std::size_t>(cells));
    for (auto& v : cell_tu) v.assign(static_cast<std::size_t>(per_cell), 0.0);
    parallel_for(cells * per_cell, spec.workers, [&](int idx) {
        const int r = idx % spec.repeats;
        const int i = idx / spec.repeats % ni;
        const int cell = idx / per_cell;
        json dp = spec.defender_base_params;
        dp["gamma"] = spec.gammas[cell / ne];
        dp["eta"] = spec.etas[cell % ne];
        RunSpec rs;
        rs.game = spec.instances[i];
        rs.defender = spec.defender;
        rs.defender_params = dp;
        rs.attacker = spec.attacker;
        rs.attacker_params = spec.attacker_params;
        rs.horizon = spec.horizon;
        rs.seed = pair_seed(spec.master_seed, i, 0, r);  // shared across cells
        rs.paired = false;
        cell_tu[static_cast<std::size_t>(cell)][static_cast<std::size_t>(i * spec.repeats + r)] =
            run(rs).total_utility;
    });
    std::vector<SweepCell> out(static_cast<std::size_t>(cells));
    for (int c = 0; c < cells; ++c) {
        double m = 0.0;
        for (double x : cell_tu[static_cast<std::size_t>(c)]) m += x;
        out[static_cast<std::size_t>(c)] = {spec.gammas[c / ne], spec.etas[c % ne], m / per_cell, 0};
    }
    std::sort(out.begin(), out.end(), [](const SweepCell& a, const SweepCell& b) {
        if (a.mean_total_utility != b.mean_total_utility)
            return a.mean_total_utility > b.mean_total_utility;
        if (a.gamma != b.gamma) return a.gamma < b.gamma;
        return a.eta < b.eta;
    });
    for (int i = 0; i < cells; ++i) out[static_cast<std::size_t>(i)].rank = i + 1;
    return out;
}

// ---- patch-then-resume experiment ----------------------------------------------

struct ImprovementSpec {
    const GameInstance* game = nullptr;
    int train_rounds = 500;   // T1: learning phase before fixing
    int resume_rounds = 500;  // T2: played on each branch after fixing
    double budget = 5.0;
    std::vector<double> prices;  // empty -> unit prices
    int repeats = 50;
    std::uint64_t master_seed = 2022;
    std::string attacker = "best-response";
    json attacker_params = json::object();
    json defender_params = json::object();  // fpl-maxmin parameters
    int workers = 1;
};

struct ImprovementResult {
    std::vector<double> greedy;  // per-repeat: TU(greedy branch) - TU(no-fix branch)
    std::vector<double> random;
    double greedy_mean = 0.0, greedy_se = 0.0;
    double random_mean = 0.0, random_se = 0.0;
};

inline ImprovementResult improvement_experiment(const ImprovementSpec& spec) {
    if (!spec.game) throw std::invalid_argument("improvement_experiment: missing instance");
    ImprovementResult out;
    out.greedy.assign(static_cast<std::size_t>(spec.repeats), 0.0);
    out.random.assign(static_cast<std::size_t>(spec.repeats), 0.0);
    const int horizon = spec.train_rounds + spec.resume_rounds;
    parallel_for(spec.repeats, spec.workers, [&](int r) {
        const std::uint64_t seed = derive_seed(spec.master_seed, "rep", static_cast<std::uint64_t>(r));
        auto defender = make_defender("fpl-maxmin", spec.game, horizon, spec.defender_params);
        FplMaxMinDefender* trained = static_cast<FplMaxMinDefender*>(defender.get());
        Session base(spec.game, std::move(defender),
                     make_attackers(spec.attacker, spec.game, horizon, spec.attacker_params), seed,
                     false);
        base.run(spec.train_rounds);

        PatchProblem prob;
        prob.game = spec.game;
        prob.estimates = trained->estimates_matrix();
        prob.prices = spec.prices.empty() ? std::vector<double>(spec.game->num_vulns, 1.0) : spec.prices;
        prob.budget = spec.budget;
        const FixSet greedy_set = greedy_multi(prob);
        RngStream fix_rng(derive_seed(seed, "random-fix"));
        const FixSet random_set = random_fix(prob, fix_rng);

        auto branch = [&](const std::vector<int>& fix) {
            GameInstance patched = *spec.game;
            for (int v : fix) patched.vuln_defender_reward[v] = 0.0;
            Session s(base);
            s.rebind(&patched);
            const double before = s.total_utility();
            s.run(spec.resume_rounds);
            return s.total_utility() - before;
        };
        const double tu_greedy = branch(greedy_set.vulns);
        const double tu_random = branch(random_set.vulns);
        const double tu_nofix = branch({});
        out.greedy[static_cast<std::size_t>(r)] = tu_greedy - tu_nofix;
        out.random[static_cast<std::size_t>(r)] = tu_random - tu_nofix;
    });
    const auto g = detail::mean_se(out.greedy);
    const auto rr = detail::mean_se(out.random);
    out.greedy_mean = g.mean;
    out.greedy_se = g.se.value_or(0.0);
    out.random_mean = rr.mean;
    out.random_se = rr.se.value_or(0.0);
    return out;
}

// ---- deterministic result emission ----------------------------------------------

// Shortest round-trip decimal form, so identical runs serialize identically
// on every platform.
inline std::string fmt_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string runs_csv_header() {
    return "dataset,defender,attacker,seed,T,total_utility,uniform_utility,performance,switches";
}

inline void write_runs_csv(const std::string& path, const std::vector<RunRow>& rows,
                           const json& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# config " << config.dump() << '\n' << runs_csv_header() << '\n';
    for (const auto& r : rows) {
        out << r.dataset << ',' << r.defender << ',' << r.attacker << ',' << r.seed << ','
            << r.horizon << ',' << fmt_double(r.total_utility) << ',' << fmt_double(r.uniform_utility)
            << ',' << fmt_double(r.performance) << ',' << r.switches << '\n';
    }
}

inline void write_trace_csv(const std::string& path, const Trace& trace, const json& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# config " << config.dump() << '\n'
        << "round,attacker_type,defender_config,attacked_vuln,defender_reward,attacker_reward,"
           "switch_cost,cumulative_utility\n";
    double cum = 0.0;
    for (const auto& r : trace) {
        cum += r.defender_reward - r.switch_cost;
        out << r.round << ',' << r.attacker_type << ',' << r.defender_config << ','
            << r.attacked_vuln << ',' << fmt_double(r.defender_reward) << ','
            << fmt_double(r.attacker_reward) << ',' << fmt_double(r.switch_cost) << ','
            << fmt_double(cum) << '\n';
    }
}

inline json cells_to_json(const std::vector<EvalCell>& cells) {
    json arr = json::array();
    for (const auto& c : cells) {
        json j{{"defender", c.defender},
               {"attacker", c.attacker},
               {"dataset", c.dataset},
               {"runs", c.runs},
               {"mean_performance", c.mean_performance},
               {"mean_total_utility", c.mean_total_utility}};
        if (c.se_performance) j["se_performance"] = *c.se_performance;
        arr.push_back(std::move(j));
    }
    return arr;
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepCell>& cells,
                            const json& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# config " << config.dump() << '\n' << "rank,gamma,eta,mean_total_utility\n";
    for (const auto& c : cells)
        out << c.rank << ',' << fmt_double(c.gamma) << ',' << fmt_double(c.eta) << ','
            << fmt_double(c.mean_total_utility) << '\n';
}

}  // namespace mtd
