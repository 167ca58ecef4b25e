// mtdsim: moving-target-defense simulation workbench.
//
// Subcommands: ingest (NVD feeds -> pool CSV), gen (game instances), run
// (single simulation), evaluate (batch runs with paired uniform baseline),
// sweep (hyperparameter grid), fix-vulns (budgeted vulnerability selection),
// report (aggregate a runs CSV).

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "mtd/dataset.hpp"
#include "mtd/engine.hpp"

namespace fs = std::filesystem;
using mtd::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- flat dotted-key configuration ------------------------------------------

const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> k{"seed",      "T",         "repeats",  "workers", "out_dir",
                                "instances", "defender",  "attacker", "defenders", "attackers",
                                "feedback",  "trace",     "unpaired", "gammas",  "etas"};
        const char* fpl[] = {"gamma", "eta", "gr_cap"};
        for (auto p : fpl) {
            k.insert(std::string("defender.fpl_mtd.") + p);
            k.insert(std::string("defender.fpl_gr.") + p);
        }
        k.insert("defender.fpl_maxmin.gamma");
        k.insert("defender.fpl_maxmin.eta");
        for (auto p : {"kappa", "lr", "batch"}) k.insert(std::string("defender.sexp3.") + p);
        for (auto p : {"alpha", "lambda", "epsilon"}) k.insert(std::string("defender.robust_rl.") + p);
        k.insert("defender.fixed_mixed.probs");
        for (auto p : fpl) k.insert(std::string("attacker.fpl_ue.") + p);
        k.insert("attacker.qr.lambda");
        k.insert("attacker.fixed_mixed.probs");
        return k;
    }();
    return keys;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// key = value lines, # comments, dotted keys; unknown keys are errors.
std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!known_config_keys().count(key))
            throw UsageError(path + ":" + std::to_string(lineno) + ": unknown config key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

void apply_set_overrides(std::map<std::string, std::string>& kv, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        if (!known_config_keys().count(key)) throw UsageError("unknown config key '" + key + "'");
        kv[key] = trim(s.substr(eq + 1));
    }
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw UsageError("config key '" + key + "': not a number: '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw UsageError("config key '" + key + "': not an integer: '" + v + "'");
    }
}

// Strategy parameter block from dotted keys, e.g. defender.fpl_mtd.gamma.
json params_for(const std::map<std::string, std::string>& kv, const std::string& role,
                const std::string& strategy) {
    std::string s = strategy;
    std::replace(s.begin(), s.end(), '-', '_');
    const std::string prefix = role + "." + s + ".";
    json out = json::object();
    for (const auto& [key, val] : kv) {
        if (key.rfind(prefix, 0) != 0) continue;
        const std::string p = key.substr(prefix.size());
        if (p == "gr_cap" || p == "batch") {
            out[p] = to_int(key, val);
        } else if (p == "probs") {
            json arr = json::array();
            for (const auto& x : split_list(val)) arr.push_back(to_double(key, x));
            out[p] = std::move(arr);
        } else {
            out[p] = to_double(key, val);
        }
    }
    return out;
}

// "lo:hi:step" inclusive range, or a comma-separated list.
std::vector<double> parse_grid(const std::string& key, const std::string& spec) {
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        const auto parts = split_list(spec, ':');
        if (parts.size() != 3) throw UsageError(key + ": range must be lo:hi:step, got '" + spec + "'");
        const double lo = to_double(key, parts[0]), hi = to_double(key, parts[1]),
                     step = to_double(key, parts[2]);
        if (step <= 0.0) throw UsageError(key + ": step must be positive");
        for (int i = 0;; ++i) {
            const double x = lo + i * step;
            if (x > hi + step * 1e-9) break;
            out.push_back(x);
        }
    } else {
        for (const auto& x : split_list(spec)) out.push_back(to_double(key, x));
    }
    if (out.empty()) throw UsageError(key + ": empty grid");
    return out;
}

std::pair<int, int> parse_range(const std::string& key, const std::string& spec) {
    const auto parts = split_list(spec, ':');
    if (parts.size() != 2) throw UsageError(key + ": expected lo:hi, got '" + spec + "'");
    return {static_cast<int>(to_int(key, parts[0])), static_cast<int>(to_int(key, parts[1]))};
}

void check_feedback(const std::string& feedback, const mtd::Defender& d) {
    if (feedback == "auto") return;
    const bool revealed = d.feedback_level() == mtd::FeedbackLevel::Revealed;
    if (feedback == "bandit" && revealed)
        throw UsageError("defender '" + d.name() + "' requires revealed feedback");
    if (feedback == "revealed" && !revealed)
        throw UsageError("defender '" + d.name() + "' consumes bandit feedback, not revealed");
    if (feedback != "bandit" && feedback != "revealed")
        throw UsageError("feedback must be auto, bandit, or revealed");
}

json kv_to_json(const std::map<std::string, std::string>& kv) {
    json j = json::object();
    for (const auto& [k, v] : kv) j[k] = v;
    return j;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

// ---- shared run/evaluate/sweep configuration ----------------------------------

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::vector<std::string> instances;
    std::string defender, attacker, defenders, attackers, feedback;
    std::string out_dir;
    std::uint64_t seed = 0;
    int horizon = -1, repeats = -1, workers = -1;
    bool trace = false, unpaired = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool multi_instance) {
    cmd->add_option("--config", o.config_path, "key = value config file (dotted keys)");
    cmd->add_option("--set", o.sets, "override a config key, key=value")->take_all();
    if (multi_instance)
        cmd->add_option("--instance", o.instances, "game instance JSON file (repeatable)")->take_all();
    else
        cmd->add_option("--instance", o.instances, "game instance JSON file")->expected(1);
    cmd->add_option("--T", o.horizon, "rounds per run");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--repeats", o.repeats, "repeats per cell");
    cmd->add_option("--workers", o.workers, "worker threads (0 = hardware)");
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_option("--feedback", o.feedback, "auto | bandit | revealed");
    cmd->add_flag("--trace", o.trace, "emit per-round trace CSV");
    cmd->add_flag("--unpaired", o.unpaired, "skip the paired uniform baseline");
}

// Merge config file, --set overrides, and explicit flags into one kv map.
std::map<std::string, std::string> resolve_kv(const CLI::App* cmd, const CommonOpts& o,
                                              std::map<std::string, std::string> defaults) {
    std::map<std::string, std::string> kv = std::move(defaults);
    if (!o.config_path.empty())
        for (auto& [k, v] : load_config_file(o.config_path)) kv[k] = v;
    apply_set_overrides(kv, o.sets);
    if (cmd->count("--instance")) {
        std::string joined;
        for (const auto& i : o.instances) {
            if (!joined.empty()) joined += ',';
            joined += i;
        }
        kv["instances"] = joined;
    }
    if (cmd->count("--T")) kv["T"] = std::to_string(o.horizon);
    if (cmd->count("--seed")) kv["seed"] = std::to_string(o.seed);
    if (cmd->count("--repeats")) kv["repeats"] = std::to_string(o.repeats);
    if (cmd->count("--workers")) kv["workers"] = std::to_string(o.workers);
    if (cmd->count("--out-dir")) kv["out_dir"] = o.out_dir;
    if (cmd->count("--feedback")) kv["feedback"] = o.feedback;
    if (cmd->count("--trace")) kv["trace"] = "true";
    if (cmd->count("--unpaired")) kv["unpaired"] = "true";
    return kv;
}

std::vector<mtd::GameInstance> load_instances(const std::map<std::string, std::string>& kv) {
    if (!kv.count("instances") || kv.at("instances").empty())
        throw UsageError("no instance files given (--instance or config key 'instances')");
    std::vector<mtd::GameInstance> out;
    for (const auto& path : split_list(kv.at("instances"))) out.push_back(mtd::load_instance(path));
    return out;
}

std::string out_path(const std::map<std::string, std::string>& kv, const std::string& file) {
    const std::string dir = kv.count("out_dir") ? kv.at("out_dir") : ".";
    fs::create_directories(dir);
    return (fs::path(dir) / file).string();
}

bool kv_flag(const std::map<std::string, std::string>& kv, const std::string& key) {
    if (!kv.count(key)) return false;
    const auto& v = kv.at(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("config key '" + key + "': expected true/false");
}

// ---- subcommand bodies ---------------------------------------------------------

int cmd_ingest(const std::string& feeds, const std::string& out) {
    const mtd::ParsedFeed feed = mtd::ingest_feed_dir(feeds);
    mtd::save_pool(feed.records, out);
    std::cout << "parsed " << feed.records.size() << " records (" << feed.skipped
              << " skipped) -> " << out << "\n";
    if (feed.records.empty()) std::cerr << "warning: no usable CVE records found in " << feeds << "\n";
    return 0;
}

int cmd_run(const std::map<std::string, std::string>& kv) {
    Timer timer;
    const auto instances = load_instances(kv);
    if (instances.size() != 1) throw UsageError("run expects exactly one instance");
    mtd::RunSpec spec;
    spec.game = &instances[0];
    spec.defender = kv.count("defender") ? kv.at("defender") : "fpl-mtd";
    spec.attacker = kv.count("attacker") ? kv.at("attacker") : "random";
    spec.defender_params = params_for(kv, "defender", spec.defender);
    spec.attacker_params = params_for(kv, "attacker", spec.attacker);
    spec.horizon = kv.count("T") ? static_cast<int>(to_int("T", kv.at("T"))) : 1000;
    spec.seed = kv.count("seed") ? static_cast<std::uint64_t>(to_int("seed", kv.at("seed"))) : 2022;
    spec.paired = !kv_flag(kv, "unpaired");
    spec.keep_trace = kv_flag(kv, "trace");
    if (spec.horizon < 0) throw UsageError("T must be >= 0");

    const auto probe = mtd::make_defender(spec.defender, spec.game, std::max(spec.horizon, 1),
                                          spec.defender_params);
    check_feedback(kv.count("feedback") ? kv.at("feedback") : "auto", *probe);

    const mtd::RunResult res = mtd::run(spec);
    const json config = kv_to_json(kv);
    std::vector<mtd::RunRow> rows{{mtd::instance_id(instances[0]), spec.defender, spec.attacker,
                                   spec.seed, spec.horizon, res.total_utility, res.uniform_utility,
                                   res.performance, res.switches}};
    mtd::write_runs_csv(out_path(kv, "runs.csv"), rows, config);
    if (spec.keep_trace) mtd::write_trace_csv(out_path(kv, "trace.csv"), res.trace, config);
    json summary{{"config", config},
                 {"total_utility", res.total_utility},
                 {"switches", res.switches}};
    if (spec.paired) {
        summary["uniform_utility"] = res.uniform_utility;
        summary["performance"] = res.performance;
    }
    write_json(out_path(kv, "summary.json"), summary);
    std::cout << "defender " << spec.defender << " vs " << spec.attacker << ": total utility "
              << res.total_utility;
    if (spec.paired) std::cout << ", performance " << res.performance;
    std::cout << ", switches " << res.switches << "\n"
              << "done in " << timer.ms() << " ms\n";
    return 0;
}

int cmd_evaluate(const std::map<std::string, std::string>& kv) {
    Timer timer;
    const auto instances = load_instances(kv);
    mtd::EvalSpec spec;
    for (const auto& g : instances) spec.instances.push_back(&g);
    const std::string defenders = kv.count("defenders") ? kv.at("defenders")
                                  : kv.count("defender") ? kv.at("defender")
                                                         : "fpl-mtd";
    const std::string attackers = kv.count("attackers") ? kv.at("attackers")
                                  : kv.count("attacker") ? kv.at("attacker")
                                                         : "random";
    for (const auto& name : split_list(defenders))
        spec.defenders.push_back({name, params_for(kv, "defender", name)});
    for (const auto& name : split_list(attackers))
        spec.attackers.push_back({name, params_for(kv, "attacker", name)});
    spec.horizon = kv.count("T") ? static_cast<int>(to_int("T", kv.at("T"))) : 1000;
    spec.repeats = kv.count("repeats") ? static_cast<int>(to_int("repeats", kv.at("repeats"))) : 10;
    spec.master_seed = kv.count("seed") ? static_cast<std::uint64_t>(to_int("seed", kv.at("seed"))) : 2022;
    spec.workers = kv.count("workers") ? static_cast<int>(to_int("workers", kv.at("workers"))) : 0;
    spec.paired = !kv_flag(kv, "unpaired");

    const std::string feedback = kv.count("feedback") ? kv.at("feedback") : "auto";
    for (const auto& d : spec.defenders) {
        const auto probe =
            mtd::make_defender(d.name, spec.instances[0], std::max(spec.horizon, 1), d.params);
        check_feedback(feedback, *probe);
        (void)probe;
    }
    for (const auto& a : spec.attackers)
        (void)mtd::make_attacker(a.name, spec.instances[0], 0, std::max(spec.horizon, 1), a.params);

    const mtd::EvalResult res = mtd::evaluate(spec);
    const json config = kv_to_json(kv);
    mtd::write_runs_csv(out_path(kv, "runs.csv"), res.rows, config);
    write_json(out_path(kv, "summary.json"), json{{"config", config}, {"cells", mtd::cells_to_json(res.cells)}});
    for (const auto& c : res.cells) {
        if (c.dataset != "all" && instances.size() > 1) continue;
        std::cout << c.defender << " vs " << c.attacker << ": mean performance " << c.mean_performance;
        if (c.se_performance) std::cout << " (se " << *c.se_performance << ")";
        std::cout << " over " << c.runs << " runs\n";
    }
    std::cout << "done in " << timer.ms() << " ms\n";
    return 0;
}

int cmd_sweep(const std::map<std::string, std::string>& kv) {
    Timer timer;
    const auto instances = load_instances(kv);
    mtd::SweepSpec spec;
    for (const auto& g : instances) spec.instances.push_back(&g);
    spec.gammas = parse_grid("gammas", kv.count("gammas") ? kv.at("gammas") : "0.001:0.02:0.001");
    spec.etas = parse_grid("etas", kv.count("etas") ? kv.at("etas") : "0.01:0.1:0.01");
    spec.defender = kv.count("defender") ? kv.at("defender") : "fpl-mtd";
    spec.defender_base_params = params_for(kv, "defender", spec.defender);
    spec.attacker = kv.count("attacker") ? kv.at("attacker") : "random";
    spec.attacker_params = params_for(kv, "attacker", spec.attacker);
    spec.horizon = kv.count("T") ? static_cast<int>(to_int("T", kv.at("T"))) : 500;
    spec.repeats = kv.count("repeats") ? static_cast<int>(to_int("repeats", kv.at("repeats"))) : 5;
    spec.master_seed = kv.count("seed") ? static_cast<std::uint64_t>(to_int("seed", kv.at("seed"))) : 2022;
    spec.workers = kv.count("workers") ? static_cast<int>(to_int("workers", kv.at("workers"))) : 0;

    const auto cells = mtd::sweep(spec);
    const json config = kv_to_json(kv);
    mtd::write_sweep_csv(out_path(kv, "sweep.csv"), cells, config);
    json jc = json::array();
    for (const auto& c : cells)
        jc.push_back(json{{"rank", c.rank},
                          {"gamma", c.gamma},
                          {"eta", c.eta},
                          {"mean_total_utility", c.mean_total_utility}});
    write_json(out_path(kv, "summary.json"), json{{"config", config}, {"cells", jc}});
    std::cout << "best cell: gamma " << cells[0].gamma << ", eta " << cells[0].eta
              << ", mean total utility " << cells[0].mean_total_utility << " ("
              << cells.size() << " cells)\n"
              << "done in " << timer.ms() << " ms\n";
    return 0;
}

int cmd_fix_vulns(const std::string& estimates_path, const std::string& instance_path,
                  const std::string& prices_spec, double budget, const std::string& method,
                  const std::string& objective, std::uint64_t seed, const std::string& out) {
    const mtd::GameInstance game = mtd::load_instance(instance_path);
    std::ifstream in(estimates_path);
    if (!in) throw std::runtime_error("cannot open estimates file: " + estimates_path);
    const json j = json::parse(in);
    if (!j.contains("estimates")) throw UsageError("estimates file lacks an \"estimates\" field");

    mtd::PatchProblem prob;
    prob.game = &game;
    prob.estimates = j["estimates"].get<std::vector<std::vector<double>>>();
    prob.budget = budget;
    if (prices_spec == "unit") {
        prob.prices.assign(game.num_vulns, 1.0);
    } else {
        std::ifstream pin(prices_spec);
        if (!pin) throw std::runtime_error("cannot open prices file: " + prices_spec);
        prob.prices = json::parse(pin).get<std::vector<double>>();
    }

    mtd::FixSet fix;
    if (method == "greedy") {
        fix = mtd::greedy_multi(prob);
    } else if (method == "random") {
        mtd::RngStream rng(mtd::derive_seed(seed, "random-fix"));
        fix = mtd::random_fix(prob, rng);
    } else if (method == "brute") {
        const auto kind = objective == "max-max-min" ? mtd::PatchObjective::MaxMaxMin
                                                     : mtd::PatchObjective::ChooseVul;
        fix = mtd::brute_force_choose_vul(prob, kind);
    } else {
        throw UsageError("method must be greedy, random, or brute");
    }
    if (objective == "max-max-min" && method != "brute")
        throw UsageError("--objective max-max-min is only meaningful with --method brute");

    const json config{{"estimates", estimates_path}, {"instance", instance_path},
                      {"prices", prices_spec},       {"budget", budget},
                      {"method", method},            {"objective", objective},
                      {"seed", seed}};
    write_json(out, json{{"config", config},
                         {"vulns", fix.vulns},
                         {"total_price", fix.total_price},
                         {"objective", fix.objective}});
    std::cout << "fixed " << fix.vulns.size() << " vulnerabilities, total price " << fix.total_price
              << ", objective " << fix.objective << "\n";
    return 0;
}

int cmd_report(const std::string& runs_path, const std::string& out) {
    std::ifstream in(runs_path);
    if (!in) throw std::runtime_error("cannot open runs file: " + runs_path);
    std::string line;
    std::vector<std::string> header;
    std::map<std::pair<std::string, std::string>, std::vector<double>> perf;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_list(line);
        if (header.empty()) {
            header = fields;
            continue;
        }
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i) row[header[i]] = fields[i];
        if (!row.count("defender") || !row.count("attacker") || !row.count("performance"))
            throw std::runtime_error(runs_path + ": missing defender/attacker/performance columns");
        perf[{row["defender"], row["attacker"]}].push_back(
            to_double("performance", row["performance"]));
    }
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot open for writing: " + out);
    os << "# config " << json{{"runs", runs_path}}.dump() << '\n'
       << "defender,attacker,runs,mean_performance,se_performance\n";
    for (const auto& [key, xs] : perf) {
        const auto ms = mtd::detail::mean_se(xs);
        os << key.first << ',' << key.second << ',' << ms.n << ',' << mtd::fmt_double(ms.mean) << ','
           << (ms.se ? mtd::fmt_double(*ms.se) : "") << '\n';
    }
    std::cout << "wrote " << out << " (" << perf.size() << " cells)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"moving-target-defense simulation workbench"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse NVD JSON feeds into a pool CSV");
    std::string feeds, ingest_out;
    ingest->add_option("--feeds", feeds, "directory of *.json / *.json.gz feeds")
        ->envname("MTDSIM_FEEDS")
        ->required();
    ingest->add_option("--out", ingest_out, "pool CSV path")->required();

    // gen
    auto* gen = app.add_subcommand("gen", "generate a game instance");
    std::string gen_mode, gen_out, gen_pool, gen_configs, gen_types, gen_vulns, gen_switch = "uniform";
    std::uint64_t gen_seed = 2022;
    double gen_excl = -1.0, gen_switch_const = 0.5;
    gen->add_option("--mode", gen_mode, "nvd | general | zero")->required();
    gen->add_option("--out", gen_out, "instance JSON path")->required();
    gen->add_option("--pool", gen_pool, "pool CSV (required for nvd mode)");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--configs", gen_configs, "config-count range lo:hi");
    gen->add_option("--types", gen_types, "attacker-type-count range lo:hi");
    gen->add_option("--vulns", gen_vulns, "vulnerability-count range lo:hi");
    gen->add_option("--exclusion", gen_excl, "per-(config, vuln) exclusion probability");
    gen->add_option("--switch-mode", gen_switch, "uniform | constant | zero");
    gen->add_option("--switch-const", gen_switch_const, "cost for constant mode");

    // run / evaluate / sweep
    CommonOpts run_o, eval_o, sweep_o;
    auto* runc = app.add_subcommand("run", "single simulation run");
    add_common(runc, run_o, false);
    runc->add_option("--defender", run_o.defender, "defender strategy");
    runc->add_option("--attacker", run_o.attacker, "attacker strategy (all types)");

    auto* evalc = app.add_subcommand("evaluate", "batch evaluation with paired uniform baseline");
    add_common(evalc, eval_o, true);
    evalc->add_option("--defenders", eval_o.defenders, "comma-separated defender list");
    evalc->add_option("--attackers", eval_o.attackers, "comma-separated attacker list");

    auto* sweepc = app.add_subcommand("sweep", "gamma x eta hyperparameter grid");
    add_common(sweepc, sweep_o, true);
    std::string sweep_gammas, sweep_etas;
    sweepc->add_option("--defender", sweep_o.defender, "swept defender strategy");
    sweepc->add_option("--attacker", sweep_o.attacker, "attacker strategy");
    sweepc->add_option("--gammas", sweep_gammas, "grid: lo:hi:step or comma list");
    sweepc->add_option("--etas", sweep_etas, "grid: lo:hi:step or comma list");

    // fix-vulns
    auto* fixc = app.add_subcommand("fix-vulns", "budgeted vulnerability selection");
    std::string fix_est, fix_inst, fix_prices = "unit", fix_method = "greedy",
                fix_objective = "choose-vul", fix_out;
    double fix_budget = 0.0;
    std::uint64_t fix_seed = 2022;
    fixc->add_option("--estimates", fix_est, "JSON file with an \"estimates\" [vuln][type] matrix")
        ->required();
    fixc->add_option("--instance", fix_inst, "game instance JSON")->required();
    fixc->add_option("--prices", fix_prices, "price JSON file, or 'unit'");
    fixc->add_option("--budget", fix_budget, "budget")->required();
    fixc->add_option("--method", fix_method, "greedy | random | brute");
    fixc->add_option("--objective", fix_objective, "choose-vul | max-max-min (brute only)");
    fixc->add_option("--seed", fix_seed, "seed for the random method");
    fixc->add_option("--out", fix_out, "fix-set JSON path")->required();

    // report
    auto* repc = app.add_subcommand("report", "aggregate a runs CSV per (defender, attacker)");
    std::string rep_runs, rep_out;
    repc->add_option("--runs", rep_runs, "runs CSV from run/evaluate")->required();
    repc->add_option("--out", rep_out, "report CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest) return cmd_ingest(feeds, ingest_out);
        if (*gen) {
            mtd::GeneratorParams p;
            p.seed = gen_seed;
            if (gen_mode == "nvd")
                p.mode = mtd::RewardMode::Nvd;
            else if (gen_mode == "general")
                p.mode = mtd::RewardMode::GeneralSum;
            else if (gen_mode == "zero")
                p.mode = mtd::RewardMode::ZeroSum;
            else
                throw UsageError("mode must be nvd, general, or zero");
            if (!gen_configs.empty())
                std::tie(p.configs_lo, p.configs_hi) = parse_range("configs", gen_configs);
            if (!gen_types.empty()) std::tie(p.types_lo, p.types_hi) = parse_range("types", gen_types);
            if (!gen_vulns.empty()) std::tie(p.vulns_lo, p.vulns_hi) = parse_range("vulns", gen_vulns);
            p.exclusion = gen_excl;
            if (gen_switch == "uniform")
                p.switch_mode = mtd::SwitchMode::Uniform;
            else if (gen_switch == "constant")
                p.switch_mode = mtd::SwitchMode::Constant;
            else if (gen_switch == "zero")
                p.switch_mode = mtd::SwitchMode::Zero;
            else
                throw UsageError("switch-mode must be uniform, constant, or zero");
            p.switch_const = gen_switch_const;
            mtd::GameInstance g;
            if (p.mode == mtd::RewardMode::Nvd) {
                if (gen_pool.empty()) throw UsageError("nvd mode requires --pool");
                g = mtd::generate_nvd_instance(mtd::load_pool(gen_pool), p);
            } else {
                g = mtd::generate_synthetic_instance(p);
            }
            mtd::save_instance(g, gen_out);
            std::cout << "wrote " << gen_out << ": " << g.num_configs << " configs, "
                      << g.num_attacker_types << " types, " << g.num_vulns << " vulns\n";
            return 0;
        }
        if (*runc) {
            auto kv = resolve_kv(runc, run_o, {});
            if (runc->count("--defender")) kv["defender"] = run_o.defender;
            if (runc->count("--attacker")) kv["attacker"] = run_o.attacker;
            return cmd_run(kv);
        }
        if (*evalc) {
            auto kv = resolve_kv(evalc, eval_o, {});
            if (evalc->count("--defenders")) kv["defenders"] = eval_o.defenders;
            if (evalc->count("--attackers")) kv["attackers"] = eval_o.attackers;
            return cmd_evaluate(kv);
        }
        if (*sweepc) {
            auto kv = resolve_kv(sweepc, sweep_o, {});
            if (sweepc->count("--defender")) kv["defender"] = sweep_o.defender;
            if (sweepc->count("--attacker")) kv["attacker"] = sweep_o.attacker;
            if (sweepc->count("--gammas")) kv["gammas"] = sweep_gammas;
            if (sweepc->count("--etas")) kv["etas"] = sweep_etas;
            return cmd_sweep(kv);
        }
        if (*fixc)
            return cmd_fix_vulns(fix_est, fix_inst, fix_prices, fix_budget, fix_method,
                                 fix_objective, fix_seed, fix_out);
        if (*repc) return cmd_report(rep_runs, rep_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
