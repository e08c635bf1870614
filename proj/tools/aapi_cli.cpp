// Command-line front end: run experiment suites, verification suites, and
// exact solves of small MDPs.

#include "aapi/errors.hpp"
#include "aapi/harness.hpp"
#include "aapi/json_io.hpp"
#include "aapi/verify.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct RunFlags {
    std::string config;
    std::optional<std::string> env;
    std::optional<std::size_t> env_size;
    std::optional<std::size_t> actions;
    std::optional<std::string> agent;
    std::optional<std::size_t> tau;
    std::optional<std::size_t> phases;
    std::optional<double> eta;
    std::optional<std::size_t> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> stride;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::optional<std::size_t> horizon;
    std::optional<double> ridge;
    std::optional<std::size_t> n_max;
    std::optional<double> t_mix_guess;
    bool use_all_phases = false;
    bool exact_q = false;
    bool serial = false;
};

int do_run(const RunFlags& f) {
    aapi::ExperimentConfig cfg;
    cfg.env = aapi::EnvSpec::tabular(5, 2);
    if (!f.config.empty()) aapi::apply_config_json(aapi::read_file(f.config), cfg);

    if (f.env || f.env_size || f.actions) {
        const auto kind = f.env ? aapi::parse_env_kind(*f.env) : cfg.env.kind;
        const std::size_t size = f.env_size.value_or(cfg.env.size);
        switch (kind) {
            case aapi::EnvKind::tabular: cfg.env = aapi::EnvSpec::tabular(size, f.actions.value_or(cfg.env.n_actions)); break;
            case aapi::EnvKind::deepsea: cfg.env = aapi::EnvSpec::deepsea(size); break;
            case aapi::EnvKind::cartpole: cfg.env = aapi::EnvSpec::cartpole(); break;
        }
    }
    auto& a = cfg.agent;
    if (f.agent) a.variant = aapi::parse_variant(*f.agent);
    if (f.tau) a.tau = *f.tau;
    if (f.phases) a.phases = *f.phases;
    if (f.eta) a.eta = *f.eta;
    if (f.runs) cfg.runs = *f.runs;
    if (f.seed) cfg.base_seed = *f.seed;
    if (f.stride) cfg.stride = *f.stride;
    if (f.out) cfg.out = *f.out;
    if (f.threads) cfg.threads = *f.threads;
    if (f.horizon) a.horizon = *f.horizon;
    if (f.ridge) a.ridge = *f.ridge;
    if (f.n_max) a.n_max = *f.n_max;
    if (f.t_mix_guess) a.t_mix_guess = *f.t_mix_guess;
    if (f.use_all_phases) a.use_all_phases = true;
    if (f.exact_q) a.exact_q = true;

    const auto res = aapi::run_suite(cfg, f.serial ? aapi::Execution::serial : aapi::Execution::parallel);
    if (cfg.out.empty() || cfg.out == "-") {
        std::cout << aapi::to_csv(res);
    } else {
        aapi::write_csv(res, cfg.out);
        std::fprintf(stderr, "%s %s: final cost %.6g +- %.6g over %zu runs -> %s\n", aapi::to_string(a.variant).c_str(),
                     aapi::to_string(cfg.env.kind).c_str(), res.cost.mean.back(), res.cost.std.back(), cfg.runs,
                     cfg.out.c_str());
    }
    return 0;
}

int do_verify(const std::string& suite, std::size_t trials, std::uint64_t seed, const std::string& out, bool serial) {
    aapi::SuiteOptions opts;
    opts.trials = trials;
    opts.seed = seed;
    opts.exec = serial ? aapi::Execution::serial : aapi::Execution::parallel;
    opts.live.tau = 500;
    opts.live.phases = suite == "gain" ? 40 : 400;
    opts.live.eta = 0.1;
    const auto reports = aapi::run_verify_suite(aapi::parse_suite(suite), opts);

    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out.empty() && out != "-") {
        file.open(out, std::ios::binary);
        if (!file) throw aapi::InvalidArgument("cannot open '" + out + "' for writing");
        os = &file;
    }
    std::size_t failed = 0;
    for (const auto& r : reports) {
        *os << aapi::to_json_line(r) << '\n';
        failed += r.holds ? 0 : 1;
    }
    std::fprintf(stderr, "%s: %zu checks, %zu violations\n", suite.c_str(), reports.size(), failed);
    return 0;
}

int do_solve(const std::string& mdp_path, const std::string& policy_path) {
    const auto mdp = aapi::load_mdp(mdp_path);
    const auto pi = policy_path.empty() ? aapi::Policy::uniform(mdp.n_states(), mdp.n_actions())
                                        : aapi::load_policy(policy_path);
    std::cout << aapi::qtable_to_json(aapi::solve_q(mdp, pi)) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive approximate policy iteration: experiments, checks and exact solves"};
    app.require_subcommand(1);

    RunFlags rf;
    auto* run = app.add_subcommand("run", "run seeded experiments and write the aggregate CSV");
    run->add_option("--config", rf.config, "JSON file with the same keys as the flags");
    run->add_option("--env", rf.env, "tabular | deepsea | cartpole");
    run->add_option("--env-size", rf.env_size, "|X| for tabular, N for deepsea");
    run->add_option("--actions", rf.actions, "|A| for tabular");
    run->add_option("--agent", rf.agent, "aapi | kaapi | politex | rlsvi");
    run->add_option("--tau", rf.tau, "phase length");
    run->add_option("--phases", rf.phases, "number of phases K");
    run->add_option("--eta", rf.eta, "learning-rate constant in [0.01, 1]");
    run->add_option("--runs", rf.runs, "independent seeded runs");
    run->add_option("--seed", rf.seed, "base seed; run i uses seed + i");
    run->add_option("--stride", rf.stride, "logging stride (0 = T/2000)");
    run->add_option("--out", rf.out, "CSV path (- for stdout)");
    run->add_option("--threads", rf.threads, "worker threads (AAPI_THREADS caps)");
    run->add_option("--horizon", rf.horizon, "LSMC return window");
    run->add_option("--ridge", rf.ridge, "LSMC ridge");
    run->add_option("--n-max", rf.n_max, "phases sampled for the learning rate");
    run->add_option("--t-mix-guess", rf.t_mix_guess, "sets the Q clip range");
    run->add_flag("--use-all-phases", rf.use_all_phases, "fit on all data so far");
    run->add_flag("--exact-q", rf.exact_q, "tabular: exact policy evaluation");
    run->add_flag("--serial", rf.serial, "run sequentially");

    std::string suite;
    std::size_t trials = 100;
    std::uint64_t vseed = 0;
    std::string vout;
    bool vserial = false;
    auto* verify = app.add_subcommand("verify", "run a verification suite and emit JSON lines");
    verify->add_option("--suite", suite, "perfdiff | relq | aoftrl | linf | gain | mcmahan | bellman")->required();
    verify->add_option("--trials", trials, "number of random instances");
    verify->add_option("--seed", vseed, "base seed");
    verify->add_option("--out", vout, "output path (- for stdout)");
    verify->add_flag("--serial", vserial, "run sequentially");

    std::string mdp_path;
    std::string policy_path;
    auto* solve = app.add_subcommand("solve", "print gain and Q-table of a policy as JSON");
    solve->add_option("--mdp", mdp_path, "MDP JSON file")->required();
    solve->add_option("--policy", policy_path, "policy JSON file (default uniform)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return do_run(rf);
        if (*verify) return do_verify(suite, trials, vseed, vout, vserial);
        if (*solve) return do_solve(mdp_path, policy_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
