#include "aapi/harness.hpp"

#include "aapi/errors.hpp"
#include "aapi/verify.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>

namespace aapi {

void ExperimentConfig::validate() const {
    if (runs < 1) throw InvalidArgument("runs must be at least 1");
    if (agent.total_steps() == 0) throw InvalidArgument("tau * phases must be positive");
    agent.validate();
}

int thread_budget(int requested) {
    int n = requested > 0 ? requested : omp_get_max_threads();
    if (const char* cap = std::getenv("AAPI_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(cap, &end, 10);
        if (end != cap && v > 0) n = std::min<long>(n, v);
    }
    return std::max(1, n);
}

std::vector<std::size_t> logged_steps(std::size_t total, std::size_t stride) {
    if (total == 0) return {};
    if (stride == 0) stride = std::max<std::size_t>(1, total / 2000);
    std::vector<std::size_t> steps;
    for (std::size_t t = stride; t <= total; t += stride) steps.push_back(t);
    if (steps.empty() || steps.back() != total) steps.push_back(total);
    return steps;
}

Aggregate aggregate(const std::vector<std::vector<double>>& traces) {
    if (traces.empty()) throw InvalidArgument("aggregate: no traces");
    const std::size_t len = traces.front().size();
    for (const auto& t : traces) {
        if (t.size() != len) throw InvalidArgument("aggregate: traces have different lengths");
    }
    Aggregate out;
    out.mean.assign(len, 0.0);
    out.std.assign(len, 0.0);
    const double n = static_cast<double>(traces.size());
    for (std::size_t i = 0; i < len; ++i) {
        double sum = 0.0;
        for (const auto& t : traces) sum += t[i];
        const double mean = sum / n;
        double sq = 0.0;
        for (const auto& t : traces) sq += (t[i] - mean) * (t[i] - mean);
        out.mean[i] = mean;
        out.std[i] = std::sqrt(sq / n);
    }
    return out;
}

void reduce_trace(std::span<const double> rewards, std::span<const std::size_t> steps, double gain_star,
                  std::vector<double>& cost, std::vector<double>* regret) {
    cost.clear();
    if (regret != nullptr) regret->clear();
    // Running sums carried at full resolution; the stride only picks rows.
    double sum = 0.0;
    double comp = 0.0;
    std::size_t next = 0;
    for (std::size_t t = 0; t < rewards.size() && next < steps.size(); ++t) {
        const double v = rewards[t];
        const double s = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - s) + v : (v - s) + sum;
        sum = s;
        if (steps[next] == t + 1) {
            const double total = sum + comp;
            const double n = static_cast<double>(t + 1);
            cost.push_back(-total / n);
            if (regret != nullptr) regret->push_back(n * gain_star - total);
            ++next;
        }
    }
    if (next != steps.size()) throw InvalidArgument("reduce_trace: trace shorter than the logged steps");
}

SuiteResult run_suite(const ExperimentConfig& cfg, Execution exec) {
    cfg.validate();
    Eigen::setNbThreads(1);  // runs are the unit of parallelism

    SuiteResult res;
    const std::size_t T = cfg.agent.total_steps();
    res.steps = logged_steps(T, cfg.stride);
    res.has_regret = cfg.env.kind == EnvKind::tabular;
    if (res.has_regret) res.gain_star = policy_iteration(tabular_ergodic_mdp(cfg.env.size, cfg.env.n_actions)).gain;

    const std::size_t runs = cfg.runs;
    std::vector<std::vector<double>> costs(runs);
    std::vector<std::vector<double>> regrets(res.has_regret ? runs : 0);
    std::vector<std::string> errors(runs);

    auto one = [&](std::size_t i) {
        const std::uint64_t seed = cfg.base_seed + i;
        try {
            const auto env = make_env(cfg.env);
            const RunResult run = run_experiment(cfg.agent, *env, seed);
            reduce_trace(run.rewards, res.steps, res.gain_star, costs[i], res.has_regret ? &regrets[i] : nullptr);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    if (exec == Execution::parallel) {
        const auto n = static_cast<long>(runs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_budget(cfg.threads))
        for (long i = 0; i < n; ++i) one(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < runs; ++i) one(i);
    }
    for (std::size_t i = 0; i < runs; ++i) {
        if (!errors[i].empty()) {
            throw std::runtime_error("run " + std::to_string(i) + " failed (seed " + std::to_string(cfg.base_seed + i) +
                                     "): " + errors[i]);
        }
    }

    res.cost = aggregate(costs);
    res.final_cost.reserve(runs);
    for (const auto& c : costs) res.final_cost.push_back(c.back());
    if (res.has_regret) {
        res.regret = aggregate(regrets);
        res.regret_runs = std::move(regrets);
    }
    return res;
}

std::string to_csv(const SuiteResult& res) {
    std::string out = "step,cost_mean,cost_std,regret_mean,regret_std\n";
    char buf[160];
    for (std::size_t i = 0; i < res.steps.size(); ++i) {
        int n = 0;
        if (res.has_regret) {
            n = std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g\n", res.steps[i], res.cost.mean[i],
                              res.cost.std[i], res.regret.mean[i], res.regret.std[i]);
        } else {
            n = std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,,\n", res.steps[i], res.cost.mean[i], res.cost.std[i]);
        }
        out.append(buf, static_cast<std::size_t>(n));
    }
    return out;
}

void write_csv(const SuiteResult& res, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
    f << to_csv(res);
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace aapi
