#include "aapi/verify.hpp"

#include "aapi/ao_ftrl.hpp"
#include "aapi/envs.hpp"
#include "aapi/errors.hpp"
#include "aapi/features.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

namespace aapi {

LemmaReport make_report(std::string lemma, double lhs, double rhs, double tol, std::string instance) {
    LemmaReport r;
    r.lemma = std::move(lemma);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs + tol - lhs;
    r.holds = lhs <= rhs + tol;
    r.instance = std::move(instance);
    return r;
}

std::string to_json_line(const LemmaReport& r) {
    nlohmann::ordered_json j;
    j["lemma"] = r.lemma;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["slack"] = r.slack;
    j["holds"] = r.holds;
    j["instance"] = r.instance;
    return j.dump();
}

// --- generators ----------------------------------------------------------------

namespace {

void dirichlet_ones(Rng& rng, double* out, std::size_t n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        out[i] = -std::log(u);
        total += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= total;
}

std::string shape(const char* tag, std::size_t n, std::size_t a, std::uint64_t seed) {
    std::ostringstream os;
    os << tag << " n=" << n << " a=" << a << " seed=" << seed;
    return os.str();
}

}  // namespace

TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, Rng& rng, double mix) {
    if (n_states == 0 || n_actions == 0) throw InvalidArgument("random_mdp: empty MDP");
    if (!(mix >= 0.0 && mix <= 1.0)) throw InvalidArgument("random_mdp: mix must lie in [0, 1]");
    std::vector<double> P(n_states * n_actions * n_states);
    std::vector<double> r(n_states * n_actions);
    const double floor = mix / static_cast<double>(n_states);
    for (std::size_t xa = 0; xa < n_states * n_actions; ++xa) {
        double* row = &P[xa * n_states];
        dirichlet_ones(rng, row, n_states);
        double total = 0.0;
        for (std::size_t y = 0; y < n_states; ++y) {
            row[y] = (1.0 - mix) * row[y] + floor;
            total += row[y];
        }
        for (std::size_t y = 0; y < n_states; ++y) row[y] /= total;
        r[xa] = rng.uniform();
    }
    return TabularMdp(n_states, n_actions, P, r);
}

Policy random_policy(std::size_t n_states, std::size_t n_actions, Rng& rng) {
    Matrix probs(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions));
    std::vector<double> row(n_actions);
    for (std::size_t x = 0; x < n_states; ++x) {
        dirichlet_ones(rng, row.data(), n_actions);
        for (std::size_t a = 0; a < n_actions; ++a) probs(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a)) = row[a];
    }
    return Policy(std::move(probs));
}

Policy perturb_policy(const Policy& pi, double radius, Rng& rng) {
    if (radius < 0.0) throw InvalidArgument("perturb_policy: negative radius");
    // ||(1-c) p + c q - p||_1 = c ||q - p||_1 <= 2c
    const double c = std::min(1.0, radius / 2.0) * rng.uniform();
    const Policy target = random_policy(pi.n_states(), pi.n_actions(), rng);
    Matrix probs = (1.0 - c) * pi.probs() + c * target.probs();
    for (Eigen::Index x = 0; x < probs.rows(); ++x) probs.row(x) /= probs.row(x).sum();
    return Policy(std::move(probs));
}

// --- exact solvers -------------------------------------------------------------

OptimalPolicy policy_iteration(const TabularMdp& mdp) {
    const std::size_t n = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    std::vector<std::size_t> choice(n, 0);
    OptimalPolicy out{Policy::deterministic(choice, A), 0.0, 0};
    for (int iter = 1; iter <= 10'000; ++iter) {
        const QTable table = solve_q(mdp, out.policy);
        out.gain = table.gain;
        out.iterations = iter;
        bool changed = false;
        for (std::size_t x = 0; x < n; ++x) {
            const auto xi = static_cast<Eigen::Index>(x);
            std::size_t best = choice[x];
            for (std::size_t a = 0; a < A; ++a) {
                if (table.q(xi, static_cast<Eigen::Index>(a)) > table.q(xi, static_cast<Eigen::Index>(best)) + 1e-12) best = a;
            }
            if (best != choice[x]) {
                choice[x] = best;
                changed = true;
            }
        }
        if (!changed) return out;
        out.policy = Policy::deterministic(choice, A);
    }
    throw ErgodicityViolation("policy_iteration: no fixed point after 10000 iterations");
}

// --- checks --------------------------------------------------------------------

LemmaReport performance_difference(const TabularMdp& mdp, const Policy& pi, const Policy& pihat, double tol) {
    const Vector mu = stationary_distribution(induced_transition(mdp, pi)).mu;
    const QTable qhat = solve_q(mdp, pihat);
    const double lhs = average_reward(mdp, pi) - qhat.gain;
    double rhs = 0.0;
    for (Eigen::Index x = 0; x < mu.size(); ++x) {
        rhs += mu(x) * (pi.probs().row(x) - pihat.probs().row(x)).dot(qhat.q.row(x));
    }
    LemmaReport r;
    r.lemma = "performance_difference";
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = tol - std::abs(lhs - rhs);
    r.holds = std::abs(lhs - rhs) <= tol;
    r.instance = shape("mdp", mdp.n_states(), mdp.n_actions(), 0);
    return r;
}

LemmaReport relative_q_bound(const TabularMdp& mdp, const Policy& pi_prev, const Policy& pi_next, std::size_t K,
                             double t_mix) {
    if (K < 2) throw InvalidArgument("relative_q_bound: K must be at least 2");
    const QTable a = solve_q(mdp, pi_prev);
    const QTable b = solve_q(mdp, pi_next);
    const double lhs = (a.q - b.q).cwiseAbs().maxCoeff();
    const double t = std::ceil(t_mix);
    const double lg = std::log2(static_cast<double>(K));
    const double Kd = static_cast<double>(K);
    const double rhs = t * t * lg * lg * pi_prev.max_l1_distance(pi_next) + 2.0 / (Kd * Kd * Kd);
    return make_report("relative_q", lhs, rhs, 1e-9, shape("mdp", mdp.n_states(), mdp.n_actions(), 0));
}

LemmaReport relative_q_bound(const TabularMdp& mdp, const Policy& pi_prev, const Policy& pi_next, std::size_t K) {
    return relative_q_bound(mdp, pi_prev, pi_next, K, mixing_time_bound(mdp, Execution::serial).t_mix_condition2);
}

LemmaReport empirical_gain_concentration(std::span<const double> rewards, std::span<const Policy> policies,
                                         std::size_t tau, const TabularMdp& mdp, double delta, double t_mix) {
    if (tau == 0 || policies.empty() || rewards.size() != policies.size() * tau) {
        throw InvalidArgument("empirical_gain_concentration: trace does not match the recorded policies");
    }
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("empirical_gain_concentration: delta must lie in (0, 1)");
    double lhs = 0.0;
    for (std::size_t k = 0; k < policies.size(); ++k) {
        const double gain = average_reward(mdp, policies[k]);
        for (std::size_t t = 0; t < tau; ++t) lhs += gain - rewards[k * tau + t];
    }
    const double K = static_cast<double>(policies.size());
    const double T = static_cast<double>(rewards.size());
    const double rhs = K * t_mix + 4.0 * std::sqrt(2.0) * t_mix * std::sqrt(K * T * std::log(T / delta));
    return make_report("gain_concentration", std::abs(lhs), rhs, 0.0,
                       shape("tabular", mdp.n_states(), mdp.n_actions(), 0));
}

LemmaReport linf_weighted_bound(const Matrix& psi, const Vector& u, const Vector& w, const Vector& what, double tol) {
    if (u.size() != psi.rows() || w.size() != psi.cols() || what.size() != psi.cols()) {
        throw InvalidArgument("linf_weighted_bound: shape mismatch");
    }
    const Matrix cov = psi.transpose() * u.asDiagonal() * psi;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
    const double sigma = eig.eigenvalues().minCoeff();
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (!(sigma > 1e-13 * scale)) throw ExcitationViolation("linf_weighted_bound: features are not excited under u");
    const Vector diff = psi * (what - w);
    const double lhs = diff.cwiseAbs().maxCoeff();
    const double c_psi = psi.rowwise().norm().maxCoeff();
    const double rhs = c_psi * weighted_norm(diff, u) / std::sqrt(sigma);
    std::ostringstream os;
    os << "psi " << psi.rows() << "x" << psi.cols();
    return make_report("linf_weighted", lhs, rhs, tol, os.str());
}

LemmaReport mcmahan_check(std::span<const double> a) {
    double total = 0.0;
    for (double v : a) total += v;
    return make_report("mcmahan", ftrl::adaptive_sum(a), 2.0 * std::sqrt(total), 1e-12,
                       "length=" + std::to_string(a.size()));
}

LemmaReport bellman_check(const TabularMdp& mdp, const Policy& pi) {
    const QTable table = solve_q(mdp, pi);
    const Vector mu = stationary_distribution(induced_transition(mdp, pi)).mu;
    const double residual = std::max(bellman_residual(mdp, pi, table), std::abs(mu.dot(table.v)));
    return make_report("bellman", residual, 1e-10, 0.0, shape("mdp", mdp.n_states(), mdp.n_actions(), 0));
}

LemmaReport aoftrl_check(std::span<const Vector> losses, double eta) {
    if (losses.empty()) throw InvalidArgument("aoftrl_check: empty stream");
    const auto n = losses.front().size();
    // Lemma tuning: rate^2 = 2 S / R(f*) with R(vertex) = log n.
    if (eta <= 0.0) eta = n > 1 ? 1.0 / std::sqrt(std::log(static_cast<double>(n))) : 1.0;
    const auto trace = ftrl::run_optimistic(losses, eta);
    Vector total = Vector::Zero(losses.front().size());
    for (const auto& q : losses) total += q;
    Eigen::Index best = 0;
    total.maxCoeff(&best);
    Vector vertex = Vector::Zero(total.size());
    vertex(best) = 1.0;
    const auto audit = ftrl::regret_audit(trace.losses, trace.side_infos, trace.plays, trace.rates,
                                          ftrl::SimplexPoint(vertex), eta);
    std::ostringstream os;
    os << "T=" << losses.size() << " actions=" << total.size() << " eta=" << eta;
    return make_report("aoftrl", audit.regret, audit.bound, 1e-9, os.str());
}

// --- regret --------------------------------------------------------------------

namespace {

// Neumaier compensated running sum.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    [[nodiscard]] double value() const { return sum + comp; }
};

}  // namespace

RegretCurves regret_curves(std::span<const double> rewards, std::span<const Policy> policies, std::size_t tau,
                           const TabularMdp& mdp, double gain_star, std::span<const std::size_t> steps) {
    if (tau == 0 || rewards.size() != policies.size() * tau) throw InvalidArgument("regret_curves: trace does not match the policies");
    std::vector<double> gains(policies.size());
    for (std::size_t k = 0; k < policies.size(); ++k) gains[k] = average_reward(mdp, policies[k]);

    RegretCurves out;
    CompensatedSum sum_r;
    CompensatedSum sum_gain;
    std::size_t next = 0;
    for (std::size_t t = 0; t < rewards.size() && next < steps.size(); ++t) {
        sum_r.add(rewards[t]);
        sum_gain.add(gains[t / tau]);
        while (next < steps.size() && steps[next] == t + 1) {
            const double n = static_cast<double>(t + 1);
            out.steps.push_back(t + 1);
            out.total.push_back(n * gain_star - sum_r.value());
            out.concentration.push_back(sum_gain.value() - sum_r.value());
            out.pseudo.push_back(n * gain_star - sum_gain.value());
            ++next;
        }
    }
    if (next != steps.size()) throw InvalidArgument("regret_curves: steps must be increasing and within the trace");
    return out;
}

double loglog_slope(std::span<const std::size_t> steps, std::span<const double> values, std::size_t from_step) {
    if (steps.size() != values.size()) throw InvalidArgument("loglog_slope: size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] < from_step || steps[i] == 0 || !(values[i] > 0.0)) continue;
        const double x = std::log(static_cast<double>(steps[i]));
        const double y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double nd = static_cast<double>(n);
    return (nd * sxy - sx * sy) / (nd * sxx - sx * sx);
}

double mann_kendall_z(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 3) throw InvalidArgument("mann_kendall_z: need at least 3 points");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = series[j] - series[i];
            s += (d > 0) - (d < 0);
        }
    }
    std::vector<double> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());
    const double nd = static_cast<double>(n);
    double var = nd * (nd - 1) * (2 * nd + 5);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        var -= t * (t - 1) * (2 * t + 5);
        i = j;
    }
    var /= 18.0;
    if (var <= 0.0) return 0.0;
    if (s > 0) return (s - 1) / std::sqrt(var);
    if (s < 0) return (s + 1) / std::sqrt(var);
    return 0.0;
}

// --- suites --------------------------------------------------------------------

std::string to_string(Suite s) {
    switch (s) {
        case Suite::perfdiff: return "perfdiff";
        case Suite::relq: return "relq";
        case Suite::aoftrl: return "aoftrl";
        case Suite::linf: return "linf";
        case Suite::gain: return "gain";
        case Suite::mcmahan: return "mcmahan";
        case Suite::bellman: return "bellman";
    }
    return "unknown";
}

Suite parse_suite(const std::string& name) {
    for (Suite s : {Suite::perfdiff, Suite::relq, Suite::aoftrl, Suite::linf, Suite::gain, Suite::mcmahan, Suite::bellman}) {
        if (to_string(s) == name) return s;
    }
    throw InvalidArgument("unknown verify suite '" + name + "'");
}

namespace {

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + rng.uniform_index(hi - lo + 1);
}

LemmaReport trial_perfdiff(Rng& rng, std::uint64_t seed) {
    const std::size_t n = between(rng, 1, 6);
    const std::size_t A = between(rng, 1, 4);
    const auto mdp = random_mdp(n, A, rng);
    const auto pi = random_policy(n, A, rng);
    const auto pihat = random_policy(n, A, rng);
    auto r = performance_difference(mdp, pi, pihat);
    r.instance = shape("mdp", n, A, seed);
    return r;
}

LemmaReport trial_relq(Rng& rng, std::uint64_t seed) {
    const std::size_t n = between(rng, 2, 6);
    const std::size_t A = between(rng, 2, 4);
    const auto mdp = random_mdp(n, A, rng, 0.1);
    const auto info = mixing_time_bound(mdp, Execution::serial);
    if (info.beta > 0.9 + 1e-12) throw ErgodicityViolation("relq: generated instance has beta* > 0.9");
    const auto prev = random_policy(n, A, rng);
    const auto next = perturb_policy(prev, 0.2, rng);
    auto r = relative_q_bound(mdp, prev, next, 64, info.t_mix_condition2);
    r.instance = shape("mdp", n, A, seed);
    return r;
}

LemmaReport trial_aoftrl(Rng& rng, std::uint64_t seed, double eta) {
    std::vector<Vector> losses(200, Vector(5));
    for (auto& q : losses) {
        for (Eigen::Index a = 0; a < q.size(); ++a) q(a) = rng.uniform();
    }
    auto r = aoftrl_check(losses, eta);
    r.instance += " seed=" + std::to_string(seed);
    return r;
}

LemmaReport trial_linf(Rng& rng, std::uint64_t seed) {
    const std::size_t n = between(rng, 1, 4);
    const std::size_t A = between(rng, 1, 2);
    const std::size_t m = n * A;
    Matrix psi;
    if (seed % 2 == 0) {
        psi = FeatureMap::tabular(n, A).feature_matrix();
    } else {
        const std::size_t d = between(rng, 1, std::min<std::size_t>(8, m));
        psi.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < psi.size(); ++i) psi.data()[i] = rng.normal();
    }
    // u = mu (x) pi on (x, a) rows, x * |A| + a.
    std::vector<double> mu(n);
    std::vector<double> pa(A);
    dirichlet_ones(rng, mu.data(), n);
    Vector u(static_cast<Eigen::Index>(m));
    for (std::size_t x = 0; x < n; ++x) {
        dirichlet_ones(rng, pa.data(), A);
        for (std::size_t a = 0; a < A; ++a) u(static_cast<Eigen::Index>(x * A + a)) = mu[x] * pa[a];
    }
    Vector w(psi.cols());
    Vector what(psi.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        w(i) = rng.normal();
        what(i) = w(i) + rng.normal();
    }
    auto r = linf_weighted_bound(psi, u, w, what);
    r.instance += " seed=" + std::to_string(seed);
    return r;
}

LemmaReport trial_mcmahan(Rng& rng, std::uint64_t seed) {
    const std::size_t len = between(rng, 1, 50);
    std::vector<double> a(len);
    const std::size_t zeros = rng.uniform_index(4);
    for (std::size_t i = 0; i < len; ++i) {
        if (i < zeros || rng.bernoulli(0.2)) {
            a[i] = 0.0;
        } else {
            a[i] = std::pow(10.0, rng.uniform(-3.0, 3.0));
        }
    }
    auto r = mcmahan_check(a);
    r.instance += " seed=" + std::to_string(seed);
    return r;
}

LemmaReport trial_bellman(Rng& rng, std::uint64_t seed) {
    const std::size_t n = between(rng, 1, 6);
    const std::size_t A = between(rng, 1, 4);
    const auto mdp = random_mdp(n, A, rng);
    const auto pi = random_policy(n, A, rng);
    auto r = bellman_check(mdp, pi);
    r.instance = shape("mdp", n, A, seed);
    return r;
}

LemmaReport trial_gain(std::uint64_t seed, const SuiteOptions& opts, const TabularMdp& mdp, double t_mix) {
    AgentConfig cfg = opts.live;
    cfg.record_policies = true;
    const TabularErgodicEnv env(opts.live_states, opts.live_actions);
    const RunResult run = run_experiment(cfg, env, seed);
    auto r = empirical_gain_concentration(run.rewards, run.policies, cfg.tau, mdp, opts.delta, t_mix);
    r.instance = "tabular n=" + std::to_string(opts.live_states) + " a=" + std::to_string(opts.live_actions) +
                 " agent=" + to_string(cfg.variant) + " seed=" + std::to_string(seed);
    return r;
}

std::vector<LemmaReport> live_relq(const SuiteOptions& opts) {
    AgentConfig cfg = opts.live;
    cfg.record_policies = true;
    const TabularErgodicEnv env(opts.live_states, opts.live_actions);
    const auto mdp = tabular_ergodic_mdp(opts.live_states, opts.live_actions);
    const double t_mix = mixing_time_bound(mdp, Execution::serial).t_mix_condition2;
    RunResult run = run_experiment(cfg, env, opts.seed);
    std::vector<LemmaReport> out;
    for (std::size_t k = 1; k < run.policies.size(); ++k) {
        auto r = relative_q_bound(mdp, run.policies[k - 1], run.policies[k], cfg.phases, t_mix);
        r.instance = "live tabular agent=" + to_string(cfg.variant) + " phase=" + std::to_string(k + 1) +
                     " seed=" + std::to_string(opts.seed);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::vector<LemmaReport> run_verify_suite(Suite suite, const SuiteOptions& opts) {
    const std::size_t n = opts.trials;
    std::vector<LemmaReport> out(n);

    std::optional<TabularMdp> live_mdp;
    double live_tmix = 0.0;
    if (suite == Suite::gain) {
        live_mdp.emplace(tabular_ergodic_mdp(opts.live_states, opts.live_actions));
        live_tmix = mixing_time_bound(*live_mdp, Execution::serial).t_mix_condition2;
    }

    auto one = [&](std::size_t i) {
        const std::uint64_t seed = opts.seed + i;
        Rng rng(seed);
        switch (suite) {
            case Suite::perfdiff: return trial_perfdiff(rng, seed);
            case Suite::relq: return trial_relq(rng, seed);
            case Suite::aoftrl: return trial_aoftrl(rng, seed, opts.eta);
            case Suite::linf: return trial_linf(rng, seed);
            case Suite::gain: return trial_gain(seed, opts, *live_mdp, live_tmix);
            case Suite::mcmahan: return trial_mcmahan(rng, seed);
            case Suite::bellman: return trial_bellman(rng, seed);
        }
        throw InvalidArgument("unknown suite");
    };

    std::vector<std::string> errors(n);
    if (opts.exec == Execution::parallel) {
        const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
        for (long i = 0; i < count; ++i) {
            try {
                out[static_cast<std::size_t>(i)] = one(static_cast<std::size_t>(i));
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(i)] = e.what();
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                out[i] = one(i);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i].empty()) {
            throw std::runtime_error(to_string(suite) + " trial " + std::to_string(i) + " (seed " +
                                     std::to_string(opts.seed + i) + "): " + errors[i]);
        }
    }

    if (suite == Suite::relq && opts.live_relq) {
        auto live = live_relq(opts);
        out.insert(out.end(), std::make_move_iterator(live.begin()), std::make_move_iterator(live.end()));
    }
    return out;
}

}  // namespace aapi
