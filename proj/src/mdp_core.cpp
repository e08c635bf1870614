#include "aapi/mdp_core.hpp"

#include "aapi/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

namespace aapi {

namespace {

constexpr double kRowTol = 1e-12;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_stochastic_rows(const Matrix& P, const char* what) {
    if (P.rows() != P.cols() || P.rows() == 0) {
        throw InvalidArgument(std::string(what) + ": expected a non-empty square matrix");
    }
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        if ((P.row(i).array() < 0.0).any() || !P.row(i).allFinite()) {
            throw InvalidArgument(std::string(what) + ": negative or non-finite entry");
        }
        if (std::abs(P.row(i).sum() - 1.0) > kRowTol) {
            throw InvalidArgument(std::string(what) + ": row does not sum to 1");
        }
    }
}

void check_dims(const TabularMdp& mdp, const Policy& pi) {
    if (mdp.n_states() != pi.n_states() || mdp.n_actions() != pi.n_actions()) {
        throw InvalidArgument("policy dimensions do not match the MDP");
    }
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions,
                       std::span<const double> transition, std::span<const double> reward)
    : n_states_(n_states), n_actions_(n_actions) {
    if (n_states == 0 || n_actions == 0) throw InvalidArgument("TabularMdp: empty state or action set");
    if (transition.size() != n_states * n_actions * n_states) {
        throw InvalidArgument("TabularMdp: transition tensor has the wrong size");
    }
    if (reward.size() != n_states * n_actions) throw InvalidArgument("TabularMdp: reward table has the wrong size");

    by_action_.assign(n_actions, Matrix::Zero(idx(n_states), idx(n_states)));
    reward_.resize(idx(n_states), idx(n_actions));
    for (std::size_t x = 0; x < n_states; ++x) {
        for (std::size_t a = 0; a < n_actions; ++a) {
            const double rew = reward[x * n_actions + a];
            if (!(rew >= 0.0 && rew <= 1.0)) throw InvalidArgument("TabularMdp: reward outside [0, 1]");
            reward_(idx(x), idx(a)) = rew;
            double total = 0.0;
            for (std::size_t y = 0; y < n_states; ++y) {
                const double p = transition[(x * n_actions + a) * n_states + y];
                if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("TabularMdp: negative transition probability");
                by_action_[a](idx(x), idx(y)) = p;
                total += p;
            }
            if (std::abs(total - 1.0) > kRowTol) {
                throw InvalidArgument("TabularMdp: P[x][a] does not sum to 1");
            }
        }
    }
}

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) throw InvalidArgument("Policy: empty matrix");
    for (Eigen::Index x = 0; x < probs_.rows(); ++x) {
        if ((probs_.row(x).array() < 0.0).any() || !probs_.row(x).allFinite() ||
            std::abs(probs_.row(x).sum() - 1.0) > kRowTol) {
            throw InvalidArgument("Policy: row " + std::to_string(x) + " is not on the simplex");
        }
    }
}

Policy Policy::uniform(std::size_t n_states, std::size_t n_actions) {
    return Policy(Matrix::Constant(idx(n_states), idx(n_actions), 1.0 / static_cast<double>(n_actions)));
}

Policy Policy::deterministic(std::span<const std::size_t> choice, std::size_t n_actions) {
    Matrix probs = Matrix::Zero(idx(choice.size()), idx(n_actions));
    for (std::size_t x = 0; x < choice.size(); ++x) {
        if (choice[x] >= n_actions) throw InvalidArgument("Policy::deterministic: action out of range");
        probs(idx(x), idx(choice[x])) = 1.0;
    }
    return Policy(std::move(probs));
}

double Policy::max_l1_distance(const Policy& other) const {
    if (other.probs_.rows() != probs_.rows() || other.probs_.cols() != probs_.cols()) {
        throw InvalidArgument("Policy::max_l1_distance: shape mismatch");
    }
    return (probs_ - other.probs_).cwiseAbs().rowwise().sum().maxCoeff();
}

Matrix induced_transition(const TabularMdp& mdp, const Policy& pi) {
    check_dims(mdp, pi);
    const auto n = idx(mdp.n_states());
    Matrix P = Matrix::Zero(n, n);
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        P.noalias() += pi.probs().col(idx(a)).asDiagonal() * mdp.transition(a);
    }
    return P;
}

Vector induced_reward(const TabularMdp& mdp, const Policy& pi) {
    check_dims(mdp, pi);
    return mdp.reward().cwiseProduct(pi.probs()).rowwise().sum();
}

Vector stationary_power_iteration(const Matrix& P, double tol, long max_iter) {
    check_stochastic_rows(P, "stationary_power_iteration");
    const auto n = P.rows();
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::RowVectorXd next(n);
    for (long it = 0; it < max_iter; ++it) {
        next.noalias() = mu * P;
        next /= next.sum();
        const double change = (next - mu).cwiseAbs().sum();
        mu.swap(next);
        if (change <= tol) return mu.transpose();
    }
    throw ErgodicityViolation("stationary_power_iteration: no convergence within the iteration cap");
}

Vector stationary_linear_solve(const Matrix& P) {
    check_stochastic_rows(P, "stationary_linear_solve");
    const auto n = P.rows();
    Matrix A(n + 1, n);
    A.topRows(n) = P.transpose() - Matrix::Identity(n, n);
    A.row(n).setOnes();
    Vector b = Vector::Zero(n + 1);
    b(n) = 1.0;
    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    qr.setThreshold(1e-12);
    if (qr.rank() < n) throw ErgodicityViolation("stationary_linear_solve: stationary distribution is not unique");
    Vector mu = qr.solve(b);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (mu(i) < -1e-10) throw ErgodicityViolation("stationary_linear_solve: negative stationary mass");
        mu(i) = std::max(mu(i), 0.0);
    }
    return mu / mu.sum();
}

StationaryDistribution stationary_distribution(const Matrix& P) {
    const Vector by_solve = stationary_linear_solve(P);
    const Vector by_power = stationary_power_iteration(P);
    if ((by_solve - by_power).cwiseAbs().maxCoeff() > 1e-8) {
        throw ErgodicityViolation("stationary_distribution: power iteration and linear solve disagree");
    }
    StationaryDistribution out;
    out.mu = by_solve;
    out.residual = (by_solve.transpose() * P - by_solve.transpose()).cwiseAbs().maxCoeff();
    if (out.residual > 1e-10) throw ErgodicityViolation("stationary_distribution: residual above 1e-10");
    return out;
}

double average_reward(const TabularMdp& mdp, const Policy& pi) {
    const Matrix P = induced_transition(mdp, pi);
    const auto stat = stationary_distribution(P);
    return stat.mu.dot(induced_reward(mdp, pi));
}

QTable solve_q(const TabularMdp& mdp, const Policy& pi) {
    const Matrix P = induced_transition(mdp, pi);
    const Vector r_pi = induced_reward(mdp, pi);
    const Vector mu = stationary_distribution(P).mu;
    const auto n = P.rows();

    // [ I - P   1 ] [v]   [r_pi]
    // [ mu^T    0 ] [g] = [ 0  ]
    Matrix A = Matrix::Zero(n + 1, n + 1);
    A.topLeftCorner(n, n) = Matrix::Identity(n, n) - P;
    A.topRightCorner(n, 1).setOnes();
    A.bottomLeftCorner(1, n) = mu.transpose();
    Vector b = Vector::Zero(n + 1);
    b.head(n) = r_pi;

    Eigen::FullPivLU<Matrix> lu(A);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw ErgodicityViolation("solve_q: Bellman system is singular");
    const Vector sol = lu.solve(b);

    QTable out;
    out.v = sol.head(n);
    out.gain = sol(n);
    out.q.resize(n, idx(mdp.n_actions()));
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        out.q.col(idx(a)) = mdp.reward().col(idx(a)).array() - out.gain + (mdp.transition(a) * out.v).array();
    }
    return out;
}

double bellman_residual(const TabularMdp& mdp, const Policy& pi, const QTable& table) {
    check_dims(mdp, pi);
    double worst = 0.0;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        const Vector rhs = mdp.reward().col(idx(a)).array() - table.gain + (mdp.transition(a) * table.v).array();
        worst = std::max(worst, (table.q.col(idx(a)) - rhs).cwiseAbs().maxCoeff());
    }
    const Vector v_from_q = table.q.cwiseProduct(pi.probs()).rowwise().sum();
    return std::max(worst, (v_from_q - table.v).cwiseAbs().maxCoeff());
}

double dobrushin_coefficient(const Matrix& P) {
    check_stochastic_rows(P, "dobrushin_coefficient");
    double beta = 0.0;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < P.rows(); ++j) {
            beta = std::max(beta, 0.5 * (P.row(i) - P.row(j)).cwiseAbs().sum());
        }
    }
    return std::min(beta, 1.0);
}

int mixing_steps_to_quarter(const Matrix& P, const Vector& mu, int max_steps) {
    Matrix power = P;
    const Eigen::RowVectorXd target = mu.transpose();
    for (int t = 1; t <= max_steps; ++t) {
        double worst = 0.0;
        for (Eigen::Index x = 0; x < power.rows(); ++x) {
            worst = std::max(worst, (power.row(x) - target).cwiseAbs().sum());
        }
        if (worst <= 0.25) return t;
        power = power * P;
    }
    throw ErgodicityViolation("mixing_steps_to_quarter: chain does not mix within the step cap");
}

std::size_t deterministic_policy_count(const TabularMdp& mdp, std::size_t cap) {
    std::size_t count = 1;
    for (std::size_t x = 0; x < mdp.n_states(); ++x) {
        if (count > cap / mdp.n_actions()) return 0;
        count *= mdp.n_actions();
    }
    return count <= cap ? count : 0;
}

std::vector<std::size_t> decode_deterministic(std::size_t code, std::size_t n_states, std::size_t n_actions) {
    std::vector<std::size_t> choice(n_states);
    for (std::size_t x = 0; x < n_states; ++x) {
        choice[x] = code % n_actions;
        code /= n_actions;
    }
    return choice;
}

MixingInfo mixing_time_bound(const TabularMdp& mdp, Execution exec) {
    const std::size_t count = deterministic_policy_count(mdp);
    if (count == 0) throw TooLarge("mixing_time_bound: more than 1e6 deterministic policies");

    MixingInfo info;
    info.per_policy_beta.assign(count, 0.0);
    std::vector<int> steps(count, 1);
    std::atomic<bool> failed{false};

    auto one = [&](std::size_t code) {
        const auto choice = decode_deterministic(code, mdp.n_states(), mdp.n_actions());
        const Matrix P = induced_transition(mdp, Policy::deterministic(choice, mdp.n_actions()));
        info.per_policy_beta[code] = dobrushin_coefficient(P);
        if (info.per_policy_beta[code] >= 1.0) {
            failed = true;
            return;
        }
        const Vector mu = stationary_distribution(P).mu;
        steps[code] = mixing_steps_to_quarter(P, mu);
    };

    if (exec == Execution::parallel) {
        const auto n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic, 16)
        for (long code = 0; code < n; ++code) {
            if (failed) continue;
            try {
                one(static_cast<std::size_t>(code));
            } catch (...) {
                failed = true;
            }
        }
    } else {
        for (std::size_t code = 0; code < count && !failed; ++code) {
            try {
                one(code);
            } catch (...) {
                failed = true;
            }
        }
    }
    if (failed) throw ErgodicityViolation("mixing_time_bound: some deterministic policy is not uniformly mixing");

    info.beta = *std::max_element(info.per_policy_beta.begin(), info.per_policy_beta.end());
    info.t_mix_condition2 = info.beta > 0.0 ? -1.0 / std::log(info.beta) : 0.0;
    info.t_mix_def1 = *std::max_element(steps.begin(), steps.end());
    return info;
}

}  // namespace aapi
