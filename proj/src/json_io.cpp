#include "aapi/json_io.hpp"

#include "aapi/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace aapi {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed JSON: ") + e.what());
    }
}

template <typename T>
T get(const json& j, const char* key) {
    if (!j.contains(key)) throw InvalidArgument(std::string("missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("bad value for '") + key + "': " + e.what());
    }
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

TabularMdp mdp_from_json(const std::string& text) {
    const json j = parse(text);
    const auto n = get<std::size_t>(j, "n_states");
    const auto A = get<std::size_t>(j, "n_actions");
    const auto P = get<std::vector<std::vector<std::vector<double>>>>(j, "transition");
    const auto r = get<std::vector<std::vector<double>>>(j, "reward");
    if (P.size() != n || r.size() != n) throw InvalidArgument("mdp: state dimension mismatch");
    std::vector<double> flat_p;
    std::vector<double> flat_r;
    flat_p.reserve(n * A * n);
    for (std::size_t x = 0; x < n; ++x) {
        if (P[x].size() != A || r[x].size() != A) throw InvalidArgument("mdp: action dimension mismatch");
        for (std::size_t a = 0; a < A; ++a) {
            if (P[x][a].size() != n) throw InvalidArgument("mdp: next-state dimension mismatch");
            flat_p.insert(flat_p.end(), P[x][a].begin(), P[x][a].end());
            flat_r.push_back(r[x][a]);
        }
    }
    return TabularMdp(n, A, flat_p, flat_r);
}

std::string mdp_to_json(const TabularMdp& mdp) {
    json j;
    j["n_states"] = mdp.n_states();
    j["n_actions"] = mdp.n_actions();
    json P = json::array();
    for (std::size_t x = 0; x < mdp.n_states(); ++x) {
        json per_action = json::array();
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            json row = json::array();
            for (std::size_t y = 0; y < mdp.n_states(); ++y) row.push_back(mdp.p(x, a, y));
            per_action.push_back(std::move(row));
        }
        P.push_back(std::move(per_action));
    }
    j["transition"] = std::move(P);
    j["reward"] = matrix_json(mdp.reward());
    return j.dump();
}

TabularMdp load_mdp(const std::string& path) {
    return mdp_from_json(read_file(path));
}

Policy policy_from_json(const std::string& text) {
    const json j = parse(text);
    std::vector<std::vector<double>> rows;
    try {
        rows = (j.is_object() ? j.at("probs") : j).get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("policy: ") + e.what());
    }
    if (rows.empty() || rows.front().empty()) throw InvalidArgument("policy: empty table");
    Matrix probs(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t x = 0; x < rows.size(); ++x) {
        if (rows[x].size() != rows.front().size()) throw InvalidArgument("policy: ragged table");
        for (std::size_t a = 0; a < rows[x].size(); ++a) probs(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a)) = rows[x][a];
    }
    return Policy(std::move(probs));
}

std::string policy_to_json(const Policy& pi) {
    json j;
    j["probs"] = matrix_json(pi.probs());
    return j.dump();
}

Policy load_policy(const std::string& path) {
    return policy_from_json(read_file(path));
}

std::string qtable_to_json(const QTable& table) {
    nlohmann::ordered_json j;
    j["gain"] = table.gain;
    j["v"] = std::vector<double>(table.v.data(), table.v.data() + table.v.size());
    j["q"] = matrix_json(table.q);
    return j.dump();
}

void apply_config_json(const std::string& text, ExperimentConfig& cfg) {
    const json j = parse(text);
    if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
    std::string env_name;
    std::size_t env_size = 0;
    std::size_t actions = 0;
    bool env_touched = false;
    auto& a = cfg.agent;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "env") env_name = v.get<std::string>(), env_touched = true;
            else if (key == "env_size") env_size = v.get<std::size_t>(), env_touched = true;
            else if (key == "actions") actions = v.get<std::size_t>(), env_touched = true;
            else if (key == "agent") a.variant = parse_variant(v.get<std::string>());
            else if (key == "tau") a.tau = v.get<std::size_t>();
            else if (key == "phases") a.phases = v.get<std::size_t>();
            else if (key == "eta") a.eta = v.get<double>();
            else if (key == "eta_floor") a.eta_floor = v.get<double>();
            else if (key == "runs") cfg.runs = v.get<std::size_t>();
            else if (key == "seed") cfg.base_seed = v.get<std::uint64_t>();
            else if (key == "stride") cfg.stride = v.get<std::size_t>();
            else if (key == "out") cfg.out = v.get<std::string>();
            else if (key == "threads") cfg.threads = v.get<int>();
            else if (key == "horizon") a.horizon = v.get<std::size_t>();
            else if (key == "ridge") a.ridge = v.get<double>();
            else if (key == "n_max") a.n_max = v.get<std::size_t>();
            else if (key == "t_mix_guess") a.t_mix_guess = v.get<double>();
            else if (key == "t_mix_estimate") a.t_mix_estimate = v.get<double>();
            else if (key == "exact_q") a.exact_q = v.get<bool>();
            else if (key == "use_all_phases") a.use_all_phases = v.get<bool>();
            else if (key == "eval") {
                for (const auto& [k2, v2] : v.items()) {
                    if (k2 == "use_all_phases") a.use_all_phases = v2.get<bool>();
                    else throw InvalidArgument("config: unknown key 'eval." + k2 + "'");
                }
            } else if (key == "rlsvi") {
                auto& r = a.rlsvi;
                for (const auto& [k2, v2] : v.items()) {
                    if (k2 == "sigma2") r.sigma2 = v2.get<double>();
                    else if (k2 == "prior_lambda") r.prior_lambda = v2.get<double>();
                    else if (k2 == "horizon") r.horizon = v2.get<std::size_t>();
                    else if (k2 == "update_every") r.update_every = v2.get<std::size_t>();
                    else if (k2 == "discount") r.discount = v2.get<double>();
                    else if (k2 == "window") r.window = v2.get<std::size_t>();
                    else if (k2 == "sample") r.sample = v2.get<bool>();
                    else if (k2 == "mode") {
                        const auto m = v2.get<std::string>();
                        if (m == "auto") r.mode = RlsviMode::automatic;
                        else if (m == "episodic") r.mode = RlsviMode::episodic;
                        else if (m == "continuing") r.mode = RlsviMode::continuing;
                        else throw InvalidArgument("config: unknown rlsvi.mode '" + m + "'");
                    } else {
                        throw InvalidArgument("config: unknown key 'rlsvi." + k2 + "'");
                    }
                }
            } else {
                throw InvalidArgument("config: unknown key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    if (env_touched) {
        const EnvKind kind = env_name.empty() ? cfg.env.kind : parse_env_kind(env_name);
        const std::size_t size = env_size > 0 ? env_size : cfg.env.size;
        switch (kind) {
            case EnvKind::tabular: cfg.env = EnvSpec::tabular(size, actions > 0 ? actions : cfg.env.n_actions); break;
            case EnvKind::deepsea: cfg.env = EnvSpec::deepsea(size); break;
            case EnvKind::cartpole: cfg.env = EnvSpec::cartpole(); break;
        }
    }
}

}  // namespace aapi
