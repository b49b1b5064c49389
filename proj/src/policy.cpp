#include "proxops/policy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace proxops {

using nlohmann::json;

void BaselineGains::validate() const {
    if (!(kp > 0.0) || !(kv > 0.0)) throw std::invalid_argument("baseline gains must be positive");
    if (!(speed_cap > 0.0)) throw std::invalid_argument("speed cap must be positive");
    if (!(speed_limit_gain > 0.0)) throw std::invalid_argument("speed limit gain must be positive");
}

Vec3 baseline_act(const Observation& obs, const BaselineGains& g) {
    const Vec3 delta = obs.scaled_delta * kObservationScale;
    const double d = delta.norm();
    Vec3 v_cmd = -(g.kp / g.kv) * delta;
    const double cap = std::min(g.speed_cap, g.speed_limit_gain * d);
    const double speed = v_cmd.norm();
    if (speed > cap) v_cmd *= cap / speed;
    return clamp_action(g.kv * (v_cmd - obs.vel));
}

MlpPolicy MlpPolicy::make(std::mt19937_64& rng, std::vector<int> hidden) {
    std::vector<int> dims{6};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(3);
    MlpPolicy p;
    p.net = Mlp::random(dims, rng, 0.01);
    return p;
}

MlpPolicy MlpPolicy::zeros(std::vector<int> hidden) {
    std::vector<int> dims{6};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(3);
    MlpPolicy p;
    p.net = Mlp(dims);
    return p;
}

void MlpPolicy::validate() const {
    if (net.layer_dims().size() < 2 || net.input_dim() != 6 || net.output_dim() != 3)
        throw std::invalid_argument("policy network must map 6 inputs to 3 outputs");
    if (!log_std.allFinite()) throw std::invalid_argument("non-finite log_std");
}

Vec3 policy_mean(const MlpPolicy& policy, const Observation& obs) {
    const Eigen::VectorXd x = obs.as_vector();
    return policy.net.forward(x);
}

Vec3 policy_act(const MlpPolicy& policy, const Observation& obs, ActMode mode,
                std::mt19937_64* rng) {
    Vec3 pre = policy_mean(policy, obs);
    if (mode == ActMode::Stochastic) {
        if (!rng) throw std::invalid_argument("stochastic actions need an RNG");
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int k = 0; k < 3; ++k) pre(k) += std::exp(policy.log_std(k)) * gauss(*rng);
    }
    return pre.array().tanh();
}

Vec3 policy_act(const MlpPolicy& policy, const Eigen::VectorXd& obs, ActMode mode,
                std::mt19937_64* rng) {
    if (obs.size() != 6) throw std::invalid_argument("observation must have 6 entries");
    Observation o{obs.head<3>(), obs.tail<3>()};
    return policy_act(policy, o, mode, rng);
}

namespace {

json net_to_json(const Mlp& net) {
    json j;
    j["layer_dims"] = net.layer_dims();
    json layers = json::array();
    for (int l = 0; l < net.num_layers(); ++l) {
        const auto& W = net.weights(l);
        std::vector<double> w;
        w.reserve(static_cast<size_t>(W.size()));
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) w.push_back(W(r, c));
        const auto& b = net.bias(l);
        layers.push_back({{"weights", w}, {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
    }
    j["layers"] = layers;
    return j;
}

Mlp net_from_json(const json& j) {
    const auto dims = j.at("layer_dims").get<std::vector<int>>();
    Mlp net(dims);
    const auto& layers = j.at("layers");
    if (!layers.is_array() || static_cast<int>(layers.size()) != net.num_layers())
        throw ParseError("policy file: layer count does not match layer_dims");
    for (int l = 0; l < net.num_layers(); ++l) {
        const auto w = layers[static_cast<size_t>(l)].at("weights").get<std::vector<double>>();
        const auto b = layers[static_cast<size_t>(l)].at("bias").get<std::vector<double>>();
        auto& W = net.weights(l);
        if (static_cast<Eigen::Index>(w.size()) != W.size() ||
            static_cast<Eigen::Index>(b.size()) != net.bias(l).size())
            throw ParseError("policy file: layer " + std::to_string(l) + " has the wrong size");
        size_t k = 0;
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = w[k++];
        for (size_t i = 0; i < b.size(); ++i) net.bias(l)(static_cast<Eigen::Index>(i)) = b[i];
    }
    return net;
}

}  // namespace

void save_policy(const std::filesystem::path& path, const MlpPolicy& policy, const Mlp* value) {
    policy.validate();
    json j;
    j["format"] = "proxops-policy";
    j["version"] = kPolicyFormatVersion;
    j["hidden_activation"] = "tanh";
    j["output_squash"] = "tanh";
    j["log_std"] = std::vector<double>{policy.log_std(0), policy.log_std(1), policy.log_std(2)};
    const json net = net_to_json(policy.net);
    j["layer_dims"] = net["layer_dims"];
    j["layers"] = net["layers"];
    if (value) j["value"] = net_to_json(*value);

    // Write then rename so readers never observe a half-written file.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << j.dump(1) << '\n';
        if (!out) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

PolicyFile load_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open policy file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw ParseError("policy file " + path.string() + ": " + e.what());
    }
    try {
        if (j.value("format", std::string{}) != "proxops-policy")
            throw ParseError("policy file " + path.string() + ": not a proxops policy");
        const int version = j.at("version").get<int>();
        if (version != kPolicyFormatVersion)
            throw UnsupportedVersionError("policy file " + path.string() + ": unsupported version " +
                                          std::to_string(version));
        PolicyFile out;
        out.policy.net = net_from_json(j);
        const auto ls = j.at("log_std").get<std::vector<double>>();
        if (ls.size() != 3) throw ParseError("policy file: log_std must have 3 entries");
        out.policy.log_std = Vec3(ls[0], ls[1], ls[2]);
        out.policy.validate();
        if (j.contains("value")) out.value = net_from_json(j.at("value"));
        return out;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError("policy file " + path.string() + ": " + e.what());
    }
}

}  // namespace proxops
