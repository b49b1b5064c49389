#pragma once

#include <filesystem>
#include <optional>
#include <random>

#include "proxops/mlp.hpp"
#include "proxops/waypoint_env.hpp"

namespace proxops {

/// Gains of the analytic proportional-derivative waypoint controller.
/// Gains are in action units per metre (kp) and per m/s (kv).
struct BaselineGains {
    double kp = 4e-3;                 // 1/s^2
    double kv = 0.12;                 // 1/s
    double speed_cap = 5.0;           // m/s, absolute commanded-speed ceiling
    double speed_limit_gain = 0.308;  // 1/s, eta * sigma_mu of the reward's variable speed limit

    void validate() const;
};

/// PD command toward the goal: the commanded velocity -(kp/kv) * delta is
/// capped at min(speed_cap, speed_limit_gain * d) and tracked with gain kv.
Vec3 baseline_act(const Observation& obs, const BaselineGains& gains = {});

enum class ActMode { Deterministic, Stochastic };

/// Gaussian policy squashed through tanh. The network outputs the pre-squash mean.
struct MlpPolicy {
    Mlp net;
    Vec3 log_std = Vec3::Constant(-0.5);

    static MlpPolicy make(std::mt19937_64& rng, std::vector<int> hidden = {64, 64});
    /// Zero weights and biases; acts as the zero controller.
    static MlpPolicy zeros(std::vector<int> hidden = {64, 64});

    void validate() const;
};

/// Pre-squash mean for one observation.
Vec3 policy_mean(const MlpPolicy& policy, const Observation& obs);

/// Deterministic: tanh(mean). Stochastic: tanh(mean + exp(log_std) * N(0, I)).
Vec3 policy_act(const MlpPolicy& policy, const Observation& obs, ActMode mode,
                std::mt19937_64* rng = nullptr);

/// Raw-vector overload; throws std::invalid_argument unless obs has 6 entries.
Vec3 policy_act(const MlpPolicy& policy, const Eigen::VectorXd& obs, ActMode mode,
                std::mt19937_64* rng = nullptr);

class UnsupportedVersionError : public ParseError {
public:
    using ParseError::ParseError;
};

inline constexpr int kPolicyFormatVersion = 1;

struct PolicyFile {
    MlpPolicy policy;
    std::optional<Mlp> value;  // critic, present when written by the trainer
};

void save_policy(const std::filesystem::path& path, const MlpPolicy& policy,
                 const Mlp* value = nullptr);
/// Throws ParseError (or UnsupportedVersionError) on malformed files.
PolicyFile load_policy(const std::filesystem::path& path);

}  // namespace proxops
