#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "proxops/policy.hpp"

namespace proxops {

struct TrainerConfig {
    long total_steps = 1'000'000;
    int batch_size = 4096;      // environment steps per iteration
    int minibatch_size = 256;
    int num_envs = 8;           // environments stepped round-robin
    double learning_rate = 3e-4;
    double discount = 0.99;
    double gae_lambda = 0.95;
    double clip_ratio = 0.2;
    int epochs_per_batch = 10;
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;
    std::uint64_t seed = 0;
    std::vector<int> hidden{64, 64};

    void validate() const;
};

struct CurvePoint {
    int iteration = 0;
    long env_steps = 0;          // cumulative
    int episodes = 0;            // episodes finished during this iteration
    double mean_return = 0.0;    // over finished episodes (NaN if none)
    double success_rate = 0.0;   // fraction of finished episodes that reached the goal
    double policy_loss = 0.0;
    double value_loss = 0.0;
};

struct TrainResult {
    MlpPolicy policy;
    Mlp value;
    std::vector<CurvePoint> curve;
};

class TrainingDivergedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Samples for the clipped-surrogate objective; one sample per column.
struct PolicyBatch {
    Eigen::MatrixXd obs;          // 6 x N
    Eigen::MatrixXd pre_actions;  // 3 x N, pre-squash Gaussian samples
    Eigen::VectorXd old_logp;     // N
    Eigen::VectorXd advantages;   // N
};

struct SurrogateGrad {
    double loss = 0.0;
    Eigen::VectorXd grad_net;  // flat, same layout as Mlp::params()
    Vec3 grad_log_std = Vec3::Zero();
};

/// Diagonal-Gaussian log-density of pre-squash actions under the policy.
Eigen::VectorXd gaussian_logp(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& pre_actions,
                              const Vec3& log_std);

/// Negated clipped surrogate (minus the entropy bonus) and its analytic gradient.
SurrogateGrad clipped_surrogate(const MlpPolicy& policy, const PolicyBatch& batch,
                                double clip_ratio, double entropy_coef = 0.0);

struct EvalResult {
    int episodes = 0;
    double success_rate = 0.0;
    double mean_return = 0.0;
    double mean_time = 0.0;
};

/// Deterministic-policy evaluation on freshly sampled training episodes.
EvalResult evaluate_policy(const MlpPolicy& policy, const EpisodeConfig& env,
                           const ChiefOrbit& orbit, const VehicleParams& veh, int episodes,
                           std::uint64_t seed);

using TrainProgress = std::function<void(const CurvePoint&)>;

/// Clipped-surrogate policy gradient with GAE. Deterministic for a given seed.
/// `resume`, when given, provides the initial actor (and critic if stored).
TrainResult train(const EpisodeConfig& env, const TrainerConfig& cfg, const ChiefOrbit& orbit,
                  const VehicleParams& veh, const PolicyFile* resume = nullptr,
                  const TrainProgress& progress = {});

}  // namespace proxops
