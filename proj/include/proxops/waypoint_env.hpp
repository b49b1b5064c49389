#pragma once

#include <random>
#include <string_view>
#include <utility>

#include "proxops/dynamics.hpp"

namespace proxops {

inline constexpr double kObservationScale = 1000.0;  // m

struct WaypointTask {
    Vec3 goal = Vec3::Zero();
    double acceptance_radius = 10.0;  // m
    double timeout = 500.0;           // s

    void validate() const;
};

struct Observation {
    Vec3 scaled_delta = Vec3::Zero();  // (r - r_goal) / 1000
    Vec3 vel = Vec3::Zero();           // m/s

    Eigen::Matrix<double, 6, 1> as_vector() const;
};

/// Shaped-reward coefficients. Defaults are the reported training values;
/// eta is a free scale on the variable speed limit.
struct RewardParams {
    double alpha = 1e-3;
    double beta = 1e-2;
    double nu = 1e-2;
    double sigma_mu = 0.308;  // 1/s
    double eta = 1.0;

    /// Speed above which the velocity penalty applies at distance `d`.
    double speed_limit(double d) const { return eta * sigma_mu * d; }
    void validate() const;
};

struct EpisodeConfig {
    double dt = 1.0;                            // s, control step
    double sim_dt = 0.1;                        // s, RK4 substep
    double timeout = 500.0;                     // s
    double acceptance_radius = 10.0;            // m
    Vec3 scale_vector = Vec3(1.17, 2.5, 1.0);
    double sample_half_extent = 240.0;          // m
    Vec3 bounds = Vec3(561.6, 1200.0, 480.0);   // m, per-axis out-of-bounds limit
    RewardParams reward;

    int substeps() const;
    WaypointTask task_for(const Vec3& goal) const { return {goal, acceptance_radius, timeout}; }
    void validate() const;
};

enum class EpisodeStatus { Running, Reached, OutOfBounds, Timeout };

std::string_view to_string(EpisodeStatus s);

struct StepOutcome {
    RelativeState next_state;
    Observation obs;
    double reward = 0.0;
    EpisodeStatus status = EpisodeStatus::Running;
    Vec3 thrust = Vec3::Zero();  // N, applied over the step
};

struct EpisodeStart {
    RelativeState initial;  // zero velocity
    Vec3 goal = Vec3::Zero();
};

/// Maps uniform draws x, y in [-half_extent, half_extent]^3 to a start and goal.
EpisodeStart episode_from_draws(const Vec3& x, const Vec3& y, const EpisodeConfig& cfg);

EpisodeStart sample_episode(std::mt19937_64& rng, const EpisodeConfig& cfg);

Observation observe(const RelativeState& state, const Vec3& goal);

double reward(const Vec3& cur, const Vec3& prev, const Vec3& vel, const Vec3& goal,
              const RewardParams& p);

/// Clamps the action to [-1, 1]^3.
Vec3 clamp_action(const Vec3& action);

/// One control step: thrust = f_c * clamp(action) held for cfg.dt.
/// Status precedence: Reached > OutOfBounds > Timeout > Running.
StepOutcome step(const RelativeState& state, const Vec3& action, const WaypointTask& task,
                 const EpisodeConfig& cfg, const ChiefOrbit& orbit, const VehicleParams& veh,
                 double elapsed);

}  // namespace proxops
