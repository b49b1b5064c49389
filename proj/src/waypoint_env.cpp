#include "proxops/waypoint_env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace proxops {

void WaypointTask::validate() const {
    if (!(acceptance_radius > 0.0)) throw std::invalid_argument("acceptance radius must be positive");
    if (!(timeout > 0.0)) throw std::invalid_argument("timeout must be positive");
}

Eigen::Matrix<double, 6, 1> Observation::as_vector() const {
    Eigen::Matrix<double, 6, 1> v;
    v << scaled_delta, vel;
    return v;
}

void RewardParams::validate() const {
    for (double v : {alpha, beta, nu, sigma_mu, eta})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("reward coefficients must be finite and non-negative");
}

int EpisodeConfig::substeps() const {
    return std::max(1, static_cast<int>(std::ceil(dt / sim_dt - 1e-9)));
}

void EpisodeConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(sim_dt > 0.0) || sim_dt > dt) throw std::invalid_argument("sim_dt must be in (0, dt]");
    if (!(timeout > 0.0)) throw std::invalid_argument("timeout must be positive");
    if (!(acceptance_radius > 0.0)) throw std::invalid_argument("acceptance radius must be positive");
    const Vec3 extent = sample_half_extent * scale_vector.cwiseAbs();
    if ((bounds.array() <= extent.array()).any())
        throw std::invalid_argument("bounds must exceed the scaled sampling extent on every axis");
    reward.validate();
}

std::string_view to_string(EpisodeStatus s) {
    switch (s) {
        case EpisodeStatus::Running: return "running";
        case EpisodeStatus::Reached: return "reached";
        case EpisodeStatus::OutOfBounds: return "out_of_bounds";
        case EpisodeStatus::Timeout: return "timeout";
    }
    return "unknown";
}

EpisodeStart episode_from_draws(const Vec3& x, const Vec3& y, const EpisodeConfig& cfg) {
    EpisodeStart s;
    s.initial.pos = cfg.scale_vector.cwiseProduct(x);
    s.initial.vel = Vec3::Zero();
    s.goal = cfg.scale_vector.cwiseProduct(y);
    return s;
}

EpisodeStart sample_episode(std::mt19937_64& rng, const EpisodeConfig& cfg) {
    std::uniform_real_distribution<double> u(-cfg.sample_half_extent, cfg.sample_half_extent);
    Vec3 x, y;
    for (int k = 0; k < 3; ++k) x(k) = u(rng);
    for (int k = 0; k < 3; ++k) y(k) = u(rng);
    return episode_from_draws(x, y, cfg);
}

Observation observe(const RelativeState& state, const Vec3& goal) {
    return {(state.pos - goal) / kObservationScale, state.vel};
}

double reward(const Vec3& cur, const Vec3& prev, const Vec3& vel, const Vec3& goal,
              const RewardParams& p) {
    const double d = (cur - goal).norm();
    const double d_prev = (prev - goal).norm();
    double r = p.alpha / (d + 1.0) + p.beta * (d_prev - d);
    if (vel.norm() > p.speed_limit(d)) r -= p.nu * vel.lpNorm<1>();
    return r;
}

Vec3 clamp_action(const Vec3& action) { return action.cwiseMax(-1.0).cwiseMin(1.0); }

StepOutcome step(const RelativeState& state, const Vec3& action, const WaypointTask& task,
                 const EpisodeConfig& cfg, const ChiefOrbit& orbit, const VehicleParams& veh,
                 double elapsed) {
    if (!(elapsed >= 0.0)) throw std::invalid_argument("elapsed time must be non-negative");
    StepOutcome out;
    out.thrust = veh.thrust_bound * clamp_action(action);
    out.next_state = propagate_cwh(state, out.thrust, cfg.dt, cfg.substeps(), orbit, veh);
    out.obs = observe(out.next_state, task.goal);
    out.reward = reward(out.next_state.pos, state.pos, out.next_state.vel, task.goal, cfg.reward);

    const double dist = (out.next_state.pos - task.goal).norm();
    if (dist < task.acceptance_radius)
        out.status = EpisodeStatus::Reached;
    else if ((out.next_state.pos.cwiseAbs().array() > cfg.bounds.array()).any())
        out.status = EpisodeStatus::OutOfBounds;
    else if (elapsed + cfg.dt >= task.timeout)
        out.status = EpisodeStatus::Timeout;
    return out;
}

}  // namespace proxops
