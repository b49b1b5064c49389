#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "proxops/cbf_rta.hpp"
#include "proxops/policy.hpp"

namespace proxops {

enum class ControllerKind { Baseline, Policy };

struct ControllerChoice {
    ControllerKind kind = ControllerKind::Baseline;
    std::string policy_path;  // Policy only
    BaselineGains gains;      // Baseline only

    static ControllerChoice baseline(const BaselineGains& g = {}) { return {ControllerKind::Baseline, {}, g}; }
    static ControllerChoice policy(std::string path) { return {ControllerKind::Policy, std::move(path), {}}; }
    std::string str() const;
};

/// Maps an observation to a normalized action in [-1, 1]^3.
using Controller = std::function<Vec3(const Observation&)>;

/// Resolves a choice into a callable; loads the policy file when needed.
Controller make_controller(const ControllerChoice& choice);

enum class Plant { Cwh, Nonlinear };

std::string_view to_string(Plant p);

struct AgentSpec {
    RelativeState initial;
    std::vector<Vec3> waypoints;
    ControllerChoice controller;
};

struct ScenarioSpec {
    std::string name = "custom";
    std::vector<AgentSpec> agents;
    bool rta_enabled = false;
    double control_dt = 1.0;          // s
    double sim_dt = 0.1;              // s
    double acceptance_radius = 15.0;  // m
    double leg_timeout = 500.0;       // s
    std::uint64_t seed = 0;
    Plant plant = Plant::Cwh;
    ChiefOrbit orbit = ChiefOrbit::circular();
    VehicleParams veh;
    rta::RtaParams rta;

    int substeps() const;
    void validate() const;
};

/// One agent from (-200,0,0) making two back-and-forth passes along x.
ScenarioSpec single_agent_passes();

/// Two agents on orthogonal crossing paths through the chief.
ScenarioSpec three_agent_standoff(bool rta);

/// The same scenario restricted to a single agent (for no-interaction checks).
ScenarioSpec solo(const ScenarioSpec& spec, int agent_index);

/// Sum of straight-line leg lengths over all agents.
double straight_line_length(const ScenarioSpec& spec);

struct LogRecord {
    double t = 0.0;
    int agent = 1;  // 1-based; 0 is the chief
    RelativeState state;
    Vec3 desired = Vec3::Zero();  // N
    Vec3 applied = Vec3::Zero();  // N
    bool rta_active = false;
    double slack_pos = 0.0;
    double slack_vel = 0.0;
    double slack_acc = 0.0;
    Vec3 slack_u = Vec3::Zero();
    double dist_goal = 0.0;
};

/// Distances between every pair of bodies (chief included) at one tick.
struct PairSample {
    double t = 0.0;
    std::vector<double> dist;  // ordered as TrajectoryLog::pairs
};

enum class Termination { Completed, LegTimeout, NumericalFailure };

std::string_view to_string(Termination t);

struct TrajectoryLog {
    std::vector<LogRecord> records;  // time-ordered, agents ascending within a tick
    std::vector<std::pair<int, int>> pairs;
    std::vector<PairSample> pair_series;
    int num_agents = 0;
    double control_dt = 1.0;
    std::vector<double> masses;
    std::vector<int> targets_reached;
    std::vector<int> targets_assigned;
    std::vector<double> leg_times;  // durations of completed legs, all agents
    Termination termination = Termination::Completed;
    std::string message;

    /// Records of one agent, in time order.
    std::vector<LogRecord> agent_records(int agent) const;
};

struct AgentMetrics {
    int targets_reached = 0;
    int targets_assigned = 0;
    double time_taken = 0.0;          // s
    double distance_traveled = 0.0;   // m
    double delta_v = 0.0;             // m/s
};

struct MetricsReport {
    std::vector<AgentMetrics> agents;
    AgentMetrics total;  // counts, distance and delta-v summed; time is the mission time
    double time_taken_sum = 0.0;
    double min_pair_distance = 0.0;
    double max_speed_after = 0.0;  // max logged speed after the settling window
    Termination termination = Termination::Completed;
};

struct RunResult {
    MetricsReport metrics;
    TrajectoryLog log;
};

RunResult run(const ScenarioSpec& spec);

/// Speeds logged before `settle_time` are excluded from max_speed_after.
MetricsReport compute_metrics(const TrajectoryLog& log, double settle_time = 30.0);

struct Crossing {
    int a = 0;
    int b = 0;
    double t = 0.0;
    double distance = 0.0;
};

/// Local minima of each pairwise distance series; a flat bottom is reported
/// at its first sample. Endpoints never count.
std::vector<Crossing> find_crossings(const TrajectoryLog& log);

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log);
void write_plot_data_csv(std::ostream& out, const TrajectoryLog& log);
void write_crossings_csv(std::ostream& out, const std::vector<Crossing>& crossings);
std::string metrics_json(const MetricsReport& m, int indent = 2);

struct EpisodeResult {
    EpisodeStatus status = EpisodeStatus::Running;
    double time = 0.0;
    double distance = 0.0;
    double straight_line = 0.0;
    double total_return = 0.0;
};

/// Runs one training-style episode to termination.
EpisodeResult run_episode(const EpisodeStart& start, const Controller& controller,
                          const EpisodeConfig& env, const ChiefOrbit& orbit,
                          const VehicleParams& veh);

struct BaselineStats {
    int trials = 0;
    int successes = 0;
    double success_rate = 0.0;
    double mean_time = 0.0, sd_time = 0.0;
    double mean_distance = 0.0, sd_distance = 0.0;
    double mean_straight = 0.0;
    double excess_pct = 0.0;  // (mean_distance - mean_straight) / mean_straight * 100
};

/// Sampled single-waypoint episodes. Episodes are drawn sequentially from
/// `seed`, then run on up to `workers` threads, so results do not depend on
/// the worker count.
BaselineStats baseline_stats(int n_trials, std::uint64_t seed, const ControllerChoice& controller,
                             const EpisodeConfig& env = {}, const ChiefOrbit& orbit = ChiefOrbit::circular(),
                             const VehicleParams& veh = {}, int workers = 0);

std::string baseline_stats_json(const BaselineStats& s, int indent = 2);
std::string baseline_stats_table(const BaselineStats& s);

}  // namespace proxops
