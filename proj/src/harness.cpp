#include "proxops/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace proxops {

using nlohmann::json;

std::string ControllerChoice::str() const {
    return kind == ControllerKind::Baseline ? std::string("baseline") : "policy:" + policy_path;
}

Controller make_controller(const ControllerChoice& choice) {
    if (choice.kind == ControllerKind::Baseline) {
        choice.gains.validate();
        const BaselineGains g = choice.gains;
        return [g](const Observation& o) { return baseline_act(o, g); };
    }
    const MlpPolicy policy = load_policy(choice.policy_path).policy;
    return [policy](const Observation& o) { return policy_act(policy, o, ActMode::Deterministic); };
}

std::string_view to_string(Plant p) { return p == Plant::Cwh ? "cwh" : "nonlinear"; }

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::Completed: return "completed";
        case Termination::LegTimeout: return "leg_timeout";
        case Termination::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

int ScenarioSpec::substeps() const {
    return std::max(1, static_cast<int>(std::ceil(control_dt / sim_dt - 1e-9)));
}

void ScenarioSpec::validate() const {
    if (agents.empty()) throw std::invalid_argument("scenario has no agents");
    for (const auto& a : agents) {
        if (a.waypoints.empty()) throw std::invalid_argument("every agent needs at least one waypoint");
        if (!a.initial.finite()) throw std::invalid_argument("non-finite initial state");
        for (const auto& w : a.waypoints)
            if (!w.allFinite()) throw std::invalid_argument("non-finite waypoint");
    }
    if (!(control_dt > 0.0) || !(sim_dt > 0.0)) throw std::invalid_argument("time steps must be positive");
    if (sim_dt > control_dt) throw std::invalid_argument("sim_dt must not exceed control_dt");
    if (!(acceptance_radius > 0.0)) throw std::invalid_argument("acceptance radius must be positive");
    if (!(leg_timeout > 0.0)) throw std::invalid_argument("leg timeout must be positive");
    orbit.validate();
    veh.validate();
    if (rta_enabled) rta.validate();
}

ScenarioSpec single_agent_passes() {
    ScenarioSpec s;
    s.name = "single";
    AgentSpec a;
    a.initial.pos = Vec3(-200, 0, 0);
    a.waypoints = {Vec3(300, 0, 0), Vec3(-300, 0, 0), Vec3(300, 0, 0), Vec3(-300, 0, 0)};
    s.agents.push_back(a);
    return s;
}

ScenarioSpec three_agent_standoff(bool rta) {
    ScenarioSpec s;
    s.name = "standoff";
    s.rta_enabled = rta;
    AgentSpec a1;
    a1.initial.pos = Vec3(-200, 0, 0);
    a1.waypoints = {Vec3(300, 0, 0), Vec3(-300, 0, 0), Vec3(300, 0, 0), Vec3(-300, 0, 0)};
    AgentSpec a2;
    a2.initial.pos = Vec3(0, -200, 0);
    a2.waypoints = {Vec3(0, 300, 0), Vec3(0, -300, 0), Vec3(0, 300, 0), Vec3(0, -300, 0)};
    s.agents = {a1, a2};
    return s;
}

ScenarioSpec solo(const ScenarioSpec& spec, int agent_index) {
    ScenarioSpec s = spec;
    s.agents = {spec.agents.at(static_cast<size_t>(agent_index))};
    return s;
}

double straight_line_length(const ScenarioSpec& spec) {
    double total = 0.0;
    for (const auto& a : spec.agents) {
        Vec3 p = a.initial.pos;
        for (const auto& w : a.waypoints) {
            total += (w - p).norm();
            p = w;
        }
    }
    return total;
}

std::vector<LogRecord> TrajectoryLog::agent_records(int agent) const {
    std::vector<LogRecord> out;
    for (const auto& r : records)
        if (r.agent == agent) out.push_back(r);
    return out;
}

namespace {

struct AgentRuntime {
    RelativeState rel;
    InertialState eci;
    Controller controller;
    size_t wp = 0;
    double leg_start = 0.0;
    bool done = false;
    Vec3 accel_est = Vec3::Zero();
    Vec3 thrust = Vec3::Zero();
};

LogRecord base_record(double t, int id, const AgentRuntime& a, const Vec3& goal) {
    LogRecord r;
    r.t = t;
    r.agent = id;
    r.state = a.rel;
    r.dist_goal = (a.rel.pos - goal).norm();
    return r;
}

}  // namespace

RunResult run(const ScenarioSpec& spec) {
    spec.validate();
    const int n = static_cast<int>(spec.agents.size());
    const int substeps = spec.substeps();
    const double dt = spec.control_dt;

    RunResult res;
    TrajectoryLog& log = res.log;
    log.num_agents = n;
    log.control_dt = dt;
    log.masses.assign(static_cast<size_t>(n), spec.veh.mass);
    log.targets_reached.assign(static_cast<size_t>(n), 0);
    for (const auto& a : spec.agents) log.targets_assigned.push_back(static_cast<int>(a.waypoints.size()));
    for (int i = 0; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) log.pairs.emplace_back(i, j);

    InertialState chief_eci = circular_chief_state(spec.orbit);
    std::vector<AgentRuntime> agents(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& a = agents[static_cast<size_t>(i)];
        a.rel = spec.agents[static_cast<size_t>(i)].initial;
        a.controller = make_controller(spec.agents[static_cast<size_t>(i)].controller);
        if (spec.plant == Plant::Nonlinear) a.eci = hill_to_eci(chief_eci, a.rel);
    }

    double t = 0.0;
    try {
        for (long tick = 0;; ++tick) {
            t = static_cast<double>(tick) * dt;
            const auto tick_begin = static_cast<std::ptrdiff_t>(log.records.size());
            auto order_tick = [&] {
                std::stable_sort(log.records.begin() + tick_begin, log.records.end(),
                                 [](const LogRecord& a, const LogRecord& b) { return a.agent < b.agent; });
            };

            // Pairwise distances at this tick, chief at the origin.
            PairSample ps;
            ps.t = t;
            for (const auto& [i, j] : log.pairs) {
                const Vec3 pi = i == 0 ? Vec3::Zero() : agents[static_cast<size_t>(i - 1)].rel.pos;
                const Vec3 pj = agents[static_cast<size_t>(j - 1)].rel.pos;
                ps.dist.push_back((pi - pj).norm());
            }
            log.pair_series.push_back(std::move(ps));

            // Waypoint acceptance at the tick boundary.
            bool timed_out = false;
            for (int i = 0; i < n; ++i) {
                auto& a = agents[static_cast<size_t>(i)];
                if (a.done) continue;
                const auto& wps = spec.agents[static_cast<size_t>(i)].waypoints;
                while (a.wp < wps.size() && (a.rel.pos - wps[a.wp]).norm() < spec.acceptance_radius) {
                    ++log.targets_reached[static_cast<size_t>(i)];
                    log.leg_times.push_back(t - a.leg_start);
                    a.leg_start = t;
                    ++a.wp;
                }
                if (a.wp == wps.size()) {
                    a.done = true;
                    log.records.push_back(base_record(t, i + 1, a, wps.back()));
                } else if (t - a.leg_start >= spec.leg_timeout) {
                    timed_out = true;
                }
            }
            if (std::all_of(agents.begin(), agents.end(), [](const AgentRuntime& a) { return a.done; })) {
                log.termination = Termination::Completed;
                order_tick();
                break;
            }
            if (timed_out) {
                log.termination = Termination::LegTimeout;
                log.message = "leg exceeded " + std::to_string(spec.leg_timeout) + " s";
                order_tick();
                break;
            }

            // Desired thrust from each agent's own observation.
            std::vector<Vec3> desired(static_cast<size_t>(n), Vec3::Zero());
            for (int i = 0; i < n; ++i) {
                auto& a = agents[static_cast<size_t>(i)];
                if (a.done) continue;
                const Vec3& goal = spec.agents[static_cast<size_t>(i)].waypoints[a.wp];
                desired[static_cast<size_t>(i)] =
                    spec.veh.thrust_bound * clamp_action(a.controller(observe(a.rel, goal)));
            }

            std::vector<rta::AgentSnapshot> snaps;
            if (spec.rta_enabled) {
                for (int i = 0; i < n; ++i) {
                    rta::AgentSnapshot s;
                    s.id = i + 1;
                    s.state = agents[static_cast<size_t>(i)].rel;
                    s.accel_est = agents[static_cast<size_t>(i)].accel_est;
                    s.veh = spec.veh;
                    snaps.push_back(s);
                }
            }

            for (int i = 0; i < n; ++i) {
                auto& a = agents[static_cast<size_t>(i)];
                if (a.done) {
                    a.thrust = Vec3::Zero();
                    continue;
                }
                const Vec3& goal = spec.agents[static_cast<size_t>(i)].waypoints[a.wp];
                LogRecord r = base_record(t, i + 1, a, goal);
                r.desired = desired[static_cast<size_t>(i)];
                r.applied = r.desired;
                if (spec.rta_enabled) {
                    std::vector<rta::AgentSnapshot> peers{rta::AgentSnapshot::chief()};
                    for (int j = 0; j < n; ++j)
                        if (j != i) peers.push_back(snaps[static_cast<size_t>(j)]);
                    const rta::RtaDecision d =
                        rta::filter_one(snaps[static_cast<size_t>(i)], peers, r.desired, spec.orbit, spec.rta);
                    r.applied = d.u_safe;
                    r.rta_active = d.intervened;
                    r.slack_pos = d.slack_pos();
                    r.slack_vel = d.slack_vel();
                    r.slack_acc = d.slack_acc();
                    r.slack_u = Vec3(d.slack_input(0), d.slack_input(1), d.slack_input(2));
                }
                a.thrust = r.applied;
                log.records.push_back(r);
            }

            order_tick();

            // Zero-order hold over the control interval.
            if (spec.plant == Plant::Cwh) {
                for (auto& a : agents) a.rel = propagate_cwh(a.rel, a.thrust, dt, substeps, spec.orbit, spec.veh);
            } else {
                const Mat3 R = hill_rotation(chief_eci);
                for (auto& a : agents)
                    a.eci = propagate_inertial(a.eci, dt, substeps, spec.orbit,
                                               R.transpose() * (a.thrust / spec.veh.mass));
                chief_eci = propagate_inertial(chief_eci, dt, substeps, spec.orbit);
                for (auto& a : agents) {
                    a.rel = eci_to_hill(chief_eci, a.eci);
                    if (!a.rel.finite()) throw NumericalError("non-finite relative state");
                }
            }
            for (auto& a : agents)
                a.accel_est = cwh_drift(a.rel, spec.orbit.mean_motion) + a.thrust / spec.veh.mass;
        }
    } catch (const NumericalError& e) {
        log.termination = Termination::NumericalFailure;
        log.message = e.what();
    }
    res.metrics = compute_metrics(log);
    return res;
}

MetricsReport compute_metrics(const TrajectoryLog& log, double settle_time) {
    MetricsReport m;
    m.termination = log.termination;
    m.agents.resize(static_cast<size_t>(log.num_agents));
    std::vector<const LogRecord*> last(static_cast<size_t>(log.num_agents), nullptr);
    for (const auto& r : log.records) {
        const size_t i = static_cast<size_t>(r.agent - 1);
        auto& am = m.agents[i];
        if (last[i]) am.distance_traveled += (r.state.pos - last[i]->state.pos).norm();
        const double mass = i < log.masses.size() ? log.masses[i] : 1.0;
        am.delta_v += r.applied.lpNorm<1>() / mass * log.control_dt;
        am.time_taken = r.t;
        if (r.t >= settle_time) m.max_speed_after = std::max(m.max_speed_after, r.state.vel.norm());
        last[i] = &r;
    }
    for (size_t i = 0; i < m.agents.size(); ++i) {
        auto& am = m.agents[i];
        if (i < log.targets_reached.size()) am.targets_reached = log.targets_reached[i];
        if (i < log.targets_assigned.size()) am.targets_assigned = log.targets_assigned[i];
        m.total.targets_reached += am.targets_reached;
        m.total.targets_assigned += am.targets_assigned;
        m.total.distance_traveled += am.distance_traveled;
        m.total.delta_v += am.delta_v;
        m.total.time_taken = std::max(m.total.time_taken, am.time_taken);
        m.time_taken_sum += am.time_taken;
    }
    m.min_pair_distance = log.pair_series.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (const auto& ps : log.pair_series)
        for (double d : ps.dist) m.min_pair_distance = std::min(m.min_pair_distance, d);
    if (!std::isfinite(m.min_pair_distance)) m.min_pair_distance = 0.0;
    return m;
}

std::vector<Crossing> find_crossings(const TrajectoryLog& log) {
    std::vector<Crossing> out;
    const size_t n = log.pair_series.size();
    for (size_t p = 0; p < log.pairs.size(); ++p) {
        for (size_t k = 1; k + 1 < n; ++k) {
            const double prev = log.pair_series[k - 1].dist[p];
            const double cur = log.pair_series[k].dist[p];
            const double next = log.pair_series[k + 1].dist[p];
            if (cur < prev && cur <= next)
                out.push_back({log.pairs[p].first, log.pairs[p].second, log.pair_series[k].t, cur});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Crossing& a, const Crossing& b) { return a.t < b.t; });
    return out;
}

namespace {

// Shortest round-trip representation, independent of locale.
std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << csv_field(fields[i]);
    }
    out << "\r\n";
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
    write_row(out, {"t", "agent", "rx", "ry", "rz", "vx", "vy", "vz", "ux_des", "uy_des", "uz_des", "ux",
                    "uy", "uz", "rta_active", "slack_pos", "slack_vel", "slack_acc", "slack_u1",
                    "slack_u2", "slack_u3", "dist_goal"});
    for (const auto& r : log.records) {
        write_row(out, {num(r.t), std::to_string(r.agent), num(r.state.pos.x()), num(r.state.pos.y()),
                        num(r.state.pos.z()), num(r.state.vel.x()), num(r.state.vel.y()), num(r.state.vel.z()),
                        num(r.desired.x()), num(r.desired.y()), num(r.desired.z()), num(r.applied.x()),
                        num(r.applied.y()), num(r.applied.z()), r.rta_active ? "1" : "0", num(r.slack_pos),
                        num(r.slack_vel), num(r.slack_acc), num(r.slack_u.x()), num(r.slack_u.y()),
                        num(r.slack_u.z()), num(r.dist_goal)});
    }
}

void write_plot_data_csv(std::ostream& out, const TrajectoryLog& log) {
    std::vector<std::string> header{"t"};
    for (int a = 1; a <= log.num_agents; ++a) {
        const std::string p = "agent" + std::to_string(a) + "_";
        header.push_back(p + "dist_goal");
        header.push_back(p + "speed");
        header.push_back(p + "rta_active");
    }
    for (const auto& [i, j] : log.pairs)
        header.push_back("dist_" + std::to_string(i) + "_" + std::to_string(j));
    write_row(out, header);

    size_t r = 0;
    for (const auto& ps : log.pair_series) {
        std::vector<std::string> row(header.size());
        row[0] = num(ps.t);
        while (r < log.records.size() && log.records[r].t < ps.t) ++r;
        for (size_t k = r; k < log.records.size() && log.records[k].t == ps.t; ++k) {
            const auto& rec = log.records[k];
            const size_t c = 1 + 3 * static_cast<size_t>(rec.agent - 1);
            row[c] = num(rec.dist_goal);
            row[c + 1] = num(rec.state.vel.norm());
            row[c + 2] = rec.rta_active ? "1" : "0";
        }
        const size_t off = 1 + 3 * static_cast<size_t>(log.num_agents);
        for (size_t p = 0; p < ps.dist.size(); ++p) row[off + p] = num(ps.dist[p]);
        write_row(out, row);
    }
}

void write_crossings_csv(std::ostream& out, const std::vector<Crossing>& crossings) {
    write_row(out, {"body_a", "body_b", "t", "distance"});
    for (const auto& c : crossings)
        write_row(out, {std::to_string(c.a), std::to_string(c.b), num(c.t), num(c.distance)});
}

namespace {

json agent_json(const AgentMetrics& a) {
    return {{"targets_reached", a.targets_reached},
            {"targets_assigned", a.targets_assigned},
            {"time_taken", a.time_taken},
            {"distance_traveled", a.distance_traveled},
            {"delta_v", a.delta_v}};
}

}  // namespace

std::string metrics_json(const MetricsReport& m, int indent) {
    json j;
    j["aggregate"] = agent_json(m.total);
    j["aggregate"]["time_taken_sum"] = m.time_taken_sum;
    json per = json::array();
    for (size_t i = 0; i < m.agents.size(); ++i) {
        json a = agent_json(m.agents[i]);
        a["agent"] = i + 1;
        per.push_back(a);
    }
    j["agents"] = per;
    j["min_pair_distance"] = m.min_pair_distance;
    j["max_speed_after_settling"] = m.max_speed_after;
    j["termination"] = std::string(to_string(m.termination));
    return j.dump(indent);
}

EpisodeResult run_episode(const EpisodeStart& start, const Controller& controller,
                          const EpisodeConfig& env, const ChiefOrbit& orbit, const VehicleParams& veh) {
    EpisodeResult r;
    const WaypointTask task = env.task_for(start.goal);
    r.straight_line = (start.goal - start.initial.pos).norm();
    RelativeState s = start.initial;
    double t = 0.0;
    while (r.status == EpisodeStatus::Running) {
        const StepOutcome out = step(s, controller(observe(s, task.goal)), task, env, orbit, veh, t);
        r.distance += (out.next_state.pos - s.pos).norm();
        r.total_return += out.reward;
        s = out.next_state;
        t += env.dt;
        r.status = out.status;
    }
    r.time = t;
    return r;
}

namespace {

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
    mean = sd = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

BaselineStats baseline_stats(int n_trials, std::uint64_t seed, const ControllerChoice& choice,
                             const EpisodeConfig& env, const ChiefOrbit& orbit, const VehicleParams& veh,
                             int workers) {
    BaselineStats s;
    if (n_trials <= 0) return s;
    env.validate();
    const Controller controller = make_controller(choice);

    std::mt19937_64 rng(seed);
    std::vector<EpisodeStart> starts;
    for (int i = 0; i < n_trials; ++i) starts.push_back(sample_episode(rng, env));

    std::vector<EpisodeResult> results(static_cast<size_t>(n_trials));
    if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, n_trials);
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n_trials; i += workers)
                    results[static_cast<size_t>(i)] = run_episode(starts[static_cast<size_t>(i)], controller, env, orbit, veh);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);

    std::vector<double> times, dists;
    double straight = 0.0;
    for (const auto& r : results) {
        if (r.status == EpisodeStatus::Reached) ++s.successes;
        times.push_back(r.time);
        dists.push_back(r.distance);
        straight += r.straight_line;
    }
    s.trials = n_trials;
    s.success_rate = static_cast<double>(s.successes) / n_trials;
    mean_sd(times, s.mean_time, s.sd_time);
    mean_sd(dists, s.mean_distance, s.sd_distance);
    s.mean_straight = straight / n_trials;
    s.excess_pct = s.mean_straight > 0.0 ? (s.mean_distance - s.mean_straight) / s.mean_straight * 100.0 : 0.0;
    return s;
}

std::string baseline_stats_json(const BaselineStats& s, int indent) {
    json j{{"trials", s.trials},
           {"successes", s.successes},
           {"success_rate", s.success_rate},
           {"mean_time", s.mean_time},
           {"sd_time", s.sd_time},
           {"mean_distance", s.mean_distance},
           {"sd_distance", s.sd_distance},
           {"mean_straight_line", s.mean_straight},
           {"excess_pct", s.excess_pct}};
    return j.dump(indent);
}

std::string baseline_stats_table(const BaselineStats& s) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(2);
    o << "trials            " << s.trials << '\n'
      << "success rate      " << s.success_rate * 100.0 << " %\n"
      << "time (s)          " << s.mean_time << " +/- " << s.sd_time << '\n'
      << "distance (m)      " << s.mean_distance << " +/- " << s.sd_distance << '\n'
      << "straight line (m) " << s.mean_straight << '\n'
      << "excess            " << s.excess_pct << " %\n";
    return o.str();
}

}  // namespace proxops
