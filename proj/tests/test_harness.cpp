#include <sstream>

#include "doctest.h"
#include "proxops/harness.hpp"

using namespace proxops;

namespace {

double leg_len(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

LogRecord rec(double t, int agent, const Vec3& pos, const Vec3& applied = Vec3::Zero()) {
    LogRecord r;
    r.t = t;
    r.agent = agent;
    r.state.pos = pos;
    r.applied = applied;
    return r;
}

TrajectoryLog empty_log(int agents) {
    TrajectoryLog log;
    log.num_agents = agents;
    log.masses.assign(static_cast<size_t>(agents), 1.0);
    log.targets_reached.assign(static_cast<size_t>(agents), 0);
    log.targets_assigned.assign(static_cast<size_t>(agents), 1);
    return log;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("single agent scenario definition") {
    const ScenarioSpec s = single_agent_passes();
    REQUIRE(s.agents.size() == 1);
    const AgentSpec& a = s.agents[0];
    REQUIRE(a.waypoints.size() == 4);
    CHECK(a.initial.pos == Vec3(-200, 0, 0));
    CHECK(leg_len(a.initial.pos, a.waypoints[0]) == 500.0);
    for (size_t k = 1; k < 4; ++k) CHECK(leg_len(a.waypoints[k - 1], a.waypoints[k]) == 600.0);
    CHECK(straight_line_length(s) == 2300.0);
    CHECK(s.acceptance_radius == 15.0);
    CHECK_FALSE(s.rta_enabled);
}

TEST_CASE("standoff scenario definition") {
    const ScenarioSpec s = three_agent_standoff(true);
    REQUIRE(s.agents.size() == 2);
    CHECK(s.rta_enabled);
    CHECK_FALSE(three_agent_standoff(false).rta_enabled);
    size_t total = 0;
    for (const auto& a : s.agents) total += a.waypoints.size();
    CHECK(total == 8);
    CHECK(s.agents[1].initial.pos == Vec3(0, -200, 0));
    CHECK(leg_len(s.agents[1].initial.pos, s.agents[1].waypoints[0]) == 500.0);
    // Both agents fly straight lines through the origin.
    for (const auto& a : s.agents) {
        const Vec3 dir = (a.waypoints[0] - a.initial.pos).normalized();
        CHECK(a.initial.pos.cross(dir).norm() < 1e-12);
        for (const auto& w : a.waypoints) CHECK(w.cross(dir).norm() < 1e-12);
    }
}

TEST_CASE("spec validation") {
    ScenarioSpec s = single_agent_passes();
    CHECK_NOTHROW(s.validate());
    s.sim_dt = 2.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = single_agent_passes();
    s.agents[0].waypoints.clear();
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = single_agent_passes();
    CHECK(s.substeps() == 10);
}

TEST_CASE("agents starting inside every acceptance ball finish at once") {
    ScenarioSpec s = three_agent_standoff(false);
    for (auto& a : s.agents) {
        a.initial.pos = Vec3(100, 100, 0) * static_cast<double>(&a - &s.agents[0] + 1);
        a.waypoints = {a.initial.pos + Vec3(1, 0, 0), a.initial.pos - Vec3(0, 2, 0)};
    }
    const RunResult r = run(s);
    CHECK(r.metrics.total.time_taken == 0.0);
    CHECK(r.metrics.total.targets_reached == 4);
    CHECK(r.metrics.termination == Termination::Completed);
}

TEST_CASE("baseline single-agent run") {
    const RunResult r = run(single_agent_passes());
    CHECK(r.metrics.termination == Termination::Completed);
    CHECK(r.metrics.total.targets_reached == 4);
    CHECK(r.metrics.total.distance_traveled <= 1.25 * 2300.0);
    CHECK(r.metrics.total.distance_traveled >= 2300.0 - 4 * 2 * 15.0);
    REQUIRE(r.log.leg_times.size() == 4);
    for (double t : r.log.leg_times) CHECK(t <= 500.0);
}

TEST_CASE("metrics formula examples") {
    TrajectoryLog log = empty_log(1);
    log.records = {rec(0, 1, Vec3(5, 5, 5)), rec(1, 1, Vec3(5, 5, 5)), rec(2, 1, Vec3(5, 5, 5))};
    MetricsReport m = compute_metrics(log);
    CHECK(m.total.distance_traveled == 0.0);
    CHECK(m.total.delta_v == 0.0);

    log.records = {rec(0, 1, Vec3::Zero(), Vec3(1, 1, 1))};
    CHECK(compute_metrics(log).total.delta_v == 3.0);
    log.masses = {2.0};
    CHECK(compute_metrics(log).total.delta_v == 1.5);

    log = empty_log(1);
    for (int k = 0; k <= 10; ++k) log.records.push_back(rec(k, 1, Vec3(10.0 * k, 0, 0)));
    m = compute_metrics(log);
    CHECK(m.total.distance_traveled == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(m.total.time_taken == 10.0);
}

TEST_CASE("aggregate metrics are the sum of per-agent metrics") {
    for (bool rta : {false, true}) {
        const RunResult r = run(three_agent_standoff(rta));
        AgentMetrics sum;
        double tmax = 0.0, tsum = 0.0;
        for (const auto& a : r.metrics.agents) {
            sum.targets_reached += a.targets_reached;
            sum.targets_assigned += a.targets_assigned;
            sum.distance_traveled += a.distance_traveled;
            sum.delta_v += a.delta_v;
            tmax = std::max(tmax, a.time_taken);
            tsum += a.time_taken;
            CHECK(a.targets_reached <= a.targets_assigned);
            CHECK(a.distance_traveled >= 0.0);
            CHECK(a.delta_v >= 0.0);
        }
        CHECK(r.metrics.total.targets_reached == sum.targets_reached);
        CHECK(r.metrics.total.targets_assigned == sum.targets_assigned);
        CHECK(r.metrics.total.distance_traveled == doctest::Approx(sum.distance_traveled).epsilon(1e-12));
        CHECK(r.metrics.total.delta_v == doctest::Approx(sum.delta_v).epsilon(1e-12));
        CHECK(r.metrics.total.time_taken == tmax);
        CHECK(r.metrics.time_taken_sum == doctest::Approx(tsum));
        CHECK(static_cast<size_t>(r.metrics.total.targets_reached) == r.log.leg_times.size());
    }
}

TEST_CASE("log structure") {
    const RunResult r = run(three_agent_standoff(true));
    double prev_t = -1.0;
    int prev_agent = 0;
    for (const auto& rec : r.log.records) {
        CHECK(rec.t >= prev_t);
        if (rec.t == prev_t) CHECK(rec.agent > prev_agent);
        prev_t = rec.t;
        prev_agent = rec.agent;
    }
    // Pairs: chief-1, chief-2, 1-2.
    REQUIRE(r.log.pairs.size() == 3);
    for (const auto& s : r.log.pair_series) CHECK(s.dist.size() == 3);
    CHECK(r.log.agent_records(1).size() + r.log.agent_records(2).size() == r.log.records.size());
}

TEST_CASE("no interaction between agents without RTA") {
    const ScenarioSpec spec = three_agent_standoff(false);
    const RunResult joint = run(spec);
    for (int i = 0; i < 2; ++i) {
        const RunResult alone = run(solo(spec, i));
        const auto a = joint.log.agent_records(i + 1);
        const auto b = alone.log.agent_records(1);
        REQUIRE(a.size() >= b.size());
        double worst = 0.0;
        for (size_t k = 0; k < b.size(); ++k) {
            worst = std::max(worst, (a[k].state.pos - b[k].state.pos).norm());
            worst = std::max(worst, (a[k].state.vel - b[k].state.vel).norm());
        }
        CHECK(worst <= 1e-9);
    }
    CHECK(joint.metrics.min_pair_distance < 50.0);
}

TEST_CASE("halving the integration step barely moves the metrics") {
    ScenarioSpec a = single_agent_passes();
    ScenarioSpec b = a;
    b.sim_dt = a.sim_dt / 2;
    const MetricsReport ma = run(a).metrics, mb = run(b).metrics;
    CHECK(std::abs(ma.total.distance_traveled - mb.total.distance_traveled) < 0.005 * ma.total.distance_traveled);
    CHECK(std::abs(ma.total.delta_v - mb.total.delta_v) < 0.005 * ma.total.delta_v);
    CHECK(std::abs(ma.total.time_taken - mb.total.time_taken) < 0.005 * ma.total.time_taken);
}

TEST_CASE("standoff with RTA") {
    const ScenarioSpec spec = three_agent_standoff(true);
    const RunResult r = run(spec);
    CHECK(r.metrics.total.targets_reached == 8);
    CHECK(r.metrics.min_pair_distance >= 0.9 * spec.rta.r_c);
    CHECK(r.metrics.max_speed_after <= 1.1 * spec.rta.v_c);
    bool any_active = false;
    for (const auto& rec : r.log.records) any_active = any_active || rec.rta_active;
    CHECK(any_active);
}

TEST_CASE("trajectory CSV") {
    const RunResult r = run(single_agent_passes());
    std::ostringstream a, b;
    write_trajectory_csv(a, r.log);
    write_trajectory_csv(b, run(single_agent_passes()).log);
    CHECK(a.str() == b.str());
    const std::string text = a.str();
    const std::string header =
        "t,agent,rx,ry,rz,vx,vy,vz,ux_des,uy_des,uz_des,ux,uy,uz,rta_active,slack_pos,slack_vel,slack_acc,"
        "slack_u1,slack_u2,slack_u3,dist_goal\r\n";
    CHECK(text.rfind(header, 0) == 0);
    size_t lines = 0;
    for (char c : text) lines += c == '\n';
    CHECK(lines == r.log.records.size() + 1);
    CHECK(metrics_json(r.metrics).find("\"targets_reached\"") != std::string::npos);
}

TEST_CASE("crossings are local minima of the pair distance") {
    TrajectoryLog log = empty_log(1);
    log.pairs = {{0, 1}};
    const double d[] = {10, 8, 6, 7, 7, 5, 5, 9, 4};
    for (int k = 0; k < 9; ++k) log.pair_series.push_back({static_cast<double>(k), {d[k]}});
    const auto c = find_crossings(log);
    REQUIRE(c.size() == 2);
    CHECK(c[0].t == 2.0);
    CHECK(c[0].distance == 6.0);
    CHECK(c[1].t == 5.0);  // first sample of the flat bottom

    const auto standoff = find_crossings(run(three_agent_standoff(false)).log);
    CHECK_FALSE(standoff.empty());
}

TEST_CASE("baseline statistics") {
    const BaselineStats none = baseline_stats(0, 1, ControllerChoice::baseline());
    CHECK(none.trials == 0);
    CHECK(none.successes == 0);
    CHECK(none.mean_time == 0.0);

    const BaselineStats a = baseline_stats(6, 11, ControllerChoice::baseline(), {}, ChiefOrbit::circular(), {}, 1);
    const BaselineStats b = baseline_stats(6, 11, ControllerChoice::baseline(), {}, ChiefOrbit::circular(), {}, 3);
    CHECK(a.trials == 6);
    CHECK(a.successes == b.successes);
    CHECK(a.mean_time == b.mean_time);
    CHECK(a.mean_distance == b.mean_distance);
    CHECK(a.sd_distance == b.sd_distance);
    CHECK(a.success_rate == 1.0);
    CHECK(a.mean_distance >= a.mean_straight - 10.0);
    CHECK(baseline_stats_json(a).find("\"success_rate\"") != std::string::npos);
    CHECK_FALSE(baseline_stats_table(a).empty());
}

TEST_CASE("nonlinear plant runs the single-agent scenario") {
    ScenarioSpec s = single_agent_passes();
    s.plant = Plant::Nonlinear;
    const RunResult r = run(s);
    CHECK(r.metrics.termination == Termination::Completed);
    CHECK(r.metrics.total.targets_reached == 4);
}

TEST_CASE("a missing policy file is reported") {
    CHECK_THROWS(make_controller(ControllerChoice::policy("/nonexistent/policy.json")));
}

}  // TEST_SUITE
