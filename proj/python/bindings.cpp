#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "proxops/cli.hpp"
#include "proxops/harness.hpp"
#include "proxops/trainer.hpp"

namespace py = pybind11;
using namespace proxops;

namespace {

py::dict metrics_dict(const MetricsReport& m) {
    auto agent = [](const AgentMetrics& a) {
        py::dict d;
        d["targets_reached"] = a.targets_reached;
        d["targets_assigned"] = a.targets_assigned;
        d["time_taken"] = a.time_taken;
        d["distance_traveled"] = a.distance_traveled;
        d["delta_v"] = a.delta_v;
        return d;
    };
    py::dict d;
    d["aggregate"] = agent(m.total);
    py::list per;
    for (const auto& a : m.agents) per.append(agent(a));
    d["agents"] = per;
    d["time_taken_sum"] = m.time_taken_sum;
    d["min_pair_distance"] = m.min_pair_distance;
    d["max_speed_after_settling"] = m.max_speed_after;
    d["termination"] = std::string(to_string(m.termination));
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spacecraft proximity-operations simulator: CWH dynamics, waypoint MDP, CBF runtime assurance.";

    py::register_exception<NumericalError>(m, "NumericalError");
    py::register_exception<ParseError>(m, "ParseError");
    py::register_exception<ConfigError>(m, "ConfigError");

    py::class_<RelativeState>(m, "RelativeState")
        .def(py::init<>())
        .def(py::init([](const Vec3& pos, const Vec3& vel) { return RelativeState{pos, vel}; }),
             py::arg("pos"), py::arg("vel") = Vec3::Zero())
        .def_readwrite("pos", &RelativeState::pos)
        .def_readwrite("vel", &RelativeState::vel)
        .def("__repr__", [](const RelativeState& s) {
            std::ostringstream o;
            o << "RelativeState(pos=[" << s.pos.transpose() << "], vel=[" << s.vel.transpose() << "])";
            return o.str();
        });

    py::class_<ChiefOrbit>(m, "ChiefOrbit")
        .def_static("circular", &ChiefOrbit::circular, py::arg("a") = kDefaultSemiMajorAxis,
                    py::arg("mu") = kEarthMu, py::arg("j2") = false)
        .def_readonly("mean_motion", &ChiefOrbit::mean_motion)
        .def_readonly("semi_major_axis", &ChiefOrbit::semi_major_axis)
        .def_readonly("mu", &ChiefOrbit::mu)
        .def_readonly("j2_enabled", &ChiefOrbit::j2_enabled)
        .def("period", &ChiefOrbit::period);

    py::class_<VehicleParams>(m, "VehicleParams")
        .def(py::init<>())
        .def_readwrite("mass", &VehicleParams::mass)
        .def_readwrite("thrust_bound", &VehicleParams::thrust_bound);

    m.def("cwh_accel", [](const RelativeState& s, const Vec3& u, const ChiefOrbit& o, const VehicleParams& v) {
        return cwh_derivative(s, u, o, v).accel;
    }, py::arg("state"), py::arg("thrust"), py::arg("orbit"), py::arg("veh") = VehicleParams{});
    m.def("propagate_cwh", &propagate_cwh, py::arg("state"), py::arg("thrust"), py::arg("dt"),
          py::arg("substeps"), py::arg("orbit"), py::arg("veh") = VehicleParams{});
    m.def("cwh_closed_form", &cwh_closed_form, py::arg("state"), py::arg("dt"), py::arg("mean_motion"));

    m.def("observe", [](const RelativeState& s, const Vec3& goal) {
        return Eigen::Matrix<double, 6, 1>(observe(s, goal).as_vector());
    }, py::arg("state"), py::arg("goal"));
    m.def("reward", [](const Vec3& cur, const Vec3& prev, const Vec3& vel, const Vec3& goal) {
        return reward(cur, prev, vel, goal, RewardParams{});
    }, py::arg("cur"), py::arg("prev"), py::arg("vel"), py::arg("goal"));
    m.def("baseline_act", [](const Eigen::Matrix<double, 6, 1>& obs) {
        return baseline_act(Observation{obs.head<3>(), obs.tail<3>()});
    }, py::arg("obs"));

    m.def("solve_qp", [](const Eigen::VectorXd& w, const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                         const Eigen::VectorXd& b) {
        qp::Problem p(static_cast<int>(w.size()));
        p.cost_weights = w;
        p.cost_center = c;
        for (Eigen::Index i = 0; i < A.rows(); ++i) p.add_row(A.row(i).transpose(), b(i));
        const qp::Solution s = qp::solve(p);
        py::dict d;
        d["x"] = s.x;
        d["status"] = std::string(qp::to_string(s.status));
        d["iterations"] = s.iterations;
        d["kkt_residual"] = s.kkt_residual;
        return d;
    }, py::arg("weights"), py::arg("center"), py::arg("A"), py::arg("b"),
       "Minimize sum w_i (x_i - c_i)^2 subject to A x <= b.");

    py::class_<rta::RtaParams>(m, "RtaParams")
        .def(py::init<>())
        .def_readwrite("r_c", &rta::RtaParams::r_c)
        .def_readwrite("v_c", &rta::RtaParams::v_c)
        .def_readwrite("a_c", &rta::RtaParams::a_c)
        .def_readwrite("f_c", &rta::RtaParams::f_c)
        .def_readwrite("gamma0", &rta::RtaParams::gamma0)
        .def_readwrite("gamma1", &rta::RtaParams::gamma1)
        .def_readwrite("gamma2", &rta::RtaParams::gamma2)
        .def_readwrite("gamma3", &rta::RtaParams::gamma3);

    m.def("rta_filter", [](const std::vector<RelativeState>& states, const std::vector<Vec3>& desired,
                           const ChiefOrbit& orbit, const rta::RtaParams& p) {
        std::vector<rta::AgentSnapshot> snaps;
        for (size_t i = 0; i < states.size(); ++i) {
            rta::AgentSnapshot s;
            s.id = static_cast<int>(i) + 1;
            s.state = states[i];
            snaps.push_back(s);
        }
        py::list out;
        for (const auto& d : rta::filter(snaps, desired, orbit, p)) {
            py::dict r;
            r["u_safe"] = d.u_safe;
            r["slacks"] = d.slacks;
            r["intervened"] = d.intervened;
            r["fallback"] = d.fallback;
            out.append(r);
        }
        return out;
    }, py::arg("states"), py::arg("desired"), py::arg("orbit"), py::arg("params") = rta::RtaParams{},
       "Filter desired thrusts; accelerations of all agents are taken as zero.");

    m.def("run_scenario", [](const std::string& name, bool rta_on, double control_dt, double sim_dt,
                             const std::string& controller) {
        ScenarioSpec s = scenario_by_name(name, rta_on);
        s.control_dt = control_dt;
        s.sim_dt = sim_dt;
        const ControllerChoice c = parse_controller(controller);
        for (auto& a : s.agents) a.controller = c;
        RunResult r;
        {
            py::gil_scoped_release release;
            r = run(s);
        }
        py::dict d = metrics_dict(r.metrics);
        std::ostringstream csv;
        write_trajectory_csv(csv, r.log);
        d["trajectory_csv"] = csv.str();
        return d;
    }, py::arg("name"), py::arg("rta") = false, py::arg("control_dt") = 1.0, py::arg("sim_dt") = 0.1,
       py::arg("controller") = "baseline");

    m.def("baseline_stats", [](int trials, std::uint64_t seed) {
        BaselineStats s;
        {
            py::gil_scoped_release release;
            s = baseline_stats(trials, seed, ControllerChoice::baseline());
        }
        py::dict d;
        d["trials"] = s.trials;
        d["success_rate"] = s.success_rate;
        d["mean_time"] = s.mean_time;
        d["sd_time"] = s.sd_time;
        d["mean_distance"] = s.mean_distance;
        d["sd_distance"] = s.sd_distance;
        d["excess_pct"] = s.excess_pct;
        return d;
    }, py::arg("trials") = 50, py::arg("seed") = 0);

    m.def("cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Run the command-line interface; returns (exit_code, stdout, stderr).");
}
