#include "proxops/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "proxops/trainer.hpp"

namespace proxops {

namespace fs = std::filesystem;
using nlohmann::json;

ScenarioSpec scenario_by_name(const std::string& name, bool rta) {
    if (name == "single" || name == "single_agent_passes") {
        ScenarioSpec s = single_agent_passes();
        s.rta_enabled = rta;
        return s;
    }
    if (name == "standoff" || name == "three_agent_standoff") return three_agent_standoff(rta);
    throw ConfigError("unknown scenario '" + name + "' (expected single or standoff)");
}

ControllerChoice parse_controller(const std::string& text) {
    if (text == "baseline") return ControllerChoice::baseline();
    const std::string prefix = "policy:";
    if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size())
        return ControllerChoice::policy(text.substr(prefix.size()));
    throw ConfigError("controller must be 'baseline' or 'policy:<path>', got '" + text + "'");
}

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 3) throw ConfigError("expected a 3-vector");
    return {v[0], v[1], v[2]};
}

json controller_json(const ControllerChoice& c) {
    if (c.kind == ControllerKind::Policy) return {{"type", "policy"}, {"path", c.policy_path}};
    return {{"type", "baseline"},
            {"kp", c.gains.kp},
            {"kv", c.gains.kv},
            {"speed_cap", c.gains.speed_cap},
            {"speed_limit_gain", c.gains.speed_limit_gain}};
}

ControllerChoice controller_from_json(const json& j) {
    const std::string type = j.value("type", std::string("baseline"));
    if (type == "policy") return ControllerChoice::policy(j.at("path").get<std::string>());
    if (type != "baseline") throw ConfigError("unknown controller type '" + type + "'");
    ControllerChoice c = ControllerChoice::baseline();
    c.gains.kp = j.value("kp", c.gains.kp);
    c.gains.kv = j.value("kv", c.gains.kv);
    c.gains.speed_cap = j.value("speed_cap", c.gains.speed_cap);
    c.gains.speed_limit_gain = j.value("speed_limit_gain", c.gains.speed_limit_gain);
    return c;
}

}  // namespace

ScenarioSpec parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        const json sc = j.value("scenario", json::object());
        const json rta = j.value("rta", json::object());
        const bool rta_on = rta.value("enabled", false);
        const std::string name = sc.value("name", std::string("custom"));

        ScenarioSpec s;
        if (sc.contains("agents")) {
            s.name = name;
            s.rta_enabled = rta_on;
            for (const auto& a : sc.at("agents")) {
                AgentSpec ag;
                ag.initial.pos = json_vec(a.at("start"));
                if (a.contains("start_vel")) ag.initial.vel = json_vec(a.at("start_vel"));
                for (const auto& w : a.at("waypoints")) ag.waypoints.push_back(json_vec(w));
                s.agents.push_back(ag);
            }
        } else {
            s = scenario_by_name(name, rta_on);
        }
        s.acceptance_radius = sc.value("acceptance_radius", s.acceptance_radius);
        s.leg_timeout = sc.value("leg_timeout", s.leg_timeout);
        const std::string plant = sc.value("plant", std::string("cwh"));
        if (plant == "cwh") s.plant = Plant::Cwh;
        else if (plant == "nonlinear") s.plant = Plant::Nonlinear;
        else throw ConfigError("unknown plant '" + plant + "'");
        if (sc.contains("orbit")) {
            const json& o = sc.at("orbit");
            s.orbit = ChiefOrbit::circular(o.value("semi_major_axis", kDefaultSemiMajorAxis),
                                           o.value("mu", kEarthMu), o.value("j2", false));
        }
        s.veh.mass = sc.value("mass", s.veh.mass);
        s.veh.thrust_bound = sc.value("thrust_bound", s.veh.thrust_bound);

        const ControllerChoice ctrl = controller_from_json(j.value("controller", json::object()));
        for (auto& a : s.agents) a.controller = ctrl;

        s.rta.r_c = rta.value("r_c", s.rta.r_c);
        s.rta.v_c = rta.value("v_c", s.rta.v_c);
        s.rta.a_c = rta.value("a_c", s.rta.a_c);
        s.rta.f_c = rta.value("f_c", s.rta.f_c);
        s.rta.gamma0 = rta.value("gamma0", s.rta.gamma0);
        s.rta.gamma1 = rta.value("gamma1", s.rta.gamma1);
        s.rta.gamma2 = rta.value("gamma2", s.rta.gamma2);
        s.rta.gamma3 = rta.value("gamma3", s.rta.gamma3);

        const json timing = j.value("timing", json::object());
        s.control_dt = timing.value("control_dt", s.control_dt);
        s.sim_dt = timing.value("sim_dt", s.sim_dt);
        s.seed = j.value("seed", s.seed);
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

std::string dump_config(const ScenarioSpec& s) {
    json agents = json::array();
    for (const auto& a : s.agents) {
        json wps = json::array();
        for (const auto& w : a.waypoints) wps.push_back(vec_json(w));
        agents.push_back({{"start", vec_json(a.initial.pos)}, {"start_vel", vec_json(a.initial.vel)}, {"waypoints", wps}});
    }
    json j;
    j["scenario"] = {{"name", s.name},
                     {"plant", std::string(to_string(s.plant))},
                     {"acceptance_radius", s.acceptance_radius},
                     {"leg_timeout", s.leg_timeout},
                     {"orbit", {{"semi_major_axis", s.orbit.semi_major_axis}, {"mu", s.orbit.mu}, {"j2", s.orbit.j2_enabled}}},
                     {"mass", s.veh.mass},
                     {"thrust_bound", s.veh.thrust_bound},
                     {"agents", agents}};
    j["controller"] = controller_json(s.agents.empty() ? ControllerChoice{} : s.agents.front().controller);
    j["rta"] = {{"enabled", s.rta_enabled}, {"r_c", s.rta.r_c},       {"v_c", s.rta.v_c},
                {"a_c", s.rta.a_c},         {"f_c", s.rta.f_c},       {"gamma0", s.rta.gamma0},
                {"gamma1", s.rta.gamma1},   {"gamma2", s.rta.gamma2}, {"gamma3", s.rta.gamma3}};
    j["timing"] = {{"control_dt", s.control_dt}, {"sim_dt", s.sim_dt}};
    j["seed"] = s.seed;
    return j.dump(2) + "\n";
}

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream o;
    fn(o);
    return o.str();
}

struct RunArgs {
    std::string scenario;
    std::string config;
    std::string rta;
    std::string controller;
    std::string plant;
    long long seed = -1;
    double control_dt = 0.0;
    double sim_dt = 0.0;
    std::string out = "out";
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
    ScenarioSpec spec;
    try {
        if (!a.config.empty()) {
            std::ifstream f(a.config);
            if (!f) throw ConfigError("cannot read config file " + a.config);
            std::stringstream buf;
            buf << f.rdbuf();
            spec = parse_config(buf.str());
        } else if (a.scenario.empty()) {
            throw ConfigError("either --scenario or --config is required");
        }
        const bool rta_on = a.rta.empty() ? spec.rta_enabled : a.rta == "on";
        if (!a.scenario.empty()) {
            ScenarioSpec named = scenario_by_name(a.scenario, rta_on);
            if (a.config.empty()) {
                spec = named;
            } else {
                const ControllerChoice keep = spec.agents.empty() ? ControllerChoice{} : spec.agents.front().controller;
                spec.name = named.name;
                spec.agents = named.agents;
                for (auto& ag : spec.agents) ag.controller = keep;
            }
        }
        spec.rta_enabled = rta_on;
        if (!a.controller.empty()) {
            const ControllerChoice c = parse_controller(a.controller);
            for (auto& ag : spec.agents) ag.controller = c;
        }
        if (!a.plant.empty()) spec.plant = a.plant == "nonlinear" ? Plant::Nonlinear : Plant::Cwh;
        if (a.seed >= 0) spec.seed = static_cast<std::uint64_t>(a.seed);
        if (a.control_dt > 0.0) spec.control_dt = a.control_dt;
        if (a.sim_dt > 0.0) spec.sim_dt = a.sim_dt;
        spec.validate();
        for (const auto& ag : spec.agents)
            if (ag.controller.kind == ControllerKind::Policy) (void)load_policy(ag.controller.policy_path);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    const fs::path dir(a.out);
    try {
        fs::create_directories(dir);
        write_file(dir / "effective_config.json", dump_config(spec));
        const RunResult r = run(spec);
        write_file(dir / "trajectory.csv", render([&](std::ostream& o) { write_trajectory_csv(o, r.log); }));
        write_file(dir / "plot_data.csv", render([&](std::ostream& o) { write_plot_data_csv(o, r.log); }));
        write_file(dir / "crossings.csv",
                   render([&](std::ostream& o) { write_crossings_csv(o, find_crossings(r.log)); }));
        write_file(dir / "metrics.json", metrics_json(r.metrics) + "\n");

        const auto& t = r.metrics.total;
        out << spec.name << " (rta " << (spec.rta_enabled ? "on" : "off") << "): " << t.targets_reached << '/'
            << t.targets_assigned << " targets, time " << t.time_taken << " s, distance " << t.distance_traveled
            << " m, delta-v " << t.delta_v << " m/s, min separation " << r.metrics.min_pair_distance << " m, "
            << to_string(r.metrics.termination) << '\n';
        if (r.metrics.termination == Termination::NumericalFailure) {
            err << "error: " << r.log.message << '\n';
            return kExitRuntime;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

struct TrainArgs {
    long steps = 1'000'000;
    long long seed = 0;
    std::string out = "train_out";
    std::string resume;
    int batch_size = 4096;
    int minibatch_size = 256;
    int epochs = 10;
    int num_envs = 8;
    double lr = 3e-4;
    int eval_episodes = 50;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    TrainerConfig cfg;
    cfg.total_steps = a.steps;
    cfg.seed = static_cast<std::uint64_t>(a.seed);
    cfg.batch_size = a.batch_size;
    cfg.minibatch_size = a.minibatch_size;
    cfg.epochs_per_batch = a.epochs;
    cfg.num_envs = a.num_envs;
    cfg.learning_rate = a.lr;
    std::optional<PolicyFile> resume;
    try {
        cfg.validate();
        if (!a.resume.empty()) resume = load_policy(a.resume);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    const EpisodeConfig env;
    const ChiefOrbit orbit = ChiefOrbit::circular();
    const VehicleParams veh;
    const fs::path dir(a.out);
    try {
        fs::create_directories(dir);
        const TrainResult r = train(env, cfg, orbit, veh, resume ? &*resume : nullptr, [&](const CurvePoint& p) {
            out << "iter " << p.iteration << "  steps " << p.env_steps << "  return " << p.mean_return
                << "  success " << p.success_rate << '\n';
        });
        save_policy(dir / "policy.json", r.policy, &r.value);
        write_file(dir / "learning_curve.csv", render([&](std::ostream& o) {
                       o << "iteration,env_steps,episodes,mean_return,success_rate,policy_loss,value_loss\r\n";
                       for (const auto& p : r.curve)
                           o << p.iteration << ',' << p.env_steps << ',' << p.episodes << ',' << p.mean_return << ','
                             << p.success_rate << ',' << p.policy_loss << ',' << p.value_loss << "\r\n";
                   }));
        const EvalResult ev = evaluate_policy(r.policy, env, orbit, veh, a.eval_episodes, cfg.seed + 1);
        json summary{{"total_steps", cfg.total_steps},
                     {"seed", cfg.seed},
                     {"iterations", r.curve.size()},
                     {"eval_episodes", ev.episodes},
                     {"eval_success_rate", ev.success_rate},
                     {"eval_mean_return", ev.mean_return},
                     {"eval_mean_time", ev.mean_time}};
        write_file(dir / "train_summary.json", summary.dump(2) + "\n");
        out << "evaluation: " << ev.success_rate * 100.0 << "% success over " << ev.episodes << " episodes\n";
        return kExitOk;
    } catch (const TrainingDivergedError& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

struct StatsArgs {
    int trials = 50;
    long long seed = 0;
    std::string controller = "baseline";
    bool json_out = false;
    std::string out;
    int workers = 0;
};

int cmd_baseline_stats(const StatsArgs& a, std::ostream& out, std::ostream& err) {
    ControllerChoice c;
    try {
        if (a.trials < 0) throw ConfigError("--trials must be non-negative");
        c = parse_controller(a.controller);
        if (c.kind == ControllerKind::Policy) (void)load_policy(c.policy_path);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        const BaselineStats s = baseline_stats(a.trials, static_cast<std::uint64_t>(a.seed), c, {},
                                               ChiefOrbit::circular(), {}, a.workers);
        const std::string text = a.json_out ? baseline_stats_json(s) + "\n" : baseline_stats_table(s);
        out << text;
        if (!a.out.empty()) write_file(a.out, text);
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-agent spacecraft proximity-operations simulator"};
    app.name("proxops");
    app.require_subcommand(1);

    RunArgs ra;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario and write trajectory, metrics and plot data");
    run_cmd->add_option("--scenario", ra.scenario, "Scenario name: single or standoff");
    run_cmd->add_option("--config", ra.config, "JSON configuration file");
    run_cmd->add_option("--rta", ra.rta, "Runtime assurance filter")->check(CLI::IsMember({"on", "off"}));
    run_cmd->add_option("--controller", ra.controller, "baseline or policy:<path>");
    run_cmd->add_option("--plant", ra.plant, "Truth dynamics")->check(CLI::IsMember({"cwh", "nonlinear"}));
    run_cmd->add_option("--seed", ra.seed, "Random seed")->check(CLI::NonNegativeNumber);
    run_cmd->add_option("--control-dt", ra.control_dt, "Control period in seconds")->check(CLI::PositiveNumber);
    run_cmd->add_option("--sim-dt", ra.sim_dt, "Integration step in seconds")->check(CLI::PositiveNumber);
    run_cmd->add_option("--out", ra.out, "Output directory");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train a waypoint policy");
    train_cmd->add_option("--steps", ta.steps, "Total environment steps")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--seed", ta.seed, "Random seed")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--out", ta.out, "Output directory");
    train_cmd->add_option("--resume", ta.resume, "Policy file to continue from");
    train_cmd->add_option("--batch-size", ta.batch_size, "Environment steps per iteration");
    train_cmd->add_option("--minibatch-size", ta.minibatch_size, "Minibatch size");
    train_cmd->add_option("--epochs", ta.epochs, "Epochs per batch");
    train_cmd->add_option("--num-envs", ta.num_envs, "Parallel environment streams");
    train_cmd->add_option("--lr", ta.lr, "Adam learning rate");
    train_cmd->add_option("--eval-episodes", ta.eval_episodes, "Episodes for the final evaluation")
        ->check(CLI::NonNegativeNumber);

    StatsArgs sa;
    auto* stats_cmd = app.add_subcommand("baseline-stats", "Success rate, time and distance over sampled episodes");
    stats_cmd->add_option("--trials", sa.trials, "Number of sampled episodes");
    stats_cmd->add_option("--seed", sa.seed, "Random seed")->check(CLI::NonNegativeNumber);
    stats_cmd->add_option("--controller", sa.controller, "baseline or policy:<path>");
    stats_cmd->add_flag("--json", sa.json_out, "Print JSON instead of a table");
    stats_cmd->add_option("--out", sa.out, "Also write the report to this file");
    stats_cmd->add_option("--workers", sa.workers, "Worker threads (0 = hardware concurrency)");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (run_cmd->parsed()) return cmd_run(ra, out, err);
    if (train_cmd->parsed()) return cmd_train(ta, out, err);
    return cmd_baseline_stats(sa, out, err);
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace proxops
