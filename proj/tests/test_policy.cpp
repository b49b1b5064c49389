#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "proxops/policy.hpp"

using namespace proxops;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("proxops_test_" + name);
}

Observation random_obs(std::mt19937_64& rng, double pos_scale = 1.0, double vel_scale = 5.0) {
    std::uniform_real_distribution<double> u(-1, 1);
    return {pos_scale * Vec3(u(rng), u(rng), u(rng)), vel_scale * Vec3(u(rng), u(rng), u(rng))};
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("baseline examples") {
    CHECK(baseline_act(Observation{}).norm() == 0.0);
    Observation far;
    far.scaled_delta = Vec3(-0.5, 0, 0);  // goal 500 m along +x
    CHECK(baseline_act(far).x() > 0.0);

    std::mt19937_64 rng(1);
    for (int i = 0; i < 10000; ++i) {
        const Vec3 a = baseline_act(random_obs(rng));
        CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
    }
}

TEST_CASE("baseline command respects the variable speed limit") {
    // At rest with the goal 10 m away neither speed limit binds: a = -kp * delta.
    const BaselineGains g;
    Observation o;
    o.scaled_delta = Vec3(0.01, 0, 0);
    CHECK(baseline_act(o, g).x() == doctest::Approx(-g.kp * 10.0));
    // Far away the absolute cap binds.
    o.scaled_delta = Vec3(0, 0.5, 0);
    CHECK(baseline_act(o, g).y() == doctest::Approx(-g.kv * g.speed_cap));
    // A tight distance-proportional limit binds close in.
    BaselineGains tight = g;
    tight.speed_limit_gain = 0.01;
    o.scaled_delta = Vec3(0, 0, -0.01);
    CHECK(baseline_act(o, tight).z() == doctest::Approx(g.kv * 0.01 * 10.0));

    BaselineGains bad;
    bad.kp = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("baseline reaches sampled waypoints within the timeout") {
    const EpisodeConfig cfg;
    const ChiefOrbit orbit = ChiefOrbit::circular();
    const VehicleParams veh;
    std::mt19937_64 rng(2024);
    for (int e = 0; e < 50; ++e) {
        const EpisodeStart st = sample_episode(rng, cfg);
        const WaypointTask task = cfg.task_for(st.goal);
        RelativeState s = st.initial;
        double t = 0.0;
        EpisodeStatus status = EpisodeStatus::Running;
        while (status == EpisodeStatus::Running) {
            const StepOutcome o = step(s, baseline_act(observe(s, task.goal)), task, cfg, orbit, veh, t);
            s = o.next_state;
            status = o.status;
            t += cfg.dt;
        }
        CHECK(status == EpisodeStatus::Reached);
    }
}

TEST_CASE("MLP policy actions") {
    const MlpPolicy zero = MlpPolicy::zeros();
    std::mt19937_64 rng(5);
    CHECK(policy_act(zero, random_obs(rng), ActMode::Deterministic).norm() == 0.0);

    const MlpPolicy p = MlpPolicy::make(rng);
    const Observation o = random_obs(rng);
    CHECK(policy_act(p, o, ActMode::Deterministic) == policy_act(p, o, ActMode::Deterministic));

    for (int i = 0; i < 10000; ++i) {
        const Vec3 a = policy_act(p, random_obs(rng), ActMode::Stochastic, &rng);
        CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
    }
    CHECK_THROWS_AS(policy_act(p, o, ActMode::Stochastic, nullptr), std::invalid_argument);
    CHECK_THROWS_AS(policy_act(p, Eigen::VectorXd::Zero(5), ActMode::Deterministic), std::invalid_argument);
    const Eigen::VectorXd raw = o.as_vector();
    CHECK(policy_act(p, raw, ActMode::Deterministic) == policy_act(p, o, ActMode::Deterministic));
}

TEST_CASE("MLP backward matches finite differences") {
    std::mt19937_64 rng(9);
    Mlp net = Mlp::random({6, 8, 5, 3}, rng, 0.7);
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(6, 4);
    Eigen::MatrixXd W = Eigen::MatrixXd::Random(3, 4);  // loss = sum(W .* Y)
    Mlp::Cache cache;
    net.forward_batch(X, &cache);
    const Eigen::VectorXd g = net.backward(cache, W);

    const Eigen::VectorXd p0 = net.params();
    const double h = 1e-6;
    for (int k = 0; k < p0.size(); ++k) {
        Eigen::VectorXd p = p0;
        p(k) += h;
        net.set_params(p);
        const double lp = (W.array() * net.forward_batch(X).array()).sum();
        p(k) -= 2 * h;
        net.set_params(p);
        const double lm = (W.array() * net.forward_batch(X).array()).sum();
        CHECK(g(k) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-5));
    }
    net.set_params(p0);
    CHECK(net.params() == p0);
}

TEST_CASE("policy file round trip") {
    std::mt19937_64 rng(12);
    MlpPolicy p = MlpPolicy::make(rng);
    p.log_std = Vec3(-0.3, -0.7, 0.1);
    const Mlp critic = Mlp::random({6, 64, 64, 1}, rng);
    const fs::path path = temp_path("roundtrip.json");
    save_policy(path, p, &critic);
    const PolicyFile f = load_policy(path);
    CHECK(f.policy.log_std == p.log_std);
    REQUIRE(f.value.has_value());
    CHECK(f.value->params() == critic.params());
    for (int i = 0; i < 100; ++i) {
        const Observation o = random_obs(rng);
        CHECK(policy_act(f.policy, o, ActMode::Deterministic) == policy_act(p, o, ActMode::Deterministic));
    }
    fs::remove(path);
}

TEST_CASE("malformed policy files") {
    std::mt19937_64 rng(13);
    const MlpPolicy p = MlpPolicy::make(rng);
    const fs::path path = temp_path("malformed.json");
    save_policy(path, p);
    std::string text;
    {
        std::ifstream in(path);
        text.assign(std::istreambuf_iterator<char>(in), {});
    }

    {
        std::ofstream out(path);
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(load_policy(path), ParseError);

    std::string bumped = text;
    const auto pos = bumped.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    bumped.replace(pos, 12, "\"version\": 7");
    {
        std::ofstream out(path);
        out << bumped;
    }
    CHECK_THROWS_AS(load_policy(path), UnsupportedVersionError);

    CHECK_THROWS_AS(load_policy(temp_path("does_not_exist.json")), ParseError);
    fs::remove(path);
}

}  // TEST_SUITE
