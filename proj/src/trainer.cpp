#include "proxops/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace proxops {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

void TrainerConfig::validate() const {
    if (total_steps < 0) throw std::invalid_argument("total_steps must be non-negative");
    if (batch_size <= 0 || minibatch_size <= 0 || num_envs <= 0 || epochs_per_batch <= 0)
        throw std::invalid_argument("batch sizes, env count and epochs must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("discount must be in (0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("gae_lambda must be in [0, 1]");
    if (!(clip_ratio > 0.0 && clip_ratio < 1.0)) throw std::invalid_argument("clip_ratio must be in (0, 1)");
    if (hidden.empty()) throw std::invalid_argument("at least one hidden layer is required");
}

VectorXd gaussian_logp(const MatrixXd& mean, const MatrixXd& pre, const Vec3& log_std) {
    VectorXd out(mean.cols());
    const Vec3 inv_var = (-2.0 * log_std).array().exp();
    const double norm = log_std.sum() + 3.0 * kHalfLog2Pi;
    for (Eigen::Index i = 0; i < mean.cols(); ++i) {
        const Vec3 d = pre.col(i) - mean.col(i);
        out(i) = -0.5 * d.cwiseAbs2().dot(inv_var) - norm;
    }
    return out;
}

SurrogateGrad clipped_surrogate(const MlpPolicy& policy, const PolicyBatch& batch,
                                double clip, double entropy_coef) {
    const Eigen::Index n = batch.obs.cols();
    Mlp::Cache cache;
    const MatrixXd mean = policy.net.forward_batch(batch.obs, &cache);
    const VectorXd logp = gaussian_logp(mean, batch.pre_actions, policy.log_std);
    const Vec3 inv_var = (-2.0 * policy.log_std).array().exp();

    SurrogateGrad g;
    MatrixXd d_mean = MatrixXd::Zero(3, n);
    double objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ratio = std::exp(logp(i) - batch.old_logp(i));
        const double adv = batch.advantages(i);
        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;
        objective += std::min(unclipped, clipped);
        if (unclipped <= clipped) {
            // d(-ratio*adv/n)/dlogp = -ratio*adv/n
            const double w = -unclipped / static_cast<double>(n);
            const Vec3 diff = batch.pre_actions.col(i) - mean.col(i);
            d_mean.col(i) = w * diff.cwiseProduct(inv_var);
            g.grad_log_std += w * (diff.cwiseAbs2().cwiseProduct(inv_var) - Vec3::Ones());
        }
    }
    const double entropy = policy.log_std.sum() + 3.0 * (0.5 + kHalfLog2Pi);
    g.loss = -objective / static_cast<double>(n) - entropy_coef * entropy;
    g.grad_log_std -= entropy_coef * Vec3::Ones();
    g.grad_net = policy.net.backward(cache, d_mean);
    return g;
}

EvalResult evaluate_policy(const MlpPolicy& policy, const EpisodeConfig& env,
                           const ChiefOrbit& orbit, const VehicleParams& veh, int episodes,
                           std::uint64_t seed) {
    EvalResult r;
    r.episodes = episodes;
    if (episodes <= 0) return r;
    std::mt19937_64 rng(seed);
    int successes = 0;
    double total_return = 0.0, total_time = 0.0;
    for (int e = 0; e < episodes; ++e) {
        const EpisodeStart start = sample_episode(rng, env);
        const WaypointTask task = env.task_for(start.goal);
        RelativeState s = start.initial;
        double t = 0.0, ret = 0.0;
        for (;;) {
            const Vec3 a = policy_act(policy, observe(s, task.goal), ActMode::Deterministic);
            const StepOutcome out = step(s, a, task, env, orbit, veh, t);
            s = out.next_state;
            t += env.dt;
            ret += out.reward;
            if (out.status != EpisodeStatus::Running) {
                if (out.status == EpisodeStatus::Reached) ++successes;
                break;
            }
        }
        total_return += ret;
        total_time += t;
    }
    r.success_rate = static_cast<double>(successes) / episodes;
    r.mean_return = total_return / episodes;
    r.mean_time = total_time / episodes;
    return r;
}

namespace {

struct EnvSlot {
    RelativeState state;
    WaypointTask task;
    double elapsed = 0.0;
    double episode_return = 0.0;
};

void clip_grad(VectorXd& g, double max_norm) {
    const double nrm = g.norm();
    if (max_norm > 0.0 && nrm > max_norm) g *= max_norm / nrm;
}

void check_finite(double v, const char* what, int iteration) {
    if (!std::isfinite(v))
        throw TrainingDivergedError(std::string("training diverged: non-finite ") + what +
                                    " at iteration " + std::to_string(iteration));
}

}  // namespace

TrainResult train(const EpisodeConfig& env, const TrainerConfig& cfg, const ChiefOrbit& orbit,
                  const VehicleParams& veh, const PolicyFile* resume,
                  const TrainProgress& progress) {
    env.validate();
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    TrainResult res;
    std::vector<int> vdims{6};
    vdims.insert(vdims.end(), cfg.hidden.begin(), cfg.hidden.end());
    vdims.push_back(1);
    if (resume) {
        res.policy = resume->policy;
        res.value = resume->value ? *resume->value : Mlp::random(vdims, rng, 1.0);
    } else {
        res.policy = MlpPolicy::make(rng, cfg.hidden);
        res.value = Mlp::random(vdims, rng, 1.0);
    }
    if (cfg.total_steps == 0) return res;

    const int n_actor = res.policy.net.num_params();
    VectorXd actor_params(n_actor + 3);
    actor_params << res.policy.net.params(), res.policy.log_std;
    VectorXd critic_params = res.value.params();
    Adam actor_opt(n_actor + 3, cfg.learning_rate);
    Adam critic_opt(static_cast<int>(critic_params.size()), cfg.learning_rate);

    std::vector<EnvSlot> envs(static_cast<size_t>(cfg.num_envs));
    auto reset = [&](EnvSlot& slot) {
        const EpisodeStart s = sample_episode(rng, env);
        slot.state = s.initial;
        slot.task = env.task_for(s.goal);
        slot.elapsed = 0.0;
        slot.episode_return = 0.0;
    };
    for (auto& e : envs) reset(e);

    const int B = cfg.batch_size;
    MatrixXd obs(6, B), next_obs(6, B), pre(3, B);
    VectorXd rewards(B), logp(B);
    std::vector<int> env_of(static_cast<size_t>(B));
    std::vector<char> terminal(static_cast<size_t>(B)), ends(static_cast<size_t>(B));
    std::normal_distribution<double> gauss(0.0, 1.0);

    long steps_done = 0;
    int iteration = 0;
    const long total_iters = (cfg.total_steps + B - 1) / B;
    while (steps_done < cfg.total_steps) {
        ++iteration;
        // Linear learning-rate decay over the run.
        const double frac = 1.0 - static_cast<double>(iteration - 1) / static_cast<double>(total_iters);
        actor_opt.set_lr(cfg.learning_rate * frac);
        critic_opt.set_lr(cfg.learning_rate * frac);

        CurvePoint pt;
        pt.iteration = iteration;
        int finished = 0, reached = 0;
        double return_sum = 0.0;

        // ---- rollout ----
        for (int t = 0; t < B; ++t) {
            const size_t ei = static_cast<size_t>(t % cfg.num_envs);
            EnvSlot& e = envs[ei];
            const Observation o = observe(e.state, e.task.goal);
            obs.col(t) = o.as_vector();
            const Vec3 mean = policy_mean(res.policy, o);
            if (!mean.allFinite())
                throw TrainingDivergedError("training diverged: non-finite action mean at iteration " +
                                            std::to_string(iteration));
            Vec3 a;
            for (int k = 0; k < 3; ++k) a(k) = mean(k) + std::exp(res.policy.log_std(k)) * gauss(rng);
            pre.col(t) = a;
            const StepOutcome out = step(e.state, a.array().tanh().matrix(), e.task, env, orbit, veh, e.elapsed);
            rewards(t) = out.reward;
            next_obs.col(t) = out.obs.as_vector();
            env_of[static_cast<size_t>(t)] = static_cast<int>(ei);
            e.state = out.next_state;
            e.elapsed += env.dt;
            e.episode_return += out.reward;
            const bool done = out.status != EpisodeStatus::Running;
            terminal[static_cast<size_t>(t)] =
                out.status == EpisodeStatus::Reached || out.status == EpisodeStatus::OutOfBounds;
            ends[static_cast<size_t>(t)] = done;
            if (done) {
                ++finished;
                return_sum += e.episode_return;
                if (out.status == EpisodeStatus::Reached) ++reached;
                reset(e);
            }
        }
        // Trailing step of each env is a truncation point.
        for (int ei = 0; ei < cfg.num_envs && ei < B; ++ei) {
            int last = B - 1 - ((B - 1 - ei) % cfg.num_envs);
            ends[static_cast<size_t>(last)] = 1;
        }
        steps_done += B;
        logp = gaussian_logp(res.policy.net.forward_batch(obs), pre, res.policy.log_std);

        // ---- advantages (GAE, per env stream) ----
        const VectorXd values = res.value.forward_batch(obs).row(0).transpose();
        const VectorXd next_values = res.value.forward_batch(next_obs).row(0).transpose();
        VectorXd adv(B), returns(B);
        std::vector<double> carry(static_cast<size_t>(cfg.num_envs), 0.0);
        for (int t = B - 1; t >= 0; --t) {
            const size_t ei = static_cast<size_t>(env_of[static_cast<size_t>(t)]);
            const double nv = terminal[static_cast<size_t>(t)] ? 0.0 : next_values(t);
            const double delta = rewards(t) + cfg.discount * nv - values(t);
            const double cont = ends[static_cast<size_t>(t)] ? 0.0 : 1.0;
            carry[ei] = delta + cfg.discount * cfg.gae_lambda * cont * carry[ei];
            adv(t) = carry[ei];
        }
        returns = adv + values;
        const double adv_mean = adv.mean();
        const double adv_std = std::sqrt((adv.array() - adv_mean).square().mean()) + 1e-8;
        const VectorXd adv_n = (adv.array() - adv_mean) / adv_std;

        // ---- updates ----
        std::vector<int> idx(static_cast<size_t>(B));
        std::iota(idx.begin(), idx.end(), 0);
        double pl_sum = 0.0, vl_sum = 0.0;
        int n_mb = 0;
        for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
            std::shuffle(idx.begin(), idx.end(), rng);
            for (int s0 = 0; s0 < B; s0 += cfg.minibatch_size) {
                const int m = std::min(cfg.minibatch_size, B - s0);
                PolicyBatch mb;
                mb.obs.resize(6, m);
                mb.pre_actions.resize(3, m);
                mb.old_logp.resize(m);
                mb.advantages.resize(m);
                VectorXd ret_mb(m);
                for (int k = 0; k < m; ++k) {
                    const int i = idx[static_cast<size_t>(s0 + k)];
                    mb.obs.col(k) = obs.col(i);
                    mb.pre_actions.col(k) = pre.col(i);
                    mb.old_logp(k) = logp(i);
                    mb.advantages(k) = adv_n(i);
                    ret_mb(k) = returns(i);
                }
                SurrogateGrad sg = clipped_surrogate(res.policy, mb, cfg.clip_ratio, cfg.entropy_coef);
                check_finite(sg.loss, "policy loss", iteration);
                VectorXd ga(n_actor + 3);
                ga << sg.grad_net, sg.grad_log_std;
                clip_grad(ga, cfg.max_grad_norm);
                actor_opt.step(actor_params, ga);
                res.policy.net.set_params(actor_params.head(n_actor));
                res.policy.log_std = actor_params.tail<3>().cwiseMax(-5.0).cwiseMin(1.0);
                actor_params.tail<3>() = res.policy.log_std;

                Mlp::Cache vc;
                const MatrixXd v = res.value.forward_batch(mb.obs, &vc);
                const VectorXd err = v.row(0).transpose() - ret_mb;
                const double vloss = 0.5 * err.squaredNorm() / m;
                check_finite(vloss, "value loss", iteration);
                MatrixXd dv = err.transpose() / static_cast<double>(m);
                VectorXd gv = res.value.backward(vc, dv);
                clip_grad(gv, cfg.max_grad_norm);
                critic_opt.step(critic_params, gv);
                res.value.set_params(critic_params);

                pl_sum += sg.loss;
                vl_sum += vloss;
                ++n_mb;
            }
        }
        if (!actor_params.allFinite() || !critic_params.allFinite())
            throw TrainingDivergedError("training diverged: non-finite parameters at iteration " +
                                        std::to_string(iteration));

        pt.env_steps = steps_done;
        pt.episodes = finished;
        pt.mean_return = finished > 0 ? return_sum / finished : std::numeric_limits<double>::quiet_NaN();
        pt.success_rate = finished > 0 ? static_cast<double>(reached) / finished : 0.0;
        pt.policy_loss = pl_sum / std::max(n_mb, 1);
        pt.value_loss = vl_sum / std::max(n_mb, 1);
        res.curve.push_back(pt);
        if (progress) progress(pt);
    }
    return res;
}

}  // namespace proxops
