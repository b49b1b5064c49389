#include "proxops/cbf_rta.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace proxops::rta {

void RtaParams::validate() const {
    for (double v : {r_c, v_c, a_c, f_c, gamma0, gamma1, gamma2, gamma3})
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("RTA parameters must be finite and strictly positive");
}

AgentSnapshot AgentSnapshot::chief() { return AgentSnapshot{}; }

std::string RowLabel::str() const {
    std::ostringstream os;
    switch (kind) {
        case RowKind::PosPair: os << "pos(" << agent << "," << peer << ")"; break;
        case RowKind::PosChief: os << "pos(" << agent << ",chief)"; break;
        case RowKind::Vel: os << "vel(" << agent << ")"; break;
        case RowKind::Acc: os << "acc(" << agent << ")"; break;
        case RowKind::InputAxis:
            os << "input(" << agent << "," << axis << (sign > 0 ? ",+" : ",-") << ")";
            break;
    }
    return os.str();
}

double pos_barrier(const Vec3& ri, const Vec3& rj, double r_c) {
    const Vec3 d = ri - rj;
    return 0.5 * (d.dot(d) - r_c * r_c);
}

double pos_barrier_dot(const Vec3& ri, const Vec3& rj, const Vec3& vi, const Vec3& vj) {
    return (ri - rj).dot(vi - vj);
}

double vel_barrier(const Vec3& v, double v_c) { return 0.5 * (v_c * v_c - v.dot(v)); }

ConstraintRow pos_hocbf_row(const AgentSnapshot& agent, const AgentSnapshot& peer,
                            const ChiefOrbit& orbit, const RtaParams& p, int slack) {
    const Vec3 dr = agent.state.pos - peer.state.pos;
    const Vec3 dv = agent.state.vel - peer.state.vel;
    const Vec3 drift = cwh_drift(agent.state, orbit.mean_motion);
    const double h = pos_barrier(agent.state.pos, peer.state.pos, p.r_c);
    const double hdot = dr.dot(dv);

    ConstraintRow row;
    row.coeff_u = dr / agent.veh.mass;
    row.offset = dv.squaredNorm() - dr.dot(peer.accel_est) + dr.dot(drift) +
                 (p.gamma1 + p.gamma0) * hdot + p.gamma1 * p.gamma0 * h;
    row.slack = slack;
    row.label = {peer.is_chief() ? RowKind::PosChief : RowKind::PosPair, agent.id, peer.id};
    return row;
}

ConstraintRow vel_row(const AgentSnapshot& agent, const ChiefOrbit& orbit, const RtaParams& p,
                      int slack) {
    const Vec3& v = agent.state.vel;
    ConstraintRow row;
    row.coeff_u = -v / agent.veh.mass;
    row.offset = -v.dot(cwh_drift(agent.state, orbit.mean_motion)) + p.gamma2 * vel_barrier(v, p.v_c);
    row.slack = slack;
    row.label = {RowKind::Vel, agent.id};
    return row;
}

ConstraintRow acc_row(const AgentSnapshot& agent, const ChiefOrbit& orbit, const RtaParams& p,
                      int slack) {
    const Vec3& a = agent.accel_est;
    ConstraintRow row;
    row.coeff_u = -a / agent.veh.mass;
    row.offset = p.a_c * p.a_c - a.dot(cwh_drift(agent.state, orbit.mean_motion));
    row.slack = slack;
    row.label = {RowKind::Acc, agent.id};
    return row;
}

std::vector<ConstraintRow> input_rows(const AgentSnapshot& agent, const RtaParams& p,
                                      int first_slack) {
    std::vector<ConstraintRow> rows;
    rows.reserve(6);
    for (int k = 0; k < 3; ++k) {
        for (int sign : {+1, -1}) {
            ConstraintRow row;
            row.coeff_u = Vec3::Zero();
            row.coeff_u(k) = -sign;
            row.offset = p.f_c;
            row.slack = first_slack + k;
            row.label = {RowKind::InputAxis, agent.id, -1, k, sign};
            rows.push_back(row);
        }
    }
    return rows;
}

RtaQp build_qp(const AgentSnapshot& agent, const std::vector<AgentSnapshot>& peers,
               const Vec3& desired, const ChiefOrbit& orbit, const RtaParams& p) {
    const int np = static_cast<int>(peers.size());
    RtaQp out;
    out.num_slacks = np + 5;
    const int nv = out.num_vars();

    for (int j = 0; j < np; ++j)
        out.rows.push_back(pos_hocbf_row(agent, peers[static_cast<size_t>(j)], orbit, p, j));
    out.rows.push_back(vel_row(agent, orbit, p, np));
    out.rows.push_back(acc_row(agent, orbit, p, np + 1));
    for (auto& r : input_rows(agent, p, np + 2)) out.rows.push_back(r);

    out.problem = qp::Problem(nv);
    out.problem.cost_weights.tail(out.num_slacks).setConstant(p.gamma3);
    out.problem.cost_center.head<3>() = desired;
    // offset + c.u >= phi   <=>   -c.u + phi <= offset
    for (const auto& r : out.rows) {
        Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(nv);
        coeffs.head<3>() = -r.coeff_u;
        coeffs(3 + r.slack) = 1.0;
        out.problem.add_row(coeffs, r.offset);
    }
    return out;
}

double RtaDecision::slack_pos() const {
    double best = 0.0;
    for (int j = 0; j < num_peers(); ++j)
        if (std::abs(slacks(j)) > std::abs(best)) best = slacks(j);
    return best;
}

RtaDecision filter_one(const AgentSnapshot& agent, const std::vector<AgentSnapshot>& peers,
                       const Vec3& desired, const ChiefOrbit& orbit, const RtaParams& p,
                       const qp::Options& opts) {
    const RtaQp q = build_qp(agent, peers, desired, orbit, p);
    const qp::Solution sol = qp::solve(q.problem, opts);

    RtaDecision d;
    d.desired = desired;
    d.status = sol.status;
    d.slacks = Eigen::VectorXd::Zero(q.num_slacks);
    if (sol.status == qp::Status::Optimal) {
        d.u_safe = sol.x.head<3>();
        d.slacks = sol.x.tail(q.num_slacks);
    } else {
        d.u_safe = Vec3::Zero();
        d.fallback = true;
    }
    const int nr = static_cast<int>(q.rows.size());
    d.active.resize(static_cast<size_t>(nr));
    d.margins.resize(static_cast<size_t>(nr));
    d.labels.resize(static_cast<size_t>(nr));
    for (int i = 0; i < nr; ++i) {
        const auto& r = q.rows[static_cast<size_t>(i)];
        const double margin = r.value(d.u_safe) - d.slacks(r.slack);
        d.margins[static_cast<size_t>(i)] = margin;
        d.labels[static_cast<size_t>(i)] = r.label;
        d.active[static_cast<size_t>(i)] =
            !d.fallback && (sol.multipliers(i) > 0.0 || std::abs(margin) <= 1e-6);
    }
    d.intervened = d.fallback || (d.u_safe - desired).lpNorm<Eigen::Infinity>() > 1e-6;
    return d;
}

std::vector<RtaDecision> filter(const std::vector<AgentSnapshot>& agents,
                                const std::vector<Vec3>& desired, const ChiefOrbit& orbit,
                                const RtaParams& p, bool include_chief, const qp::Options& opts) {
    if (agents.size() != desired.size())
        throw std::invalid_argument("agents and desired actions must be aligned");
    std::vector<RtaDecision> out;
    out.reserve(agents.size());
    for (size_t i = 0; i < agents.size(); ++i) {
        std::vector<AgentSnapshot> peers;
        if (include_chief) peers.push_back(AgentSnapshot::chief());
        for (size_t j = 0; j < agents.size(); ++j)
            if (j != i) peers.push_back(agents[j]);
        out.push_back(filter_one(agents[i], peers, desired[i], orbit, p, opts));
    }
    return out;
}

}  // namespace proxops::rta
