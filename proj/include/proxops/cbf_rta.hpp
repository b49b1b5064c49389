#pragma once

#include <string>
#include <vector>

#include "proxops/dynamics.hpp"
#include "proxops/qp_solver.hpp"

namespace proxops::rta {

/// Barrier gains and physical limits of the runtime-assurance filter.
struct RtaParams {
    double r_c = 50.0;     // collision radius, m
    double v_c = 3.0;      // speed bound, m/s
    double a_c = 1.732;    // acceleration bound, m/s^2
    double f_c = 1.0;      // per-axis thrust bound, N
    double gamma0 = 0.1;   // 1/s
    double gamma1 = 0.1;   // 1/s
    double gamma2 = 1.0;   // 1/s
    double gamma3 = 1e6;   // slack penalty weight

    void validate() const;
};

/// What one agent knows about itself or a peer at a control tick.
/// `accel_est` is the measured/estimated acceleration (previous tick's realized value).
struct AgentSnapshot {
    int id = 0;  // 0 is the chief
    RelativeState state;
    Vec3 accel_est = Vec3::Zero();
    VehicleParams veh;

    /// Chief at the Hill origin: zero position, velocity and acceleration.
    static AgentSnapshot chief();
    bool is_chief() const { return id == 0; }
};

enum class RowKind { PosPair, PosChief, Vel, Acc, InputAxis };

struct RowLabel {
    RowKind kind = RowKind::Vel;
    int agent = -1;
    int peer = -1;  // PosPair / PosChief
    int axis = -1;  // InputAxis
    int sign = 0;   // InputAxis: +1 bounds +u_k, -1 bounds -u_k

    std::string str() const;
};

/// One relaxed barrier condition, affine in the thrust:
///     offset + coeff_u . u >= phi[slack]
struct ConstraintRow {
    Vec3 coeff_u = Vec3::Zero();
    int slack = 0;
    double offset = 0.0;
    RowLabel label;

    double value(const Vec3& u) const { return offset + coeff_u.dot(u); }
};

// Barrier functions.
double pos_barrier(const Vec3& ri, const Vec3& rj, double r_c);
double pos_barrier_dot(const Vec3& ri, const Vec3& rj, const Vec3& vi, const Vec3& vj);
double vel_barrier(const Vec3& v, double v_c);

/// hddot + (g1 + g0) hdot + g1 g0 h >= phi, with hddot expanded through the
/// CWH drift of agent i and the peer's estimated acceleration.
ConstraintRow pos_hocbf_row(const AgentSnapshot& agent, const AgentSnapshot& peer,
                            const ChiefOrbit& orbit, const RtaParams& p, int slack = 0);

/// bdot + g2 b >= phi with b = (v_c^2 - |v|^2) / 2.
ConstraintRow vel_row(const AgentSnapshot& agent, const ChiefOrbit& orbit, const RtaParams& p,
                      int slack = 1);

/// a_c^2 - accel_est . (f + u/m) >= phi.
ConstraintRow acc_row(const AgentSnapshot& agent, const ChiefOrbit& orbit, const RtaParams& p,
                      int slack = 2);

/// f_c -+ u_k >= phi_k, two rows per axis sharing the axis slack.
std::vector<ConstraintRow> input_rows(const AgentSnapshot& agent, const RtaParams& p,
                                      int first_slack = 3);

/// Minimum-intervention QP over x = [u (3); phi (#peers + 5)].
struct RtaQp {
    qp::Problem problem;
    std::vector<ConstraintRow> rows;  // aligned with problem rows
    int num_slacks = 0;

    int num_vars() const { return 3 + num_slacks; }
};

RtaQp build_qp(const AgentSnapshot& agent, const std::vector<AgentSnapshot>& peers,
               const Vec3& desired, const ChiefOrbit& orbit, const RtaParams& p);

struct RtaDecision {
    Vec3 u_safe = Vec3::Zero();
    Vec3 desired = Vec3::Zero();
    Eigen::VectorXd slacks;     // [phi_pos (per peer), phi_v, phi_a, phi_u1..3]
    std::vector<bool> active;   // per row
    std::vector<double> margins;  // per row: value(u_safe) - phi
    std::vector<RowLabel> labels;
    qp::Status status = qp::Status::Optimal;
    bool fallback = false;    // solver failed, zero thrust applied
    bool intervened = false;  // u_safe differs from desired

    int num_peers() const { return static_cast<int>(slacks.size()) - 5; }
    double slack_vel() const { return slacks(num_peers()); }
    double slack_acc() const { return slacks(num_peers() + 1); }
    double slack_input(int axis) const { return slacks(num_peers() + 2 + axis); }
    /// Position slack with the largest magnitude (0 when no peers).
    double slack_pos() const;
};

RtaDecision filter_one(const AgentSnapshot& agent, const std::vector<AgentSnapshot>& peers,
                       const Vec3& desired, const ChiefOrbit& orbit, const RtaParams& p,
                       const qp::Options& opts = {});

/// Filters every deputy's desired thrust. Each agent solves its own QP with the
/// chief (when `include_chief`) and all other deputies as peers.
std::vector<RtaDecision> filter(const std::vector<AgentSnapshot>& agents,
                                const std::vector<Vec3>& desired, const ChiefOrbit& orbit,
                                const RtaParams& p, bool include_chief = true,
                                const qp::Options& opts = {});

}  // namespace proxops::rta
