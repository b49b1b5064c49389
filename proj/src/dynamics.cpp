#include "proxops/dynamics.hpp"

#include <cmath>
#include <numbers>

namespace proxops {
namespace {

template <typename State, typename Deriv>
State rk4_step(const State& x, double h, Deriv&& f) {
    const auto k1 = f(x);
    const State x2{x.pos + 0.5 * h * k1.vel, x.vel + 0.5 * h * k1.accel};
    const auto k2 = f(x2);
    const State x3{x.pos + 0.5 * h * k2.vel, x.vel + 0.5 * h * k2.accel};
    const auto k3 = f(x3);
    const State x4{x.pos + h * k3.vel, x.vel + h * k3.accel};
    const auto k4 = f(x4);
    return State{x.pos + h / 6.0 * (k1.vel + 2.0 * k2.vel + 2.0 * k3.vel + k4.vel),
                 x.vel + h / 6.0 * (k1.accel + 2.0 * k2.accel + 2.0 * k3.accel + k4.accel)};
}

void require_step(double dt, int substeps) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
}

}  // namespace

ChiefOrbit ChiefOrbit::circular(double a, double mu, bool j2) {
    ChiefOrbit o;
    o.semi_major_axis = a;
    o.mu = mu;
    o.mean_motion = std::sqrt(mu / (a * a * a));
    o.j2_enabled = j2;
    return o;
}

double ChiefOrbit::period() const { return 2.0 * std::numbers::pi / mean_motion; }

void ChiefOrbit::validate() const {
    if (!(mean_motion > 0.0)) throw std::invalid_argument("mean motion must be positive");
    if (!(semi_major_axis > 0.0)) throw std::invalid_argument("semi-major axis must be positive");
    if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
    const double n = std::sqrt(mu / std::pow(semi_major_axis, 3));
    if (std::abs(n - mean_motion) > 1e-12 * n)
        throw std::invalid_argument("mean motion inconsistent with mu and semi-major axis");
}

void VehicleParams::validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
    if (!(thrust_bound > 0.0)) throw std::invalid_argument("thrust bound must be positive");
}

Vec3 cwh_drift(const RelativeState& s, double n) {
    return Vec3(3.0 * n * n * s.pos.x() + 2.0 * n * s.vel.y(),
                -2.0 * n * s.vel.x(),
                -n * n * s.pos.z());
}

StateDerivative cwh_derivative(const RelativeState& state, const Vec3& thrust,
                               const ChiefOrbit& orbit, const VehicleParams& veh) {
    return {state.vel, cwh_drift(state, orbit.mean_motion) + thrust / veh.mass};
}

RelativeState propagate_cwh(const RelativeState& state, const Vec3& thrust, double dt,
                            int substeps, const ChiefOrbit& orbit, const VehicleParams& veh) {
    require_step(dt, substeps);
    const double h = dt / substeps;
    const auto f = [&](const RelativeState& x) { return cwh_derivative(x, thrust, orbit, veh); };
    RelativeState x = state;
    for (int i = 0; i < substeps; ++i) {
        x = rk4_step(x, h, f);
        if (!x.finite()) throw NumericalError("CWH propagation produced a non-finite state");
    }
    return x;
}

RelativeState cwh_closed_form(const RelativeState& s, double t, double n) {
    const double nt = n * t;
    const double c = std::cos(nt);
    const double sn = std::sin(nt);
    const Vec3& r = s.pos;
    const Vec3& v = s.vel;

    RelativeState out;
    out.pos.x() = (4.0 - 3.0 * c) * r.x() + sn / n * v.x() + 2.0 * (1.0 - c) / n * v.y();
    out.pos.y() = 6.0 * (sn - nt) * r.x() + r.y() + 2.0 * (c - 1.0) / n * v.x() +
                  (4.0 * sn - 3.0 * nt) / n * v.y();
    out.pos.z() = c * r.z() + sn / n * v.z();
    out.vel.x() = 3.0 * n * sn * r.x() + c * v.x() + 2.0 * sn * v.y();
    out.vel.y() = 6.0 * n * (c - 1.0) * r.x() - 2.0 * sn * v.x() + (4.0 * c - 3.0) * v.y();
    out.vel.z() = -n * sn * r.z() + c * v.z();
    return out;
}

StateDerivative two_body_j2_derivative(const InertialState& state, const ChiefOrbit& orbit) {
    const Vec3& r = state.pos;
    const double rn = r.norm();
    if (!(rn > 0.0)) throw std::invalid_argument("two-body dynamics undefined at the origin");
    Vec3 a = -orbit.mu / (rn * rn * rn) * r;
    if (orbit.j2_enabled) {
        const double r2 = rn * rn;
        const double zr2 = r.z() * r.z() / r2;
        const double k = -1.5 * orbit.j2_coefficient * orbit.mu * orbit.body_radius *
                         orbit.body_radius / (r2 * r2 * rn);
        a += k * Vec3(r.x() * (1.0 - 5.0 * zr2), r.y() * (1.0 - 5.0 * zr2),
                      r.z() * (3.0 - 5.0 * zr2));
    }
    return {state.vel, a};
}

InertialState propagate_inertial(const InertialState& state, double dt, int substeps,
                                 const ChiefOrbit& orbit, const Vec3& accel_eci) {
    require_step(dt, substeps);
    const double h = dt / substeps;
    const auto f = [&](const InertialState& x) {
        auto d = two_body_j2_derivative(x, orbit);
        d.accel += accel_eci;
        return d;
    };
    InertialState x = state;
    for (int i = 0; i < substeps; ++i) {
        x = rk4_step(x, h, f);
        if (!x.pos.allFinite() || !x.vel.allFinite())
            throw NumericalError("inertial propagation produced a non-finite state");
    }
    return x;
}

Mat3 hill_rotation(const InertialState& chief) {
    const Vec3 h = chief.pos.cross(chief.vel);
    if (!(chief.pos.norm() > 0.0) || !(h.norm() > 0.0))
        throw std::invalid_argument("degenerate chief state: zero radius or angular momentum");
    const Vec3 x = chief.pos.normalized();
    const Vec3 z = h.normalized();
    const Vec3 y = z.cross(x);
    Mat3 R;
    R.row(0) = x.transpose();
    R.row(1) = y.transpose();
    R.row(2) = z.transpose();
    return R;
}

namespace {
// Angular velocity of the Hill frame, expressed in Hill coordinates.
Vec3 hill_rate(const InertialState& chief) {
    const double r2 = chief.pos.squaredNorm();
    return Vec3(0.0, 0.0, chief.pos.cross(chief.vel).norm() / r2);
}
}  // namespace

RelativeState eci_to_hill(const InertialState& chief, const InertialState& deputy) {
    const Mat3 R = hill_rotation(chief);
    RelativeState rel;
    rel.pos = R * (deputy.pos - chief.pos);
    rel.vel = R * (deputy.vel - chief.vel) - hill_rate(chief).cross(rel.pos);
    return rel;
}

InertialState hill_to_eci(const InertialState& chief, const RelativeState& rel) {
    const Mat3 R = hill_rotation(chief);
    InertialState d;
    d.pos = chief.pos + R.transpose() * rel.pos;
    d.vel = chief.vel + R.transpose() * (rel.vel + hill_rate(chief).cross(rel.pos));
    return d;
}

InertialState circular_chief_state(const ChiefOrbit& orbit, double inclination,
                                   double arg_latitude) {
    const double a = orbit.semi_major_axis;
    const double v = std::sqrt(orbit.mu / a);
    const double cu = std::cos(arg_latitude);
    const double su = std::sin(arg_latitude);
    const double ci = std::cos(inclination);
    const double si = std::sin(inclination);
    InertialState s;
    s.pos = a * Vec3(cu, su * ci, su * si);
    s.vel = v * Vec3(-su, cu * ci, cu * si);
    return s;
}

}  // namespace proxops
