#pragma once

#include "proxops/types.hpp"

namespace proxops {

inline constexpr double kEarthMu = 3.986004418e14;      // m^3/s^2
inline constexpr double kEarthRadius = 6378137.0;       // m
inline constexpr double kEarthJ2 = 1.08262668e-3;
inline constexpr double kDefaultSemiMajorAxis = 6878137.0;  // ~500 km altitude

/// Circular chief orbit that parameterizes both the linearized relative
/// dynamics (through the mean motion) and the nonlinear reference propagator.
struct ChiefOrbit {
    double mean_motion = 0.0;      // rad/s
    double semi_major_axis = 0.0;  // m
    double mu = kEarthMu;          // m^3/s^2
    bool j2_enabled = false;
    double j2_coefficient = kEarthJ2;
    double body_radius = kEarthRadius;  // m

    /// Circular orbit of radius `a`; mean motion follows from Kepler's third law.
    static ChiefOrbit circular(double a = kDefaultSemiMajorAxis, double mu = kEarthMu,
                               bool j2 = false);

    double period() const;
    void validate() const;
};

struct VehicleParams {
    double mass = 1.0;          // kg
    double thrust_bound = 1.0;  // N, per axis

    void validate() const;
};

struct InertialState {
    Vec3 pos = Vec3::Zero();  // m, ECI
    Vec3 vel = Vec3::Zero();  // m/s, ECI
};

struct StateDerivative {
    Vec3 vel;
    Vec3 accel;
};

/// Unforced CWH acceleration (the drift term f(δr, δṙ)).
Vec3 cwh_drift(const RelativeState& state, double mean_motion);

StateDerivative cwh_derivative(const RelativeState& state, const Vec3& thrust,
                               const ChiefOrbit& orbit, const VehicleParams& veh);

/// Fixed-step RK4 over `dt` split into `substeps`, thrust held constant.
/// Throws NumericalError if the state stops being finite.
RelativeState propagate_cwh(const RelativeState& state, const Vec3& thrust, double dt,
                            int substeps, const ChiefOrbit& orbit, const VehicleParams& veh);

/// Analytic unforced CWH solution (state transition matrix applied to `state`).
RelativeState cwh_closed_form(const RelativeState& state, double dt, double mean_motion);

/// Point-mass gravity plus first-order J2 oblateness when enabled.
StateDerivative two_body_j2_derivative(const InertialState& state, const ChiefOrbit& orbit);

/// RK4 propagation of an inertial state; `accel_eci` is an extra constant
/// acceleration (e.g. thrust already divided by mass) held over the interval.
InertialState propagate_inertial(const InertialState& state, double dt, int substeps,
                                 const ChiefOrbit& orbit, const Vec3& accel_eci = Vec3::Zero());

/// Rows are the Hill axes (radial, along-track, orbit normal) expressed in ECI.
Mat3 hill_rotation(const InertialState& chief);

RelativeState eci_to_hill(const InertialState& chief, const InertialState& deputy);
InertialState hill_to_eci(const InertialState& chief, const RelativeState& rel);

/// Chief on a circular orbit of the given radius, inclination and argument of
/// latitude (right ascension of the ascending node fixed at zero).
InertialState circular_chief_state(const ChiefOrbit& orbit, double inclination = 0.0,
                                   double arg_latitude = 0.0);

}  // namespace proxops
