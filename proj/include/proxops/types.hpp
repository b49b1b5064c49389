#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace proxops {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Deputy position/velocity relative to the chief, resolved in Hill's frame
/// (x radial, z along the chief's orbital angular momentum, y completing the triad).
struct RelativeState {
    Vec3 pos = Vec3::Zero();  // m
    Vec3 vel = Vec3::Zero();  // m/s

    bool finite() const { return pos.allFinite() && vel.allFinite(); }
};

/// Thrown when an integration step produces a non-finite state.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown for malformed input files and configurations.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace proxops
