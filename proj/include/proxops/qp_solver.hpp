#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace proxops::qp {

/// Strictly convex QP with a diagonal quadratic cost:
///
///     minimize   sum_k weights_k * (x_k - center_k)^2
///     subject to A x <= b
///
/// Problems in this code base are tiny (a handful of thrust and slack
/// variables), so everything is dense.
struct Problem {
    Eigen::VectorXd cost_weights;
    Eigen::VectorXd cost_center;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    Problem() = default;
    explicit Problem(int dim);

    int dim() const { return static_cast<int>(cost_center.size()); }
    int num_rows() const { return static_cast<int>(A.rows()); }

    /// Appends the row `coeffs . x <= rhs`.
    void add_row(const Eigen::VectorXd& coeffs, double rhs);

    double objective(const Eigen::VectorXd& x) const;

    /// Throws std::invalid_argument on non-positive weights or non-finite data.
    void validate() const;
};

enum class Status { Optimal, MaxIter, Infeasible };

std::string_view to_string(Status s);

struct Options {
    double tol = 1e-8;
    int max_iter = 200;
};

struct Solution {
    Eigen::VectorXd x;
    Eigen::VectorXd multipliers;  // one per row, >= 0, for the cost as stated above
    Status status = Status::MaxIter;
    int iterations = 0;
    double kkt_residual = 0.0;
};

/// Dual active-set solve (Goldfarb-Idnani style) that starts from the
/// unconstrained minimum and adds violated rows one at a time, lowest index
/// first. Rows are normalized before solving.
Solution solve(const Problem& qp, const Options& opts = {});

/// Max of the stationarity, primal-violation, dual-sign and complementarity
/// residuals at (x, multipliers).
double kkt_residual(const Problem& qp, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& multipliers);

}  // namespace proxops::qp
