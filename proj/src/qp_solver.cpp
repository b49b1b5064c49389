#include "proxops/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace proxops::qp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Problem::Problem(int dim)
    : cost_weights(VectorXd::Ones(dim)),
      cost_center(VectorXd::Zero(dim)),
      A(0, dim),
      b(0) {}

void Problem::add_row(const VectorXd& coeffs, double rhs) {
    if (coeffs.size() != dim()) throw std::invalid_argument("row length does not match dimension");
    const auto m = A.rows();
    A.conservativeResize(m + 1, dim());
    b.conservativeResize(m + 1);
    A.row(m) = coeffs.transpose();
    b(m) = rhs;
}

double Problem::objective(const VectorXd& x) const {
    return cost_weights.dot((x - cost_center).cwiseAbs2());
}

void Problem::validate() const {
    if (cost_weights.size() != cost_center.size())
        throw std::invalid_argument("cost weights and center differ in size");
    if (A.cols() != dim() || A.rows() != b.size())
        throw std::invalid_argument("constraint matrix shape mismatch");
    if ((cost_weights.array() <= 0.0).any() || !cost_weights.allFinite())
        throw std::invalid_argument("cost weights must be positive");
    if (!cost_center.allFinite() || !A.allFinite() || !b.allFinite())
        throw std::invalid_argument("non-finite problem data");
}

std::string_view to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::MaxIter: return "max_iter";
        case Status::Infeasible: return "infeasible";
    }
    return "unknown";
}

double kkt_residual(const Problem& qp, const VectorXd& x, const VectorXd& lambda) {
    const VectorXd grad = 2.0 * qp.cost_weights.cwiseProduct(x - qp.cost_center);
    double res = 0.0;
    if (qp.num_rows() == 0) return grad.lpNorm<Eigen::Infinity>();
    const VectorXd slack = qp.A * x - qp.b;  // <= 0 when feasible
    res = std::max(res, (grad + qp.A.transpose() * lambda).lpNorm<Eigen::Infinity>());
    res = std::max(res, slack.cwiseMax(0.0).maxCoeff());
    res = std::max(res, (-lambda).cwiseMax(0.0).maxCoeff());
    res = std::max(res, lambda.cwiseProduct(slack).cwiseAbs().maxCoeff());
    return res;
}

namespace {

// Working data in whitened coordinates y = sqrt(w) .* (x - center), where the
// problem reads: minimize 0.5*|y|^2 subject to n_i . y <= d_i with |n_i| = 1.
struct Whitened {
    MatrixXd N;          // normalized rows (one per original row, zero if dropped)
    VectorXd d;
    VectorXd row_scale;  // norm used to normalize each original row
    std::vector<bool> usable;
};

}  // namespace

Solution solve(const Problem& qp, const Options& opts) {
    qp.validate();
    const int n = qp.dim();
    const int m = qp.num_rows();
    const VectorXd sqrt_w = qp.cost_weights.cwiseSqrt();

    Solution sol;
    sol.multipliers = VectorXd::Zero(m);

    Whitened wh{MatrixXd::Zero(m, n), VectorXd::Zero(m), VectorXd::Ones(m),
                std::vector<bool>(static_cast<size_t>(m), true)};
    for (int i = 0; i < m; ++i) {
        const VectorXd row = qp.A.row(i).transpose().cwiseQuotient(sqrt_w);
        const double norm = row.norm();
        const double d = qp.b(i) - qp.A.row(i).dot(qp.cost_center);
        if (norm < 1e-14) {
            // Row without variables: either always satisfied or the problem is empty.
            wh.usable[static_cast<size_t>(i)] = false;
            if (d < -opts.tol) {
                sol.status = Status::Infeasible;
                sol.x = qp.cost_center;
                return sol;
            }
            continue;
        }
        wh.N.row(i) = row.transpose() / norm;
        wh.d(i) = d / norm;
        wh.row_scale(i) = norm;
    }

    VectorXd y = VectorXd::Zero(n);
    std::vector<int> active;
    std::vector<double> mu;  // multipliers of the active rows (whitened problem)
    int iter = 0;
    bool done = false;

    while (!done) {
        int p = -1;
        double vp = 0.0;
        for (int i = 0; i < m; ++i) {
            if (!wh.usable[static_cast<size_t>(i)]) continue;
            if (std::find(active.begin(), active.end(), i) != active.end()) continue;
            const double v = wh.N.row(i).dot(y) - wh.d(i);
            if (v > opts.tol) {
                p = i;
                vp = v;
                break;
            }
        }
        if (p < 0) {
            done = true;
            break;
        }

        double mu_p = 0.0;
        for (;;) {
            if (++iter > opts.max_iter) {
                sol.status = Status::MaxIter;
                sol.iterations = iter - 1;
                sol.x = qp.cost_center + y.cwiseQuotient(sqrt_w);
                return sol;
            }
            const VectorXd np = wh.N.row(p).transpose();
            const int k = static_cast<int>(active.size());
            VectorXd r = VectorXd::Zero(k);
            VectorXd z = -np;
            if (k > 0) {
                MatrixXd M(n, k);
                for (int j = 0; j < k; ++j) M.col(j) = wh.N.row(active[static_cast<size_t>(j)]).transpose();
                r = (M.transpose() * M).ldlt().solve(M.transpose() * np);
                z = -(np - M * r);
            }

            constexpr double inf = std::numeric_limits<double>::infinity();
            double t1 = inf;
            int block = -1;
            for (int j = 0; j < k; ++j) {
                if (r(j) > 1e-14) {
                    const double t = mu[static_cast<size_t>(j)] / r(j);
                    if (t < t1) {
                        t1 = t;
                        block = j;
                    }
                }
            }
            const double zz = z.squaredNorm();
            const double t2 = zz > 1e-20 ? vp / zz : inf;
            const double t = std::min(t1, t2);
            if (t == inf) {
                sol.status = Status::Infeasible;
                sol.iterations = iter;
                sol.x = qp.cost_center + y.cwiseQuotient(sqrt_w);
                return sol;
            }

            if (t2 < inf) y += t * z;
            for (int j = 0; j < k; ++j) mu[static_cast<size_t>(j)] -= t * r(j);
            mu_p += t;

            if (t2 <= t1) {
                active.push_back(p);
                mu.push_back(mu_p);
                break;
            }
            active.erase(active.begin() + block);
            mu.erase(mu.begin() + block);
            vp = np.dot(y) - wh.d(p);
            if (vp <= opts.tol) {
                // The partial step already satisfied the row; keep it only if its multiplier is live.
                if (mu_p > 0.0 && vp > -opts.tol) {
                    active.push_back(p);
                    mu.push_back(mu_p);
                }
                break;
            }
        }
    }

    sol.x = qp.cost_center + y.cwiseQuotient(sqrt_w);
    for (size_t j = 0; j < active.size(); ++j) {
        const int i = active[j];
        sol.multipliers(i) = 2.0 * std::max(mu[j], 0.0) / wh.row_scale(i);
    }
    sol.iterations = iter;
    sol.kkt_residual = kkt_residual(qp, sol.x, sol.multipliers);
    sol.status = Status::Optimal;
    return sol;
}

}  // namespace proxops::qp
