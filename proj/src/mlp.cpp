#include "proxops/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace proxops {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Mlp::Mlp(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
    if (dims_.size() < 2) throw std::invalid_argument("an MLP needs at least two layer sizes");
    for (int d : dims_)
        if (d <= 0) throw std::invalid_argument("layer sizes must be positive");
    for (size_t l = 0; l + 1 < dims_.size(); ++l) {
        weights_.push_back(MatrixXd::Zero(dims_[l + 1], dims_[l]));
        biases_.push_back(VectorXd::Zero(dims_[l + 1]));
    }
}

Mlp Mlp::random(std::vector<int> layer_dims, std::mt19937_64& rng, double output_gain) {
    Mlp net(std::move(layer_dims));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int l = 0; l < net.num_layers(); ++l) {
        auto& W = net.weights(l);
        double scale = 1.0 / std::sqrt(static_cast<double>(W.cols()));
        if (l + 1 == net.num_layers()) scale *= output_gain;
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = scale * gauss(rng);
    }
    return net;
}

int Mlp::num_params() const {
    int n = 0;
    for (size_t l = 0; l < weights_.size(); ++l)
        n += static_cast<int>(weights_[l].size() + biases_[l].size());
    return n;
}

VectorXd Mlp::forward(const VectorXd& x) const {
    if (x.size() != input_dim()) throw std::invalid_argument("MLP input dimension mismatch");
    VectorXd a = x;
    for (int l = 0; l < num_layers(); ++l) {
        VectorXd z = weights(l) * a + bias(l);
        a = (l + 1 < num_layers()) ? VectorXd(z.array().tanh()) : z;
    }
    return a;
}

MatrixXd Mlp::forward_batch(const MatrixXd& X, Cache* cache) const {
    if (X.rows() != input_dim()) throw std::invalid_argument("MLP input dimension mismatch");
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(X);
    }
    MatrixXd a = X;
    for (int l = 0; l < num_layers(); ++l) {
        MatrixXd z = weights(l) * a;
        z.colwise() += bias(l);
        if (l + 1 < num_layers()) z = z.array().tanh().matrix();
        a = std::move(z);
        if (cache) cache->activations.push_back(a);
    }
    return a;
}

VectorXd Mlp::backward(const Cache& cache, const MatrixXd& dY) const {
    VectorXd grad(num_params());
    // Offsets of each layer's block in the flat vector.
    std::vector<int> offset(static_cast<size_t>(num_layers()));
    int off = 0;
    for (int l = 0; l < num_layers(); ++l) {
        offset[static_cast<size_t>(l)] = off;
        off += static_cast<int>(weights(l).size() + bias(l).size());
    }
    MatrixXd delta = dY;  // dL/dz for the current layer
    for (int l = num_layers() - 1; l >= 0; --l) {
        const MatrixXd& input = cache.activations[static_cast<size_t>(l)];
        const MatrixXd gW = delta * input.transpose();
        const VectorXd gb = delta.rowwise().sum();
        int o = offset[static_cast<size_t>(l)];
        for (Eigen::Index i = 0; i < gW.rows(); ++i)
            for (Eigen::Index j = 0; j < gW.cols(); ++j) grad(o++) = gW(i, j);
        grad.segment(o, gb.size()) = gb;
        if (l > 0) {
            // input is the tanh output of layer l-1: d tanh = 1 - a^2
            delta = (weights(l).transpose() * delta).array() * (1.0 - input.array().square());
        }
    }
    return grad;
}

VectorXd Mlp::params() const {
    VectorXd p(num_params());
    int o = 0;
    for (int l = 0; l < num_layers(); ++l) {
        const auto& W = weights(l);
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) p(o++) = W(i, j);
        p.segment(o, bias(l).size()) = bias(l);
        o += static_cast<int>(bias(l).size());
    }
    return p;
}

void Mlp::set_params(const VectorXd& p) {
    if (p.size() != num_params()) throw std::invalid_argument("parameter vector size mismatch");
    int o = 0;
    for (int l = 0; l < num_layers(); ++l) {
        auto& W = weights(l);
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = p(o++);
        bias(l) = p.segment(o, bias(l).size());
        o += static_cast<int>(bias(l).size());
    }
}

Adam::Adam(int n, double lr, double beta1, double beta2, double eps)
    : m_(VectorXd::Zero(n)), v_(VectorXd::Zero(n)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

void Adam::step(VectorXd& params, const VectorXd& grad) {
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * grad;
    v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace proxops
