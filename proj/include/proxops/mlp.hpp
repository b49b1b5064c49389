#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

namespace proxops {

/// Fully connected network with tanh hidden layers and a linear output layer.
/// Batched calls take one sample per column.
class Mlp {
public:
    struct Cache {
        std::vector<Eigen::MatrixXd> activations;  // input, each hidden output, final output
    };

    Mlp() = default;
    /// Zero-initialized network.
    explicit Mlp(std::vector<int> layer_dims);

    /// Scaled-Gaussian init; the output layer is additionally scaled by `output_gain`.
    static Mlp random(std::vector<int> layer_dims, std::mt19937_64& rng, double output_gain = 1.0);

    const std::vector<int>& layer_dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int num_layers() const { return static_cast<int>(weights_.size()); }
    int num_params() const;

    const Eigen::MatrixXd& weights(int layer) const { return weights_[static_cast<size_t>(layer)]; }
    const Eigen::VectorXd& bias(int layer) const { return biases_[static_cast<size_t>(layer)]; }
    Eigen::MatrixXd& weights(int layer) { return weights_[static_cast<size_t>(layer)]; }
    Eigen::VectorXd& bias(int layer) { return biases_[static_cast<size_t>(layer)]; }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X, Cache* cache = nullptr) const;

    /// Gradient of sum(dL/dY .* Y) with respect to the flattened parameters,
    /// given the cache of the forward pass that produced Y.
    Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& dY) const;

    /// Flattened parameters: per layer, weights (row-major) then bias.
    Eigen::VectorXd params() const;
    void set_params(const Eigen::VectorXd& p);

private:
    std::vector<int> dims_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

/// Adam over a flat parameter vector.
class Adam {
public:
    explicit Adam(int n, double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
    void set_lr(double lr) { lr_ = lr; }

private:
    Eigen::VectorXd m_, v_;
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
};

}  // namespace proxops
