#pragma once
#include <nomahfl/common.hpp>
#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace nomahfl::nn {

enum class Activation { linear, relu, tanh, sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
    Activation activation = Activation::linear;

    Eigen::Index inputs() const { return weight.cols(); }
    Eigen::Index outputs() const { return weight.rows(); }
};

struct Gradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;

    Eigen::VectorXd flatten() const;
};

// Values cached by a batched forward pass; columns are samples.
struct Tape {
    std::vector<Eigen::MatrixXd> inputs;  // input of each layer
    std::vector<Eigen::MatrixXd> outputs; // activated output of each layer
};

class DenseNetwork {
public:
    DenseNetwork() = default;
    explicit DenseNetwork(std::vector<DenseLayer> layers);

    // Fan-in uniform initialisation, U(-1/sqrt(in), 1/sqrt(in)); the last
    // layer uses +-final_scale so bounded outputs start near the centre.
    static DenseNetwork make(const std::vector<std::size_t>& sizes,
                             const std::vector<Activation>& activations, rng_t& rng,
                             double final_scale = 3e-3);

    Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& batch) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& batch, Tape& tape) const;

    // Reverse pass for dL/d(output) given column-wise; optionally returns dL/d(input).
    Gradients backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                       Eigen::MatrixXd* grad_input = nullptr) const;

    std::size_t input_size() const;
    std::size_t output_size() const;
    std::size_t parameter_count() const;

    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& flat);

    // theta' <- zeta theta + (1 - zeta) theta'
    void soft_update_from(const DenseNetwork& online, double zeta);

    bool same_shape(const DenseNetwork& other) const;

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }

private:
    std::vector<DenseLayer> layers_;
};

/*
 * Adam: m <- b1 m + (1 - b1) g, s <- b2 s + (1 - b2) g^2,
 * theta <- theta - lr * m_hat / (sqrt(s_hat) + eps) with bias-corrected
 * m_hat = m / (1 - b1^t), s_hat = s / (1 - b2^t).
 * With `plain` set it takes theta <- theta - lr * g instead.
 */
class Optimizer {
public:
    Optimizer() = default;
    Optimizer(const DenseNetwork& net, double learning_rate, bool plain = false,
              double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

    void step(DenseNetwork& net, const Gradients& grads);

    double learning_rate() const { return lr_; }

private:
    double lr_ = 1e-3;
    bool plain_ = false;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::vector<Eigen::MatrixXd> mw_, sw_;
    std::vector<Eigen::VectorXd> mb_, sb_;
};

}  // namespace nomahfl::nn
