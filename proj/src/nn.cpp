#include <nomahfl/nn.hpp>
#include <cmath>

namespace nomahfl::nn {

std::string to_string(Activation a)
{
    switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    }
    return "linear";
}

Activation activation_from_string(const std::string& name)
{
    if (name == "linear") return Activation::linear;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw config_error("unknown activation '" + name + "'");
}

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation a)
{
    switch (a) {
    case Activation::linear: return pre;
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::tanh: return pre.array().tanh().matrix();
    case Activation::sigmoid: return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    }
    return pre;
}

// d(activation)/d(pre), expressed through the activated output.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& out, Activation a)
{
    switch (a) {
    case Activation::linear: return Eigen::MatrixXd::Ones(out.rows(), out.cols());
    case Activation::relu: return (out.array() > 0).cast<double>().matrix();
    case Activation::tanh: return (1.0 - out.array().square()).matrix();
    case Activation::sigmoid: return (out.array() * (1.0 - out.array())).matrix();
    }
    return Eigen::MatrixXd::Ones(out.rows(), out.cols());
}

}  // namespace

Eigen::VectorXd Gradients::flatten() const
{
    Eigen::Index n = 0;
    for (std::size_t i = 0; i < weight.size(); ++i) n += weight[i].size() + bias[i].size();
    Eigen::VectorXd flat(n);
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < weight.size(); ++i) {
        for (Eigen::Index r = 0; r < weight[i].rows(); ++r) {
            for (Eigen::Index c = 0; c < weight[i].cols(); ++c) flat(k++) = weight[i](r, c);
        }
        for (Eigen::Index r = 0; r < bias[i].size(); ++r) flat(k++) = bias[i](r);
    }
    return flat;
}

DenseNetwork::DenseNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers))
{
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].bias.size() != layers_[i].weight.rows()) {
            throw config_error("bias length must match layer outputs");
        }
        if (i > 0 && layers_[i].inputs() != layers_[i - 1].outputs()) {
            throw config_error("consecutive layer sizes do not chain");
        }
    }
}

DenseNetwork DenseNetwork::make(const std::vector<std::size_t>& sizes,
                                const std::vector<Activation>& activations, rng_t& rng,
                                double final_scale)
{
    if (sizes.size() < 2 || activations.size() != sizes.size() - 1) {
        throw config_error("need one activation per layer");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const auto in = static_cast<Eigen::Index>(sizes[i]);
        const auto out = static_cast<Eigen::Index>(sizes[i + 1]);
        const bool last = i + 2 == sizes.size();
        const double bound = last ? final_scale : 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> u(-bound, bound);
        DenseLayer layer;
        layer.weight.resize(out, in);
        layer.bias.resize(out);
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = u(rng);
        }
        for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = u(rng);
        layer.activation = activations[i];
        layers.push_back(std::move(layer));
    }
    return DenseNetwork(std::move(layers));
}

std::size_t DenseNetwork::input_size() const
{
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().inputs());
}

std::size_t DenseNetwork::output_size() const
{
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().outputs());
}

std::size_t DenseNetwork::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

Eigen::VectorXd DenseNetwork::forward(const Eigen::VectorXd& input) const
{
    Eigen::MatrixXd batch = input;
    return forward(batch).col(0);
}

Eigen::MatrixXd DenseNetwork::forward(const Eigen::MatrixXd& batch) const
{
    if (static_cast<std::size_t>(batch.rows()) != input_size()) {
        throw config_error("input dimension " + std::to_string(batch.rows()) +
                           " does not match network input " + std::to_string(input_size()));
    }
    Eigen::MatrixXd x = batch;
    for (const auto& l : layers_) {
        Eigen::MatrixXd pre = l.weight * x;
        pre.colwise() += l.bias;
        x = activate(pre, l.activation);
    }
    return x;
}

Eigen::MatrixXd DenseNetwork::forward(const Eigen::MatrixXd& batch, Tape& tape) const
{
    if (static_cast<std::size_t>(batch.rows()) != input_size()) {
        throw config_error("input dimension " + std::to_string(batch.rows()) +
                           " does not match network input " + std::to_string(input_size()));
    }
    tape.inputs.clear();
    tape.outputs.clear();
    Eigen::MatrixXd x = batch;
    for (const auto& l : layers_) {
        tape.inputs.push_back(x);
        Eigen::MatrixXd pre = l.weight * x;
        pre.colwise() += l.bias;
        x = activate(pre, l.activation);
        tape.outputs.push_back(x);
    }
    return x;
}

Gradients DenseNetwork::backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                                 Eigen::MatrixXd* grad_input) const
{
    if (tape.inputs.size() != layers_.size()) throw config_error("backward needs a cached forward pass");
    Gradients g;
    g.weight.resize(layers_.size());
    g.bias.resize(layers_.size());
    Eigen::MatrixXd delta = grad_output;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const auto& l = layers_[i];
        delta = delta.cwiseProduct(activation_slope(tape.outputs[i], l.activation));
        g.weight[i] = delta * tape.inputs[i].transpose();
        g.bias[i] = delta.rowwise().sum();
        if (i > 0 || grad_input) delta = l.weight.transpose() * delta;
    }
    if (grad_input) *grad_input = delta;
    return g;
}

Eigen::VectorXd DenseNetwork::parameters() const
{
    Gradients view;
    for (const auto& l : layers_) {
        view.weight.push_back(l.weight);
        view.bias.push_back(l.bias);
    }
    return view.flatten();
}

void DenseNetwork::set_parameters(const Eigen::VectorXd& flat)
{
    if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
        throw config_error("parameter vector has the wrong length");
    }
    Eigen::Index k = 0;
    for (auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat(k++);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat(k++);
    }
}

bool DenseNetwork::same_shape(const DenseNetwork& other) const
{
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].weight.rows() != other.layers_[i].weight.rows() ||
            layers_[i].weight.cols() != other.layers_[i].weight.cols() ||
            layers_[i].activation != other.layers_[i].activation) {
            return false;
        }
    }
    return true;
}

void DenseNetwork::soft_update_from(const DenseNetwork& online, double zeta)
{
    if (!(zeta > 0 && zeta <= 1)) throw config_error("soft update rate must lie in (0, 1]");
    if (!same_shape(online)) throw config_error("soft update between networks of different shape");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].weight = zeta * online.layers_[i].weight + (1 - zeta) * layers_[i].weight;
        layers_[i].bias = zeta * online.layers_[i].bias + (1 - zeta) * layers_[i].bias;
    }
}

Optimizer::Optimizer(const DenseNetwork& net, double learning_rate, bool plain, double beta1,
                     double beta2, double epsilon)
    : lr_(learning_rate), plain_(plain), beta1_(beta1), beta2_(beta2), eps_(epsilon)
{
    for (const auto& l : net.layers()) {
        mw_.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        sw_.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        mb_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
        sb_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
}

void Optimizer::step(DenseNetwork& net, const Gradients& g)
{
    auto& layers = net.layers();
    if (g.weight.size() != layers.size()) throw config_error("gradient does not match the network");
    if (plain_) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            layers[i].weight -= lr_ * g.weight[i];
            layers[i].bias -= lr_ * g.bias[i];
        }
        return;
    }
    ++t_;
    const double c1 = 1 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < layers.size(); ++i) {
        mw_[i] = beta1_ * mw_[i] + (1 - beta1_) * g.weight[i];
        sw_[i] = beta2_ * sw_[i] + (1 - beta2_) * g.weight[i].cwiseAbs2();
        mb_[i] = beta1_ * mb_[i] + (1 - beta1_) * g.bias[i];
        sb_[i] = beta2_ * sb_[i] + (1 - beta2_) * g.bias[i].cwiseAbs2();
        layers[i].weight.array() -=
            lr_ * (mw_[i].array() / c1) / ((sw_[i].array() / c2).sqrt() + eps_);
        layers[i].bias.array() -=
            lr_ * (mb_[i].array() / c1) / ((sb_[i].array() / c2).sqrt() + eps_);
    }
}

}  // namespace nomahfl::nn
