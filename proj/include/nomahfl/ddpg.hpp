#pragma once
#include <nomahfl/common.hpp>
#include <nomahfl/cost.hpp>
#include <nomahfl/nn.hpp>
#include <Eigen/Core>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nomahfl::ddpg {

struct Transition {
    Eigen::VectorXd state;
    Eigen::VectorXd action;  // raw actor output in [-1, 1]
    double reward = 0;
    Eigen::VectorXd next_state;
};

// Fixed-capacity ring buffer; the oldest transition is overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return data_.at(i); }

    // Uniform over stored transitions, distinct indices within one batch.
    std::vector<std::size_t> sample_indices(std::size_t batch, rng_t& rng) const;
    std::vector<const Transition*> sample(std::size_t batch, rng_t& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

struct ActionBounds {
    double p_min = 0.01, p_max = 0.1;  // watts
    double f_min = 1e9, f_max = 10e9;  // hertz
    void validate() const;
};

struct Allocation {
    std::vector<double> power;
    std::vector<double> frequency;
};

// Clip raw to [-1, 1] and map affinely onto [lo, hi].
double to_range(double raw, double lo, double hi);

// First half of `raw` drives powers, second half frequencies, one entry per slot.
Allocation map_action(const Eigen::VectorXd& raw, const ActionBounds& bounds);

// Raw per-slot observation: channel gain to the serving edge and dataset size.
struct MdpState {
    std::vector<double> gains;
    std::vector<double> data_sizes;
    std::vector<bool> occupied;  // empty slots carry zeros
};

/*
 * Gains enter in dB standardised with running mean and variance (Welford),
 * dataset sizes divided by the largest one seen. Statistics stop moving
 * once frozen.
 */
class StateEncoder {
public:
    explicit StateEncoder(std::size_t slots = 0);

    void observe(const MdpState& s);
    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }
    Eigen::VectorXd encode(const MdpState& s) const;

    std::size_t slots() const { return slots_; }
    std::size_t dimension() const { return 2 * slots_; }

    // mean, variance, count, max size; for serialisation
    double mean_db() const { return mean_; }
    double var_db() const;
    double max_size() const { return max_size_; }
    void restore(double mean, double var, long count, double max_size);

private:
    std::size_t slots_;
    long count_ = 0;
    double mean_ = 0;
    double m2_ = 0;
    double max_size_ = 0;
    bool frozen_ = false;
};

struct Hyperparams {
    std::size_t hidden = 64;
    double discount = 0.9;        // psi
    double soft_rate = 0.005;     // zeta
    std::size_t buffer = 10000;
    std::size_t batch = 64;       // M'
    std::size_t learn_start = 256;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double noise_start = 0.3;
    double noise_end = 0.01;
    int episodes = 100;
    int steps = 20;               // J, one step per global round
    double reward_scale = 0;      // <= 0: 1 / mean |R| of the buffer when learning starts
    bool plain_gradient = false;
};

double reward(const cost::RoundCostReport& report);

class Agent {
public:
    Agent(std::size_t state_dim, std::size_t action_dim, const Hyperparams& hp, rng_t& rng);

    // clip(actor(state) + N(0, noise^2), -1, 1)
    Eigen::VectorXd act(const Eigen::VectorXd& state, double noise_scale, rng_t& rng) const;

    // One step on mean (y - Q)^2 with y = R + psi Q'(S', actor'(S')). Returns the pre-step loss.
    double critic_update(std::span<const Transition* const> batch, double reward_scale = 1.0);

    // One ascent step on mean Q(S, actor(S)). Returns the pre-step objective.
    double actor_update(std::span<const Transition* const> batch);

    void soft_update();

    nn::DenseNetwork& actor() { return actor_; }
    nn::DenseNetwork& critic() { return critic_; }
    nn::DenseNetwork& target_actor() { return target_actor_; }
    nn::DenseNetwork& target_critic() { return target_critic_; }
    const nn::DenseNetwork& actor() const { return actor_; }
    const nn::DenseNetwork& critic() const { return critic_; }

    std::size_t state_dim() const { return state_dim_; }
    std::size_t action_dim() const { return action_dim_; }
    const Hyperparams& hyperparams() const { return hp_; }

    // Replace all four networks (targets copy the online ones).
    void load_networks(nn::DenseNetwork actor, nn::DenseNetwork critic);

private:
    std::size_t state_dim_, action_dim_;
    Hyperparams hp_;
    nn::DenseNetwork actor_, critic_, target_actor_, target_critic_;
    nn::Optimizer actor_opt_, critic_opt_;
};

struct StepOutcome {
    cost::RoundCostReport report;
    MdpState next_state;
};

// One MDP step is one global round: act on the current state, pay its cost.
class Environment {
public:
    virtual ~Environment() = default;
    virtual std::size_t slots() const = 0;
    virtual MdpState reset(std::uint64_t episode) = 0;
    virtual StepOutcome step(const Allocation& allocation) = 0;
};

// Trained actor plus the encoder it was trained with.
struct Policy {
    nn::DenseNetwork actor;
    nn::DenseNetwork critic;
    StateEncoder encoder;
    ActionBounds bounds;

    Allocation allocate(const MdpState& state) const;
};

struct TrainResult {
    Policy policy;
    std::vector<double> episode_reward;  // mean reward per episode
    std::size_t updates = 0;
    double reward_scale = 1;
};

TrainResult train(Environment& env, const ActionBounds& bounds, const Hyperparams& hp,
                  std::uint64_t seed);

// Versioned JSON container: layer sizes, activations, row-major weights.
void save_policy(std::ostream& os, const Policy& policy);
Policy load_policy(std::istream& is);
void save_policy_file(const std::string& path, const Policy& policy);
Policy load_policy_file(const std::string& path);

void write_reward_csv(std::ostream& os, std::span<const double> episode_reward);

}  // namespace nomahfl::ddpg
