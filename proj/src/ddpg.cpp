#include <nomahfl/ddpg.hpp>
#include <json.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace nomahfl::ddpg {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity)
{
    if (capacity_ == 0) throw config_error("replay buffer capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(Transition t)
{
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, rng_t& rng) const
{
    const auto n = data_.size();
    if (batch > n) throw config_error("cannot sample more transitions than stored");
    // Floyd's algorithm: a uniform k-subset in O(k)
    std::vector<std::size_t> picked;
    picked.reserve(batch);
    for (auto j = n - batch; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> u(0, j);
        const auto t = u(rng);
        if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
            picked.push_back(t);
        } else {
            picked.push_back(j);
        }
    }
    return picked;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, rng_t& rng) const
{
    std::vector<const Transition*> out;
    for (auto i : sample_indices(batch, rng)) out.push_back(&data_[i]);
    return out;
}

void ActionBounds::validate() const
{
    if (!(p_min > 0 && p_min <= p_max) || !(f_min > 0 && f_min <= f_max)) {
        throw config_error("allocation bounds must be positive and ordered");
    }
}

double to_range(double raw, double lo, double hi)
{
    const double r = std::clamp(raw, -1.0, 1.0);
    return std::clamp(lo + (r + 1) * 0.5 * (hi - lo), lo, hi);
}

Allocation map_action(const Eigen::VectorXd& raw, const ActionBounds& b)
{
    if (raw.size() % 2 != 0) throw config_error("action vector must hold power and frequency halves");
    const auto slots = static_cast<std::size_t>(raw.size() / 2);
    Allocation a;
    a.power.resize(slots);
    a.frequency.resize(slots);
    for (std::size_t i = 0; i < slots; ++i) {
        a.power[i] = to_range(raw(static_cast<Eigen::Index>(i)), b.p_min, b.p_max);
        a.frequency[i] = to_range(raw(static_cast<Eigen::Index>(slots + i)), b.f_min, b.f_max);
    }
    return a;
}

StateEncoder::StateEncoder(std::size_t slots) : slots_(slots) {}

void StateEncoder::observe(const MdpState& s)
{
    if (frozen_) return;
    for (std::size_t i = 0; i < s.gains.size(); ++i) {
        if (!s.occupied[i]) continue;
        const double db = 10 * std::log10(s.gains[i]);
        ++count_;
        const double delta = db - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (db - mean_);
        max_size_ = std::max(max_size_, s.data_sizes[i]);
    }
}

double StateEncoder::var_db() const
{
    return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 1.0;
}

void StateEncoder::restore(double mean, double var, long count, double max_size)
{
    mean_ = mean;
    count_ = std::max(count, 2L);
    m2_ = var * static_cast<double>(count_ - 1);
    max_size_ = max_size;
    frozen_ = true;
}

Eigen::VectorXd StateEncoder::encode(const MdpState& s) const
{
    if (s.gains.size() != slots_ || s.data_sizes.size() != slots_ || s.occupied.size() != slots_) {
        throw config_error("state does not match the encoder's slot count");
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * slots_));
    const double sd = std::sqrt(std::max(var_db(), 1e-12));
    const double dmax = max_size_ > 0 ? max_size_ : 1.0;
    for (std::size_t i = 0; i < slots_; ++i) {
        if (!s.occupied[i]) continue;
        x(static_cast<Eigen::Index>(i)) = (10 * std::log10(s.gains[i]) - mean_) / sd;
        x(static_cast<Eigen::Index>(slots_ + i)) = s.data_sizes[i] / dmax;
    }
    return x;
}

double reward(const cost::RoundCostReport& report)
{
    return -(report.weights.time * report.time + report.weights.energy * report.energy);
}

Agent::Agent(std::size_t state_dim, std::size_t action_dim, const Hyperparams& hp, rng_t& rng)
    : state_dim_(state_dim), action_dim_(action_dim), hp_(hp)
{
    using nn::Activation;
    actor_ = nn::DenseNetwork::make({state_dim, hp.hidden, hp.hidden, action_dim},
                                    {Activation::relu, Activation::relu, Activation::tanh}, rng);
    critic_ = nn::DenseNetwork::make({state_dim + action_dim, hp.hidden, hp.hidden, 1},
                                     {Activation::relu, Activation::relu, Activation::linear}, rng);
    target_actor_ = actor_;
    target_critic_ = critic_;
    actor_opt_ = nn::Optimizer(actor_, hp.actor_lr, hp.plain_gradient);
    critic_opt_ = nn::Optimizer(critic_, hp.critic_lr, hp.plain_gradient);
}

void Agent::load_networks(nn::DenseNetwork actor, nn::DenseNetwork critic)
{
    if (actor.input_size() != state_dim_ || actor.output_size() != action_dim_ ||
        critic.input_size() != state_dim_ + action_dim_ || critic.output_size() != 1) {
        throw config_error("network shapes do not match the agent");
    }
    actor_ = std::move(actor);
    critic_ = std::move(critic);
    target_actor_ = actor_;
    target_critic_ = critic_;
    actor_opt_ = nn::Optimizer(actor_, hp_.actor_lr, hp_.plain_gradient);
    critic_opt_ = nn::Optimizer(critic_, hp_.critic_lr, hp_.plain_gradient);
}

Eigen::VectorXd Agent::act(const Eigen::VectorXd& state, double noise_scale, rng_t& rng) const
{
    if (noise_scale < 0) throw config_error("exploration noise must be nonnegative");
    Eigen::VectorXd a = actor_.forward(state);
    if (noise_scale > 0) {
        std::normal_distribution<double> gauss(0.0, noise_scale);
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) += gauss(rng);
    }
    return a.cwiseMax(-1.0).cwiseMin(1.0);
}

namespace {

struct Batch {
    Eigen::MatrixXd s, a, s2;
    Eigen::RowVectorXd r;
};

Batch stack(std::span<const Transition* const> batch)
{
    if (batch.empty()) throw config_error("empty mini-batch");
    const auto b = static_cast<Eigen::Index>(batch.size());
    Batch out;
    out.s.resize(batch.front()->state.size(), b);
    out.a.resize(batch.front()->action.size(), b);
    out.s2.resize(batch.front()->next_state.size(), b);
    out.r.resize(b);
    for (Eigen::Index j = 0; j < b; ++j) {
        const auto& t = *batch[static_cast<std::size_t>(j)];
        out.s.col(j) = t.state;
        out.a.col(j) = t.action;
        out.s2.col(j) = t.next_state;
        out.r(j) = t.reward;
    }
    return out;
}

Eigen::MatrixXd concat_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom)
{
    Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

}  // namespace

double Agent::critic_update(std::span<const Transition* const> batch, double reward_scale)
{
    const auto data = stack(batch);
    const double b = static_cast<double>(batch.size());
    const Eigen::MatrixXd next_action = target_actor_.forward(data.s2);
    const Eigen::RowVectorXd next_q = target_critic_.forward(concat_rows(data.s2, next_action)).row(0);
    const Eigen::RowVectorXd y = reward_scale * data.r + hp_.discount * next_q;

    nn::Tape tape;
    const Eigen::RowVectorXd q = critic_.forward(concat_rows(data.s, data.a), tape).row(0);
    const Eigen::RowVectorXd diff = q - y;
    const double loss = diff.squaredNorm() / b;
    if (!std::isfinite(loss)) throw runtime_error("critic loss is not finite");
    const Eigen::MatrixXd grad_out = 2.0 * diff / b;
    critic_opt_.step(critic_, critic_.backward(tape, grad_out));
    return loss;
}

double Agent::actor_update(std::span<const Transition* const> batch)
{
    const auto data = stack(batch);
    const double b = static_cast<double>(batch.size());
    nn::Tape actor_tape;
    nn::Tape critic_tape;
    const Eigen::MatrixXd action = actor_.forward(data.s, actor_tape);
    const Eigen::MatrixXd q = critic_.forward(concat_rows(data.s, action), critic_tape);
    const double objective = q.sum() / b;
    if (!std::isfinite(objective)) throw runtime_error("actor objective is not finite");

    // descend on -mean Q; the critic's own gradient is discarded
    const Eigen::MatrixXd grad_q = Eigen::MatrixXd::Constant(1, q.cols(), -1.0 / b);
    Eigen::MatrixXd grad_in;
    critic_.backward(critic_tape, grad_q, &grad_in);
    const Eigen::MatrixXd grad_action =
        grad_in.bottomRows(static_cast<Eigen::Index>(action_dim_));
    actor_opt_.step(actor_, actor_.backward(actor_tape, grad_action));
    return objective;
}

void Agent::soft_update()
{
    target_actor_.soft_update_from(actor_, hp_.soft_rate);
    target_critic_.soft_update_from(critic_, hp_.soft_rate);
}

Allocation Policy::allocate(const MdpState& state) const
{
    return map_action(actor.forward(encoder.encode(state)), bounds);
}

TrainResult train(Environment& env, const ActionBounds& bounds, const Hyperparams& hp,
                  std::uint64_t seed)
{
    bounds.validate();
    if (hp.episodes < 1 || hp.steps < 1) throw config_error("need at least one episode and step");
    if (hp.batch == 0 || hp.learn_start < hp.batch) {
        throw config_error("learning must start once a full mini-batch is stored");
    }
    const auto slots = env.slots();
    auto init_rng = make_rng(seed, stream::policy, 0);
    auto noise_rng = make_rng(seed, stream::policy, 1);
    auto sample_rng = make_rng(seed, stream::policy, 2);

    TrainResult result;
    StateEncoder encoder(slots);
    Agent agent(encoder.dimension(), 2 * slots, hp, init_rng);
    ReplayBuffer buffer(hp.buffer);
    double scale = hp.reward_scale > 0 ? hp.reward_scale : 0;
    bool learning = false;

    for (int ep = 0; ep < hp.episodes; ++ep) {
        const double frac = hp.episodes > 1 ? static_cast<double>(ep) / (hp.episodes - 1) : 1.0;
        const double noise = hp.noise_start + (hp.noise_end - hp.noise_start) * frac;
        MdpState state = env.reset(static_cast<std::uint64_t>(ep));
        double total = 0;
        for (int j = 0; j < hp.steps; ++j) {
            encoder.observe(state);
            const Eigen::VectorXd x = encoder.encode(state);
            const Eigen::VectorXd raw = agent.act(x, noise, noise_rng);
            auto outcome = env.step(map_action(raw, bounds));
            const double r = reward(outcome.report);
            if (!std::isfinite(r)) {
                throw runtime_error("non-finite reward at episode " + std::to_string(ep) +
                                    ", step " + std::to_string(j));
            }
            total += r;
            buffer.push({x, raw, r, encoder.encode(outcome.next_state)});
            state = std::move(outcome.next_state);

            if (buffer.size() < hp.learn_start) continue;
            if (!learning) {
                learning = true;
                encoder.freeze();
                if (scale <= 0) {
                    double mean_abs = 0;
                    for (std::size_t i = 0; i < buffer.size(); ++i) mean_abs += std::abs(buffer.at(i).reward);
                    mean_abs /= static_cast<double>(buffer.size());
                    scale = mean_abs > 0 ? 1 / mean_abs : 1;
                }
            }
            const auto batch = buffer.sample(hp.batch, sample_rng);
            double loss = 0;
            try {
                loss = agent.critic_update(batch, scale);
                agent.actor_update(batch);
            } catch (const runtime_error& e) {
                throw runtime_error(std::string(e.what()) + " (episode " + std::to_string(ep) +
                                    ", step " + std::to_string(j) + ", update " +
                                    std::to_string(result.updates) + ")");
            }
            (void)loss;
            agent.soft_update();
            ++result.updates;
        }
        result.episode_reward.push_back(total / hp.steps);
    }

    encoder.freeze();
    result.policy = Policy{agent.actor(), agent.critic(), encoder, bounds};
    result.reward_scale = scale > 0 ? scale : 1;
    return result;
}

namespace {

nlohmann::json network_to_json(const nn::DenseNetwork& net)
{
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers()) {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.weight.size()));
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
        }
        layers.push_back({{"inputs", l.inputs()},
                          {"outputs", l.outputs()},
                          {"activation", nn::to_string(l.activation)},
                          {"weights", w},
                          {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
    }
    return {{"layers", layers}};
}

nn::DenseNetwork network_from_json(const nlohmann::json& j)
{
    std::vector<nn::DenseLayer> layers;
    for (const auto& lj : j.at("layers")) {
        const auto in = lj.at("inputs").get<Eigen::Index>();
        const auto out = lj.at("outputs").get<Eigen::Index>();
        const auto w = lj.at("weights").get<std::vector<double>>();
        const auto b = lj.at("bias").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != in * out || static_cast<Eigen::Index>(b.size()) != out) {
            throw config_error("layer parameter count does not match its shape");
        }
        nn::DenseLayer l;
        l.weight.resize(out, in);
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) l.weight(r, c) = w[static_cast<std::size_t>(r * in + c)];
        }
        l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
        l.activation = nn::activation_from_string(lj.at("activation").get<std::string>());
        layers.push_back(std::move(l));
    }
    return nn::DenseNetwork(std::move(layers));
}

constexpr const char* policy_format = "nomahfl-ddpg-policy";
constexpr int policy_version = 1;

}  // namespace

void save_policy(std::ostream& os, const Policy& p)
{
    nlohmann::json j;
    j["format"] = policy_format;
    j["version"] = policy_version;
    j["slots"] = p.encoder.slots();
    j["bounds"] = {{"p_min", p.bounds.p_min}, {"p_max", p.bounds.p_max},
                   {"f_min", p.bounds.f_min}, {"f_max", p.bounds.f_max}};
    j["encoder"] = {{"mean_db", p.encoder.mean_db()},
                    {"var_db", p.encoder.var_db()},
                    {"max_size", p.encoder.max_size()}};
    j["actor"] = network_to_json(p.actor);
    j["critic"] = network_to_json(p.critic);
    os << std::setprecision(17) << j.dump(1) << '\n';
}

Policy load_policy(std::istream& is)
{
    nlohmann::json j;
    try {
        is >> j;
        if (j.at("format").get<std::string>() != policy_format) throw config_error("not a policy file");
        if (j.at("version").get<int>() != policy_version) {
            throw config_error("unsupported policy version " + std::to_string(j.at("version").get<int>()));
        }
        Policy p;
        const auto slots = j.at("slots").get<std::size_t>();
        p.encoder = StateEncoder(slots);
        const auto& e = j.at("encoder");
        p.encoder.restore(e.at("mean_db").get<double>(), e.at("var_db").get<double>(), 2,
                          e.at("max_size").get<double>());
        const auto& b = j.at("bounds");
        p.bounds = {b.at("p_min").get<double>(), b.at("p_max").get<double>(),
                    b.at("f_min").get<double>(), b.at("f_max").get<double>()};
        p.actor = network_from_json(j.at("actor"));
        p.critic = network_from_json(j.at("critic"));
        if (p.actor.input_size() != 2 * slots || p.actor.output_size() != 2 * slots) {
            throw config_error("actor shape does not match the slot count");
        }
        return p;
    } catch (const nlohmann::json::exception& ex) {
        throw config_error(std::string("malformed policy file: ") + ex.what());
    }
}

void save_policy_file(const std::string& path, const Policy& policy)
{
    std::ofstream os(path);
    if (!os) throw config_error("cannot write " + path);
    save_policy(os, policy);
}

Policy load_policy_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw config_error("cannot open " + path);
    return load_policy(is);
}

void write_reward_csv(std::ostream& os, std::span<const double> episode_reward)
{
    os << "episode,mean_reward\n" << std::setprecision(9);
    for (std::size_t i = 0; i < episode_reward.size(); ++i) os << i << ',' << episode_reward[i] << '\n';
}

}  // namespace nomahfl::ddpg
