#include <nomahfl/config.hpp>
#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

namespace nomahfl::config {

bool Scheme::needs_policy() const
{
    return allocation == AllocationMode::ddpg || allocation == AllocationMode::fpa ||
           allocation == AllocationMode::fca;
}

std::string to_string(AssociationMode m)
{
    switch (m) {
    case AssociationMode::fuzzy: return "FCEA";
    case AssociationMode::random: return "RCEA";
    case AssociationMode::greedy: return "GCEA";
    }
    return "?";
}

std::string to_string(AccessMode m)
{
    return m == AccessMode::noma ? "NOMA" : "OMA";
}

std::string to_string(AllocationMode m)
{
    switch (m) {
    case AllocationMode::ddpg: return "DDPG";
    case AllocationMode::rra: return "RRA";
    case AllocationMode::fpa: return "FPA";
    case AllocationMode::fca: return "FCA";
    case AllocationMode::mid: return "MID";
    }
    return "?";
}

namespace {

AllocationMode allocation_from_string(const std::string& s)
{
    const auto u = boost::to_upper_copy(s);
    for (auto m : {AllocationMode::ddpg, AllocationMode::rra, AllocationMode::fpa, AllocationMode::fca,
                   AllocationMode::mid}) {
        if (to_string(m) == u) return m;
    }
    throw config_error("unknown allocation scheme '" + s + "'");
}

}  // namespace

Scheme parse_scheme(const std::string& name, AllocationMode default_allocation)
{
    Scheme s;
    s.name = boost::to_upper_copy(boost::trim_copy(name));
    s.allocation = default_allocation;
    if (s.name.empty()) throw config_error("empty scheme name");
    std::vector<std::string> tokens;
    boost::split(tokens, s.name, boost::is_any_of("+"));
    for (auto& t : tokens) {
        boost::trim(t);
        if (t == "FCEA") s.association = AssociationMode::fuzzy;
        else if (t == "RCEA") s.association = AssociationMode::random;
        else if (t == "GCEA") s.association = AssociationMode::greedy;
        else if (t == "NOMA") s.access = AccessMode::noma;
        else if (t == "OMA") s.access = AccessMode::oma;
        else if (t == "DDPG" || t == "RRA" || t == "FPA" || t == "FCA" || t == "MID") s.allocation = allocation_from_string(t);
        else throw config_error("unknown scheme token '" + t + "'");
    }
    return s;
}

std::vector<std::string> split_list(const std::string& list)
{
    std::vector<std::string> raw, out;
    boost::split(raw, list, boost::is_any_of(","));
    for (auto& r : raw) {
        boost::trim(r);
        if (!r.empty()) out.push_back(r);
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& list)
{
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_list(list)) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &pos);
        } catch (const std::exception&) {
            throw config_error("bad seed '" + s + "'");
        }
        if (pos != s.size() || s.front() == '-') throw config_error("bad seed '" + s + "'");
        seeds.push_back(v);
    }
    return seeds;
}

void ExperimentConfig::validate() const
{
    if (!(side > 0)) throw config_error("side must be positive");
    if (edges < 1 || clients < 1 || capacity < 1) throw config_error("need edges, clients and capacity >= 1");
    if (clients < 4 * edges) throw config_error("clients must be at least 4x the edge count");
    if (m_c < 1 || m_c > edges) throw config_error("m_c must lie in [1, edges]");
    bounds.validate();
    weights.validate();
    if (!(cycles_per_sample > 0 && capacitance > 0 && model_bits > 0)) {
        throw config_error("client compute and model parameters must be positive");
    }
    if (!(cloud_rate > 0)) throw config_error("cloud_rate must be positive");
    if (!(cloud_power > 0 && cloud_bits >= 0)) throw config_error("cloud link parameters out of range");
    if (!(learning_rate >= 0)) throw config_error("learning rate must be nonnegative");
    if (rounds < 1 || eval_rounds < 1) throw config_error("round counts must be positive");
    if (seeds.empty()) throw config_error("no seeds configured");
    if (schemes.empty()) throw config_error("nothing to run");
    for (const auto& s : schemes) parse_scheme(s, default_allocation);
    // also rejects bad theta / xi
    cost::local_iterations(accuracy);
    cost::edge_iterations(accuracy);
}

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

double to_double(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    double d = 0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw config_error(key + ": expected a number, got '" + v + "'");
    }
    if (pos != v.size()) throw config_error(key + ": expected a number, got '" + v + "'");
    return d;
}

long to_long(const std::string& key, const std::string& v)
{
    const double d = to_double(key, v);
    if (d != static_cast<double>(static_cast<long>(d))) throw config_error(key + ": expected an integer");
    return static_cast<long>(d);
}

std::size_t to_size(const std::string& key, const std::string& v)
{
    const long l = to_long(key, v);
    if (l < 0) throw config_error(key + ": must be nonnegative");
    return static_cast<std::size_t>(l);
}

bool to_bool(const std::string& key, const std::string& v)
{
    const auto l = boost::to_lower_copy(v);
    if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
    if (l == "false" || l == "0" || l == "no" || l == "off") return false;
    throw config_error(key + ": expected a boolean");
}

#define NUM(field) [](ExperimentConfig& c, const std::string& v) { c.field = to_double(#field, v); }
#define SIZE(field) [](ExperimentConfig& c, const std::string& v) { c.field = to_size(#field, v); }
#define INT(field) [](ExperimentConfig& c, const std::string& v) { c.field = static_cast<int>(to_long(#field, v)); }
#define BOOL(field) [](ExperimentConfig& c, const std::string& v) { c.field = to_bool(#field, v); }
#define STR(field) [](ExperimentConfig& c, const std::string& v) { c.field = v; }

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table{
        {"topology.side", NUM(side)},
        {"topology.edges", SIZE(edges)},
        {"topology.clients", SIZE(clients)},
        {"topology.capacity", SIZE(capacity)},
        {"topology.coverage_radius", NUM(coverage_radius)},
        {"topology.m_c", SIZE(m_c)},

        {"channel.pathloss_exponent", NUM(channel.pathloss_exponent)},
        {"channel.carrier_hz", NUM(channel.carrier_hz)},
        {"channel.reference_m", NUM(channel.reference_m)},
        {"channel.bandwidth_hz", NUM(channel.bandwidth_hz)},
        {"channel.noise_psd_dbm_hz", NUM(channel.noise_psd_dbm_hz)},
        {"channel.decode_metric",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "sqrt_power_gain") c.decode_metric = phy::DecodeMetric::sqrt_power_gain;
             else if (v == "received_power") c.decode_metric = phy::DecodeMetric::received_power;
             else throw config_error("decode_metric: sqrt_power_gain or received_power");
         }},
        {"channel.oma_reduced_capacity", BOOL(oma_reduced_capacity)},

        {"client.p_min", NUM(bounds.p_min)},
        {"client.p_max", NUM(bounds.p_max)},
        {"client.f_min", NUM(bounds.f_min)},
        {"client.f_max", NUM(bounds.f_max)},
        {"client.cycles_per_sample", NUM(cycles_per_sample)},
        {"client.capacitance", NUM(capacitance)},
        {"client.model_bits", NUM(model_bits)},

        {"edge.cloud_rate", NUM(cloud_rate)},
        {"edge.cloud_power", NUM(cloud_power)},
        {"edge.cloud_bits", NUM(cloud_bits)},

        {"accuracy.theta", NUM(accuracy.local_accuracy)},
        {"accuracy.xi", NUM(accuracy.edge_accuracy)},
        {"accuracy.mu", NUM(accuracy.mu)},
        {"accuracy.delta", NUM(accuracy.delta)},

        {"weights.time", NUM(weights.time)},
        {"weights.energy", NUM(weights.energy)},

        {"learning.rate", NUM(learning_rate)},
        {"learning.rounds", INT(rounds)},
        {"learning.train_samples", SIZE(synthetic.train_samples)},
        {"learning.test_samples", SIZE(synthetic.test_samples)},
        {"learning.features", SIZE(synthetic.features)},
        {"learning.classes", INT(synthetic.classes)},
        {"learning.separation", NUM(synthetic.separation)},
        {"learning.noise", NUM(synthetic.noise)},
        {"learning.partition",
         [](ExperimentConfig& c, const std::string& v) { c.partition.mode = data::partition_mode_from_string(v); }},
        {"learning.min_size", SIZE(partition.min_size)},
        {"learning.max_size", SIZE(partition.max_size)},
        {"learning.mnist_images", STR(mnist_images)},
        {"learning.mnist_labels", STR(mnist_labels)},
        {"learning.mnist_limit", SIZE(mnist_limit)},

        {"schedule.mode",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "pdd") c.schedule = ScheduleMode::pdd;
             else if (v == "fastest") c.schedule = ScheduleMode::fastest;
             else throw config_error("schedule.mode: pdd or fastest");
         }},
        {"schedule.epsilon", NUM(pdd.epsilon)},
        {"schedule.max_outer", INT(pdd.max_outer)},
        {"schedule.max_inner", INT(pdd.max_inner)},
        {"schedule.penalty0", NUM(pdd.penalty0)},
        {"schedule.shrink", NUM(pdd.shrink)},
        {"schedule.gamma_rule",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "exact") c.pdd.gamma_rule = pdd::GammaRule::exact;
             else if (v == "subgradient") c.pdd.gamma_rule = pdd::GammaRule::subgradient;
             else throw config_error("schedule.gamma_rule: exact or subgradient");
         }},
        {"schedule.gamma_step", NUM(pdd.gamma_step)},

        {"ddpg.hidden", SIZE(ddpg.hidden)},
        {"ddpg.discount", NUM(ddpg.discount)},
        {"ddpg.soft_rate", NUM(ddpg.soft_rate)},
        {"ddpg.buffer", SIZE(ddpg.buffer)},
        {"ddpg.batch", SIZE(ddpg.batch)},
        {"ddpg.learn_start", SIZE(ddpg.learn_start)},
        {"ddpg.actor_lr", NUM(ddpg.actor_lr)},
        {"ddpg.critic_lr", NUM(ddpg.critic_lr)},
        {"ddpg.noise_start", NUM(ddpg.noise_start)},
        {"ddpg.noise_end", NUM(ddpg.noise_end)},
        {"ddpg.episodes", INT(ddpg.episodes)},
        {"ddpg.steps", INT(ddpg.steps)},
        {"ddpg.reward_scale", NUM(ddpg.reward_scale)},
        {"ddpg.separate_baseline_training", BOOL(separate_baseline_training)},
        {"ddpg.policy", STR(policy_path)},

        {"run.seeds", [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_seeds(v); }},
        {"run.schemes", [](ExperimentConfig& c, const std::string& v) { c.schemes = split_list(v); }},
        {"run.allocation",
         [](ExperimentConfig& c, const std::string& v) { c.default_allocation = allocation_from_string(v); }},
        {"run.out", STR(out_dir)},
        {"run.eval_rounds", INT(eval_rounds)},
        {"run.threads", INT(threads)},
    };
    return table;
}

#undef NUM
#undef SIZE
#undef INT
#undef BOOL
#undef STR

}  // namespace

ExperimentConfig load(std::istream& in)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    const auto& table = setters();
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw config_error("config: key '" + section + "' outside any section");
        for (const auto& [key, value] : body) {
            const auto full = section + "." + key;
            const auto it = table.find(full);
            if (it == table.end()) throw config_error("config: unknown key '" + full + "'");
            it->second(cfg, boost::trim_copy(value.data()));
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config " + path);
    return load(in);
}

void apply_environment(ExperimentConfig& cfg)
{
    if (const char* s = std::getenv("NOMAHFL_SEED"); s && *s) cfg.seeds = parse_seeds(s);
    if (const char* o = std::getenv("NOMAHFL_OUT"); o && *o) cfg.out_dir = o;
}

}  // namespace nomahfl::config
