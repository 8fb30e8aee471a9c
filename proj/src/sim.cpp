#include <nomahfl/sim.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace nomahfl::sim {

phy::Topology make_topology(const ExperimentConfig& cfg, std::uint64_t seed)
{
    phy::Topology t;
    t.side = cfg.side;
    const double c = cfg.side / 2;
    const double r = cfg.side * std::numbers::sqrt2 / 4;
    for (std::size_t m = 0; m < cfg.edges; ++m) {
        // for four edges: (side/4, side/4), (3side/4, side/4), ...
        const double angle = std::numbers::pi * (1.25 + 2.0 * static_cast<double>(m) / static_cast<double>(cfg.edges));
        t.edges.push_back({c + r * std::cos(angle), c + r * std::sin(angle)});
    }
    if (cfg.edges == 4) std::swap(t.edges[2], t.edges[3]);
    auto rng = make_rng(seed, stream::topology);
    std::uniform_real_distribution<double> u(0.0, cfg.side);
    for (std::size_t n = 0; n < cfg.clients; ++n) {
        const double x = u(rng);
        t.clients.push_back({x, u(rng)});
    }
    return t;
}

Scenario make_scenario(const ExperimentConfig& cfg, std::uint64_t seed)
{
    Scenario s;
    s.seed = seed;
    s.topology = make_topology(cfg, seed);
    data::Dataset train;
    if (!cfg.mnist_images.empty() || !cfg.mnist_labels.empty()) {
        if (cfg.mnist_images.empty() || cfg.mnist_labels.empty()) {
            throw config_error("MNIST needs both mnist_images and mnist_labels");
        }
        auto all = data::load_idx(cfg.mnist_images, cfg.mnist_labels, cfg.mnist_limit);
        // last sixth held out as the test set
        const std::size_t n_test = std::max<std::size_t>(all.size() / 6, 1);
        std::vector<std::size_t> tr(all.size() - n_test), te(n_test);
        std::iota(tr.begin(), tr.end(), 0);
        std::iota(te.begin(), te.end(), all.size() - n_test);
        train = all.subset(tr);
        s.test = all.subset(te);
    } else {
        auto tt = data::synthetic_clusters(cfg.synthetic, seed);
        train = std::move(tt.train);
        s.test = std::move(tt.test);
    }
    s.shards = data::partition(train, cfg.clients, cfg.partition, seed);
    for (const auto& sh : s.shards) s.data_sizes.push_back(static_cast<double>(sh.size()));
    s.max_data_size = *std::max_element(s.data_sizes.begin(), s.data_sizes.end());
    return s;
}

std::uint64_t round_seed(std::uint64_t seed, std::uint64_t round)
{
    // splitmix64 of the pair
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + round + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

fuzzy::AssociationProblem association_problem(const AssociationInputs& in)
{
    const auto& topo = *in.topology;
    const auto n = static_cast<Eigen::Index>(topo.clients.size());
    const auto m = static_cast<Eigen::Index>(topo.edges.size());
    fuzzy::AssociationProblem p;
    p.capacity = in.capacity;
    p.score = Eigen::MatrixXd::Zero(n, m);
    p.distance.resize(n, m);
    p.covered.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double d = phy::distance(topo.clients[static_cast<std::size_t>(i)], topo.edges[static_cast<std::size_t>(j)]);
            p.distance(i, j) = d;
            p.covered(i, j) = d <= in.radius;
        }
    }
    return p;
}

fuzzy::Association fuzzy_associate(const AssociationInputs& in, const fuzzy::FuzzyEngine& engine)
{
    auto p = association_problem(in);
    const auto& g = in.channels->gains;
    const double max_d = *std::max_element(in.data_sizes.begin(), in.data_sizes.end());
    const double max_a = *std::max_element(in.staleness.begin(), in.staleness.end());
    for (Eigen::Index j = 0; j < p.score.cols(); ++j) {
        double max_g = 0;
        for (Eigen::Index i = 0; i < p.score.rows(); ++i) {
            if (p.covered(i, j)) max_g = std::max(max_g, g(i, j));
        }
        if (max_g <= 0) continue;
        for (Eigen::Index i = 0; i < p.score.rows(); ++i) {
            if (!p.covered(i, j)) continue;
            const auto k = static_cast<std::size_t>(i);
            p.score(i, j) = engine.score(fuzzy::normalize(g(i, j), max_g).value,
                                         fuzzy::normalize(in.data_sizes[k], max_d).value,
                                         fuzzy::normalize(in.staleness[k], max_a).value);
        }
    }
    return fuzzy::associate(p);
}

fuzzy::Association baseline_associate(AssociationMode mode, const AssociationInputs& in, rng_t& rng)
{
    auto p = association_problem(in);
    if (mode == AssociationMode::greedy) {
        for (Eigen::Index i = 0; i < p.score.rows(); ++i) {
            for (Eigen::Index j = 0; j < p.score.cols(); ++j) {
                if (p.covered(i, j)) p.score(i, j) = in.channels->gains(i, j);
            }
        }
        return fuzzy::associate(p);
    }
    if (mode != AssociationMode::random) throw config_error("baseline association is RCEA or GCEA");

    const auto n = static_cast<std::size_t>(p.score.rows());
    const auto m = static_cast<std::size_t>(p.score.cols());
    fuzzy::Association a;
    a.edge_of.assign(n, -1);
    a.members.assign(m, {});
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (auto c : order) {
        std::vector<std::size_t> open;
        for (std::size_t j = 0; j < m; ++j) {
            if (p.covered(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) &&
                a.members[j].size() < p.capacity) {
                open.push_back(j);
            }
        }
        if (open.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
        const auto j = open[pick(rng)];
        a.edge_of[c] = static_cast<int>(j);
        a.members[j].push_back(c);
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (a.members[j].empty()) a.idle_edges.push_back(j);
    }
    return a;
}

ddpg::Allocation baseline_allocate(AllocationMode mode, std::size_t slots, const ddpg::ActionBounds& b, rng_t& rng,
                                   const ddpg::Allocation* actor)
{
    b.validate();
    ddpg::Allocation a;
    const double p_mid = 0.5 * (b.p_min + b.p_max);
    const double f_mid = 0.5 * (b.f_min + b.f_max);
    switch (mode) {
    case AllocationMode::rra: {
        std::uniform_real_distribution<double> up(b.p_min, b.p_max), uf(b.f_min, b.f_max);
        for (std::size_t i = 0; i < slots; ++i) {
            const double p = up(rng);
            a.power.push_back(p);
            a.frequency.push_back(uf(rng));
        }
        return a;
    }
    case AllocationMode::mid:
        a.power.assign(slots, p_mid);
        a.frequency.assign(slots, f_mid);
        return a;
    case AllocationMode::fpa:
    case AllocationMode::fca:
        if (!actor || actor->power.size() != slots || actor->frequency.size() != slots) {
            throw config_error("FPA / FCA need the actor's allocation for every slot");
        }
        a = *actor;
        if (mode == AllocationMode::fpa) a.power.assign(slots, p_mid);
        else a.frequency.assign(slots, f_mid);
        return a;
    case AllocationMode::ddpg:
        break;
    }
    throw config_error("DDPG allocation comes from the policy, not a baseline");
}

std::vector<double> oma_access(std::span<const std::size_t> clients, const phy::ChannelRealization& ch,
                               const phy::TxConfig& tx, std::size_t m)
{
    if (clients.empty()) throw config_error("OMA needs at least one client");
    const double k = static_cast<double>(clients.size());
    const double band = ch.bandwidth / k;
    const double noise = ch.noise_power.at(m) / k;
    std::vector<double> r;
    for (auto n : clients) {
        const double snr = tx.power.at(n) * ch.gains(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) / noise;
        r.push_back(phy::shannon_rate(band, snr));
    }
    return r;
}

RoundOutcome account_round(const ExperimentConfig& cfg, AccessMode access, const fuzzy::Association& assoc,
                           const phy::ChannelRealization& ch, std::span<const double> data_sizes,
                           const ddpg::Allocation& alloc)
{
    const auto n_edges = cfg.edges;
    const int tau1 = cost::local_iterations(cfg.accuracy);
    const int tau2 = cost::edge_iterations(cfg.accuracy);
    if (alloc.power.size() != n_edges * cfg.capacity || alloc.frequency.size() != alloc.power.size()) {
        throw config_error("allocation must cover every slot");
    }

    phy::TxConfig tx;
    tx.power.assign(data_sizes.size(), 0.0);
    tx.model_bits.assign(data_sizes.size(), cfg.model_bits);
    std::vector<double> freq(data_sizes.size(), cfg.bounds.f_min);
    for (std::size_t m = 0; m < n_edges; ++m) {
        const auto& mem = assoc.members.at(m);
        if (mem.size() > cfg.capacity) throw runtime_error("edge holds more clients than slots");
        for (std::size_t k = 0; k < mem.size(); ++k) {
            tx.power[mem[k]] = alloc.power[m * cfg.capacity + k];
            freq[mem[k]] = alloc.frequency[m * cfg.capacity + k];
        }
    }

    RoundOutcome out;
    std::vector<cost::EdgeCost> edge_costs(n_edges);
    std::vector<std::vector<double>> client_times;
    for (std::size_t m = 0; m < n_edges; ++m) {
        const auto& mem = assoc.members[m];
        if (mem.empty()) continue;
        out.active.push_back(m);
        std::vector<std::size_t> order;
        std::vector<double> rates;
        if (access == AccessMode::noma) {
            order = phy::sic_order(mem, ch, tx, m, cfg.decode_metric);
            rates = phy::chain_rates(order, ch, tx, m);
        } else {
            order = mem;
            rates = oma_access(order, ch, tx, m);
        }
        std::vector<cost::ClientCost> cc;
        std::vector<double> times;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto n = order[k];
            cost::ComputeProfile prof;
            prof.cycles_per_sample = cfg.cycles_per_sample;
            prof.dataset_size = data_sizes[n];
            prof.frequency = freq[n];
            prof.capacitance = cfg.capacitance;
            prof.f_min = cfg.bounds.f_min;
            prof.f_max = cfg.bounds.f_max;
            const auto cmp = cost::local_compute_cost(prof, tau1);
            const auto com = phy::transmission_cost(tx.model_bits[n], rates[k], tx.power[n]);
            cost::ClientCost c{n, cmp.time, cmp.energy, com.time, com.energy};
            cc.push_back(c);
            times.push_back(c.iteration_time());
            out.report.clients.push_back(c);
        }
        client_times.push_back(std::move(times));
        edge_costs[m].edge = cost::edge_phase_cost(cc, tau2);
        edge_costs[m].cloud = phy::edge_cloud_cost(cfg.cloud_rate, cfg.cloud_power, cfg.cloud_bits);
    }
    if (out.active.empty()) throw runtime_error("no edge has clients this round");

    std::vector<int> z_active;
    std::vector<double> total_times;
    for (auto m : out.active) total_times.push_back(edge_costs[m].total_time());
    if (cfg.schedule == config::ScheduleMode::pdd) {
        pdd::SchedulingInstance inst;
        for (auto m : out.active) {
            inst.edge_energy.push_back(edge_costs[m].total_energy());
            inst.cloud_time.push_back(edge_costs[m].cloud.time);
        }
        inst.client_times = client_times;
        inst.tau2 = tau2;
        inst.weights = cfg.weights;
        auto sol = pdd::solve(inst, cfg.pdd);
        z_active = sol.binary;
        out.schedule_converged = sol.converged;
        out.schedule_repaired = sol.repaired;
    } else {
        z_active = hfl::select_fastest(total_times, std::min(cfg.m_c, out.active.size()));
    }
    const auto selected = static_cast<std::size_t>(std::count(z_active.begin(), z_active.end(), 1));
    out.fastest_agrees = hfl::select_fastest(total_times, selected) == z_active;

    out.z.assign(n_edges, 0);
    for (std::size_t a = 0; a < out.active.size(); ++a) out.z[out.active[a]] = z_active[a];
    auto report = cost::system_cost(out.z, edge_costs, cfg.weights);
    report.clients = std::move(out.report.clients);
    out.report = std::move(report);
    return out;
}

RoundSimulator::RoundSimulator(const ExperimentConfig& cfg, const Scenario& scenario, AssociationMode association,
                               AccessMode access)
    : cfg_(cfg), scenario_(scenario), association_(association), access_(access)
{
    reset_staleness();
}

void RoundSimulator::reset_staleness()
{
    staleness_.assign(cfg_.clients, 1);
    prev_staleness_ = staleness_;
}

std::size_t RoundSimulator::capacity() const
{
    if (access_ == AccessMode::oma && cfg_.oma_reduced_capacity) return std::max<std::size_t>(1, cfg_.capacity / 2);
    return cfg_.capacity;
}

double RoundSimulator::average_staleness() const
{
    return std::accumulate(staleness_.begin(), staleness_.end(), 0.0) / static_cast<double>(staleness_.size());
}

ddpg::MdpState RoundSimulator::prepare(std::uint64_t round)
{
    round_ = round;
    ch_ = phy::draw_channels(scenario_.topology, round_seed(scenario_.seed, round), cfg_.channel);
    AssociationInputs in;
    in.channels = &ch_;
    in.topology = &scenario_.topology;
    in.data_sizes = scenario_.data_sizes;
    in.staleness = staleness_;
    in.capacity = capacity();
    in.radius = cfg_.radius();
    if (association_ == AssociationMode::fuzzy) {
        assoc_ = fuzzy_associate(in, engine_);
    } else {
        auto rng = make_rng(scenario_.seed, stream::association, round);
        assoc_ = baseline_associate(association_, in, rng);
    }
    prev_staleness_ = staleness_;
    for (std::size_t n = 0; n < staleness_.size(); ++n) {
        staleness_[n] = fuzzy::update_staleness(staleness_[n], assoc_.is_associated(n));
    }

    ddpg::MdpState s;
    s.gains.assign(slots(), 0.0);
    s.data_sizes.assign(slots(), 0.0);
    s.occupied.assign(slots(), false);
    for (std::size_t m = 0; m < cfg_.edges; ++m) {
        const auto& mem = assoc_.members[m];
        for (std::size_t k = 0; k < mem.size(); ++k) {
            const auto i = slot(m, k);
            s.gains[i] = ch_.gains(static_cast<Eigen::Index>(mem[k]), static_cast<Eigen::Index>(m));
            s.data_sizes[i] = scenario_.data_sizes[mem[k]];
            s.occupied[i] = true;
        }
    }
    prepared_ = true;
    return s;
}

RoundOutcome RoundSimulator::finish(const ddpg::Allocation& allocation)
{
    if (!prepared_) throw config_error("finish() without prepare()");
    prepared_ = false;
    return account_round(cfg_, access_, assoc_, ch_, scenario_.data_sizes, allocation);
}

RoundEnvironment::RoundEnvironment(const ExperimentConfig& cfg, const Scenario& scenario, AccessMode access,
                                   AllocationMode pinned)
    : cfg_(cfg), sim_(cfg, scenario, AssociationMode::fuzzy, access), pinned_(pinned)
{
    if (pinned_ != AllocationMode::ddpg && pinned_ != AllocationMode::fpa && pinned_ != AllocationMode::fca) {
        throw config_error("training can pin power (FPA) or frequency (FCA) only");
    }
}

ddpg::MdpState RoundEnvironment::reset(std::uint64_t episode)
{
    sim_.reset_staleness();
    round_ = training_round_offset + episode * static_cast<std::uint64_t>(std::max(cfg_.ddpg.steps, 1));
    return sim_.prepare(round_);
}

ddpg::StepOutcome RoundEnvironment::step(const ddpg::Allocation& allocation)
{
    ddpg::Allocation a = allocation;
    if (pinned_ != AllocationMode::ddpg) {
        rng_t none;
        a = baseline_allocate(pinned_, sim_.slots(), cfg_.bounds, none, &allocation);
    }
    ddpg::StepOutcome out;
    out.report = sim_.finish(a).report;
    out.next_state = sim_.prepare(++round_);
    return out;
}

ddpg::TrainResult train_policy(const ExperimentConfig& cfg, const Scenario& scenario, AccessMode access,
                               AllocationMode pinned)
{
    RoundEnvironment env(cfg, scenario, access, pinned);
    return ddpg::train(env, cfg.bounds, cfg.ddpg, scenario.seed * 16 + static_cast<std::uint64_t>(pinned));
}

ddpg::Allocation allocate(const Scheme& scheme, const ExperimentConfig& cfg, const ddpg::MdpState& state,
                          const ddpg::Policy* policy, std::uint64_t seed, std::uint64_t round)
{
    const auto slots = state.gains.size();
    auto rng = make_rng(seed, stream::allocation, round);
    if (!scheme.needs_policy()) return baseline_allocate(scheme.allocation, slots, cfg.bounds, rng);
    if (!policy) throw config_error("scheme " + scheme.name + " needs a trained policy");
    auto a = policy->allocate(state);
    if (scheme.allocation == AllocationMode::ddpg) return a;
    return baseline_allocate(scheme.allocation, slots, cfg.bounds, rng, &a);
}

std::vector<double> rollout_costs(const ExperimentConfig& cfg, const Scenario& scenario, const Scheme& scheme,
                                  const ddpg::Policy* policy, int rounds)
{
    RoundSimulator sim(cfg, scenario, scheme.association, scheme.access);
    std::vector<double> costs;
    for (int r = 0; r < rounds; ++r) {
        const auto state = sim.prepare(static_cast<std::uint64_t>(r));
        const auto a = allocate(scheme, cfg, state, policy, scenario.seed, static_cast<std::uint64_t>(r));
        costs.push_back(sim.finish(a).report.cost);
    }
    return costs;
}

CellResult run_cell(const ExperimentConfig& cfg, const Scenario& scenario, const Scheme& scheme,
                    const ddpg::Policy* policy)
{
    CellResult cell;
    RoundSimulator sim(cfg, scenario, scheme.association, scheme.access);
    const int tau1 = cost::local_iterations(cfg.accuracy);
    const int tau2 = cost::edge_iterations(cfg.accuracy);
    const auto features = scenario.test.features();
    hfl::CloudState cloud(hfl::zero_model(features, scenario.test.classes), cfg.edges);

    for (int r = 0; r < cfg.rounds; ++r) {
        const auto state = sim.prepare(static_cast<std::uint64_t>(r));
        const auto alloc = allocate(scheme, cfg, state, policy, scenario.seed, static_cast<std::uint64_t>(r));
        auto outcome = sim.finish(alloc);
        if (outcome.fastest_agrees) ++cell.fastest_agreements;
        if (!outcome.schedule_converged) ++cell.unconverged_schedules;

        for (auto m : outcome.active) {
            std::vector<const data::Dataset*> shards;
            for (auto n : sim.association().members[m]) shards.push_back(&scenario.shards[n]);
            cloud.submit(m, hfl::edge_train(cloud.base(m), shards, cfg.learning_rate, tau1, tau2));
        }
        cloud.aggregate(outcome.z);
        const auto ev = hfl::evaluate(cloud.global(), scenario.test);

        MetricsRow row;
        row.scheme = scheme.name;
        row.seed = scenario.seed;
        row.round = r;
        row.accuracy = ev.accuracy;
        row.loss = ev.loss;
        row.avg_ms = sim.average_staleness();
        row.time = outcome.report.time;
        row.energy = outcome.report.energy;
        row.cost = outcome.report.cost;
        cell.rows.push_back(row);
    }
    cell.edge_models_produced = cloud.produced();
    cell.edge_models_consumed = cloud.consumed();
    for (std::size_t m = 0; m < cfg.edges; ++m) cell.edge_models_pending += cloud.pending(m);
    return cell;
}

PolicyKey policy_key(const ExperimentConfig& cfg, const Scheme& scheme, std::uint64_t seed)
{
    AllocationMode pinned = AllocationMode::ddpg;
    if (cfg.separate_baseline_training &&
        (scheme.allocation == AllocationMode::fpa || scheme.allocation == AllocationMode::fca)) {
        pinned = scheme.allocation;
    }
    return {seed, scheme.access, pinned};
}

namespace {

template <class F>
void parallel_for(std::size_t count, int threads, F&& body)
{
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < count; i = next++) body(i);
    };
    if (workers <= 1) {
        loop();
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log)
{
    cfg.validate();
    std::vector<Scheme> schemes;
    for (const auto& s : cfg.schemes) schemes.push_back(config::parse_scheme(s, cfg.default_allocation));
    if (schemes.empty()) throw config_error("nothing to run");

    ExperimentResult result;
    std::mutex sink;
    auto note = [&](const std::string& msg) {
        std::lock_guard lock(sink);
        if (log) *log << msg << std::endl;
    };

    std::map<std::uint64_t, Scenario> scenarios;
    for (auto seed : cfg.seeds) {
        try {
            scenarios.emplace(seed, make_scenario(cfg, seed));
        } catch (const std::exception& e) {
            result.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
        }
    }

    std::optional<ddpg::Policy> shared;
    if (!cfg.policy_path.empty()) shared = ddpg::load_policy_file(cfg.policy_path);

    std::map<PolicyKey, std::optional<ddpg::Policy>> policies;
    if (!shared) {
        for (const auto& [seed, sc] : scenarios) {
            for (const auto& s : schemes) {
                if (s.needs_policy()) policies[policy_key(cfg, s, seed)];
            }
        }
    }
    std::vector<PolicyKey> keys;
    for (const auto& [k, v] : policies) keys.push_back(k);
    parallel_for(keys.size(), cfg.threads, [&](std::size_t i) {
        const auto& k = keys[i];
        try {
            auto tr = train_policy(cfg, scenarios.at(k.seed), k.access, k.pinned);
            std::ostringstream msg;
            msg << "trained policy seed=" << k.seed << " access=" << config::to_string(k.access)
                << " pinned=" << config::to_string(k.pinned) << " updates=" << tr.updates
                << " final_reward=" << (tr.episode_reward.empty() ? 0.0 : tr.episode_reward.back());
            note(msg.str());
            std::lock_guard lock(sink);
            policies[k] = std::move(tr.policy);
        } catch (const std::exception& e) {
            std::lock_guard lock(sink);
            result.failures.push_back("training seed " + std::to_string(k.seed) + ": " + e.what());
        }
    });

    struct Job {
        Scheme scheme;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& s : schemes) {
        for (const auto& [seed, sc] : scenarios) jobs.push_back({s, seed});
    }
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
        const auto& job = jobs[i];
        const auto tag = job.scheme.name + "/" + std::to_string(job.seed);
        try {
            const ddpg::Policy* policy = nullptr;
            if (job.scheme.needs_policy()) {
                if (shared) {
                    policy = &*shared;
                } else {
                    const auto& slot = policies.at(policy_key(cfg, job.scheme, job.seed));
                    if (!slot) throw runtime_error("policy training failed");
                    policy = &*slot;
                }
            }
            auto cell = run_cell(cfg, scenarios.at(job.seed), job.scheme, policy);
            note("finished " + tag);
            std::lock_guard lock(sink);
            result.cells.emplace(tag, std::move(cell));
        } catch (const std::exception& e) {
            std::lock_guard lock(sink);
            result.failures.push_back(tag + ": " + e.what());
        }
    });

    // deterministic order regardless of thread timing
    for (const auto& s : schemes) {
        for (auto seed : cfg.seeds) {
            const auto it = result.cells.find(s.name + "/" + std::to_string(seed));
            if (it == result.cells.end()) continue;
            result.rows.insert(result.rows.end(), it->second.rows.begin(), it->second.rows.end());
        }
    }
    std::sort(result.failures.begin(), result.failures.end());
    return result;
}

void write_csv(std::ostream& os, std::span<const MetricsRow> rows)
{
    os << "scheme,seed,round,accuracy,loss,avg_ms,time,energy,cost\n";
    os << std::setprecision(9);
    for (const auto& r : rows) {
        os << r.scheme << ',' << r.seed << ',' << r.round << ',' << r.accuracy << ',' << r.loss << ','
           << r.avg_ms << ',' << r.time << ',' << r.energy << ',' << r.cost << '\n';
    }
}

void write_summary(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& result)
{
    os << std::left << std::setw(14) << "scheme" << std::right << std::setw(8) << "cells" << std::setw(12)
       << "final_acc" << std::setw(14) << "mean_cost" << std::setw(10) << "final_ms" << std::setw(12)
       << "fastest_eq" << '\n';
    std::vector<std::string> names;
    for (const auto& s : cfg.schemes) names.push_back(config::parse_scheme(s, cfg.default_allocation).name);
    for (const auto& name : names) {
        double acc = 0, cost = 0, ms = 0, agree = 0, rounds = 0;
        int cells = 0;
        for (auto seed : cfg.seeds) {
            const auto it = result.cells.find(name + "/" + std::to_string(seed));
            if (it == result.cells.end() || it->second.rows.empty()) continue;
            const auto& rows = it->second.rows;
            ++cells;
            acc += rows.back().accuracy;
            ms += rows.back().avg_ms;
            for (const auto& r : rows) cost += r.cost;
            rounds += static_cast<double>(rows.size());
            agree += static_cast<double>(it->second.fastest_agreements);
        }
        os << std::left << std::setw(14) << name << std::right << std::setw(8) << cells;
        if (cells == 0) {
            os << std::setw(12) << "-" << std::setw(14) << "-" << std::setw(10) << "-" << std::setw(12) << "-" << '\n';
            continue;
        }
        os << std::fixed << std::setprecision(4) << std::setw(12) << acc / cells << std::setw(14) << cost / rounds
           << std::setprecision(2) << std::setw(10) << ms / cells << std::setprecision(3) << std::setw(12)
           << agree / rounds << '\n'
           << std::defaultfloat;
    }
    for (const auto& f : result.failures) os << "FAILED " << f << '\n';
}

}  // namespace nomahfl::sim
