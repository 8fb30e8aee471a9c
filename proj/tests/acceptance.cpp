// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <nomahfl/config.hpp>
#include <nomahfl/ddpg.hpp>
#include <nomahfl/fuzzy.hpp>
#include <nomahfl/hfl.hpp>
#include <nomahfl/nn.hpp>
#include <nomahfl/pdd.hpp>
#include <nomahfl/phy.hpp>
#include <nomahfl/sim.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace nomahfl;
using clock_type = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

pdd::SchedulingInstance random_instance(rng_t& rng, std::size_t edges)
{
    std::uniform_real_distribution<double> energy(0.2, 6.0), cloud(0.02, 1.0), ct(0.1, 4.0), w(0.05, 0.95);
    std::uniform_int_distribution<int> members(1, 6), tau(1, 5);
    pdd::SchedulingInstance inst;
    for (std::size_t m = 0; m < edges; ++m) {
        inst.edge_energy.push_back(energy(rng));
        inst.cloud_time.push_back(cloud(rng));
        std::vector<double> times;
        const int k = members(rng);
        for (int i = 0; i < k; ++i) times.push_back(ct(rng));
        inst.client_times.push_back(times);
    }
    inst.tau2 = tau(rng);
    inst.weights.time = w(rng);
    inst.weights.energy = 1 - inst.weights.time;
    return inst;
}

// Criteria 1 and 2 share the suite of 100 instances.
std::pair<Verdict, Verdict> pdd_criteria()
{
    auto rng = make_rng(2024, 99);
    std::vector<pdd::SchedulingInstance> instances;
    for (int i = 0; i < 100; ++i) instances.push_back(random_instance(rng, 4));

    const auto t0 = clock_type::now();
    std::vector<pdd::ScheduleSolution> sols;
    for (const auto& inst : instances) sols.push_back(pdd::solve(inst));
    const double elapsed = seconds_since(t0);

    int matched = 0, converged = 0, residual_ok = 0, repaired = 0;
    std::size_t rows = 0, violations = 0;
    double worst_rise = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const auto& s = sols[i];
        // brute force over the 15 nonempty schedules, written out independently
        double best = std::numeric_limits<double>::infinity();
        const double u = inst.max_client_time();
        for (int mask = 1; mask < 16; ++mask) {
            double w = 0, e = 0;
            for (int m = 0; m < 4; ++m) {
                if (!(mask >> m & 1)) continue;
                w = std::max(w, inst.cloud_time[static_cast<std::size_t>(m)] + inst.tau2 * u);
                e += inst.edge_energy[static_cast<std::size_t>(m)];
            }
            best = std::min(best, inst.weights.time * w + inst.weights.energy * e);
        }
        if (std::abs(s.binary_objective - best) <= 1e-3 * std::abs(best)) ++matched;
        if (s.repaired) ++repaired;
        if (s.converged) {
            ++converged;
            double eq = 0;
            for (std::size_t m = 0; m < s.z.size(); ++m) eq = std::max(eq, std::abs(s.z[m] - s.z_tilde[m]));
            if (eq < 1e-3) ++residual_ok;
        }
        for (std::size_t r = 1; r < s.trace.size(); ++r) {
            const auto& prev = s.trace[r - 1];
            const auto& cur = s.trace[r];
            if (cur.outer != prev.outer) continue;
            ++rows;
            const double rise = cur.objective - prev.objective;
            worst_rise = std::max(worst_rise, rise);
            if (rise > 1e-9) ++violations;
        }
    }
    std::ostringstream d1, d2;
    d1 << matched << "/100 within 1e-3 of enumeration, residual < 1e-3 on " << residual_ok << "/" << converged
       << " converged, " << repaired << " repaired, " << elapsed << " s";
    d2 << rows << " inner steps, " << violations << " increases > 1e-9 (largest rise " << worst_rise << ")";
    return {{matched >= 95 && residual_ok == converged && elapsed < 10.0, d1.str()},
            {violations == 0 && rows > 0, d2.str()}};
}

Verdict noma_chain()
{
    auto rng = make_rng(7, 3);
    std::uniform_int_distribution<int> count(1, 10);
    std::uniform_real_distribution<double> log_gain(-15, -9), power(0.01, 0.1), noise_db(-180, -160);
    double worst = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int k = count(rng);
        phy::ChannelRealization ch;
        ch.gains.resize(k, 1);
        ch.bandwidth = 1e6;
        ch.noise_power = {std::pow(10.0, noise_db(rng) / 10) * 1e-3 * ch.bandwidth};
        phy::TxConfig tx;
        std::vector<std::size_t> clients;
        double total = 0;
        for (int n = 0; n < k; ++n) {
            ch.gains(n, 0) = std::pow(10.0, log_gain(rng));
            tx.power.push_back(power(rng));
            tx.model_bits.push_back(1e6);
            clients.push_back(static_cast<std::size_t>(n));
            total += tx.power.back() * ch.gains(n, 0);
        }
        const auto order = phy::sic_order(clients, ch, tx, 0);
        double sum = 0;
        for (auto n : order) sum += phy::rate(n, order, ch, tx, 0);
        const double bound = ch.bandwidth * std::log2(1 + total / ch.noise_power[0]);
        worst = std::max(worst, std::abs(sum - bound) / bound);
    }
    std::ostringstream d;
    d << "10000 chains, worst relative gap " << worst;
    return {worst <= 1e-9, d.str()};
}

Verdict fuzzy_example()
{
    const fuzzy::FuzzyEngine engine;
    const auto cls = engine.classify(0.2, 0.5, 0.8);
    const auto inf = engine.evaluate(0.2, 0.5, 0.8);
    const auto dom = engine.output().classes[inf.dominant_class()].name;
    const bool labels = engine.cq().classes[cls[0]].name == "weak" && engine.dq().classes[cls[1]].name == "average" &&
                        engine.ms().classes[cls[2]].name == "stale";

    const auto standard = fuzzy::FuzzyRuleBase::standard();
    std::stringstream buf;
    standard.save(buf);
    const auto back = fuzzy::FuzzyRuleBase::load(buf);
    int same = 0;
    for (std::size_t i = 0; i < standard.rules().size(); ++i) {
        if (standard.rules()[i] == back.rules()[i]) ++same;
    }
    std::ostringstream d;
    d << "classes (" << engine.cq().classes[cls[0]].name << ", " << engine.dq().classes[cls[1]].name << ", "
      << engine.ms().classes[cls[2]].name << "), rule " << inf.strongest_rule() << ", dominant " << dom << ", "
      << same << "/27 rules round-trip, score " << engine.score(0.2, 0.5, 0.8);
    return {labels && inf.strongest_rule() == 24 && dom == "average" && same == 27 && back == standard, d.str()};
}

Verdict gradient_checks()
{
    const auto t0 = clock_type::now();
    auto rng = make_rng(11, 5);
    std::uniform_int_distribution<std::size_t> width(2, 32);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::vector<nn::Activation> smooth{nn::Activation::tanh, nn::Activation::sigmoid, nn::Activation::linear};
    double worst = 0;
    std::size_t checked = 0;
    for (int net_i = 0; net_i < 20; ++net_i) {
        const std::size_t in = width(rng), h1 = width(rng), h2 = width(rng), out = width(rng) % 8 + 1;
        std::vector<nn::Activation> acts;
        if (net_i % 2 == 0) {
            // DDPG shapes: rectified hidden layers, tanh or linear head
            acts = {nn::Activation::relu, nn::Activation::relu,
                    net_i % 4 == 0 ? nn::Activation::tanh : nn::Activation::linear};
        } else {
            for (int l = 0; l < 3; ++l) acts.push_back(smooth[static_cast<std::size_t>(net_i + l) % smooth.size()]);
        }
        auto net = nn::DenseNetwork::make({in, h1, h2, out}, acts, rng, 0.5);
        const Eigen::Index batch = 4;
        Eigen::MatrixXd x(static_cast<Eigen::Index>(in), batch), c(static_cast<Eigen::Index>(out), batch);
        // redraw inputs until no rectifier sits within 1e-3 of its kink
        for (int attempt = 0;; ++attempt) {
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = gauss(rng);
            double closest = 1e9;
            Eigen::MatrixXd a = x;
            for (const auto& l : net.layers()) {
                Eigen::MatrixXd pre = l.weight * a;
                pre.colwise() += l.bias;
                if (l.activation == nn::Activation::relu) closest = std::min(closest, pre.cwiseAbs().minCoeff());
                a = l.activation == nn::Activation::relu ? Eigen::MatrixXd(pre.cwiseMax(0.0))
                    : l.activation == nn::Activation::tanh ? Eigen::MatrixXd(pre.array().tanh().matrix())
                    : l.activation == nn::Activation::sigmoid ? Eigen::MatrixXd((1 / (1 + (-pre.array()).exp())).matrix())
                    : pre;
            }
            if (closest > 1e-3 || attempt > 100) break;
        }
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = gauss(rng);
        auto objective = [&](const nn::DenseNetwork& n) { return n.forward(x).cwiseProduct(c).sum(); };

        nn::Tape tape;
        net.forward(x, tape);
        Eigen::MatrixXd grad_in;
        const auto g = net.backward(tape, c, &grad_in).flatten();
        auto theta = net.parameters();
        const double h = 1e-5;
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };
        for (Eigen::Index p = 0; p < theta.size(); ++p) {
            auto plus = net, minus = net;
            auto tp = theta, tm = theta;
            tp(p) += h;
            tm(p) -= h;
            plus.set_parameters(tp);
            minus.set_parameters(tm);
            const double fd = (objective(plus) - objective(minus)) / (2 * h);
            worst = std::max(worst, rel(g(p), fd));
            ++checked;
        }
        // input gradient, which the actor update pulls through the critic
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double keep = x(i);
            x(i) = keep + h;
            const double fp = objective(net);
            x(i) = keep - h;
            const double fm = objective(net);
            x(i) = keep;
            worst = std::max(worst, rel(grad_in(i), (fp - fm) / (2 * h)));
            ++checked;
        }
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream d;
    d << checked << " partials on 20 networks, worst relative error " << worst << ", " << elapsed << " s";
    return {worst < 1e-4 && elapsed < 30.0, d.str()};
}

config::ExperimentConfig base_config()
{
    config::ExperimentConfig cfg;  // built-in defaults mirror configs/default.ini
    cfg.threads = 1;
    return cfg;
}

struct PolicySet {
    std::map<std::uint64_t, ddpg::Policy> ddpg, fpa, fca;
};

Verdict ddpg_vs_baselines(const config::ExperimentConfig& cfg, PolicySet& policies, double& elapsed)
{
    const auto t0 = clock_type::now();
    int beat_rra = 0, beat_fpa = 0, beat_fca = 0;
    std::ostringstream d;
    d << std::setprecision(4);
    for (auto seed : seeds) {
        const auto sc = sim::make_scenario(cfg, seed);
        policies.ddpg.emplace(seed, sim::train_policy(cfg, sc, config::AccessMode::noma).policy);
        policies.fpa.emplace(seed, sim::train_policy(cfg, sc, config::AccessMode::noma, config::AllocationMode::fpa).policy);
        policies.fca.emplace(seed, sim::train_policy(cfg, sc, config::AccessMode::noma, config::AllocationMode::fca).policy);
        auto run = [&](const std::string& name, const ddpg::Policy* p) {
            return mean(sim::rollout_costs(cfg, sc, config::parse_scheme(name, config::AllocationMode::ddpg), p,
                                           cfg.eval_rounds));
        };
        const double c_ddpg = run("DDPG", &policies.ddpg.at(seed));
        const double c_rra = run("RRA", nullptr);
        const double c_fpa = run("FPA", &policies.fpa.at(seed));
        const double c_fca = run("FCA", &policies.fca.at(seed));
        beat_rra += c_ddpg < c_rra;
        beat_fpa += c_ddpg < c_fpa;
        beat_fca += c_ddpg < c_fca;
        d << " [" << seed << ": " << c_ddpg << "/" << c_rra << "/" << c_fpa << "/" << c_fca << "]";
    }
    elapsed = seconds_since(t0);
    std::ostringstream head;
    head << "DDPG below RRA " << beat_rra << "/10, FPA " << beat_fpa << "/10, FCA " << beat_fca
         << "/10; mean cost DDPG/RRA/FPA/FCA per seed" << d.str();
    return {beat_rra >= 9 && beat_fpa >= 8 && beat_fca >= 8, head.str()};
}

Verdict cost_vs_capacity(const config::ExperimentConfig& base)
{
    std::ostringstream d;
    d << std::setprecision(5);
    bool ok = true;
    for (auto mode : {"RRA", "MID"}) {
        std::vector<double> means;
        for (std::size_t cap : {2, 4, 6}) {
            auto cfg = base;
            cfg.capacity = cap;
            std::vector<double> costs;
            for (auto seed : seeds) {
                const auto sc = sim::make_scenario(cfg, seed);
                const auto c = sim::rollout_costs(cfg, sc, config::parse_scheme(mode, config::AllocationMode::ddpg),
                                                  nullptr, cfg.eval_rounds);
                costs.insert(costs.end(), c.begin(), c.end());
            }
            means.push_back(mean(costs));
        }
        ok = ok && means[0] < means[1] && means[1] < means[2];
        d << mode << " N_m=2,4,6: " << means[0] << ", " << means[1] << ", " << means[2] << "; ";
    }
    return {ok, d.str()};
}

Verdict staleness_trend(const config::ExperimentConfig& cfg)
{
    std::map<std::string, std::vector<double>> final_ms;
    std::size_t checks = 0, broken = 0;
    for (auto seed : seeds) {
        const auto sc = sim::make_scenario(cfg, seed);
        for (auto mode : {config::AssociationMode::fuzzy, config::AssociationMode::random,
                          config::AssociationMode::greedy}) {
            sim::RoundSimulator rs(cfg, sc, mode, config::AccessMode::noma);
            for (int r = 0; r < 50; ++r) {
                rs.prepare(static_cast<std::uint64_t>(r));
                for (std::size_t n = 0; n < cfg.clients; ++n) {
                    const int expect = rs.association().edge_of[n] >= 0 ? 1 : rs.previous_staleness()[n] + 1;
                    ++checks;
                    if (rs.staleness()[n] != expect) ++broken;
                }
            }
            final_ms[config::to_string(mode)].push_back(rs.average_staleness());
        }
    }
    const double f = median(final_ms["FCEA"]), r = median(final_ms["RCEA"]), g = median(final_ms["GCEA"]);
    std::ostringstream d;
    d << "median MS at round 50: FCEA " << f << ", RCEA " << r << ", GCEA " << g << "; recursion held on "
      << checks - broken << "/" << checks;
    return {f <= r && f <= g && broken == 0, d.str()};
}

Verdict learning_trend(const config::ExperimentConfig& cfg, const PolicySet& policies)
{
    const auto t0 = clock_type::now();
    int fcea_wins = 0;
    double lowest = 1;
    std::string lowest_tag;
    std::ostringstream per_seed;
    per_seed << std::setprecision(4);
    for (auto seed : seeds) {
        const auto sc = sim::make_scenario(cfg, seed);
        std::map<std::string, double> acc;
        for (const auto& name : {"FCEA", "RCEA", "GCEA", "OMA", "RRA", "FPA", "FCA"}) {
            const auto scheme = config::parse_scheme(name, config::AllocationMode::ddpg);
            const ddpg::Policy* p = nullptr;
            if (scheme.allocation == config::AllocationMode::fpa) p = &policies.fpa.at(seed);
            else if (scheme.allocation == config::AllocationMode::fca) p = &policies.fca.at(seed);
            else if (scheme.needs_policy()) p = &policies.ddpg.at(seed);
            const auto cell = sim::run_cell(cfg, sc, scheme, p);
            acc[name] = cell.rows.back().accuracy;
            if (acc[name] < lowest) {
                lowest = acc[name];
                lowest_tag = std::string(name) + "/" + std::to_string(seed);
            }
        }
        fcea_wins += acc["FCEA"] >= acc["RCEA"];
        per_seed << " [" << seed << ": " << acc["FCEA"] << " vs " << acc["RCEA"] << "]";
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream d;
    d << "FCEA >= RCEA in " << fcea_wins << "/10 seeds, lowest final accuracy " << lowest << " (" << lowest_tag
      << "), " << elapsed << " s;" << per_seed.str();
    return {fcea_wins >= 8 && lowest > 0.5 && elapsed < 300.0, d.str()};
}

// Plain FedAvg written against the raw data, sharing nothing with the HFL engine.
std::vector<double> fedavg_reference(const sim::Scenario& sc, double eta, int tau1, int rounds)
{
    const auto f = static_cast<Eigen::Index>(sc.test.features());
    const int k = sc.test.classes;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, f + 1);
    auto probs = [&](const Eigen::MatrixXd& wm, const data::Dataset& d) {
        Eigen::MatrixXd p(static_cast<Eigen::Index>(d.size()), k);
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            Eigen::VectorXd z = wm.leftCols(f) * d.x.row(i).transpose() + wm.col(f);
            z.array() -= z.maxCoeff();
            z = z.array().exp();
            p.row(i) = (z / z.sum()).transpose();
        }
        return p;
    };
    std::vector<double> losses;
    double total = 0;
    for (const auto& s : sc.shards) total += static_cast<double>(s.size());
    for (int r = 0; r < rounds; ++r) {
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, f + 1);
        for (const auto& s : sc.shards) {
            Eigen::MatrixXd wn = w;
            for (int t = 0; t < tau1; ++t) {
                Eigen::MatrixXd p = probs(wn, s);
                for (std::size_t i = 0; i < s.size(); ++i) p(static_cast<Eigen::Index>(i), s.y[i]) -= 1;
                Eigen::MatrixXd g(k, f + 1);
                g.leftCols(f) = p.transpose() * s.x / static_cast<double>(s.size());
                g.col(f) = p.colwise().sum().transpose() / static_cast<double>(s.size());
                wn -= eta * g;
            }
            next += (static_cast<double>(s.size()) / total) * wn;
        }
        w = next;
        const auto p = probs(w, sc.test);
        double loss = 0;
        for (std::size_t i = 0; i < sc.test.size(); ++i) loss -= std::log(p(static_cast<Eigen::Index>(i), sc.test.y[i]));
        losses.push_back(loss / static_cast<double>(sc.test.size()));
    }
    return losses;
}

Verdict fedavg_reduction(const config::ExperimentConfig& base)
{
    auto cfg = base;
    cfg.capacity = cfg.clients / cfg.edges;
    cfg.coverage_radius = 10 * cfg.side;
    cfg.schedule = config::ScheduleMode::fastest;
    cfg.m_c = cfg.edges;
    cfg.accuracy.delta = 0.5;  // tau_2 = 1: one edge iteration per round
    cfg.rounds = 20;
    double worst = 0;
    bool all_in = true;
    for (auto seed : {1ULL, 2ULL, 3ULL}) {
        const auto sc = sim::make_scenario(cfg, seed);
        const auto cell = sim::run_cell(cfg, sc, config::parse_scheme("FCEA+MID", config::AllocationMode::ddpg), nullptr);
        const auto ref = fedavg_reference(sc, cfg.learning_rate, cost::local_iterations(cfg.accuracy), cfg.rounds);
        for (int r = 0; r < cfg.rounds; ++r) {
            worst = std::max(worst, std::abs(cell.rows[static_cast<std::size_t>(r)].loss - ref[static_cast<std::size_t>(r)]));
            all_in = all_in && cell.rows[static_cast<std::size_t>(r)].avg_ms == 1.0;
        }
    }
    std::ostringstream d;
    d << "tau_2 = " << cost::edge_iterations(cfg.accuracy) << ", worst per-round loss gap " << worst
      << " over 3 seeds x 20 rounds, every client orchestrated: " << (all_in ? "yes" : "no");
    return {worst <= 1e-9 && all_in && cost::edge_iterations(cfg.accuracy) == 1, d.str()};
}

}  // namespace

int main(int argc, char** argv)
{
    // --known-fail 6,9: criteria documented as unmet; they still print FAIL but do not set the exit code
    std::set<int> known;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) != "--known-fail") continue;
        std::stringstream list(argv[i + 1]);
        for (std::string id; std::getline(list, id, ',');) known.insert(std::stoi(id));
    }
    std::map<int, Verdict> verdicts;
    auto report = [&](int id, const std::string& name, const Verdict& v) {
        verdicts[id] = v;
        std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << v.detail
                  << (!v.pass && known.count(id) ? " (known, see README)" : "") << std::endl;
    };

    const auto [c1, c2] = pdd_criteria();
    report(1, "PDD matches exhaustive enumeration", c1);
    report(2, "augmented Lagrangian nonincreasing in the inner loop", c2);
    report(3, "NOMA SIC sum-rate identity", noma_chain());
    report(4, "fuzzy worked example and rule round-trip", fuzzy_example());
    report(5, "network gradients vs central differences", gradient_checks());

    const auto cfg = base_config();
    PolicySet policies;
    double train_time = 0;
    report(6, "DDPG below RRA / FPA / FCA", ddpg_vs_baselines(cfg, policies, train_time));
    report(7, "mean cost increases with N_m", cost_vs_capacity(cfg));
    report(8, "FCEA staleness no worse than RCEA and GCEA", staleness_trend(cfg));
    report(9, "learning trend on synthetic IID data", learning_trend(cfg, policies));
    report(10, "FedAvg reduction", fedavg_reduction(cfg));

    const auto passed = std::count_if(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second.pass; });
    const auto unexpected = std::count_if(verdicts.begin(), verdicts.end(),
                                          [&](const auto& kv) { return !kv.second.pass && !known.count(kv.first); });
    std::cout << passed << "/" << verdicts.size() << " criteria passed, " << unexpected << " unexpected failures"
              << std::endl;
    return unexpected == 0 ? 0 : 1;
}
