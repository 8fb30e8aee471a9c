#include <nomahfl/config.hpp>
#include <nomahfl/cost.hpp>
#include <nomahfl/ddpg.hpp>
#include <nomahfl/fuzzy.hpp>
#include <nomahfl/hfl.hpp>
#include <nomahfl/pdd.hpp>
#include <nomahfl/phy.hpp>
#include <nomahfl/sim.hpp>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <sstream>

namespace py = pybind11;
using namespace nomahfl;

namespace {

phy::ChannelRealization one_edge(const std::vector<double>& gains, double noise, double bandwidth)
{
    phy::ChannelRealization ch;
    ch.gains = Eigen::Map<const Eigen::VectorXd>(gains.data(), static_cast<Eigen::Index>(gains.size()));
    ch.noise_power = {noise};
    ch.bandwidth = bandwidth;
    ch.validate();
    return ch;
}

// Rates on a single edge, in decode order; returns (order, rates).
std::pair<std::vector<std::size_t>, std::vector<double>> noma_rates(const std::vector<double>& gains,
                                                                    const std::vector<double>& power,
                                                                    double noise, double bandwidth)
{
    if (gains.size() != power.size()) throw config_error("gains and power differ in length");
    const auto ch = one_edge(gains, noise, bandwidth);
    const phy::TxConfig tx{power, std::vector<double>(power.size(), 1.0)};
    std::vector<std::size_t> clients(gains.size());
    for (std::size_t i = 0; i < clients.size(); ++i) clients[i] = i;
    auto order = phy::sic_order(clients, ch, tx, 0);
    auto rates = phy::chain_rates(order, ch, tx, 0);
    return {order, rates};
}

py::dict solve_schedule(const std::vector<double>& edge_energy, const std::vector<double>& cloud_time,
                        const std::vector<std::vector<double>>& client_times, int tau2, double time_weight,
                        double energy_weight)
{
    pdd::SchedulingInstance inst;
    inst.edge_energy = edge_energy;
    inst.cloud_time = cloud_time;
    inst.client_times = client_times;
    inst.tau2 = tau2;
    inst.weights = {time_weight, energy_weight};
    const auto s = pdd::solve(inst);
    py::dict d;
    d["schedule"] = s.binary;
    d["objective"] = s.binary_objective;
    d["z"] = s.z;
    d["z_tilde"] = s.z_tilde;
    d["converged"] = s.converged;
    d["repaired"] = s.repaired;
    d["outer_iterations"] = s.outer_iterations;
    std::vector<double> al;
    for (const auto& r : s.trace) al.push_back(r.objective);
    d["trace"] = al;
    d["enumeration"] = pdd::enumerate_best(inst);
    return d;
}

config::ExperimentConfig config_from_text(const std::string& text)
{
    std::istringstream in(text);
    return config::load(in);
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "NOMA hierarchical federated learning simulator";

    py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<runtime_error>(m, "RuntimeError", PyExc_RuntimeError);

    m.def("noise_power_watts", &phy::noise_power_watts, py::arg("psd_dbm_hz"), py::arg("bandwidth_hz"));
    m.def("shannon_rate", &phy::shannon_rate, py::arg("bandwidth_hz"), py::arg("sinr"));
    m.def("noma_rates", &noma_rates, py::arg("gains"), py::arg("power"), py::arg("noise"),
          py::arg("bandwidth") = 1e6, "SIC decode order and per-client rates at one edge");

    m.def(
        "iterations",
        [](double theta, double xi, double mu, double delta) {
            const cost::AccuracyProfile p{theta, xi, mu, delta};
            return std::make_pair(cost::local_iterations(p), cost::edge_iterations(p));
        },
        py::arg("theta") = 0.5, py::arg("xi") = 0.5, py::arg("mu") = 2.0, py::arg("delta") = 2.0);
    m.def(
        "local_compute_cost",
        [](double cycles, double samples, double frequency, double capacitance, int tau1) {
            cost::ComputeProfile c;
            c.cycles_per_sample = cycles;
            c.dataset_size = samples;
            c.frequency = frequency;
            c.capacitance = capacitance;
            const auto te = cost::local_compute_cost(c, tau1);
            return std::make_pair(te.time, te.energy);
        },
        py::arg("cycles_per_sample"), py::arg("samples"), py::arg("frequency"), py::arg("capacitance"),
        py::arg("tau1"));

    py::class_<fuzzy::FuzzyEngine>(m, "FuzzyEngine")
        .def(py::init<>())
        .def("score", &fuzzy::FuzzyEngine::score, py::arg("cq"), py::arg("dq"), py::arg("ms"))
        .def("classify",
             [](const fuzzy::FuzzyEngine& e, double cq, double dq, double ms) {
                 const auto c = e.classify(cq, dq, ms);
                 return std::vector<std::string>{e.cq().classes[c[0]].name, e.dq().classes[c[1]].name,
                                                 e.ms().classes[c[2]].name};
             })
        .def("strongest_rule",
             [](const fuzzy::FuzzyEngine& e, double cq, double dq, double ms) {
                 return e.evaluate(cq, dq, ms).strongest_rule();
             })
        .def("dominant_class", [](const fuzzy::FuzzyEngine& e, double cq, double dq, double ms) {
            return e.output().classes[e.evaluate(cq, dq, ms).dominant_class()].name;
        });
    m.def("update_staleness", &fuzzy::update_staleness, py::arg("previous"), py::arg("associated"));

    m.def("solve_schedule", &solve_schedule, py::arg("edge_energy"), py::arg("cloud_time"),
          py::arg("client_times"), py::arg("tau2") = 1, py::arg("time_weight") = 0.5,
          py::arg("energy_weight") = 0.5);

    m.def(
        "edge_aggregate",
        [](const std::vector<Eigen::VectorXd>& models, const std::vector<double>& sizes) {
            return hfl::edge_aggregate(models, sizes);
        },
        py::arg("models"), py::arg("sizes"));
    m.def(
        "cloud_aggregate",
        [](const std::vector<Eigen::VectorXd>& models, const std::vector<double>& sizes, const std::vector<int>& z) {
            return hfl::cloud_aggregate(models, sizes, z);
        },
        py::arg("models"), py::arg("sizes"), py::arg("z"));
    m.def(
        "select_fastest",
        [](const std::vector<double>& times, std::size_t m_c) { return hfl::select_fastest(times, m_c); },
        py::arg("times"), py::arg("m_c"));

    py::class_<config::ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_static("from_file", &config::load_file, py::arg("path"))
        .def_static("from_string", &config_from_text, py::arg("text"))
        .def_readwrite("seeds", &config::ExperimentConfig::seeds)
        .def_readwrite("schemes", &config::ExperimentConfig::schemes)
        .def_readwrite("rounds", &config::ExperimentConfig::rounds)
        .def_readwrite("clients", &config::ExperimentConfig::clients)
        .def_readwrite("edges", &config::ExperimentConfig::edges)
        .def_readwrite("capacity", &config::ExperimentConfig::capacity)
        .def_readwrite("eval_rounds", &config::ExperimentConfig::eval_rounds)
        .def_readwrite("threads", &config::ExperimentConfig::threads)
        .def_property(
            "train_samples", [](const config::ExperimentConfig& c) { return c.synthetic.train_samples; },
            [](config::ExperimentConfig& c, std::size_t v) { c.synthetic.train_samples = v; })
        .def_property(
            "test_samples", [](const config::ExperimentConfig& c) { return c.synthetic.test_samples; },
            [](config::ExperimentConfig& c, std::size_t v) { c.synthetic.test_samples = v; })
        .def_property(
            "ddpg_episodes", [](const config::ExperimentConfig& c) { return c.ddpg.episodes; },
            [](config::ExperimentConfig& c, int v) { c.ddpg.episodes = v; })
        .def("validate", &config::ExperimentConfig::validate);

    m.def(
        "run_experiment",
        [](const config::ExperimentConfig& cfg) {
            cfg.validate();
            sim::ExperimentResult r;
            {
                py::gil_scoped_release release;
                r = sim::run_experiment(cfg);
            }
            py::list rows;
            for (const auto& x : r.rows) {
                py::dict d;
                d["scheme"] = x.scheme;
                d["seed"] = x.seed;
                d["round"] = x.round;
                d["accuracy"] = x.accuracy;
                d["loss"] = x.loss;
                d["avg_ms"] = x.avg_ms;
                d["time"] = x.time;
                d["energy"] = x.energy;
                d["cost"] = x.cost;
                rows.append(d);
            }
            return py::make_tuple(rows, r.failures);
        },
        py::arg("config"), "Run every (scheme, seed) cell; returns (rows, failures)");
}
