#include <nomahfl/cost.hpp>
#include <algorithm>
#include <cmath>

namespace nomahfl::cost {

namespace {

void check_unit_open(double x, const char* name)
{
    if (!(x > 0 && x < 1)) throw config_error(std::string(name) + " must lie in (0, 1)");
}

// Iteration counts are loop trip counts; a relative 1e-12 guard keeps
// values like 2 * log(e) = 2.0000000000000004 from rounding up to 3.
int ceil_count(double x)
{
    const double c = std::ceil(x - 1e-12 * std::max(1.0, std::abs(x)));
    return std::max(1, static_cast<int>(c));
}

}  // namespace

void Weights::validate() const
{
    if (time < 0 || time > 1 || energy < 0 || energy > 1 || std::abs(time + energy - 1) > 1e-12) {
        throw config_error("weights must lie in [0, 1] and sum to 1");
    }
}

int local_iterations(const AccuracyProfile& profile)
{
    check_unit_open(profile.local_accuracy, "local accuracy");
    if (!(profile.mu > 0)) throw config_error("mu must be positive");
    return ceil_count(profile.mu * std::log(1 / profile.local_accuracy));
}

int edge_iterations(const AccuracyProfile& profile)
{
    check_unit_open(profile.local_accuracy, "local accuracy");
    check_unit_open(profile.edge_accuracy, "edge accuracy");
    if (!(profile.delta > 0)) throw config_error("delta must be positive");
    return ceil_count(profile.delta * std::log(1 / profile.edge_accuracy) /
                      (1 - profile.local_accuracy));
}

TimeEnergy local_compute_cost(const ComputeProfile& p, int tau1)
{
    if (!(p.frequency >= p.f_min && p.frequency <= p.f_max)) {
        throw config_error("CPU frequency outside its bounds");
    }
    if (tau1 < 1) throw config_error("tau_1 must be at least 1");
    const double cycles = tau1 * p.cycles_per_sample * p.dataset_size;
    return {cycles / p.frequency, p.capacitance / 2 * p.frequency * p.frequency * cycles};
}

TimeEnergy edge_phase_cost(std::span<const ClientCost> clients, int tau2)
{
    if (clients.empty()) throw runtime_error("edge has no clients");
    TimeEnergy out;
    for (const auto& c : clients) {
        out.time = std::max(out.time, tau2 * c.iteration_time());
        out.energy += tau2 * c.iteration_energy();
    }
    return out;
}

double weighted_cost(double time, double energy, const Weights& w)
{
    return w.time * time + w.energy * energy;
}

RoundCostReport system_cost(std::span<const int> z, std::span<const EdgeCost> edges,
                            const Weights& weights)
{
    weights.validate();
    if (z.size() != edges.size()) throw config_error("schedule and edge costs differ in length");
    RoundCostReport r;
    r.weights = weights;
    r.z.assign(z.begin(), z.end());
    r.edges.assign(edges.begin(), edges.end());
    bool any = false;
    for (std::size_t m = 0; m < z.size(); ++m) {
        if (z[m] != 0 && z[m] != 1) throw config_error("schedule indicators must be binary");
        if (z[m] == 0) continue;
        any = true;
        r.time = std::max(r.time, edges[m].total_time());
        r.energy += edges[m].total_energy();
    }
    if (!any) throw runtime_error("no edge selected");
    r.cost = weighted_cost(r.time, r.energy, weights);
    return r;
}

}  // namespace nomahfl::cost
