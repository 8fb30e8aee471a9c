#pragma once
#include <nomahfl/common.hpp>
#include <cstddef>
#include <span>
#include <vector>

namespace nomahfl::cost {

struct ComputeProfile {
    double cycles_per_sample = 1e7;  // c_n
    double dataset_size = 0;         // D_n, samples
    double frequency = 1e9;          // f_n, Hz
    double capacitance = 1e-28;      // beta_n
    double f_min = 1e9;
    double f_max = 10e9;
};

struct AccuracyProfile {
    double local_accuracy = 0.5;  // theta
    double edge_accuracy = 0.5;   // xi
    double mu = 2;
    double delta = 2;
};

struct Weights {
    double time = 0.5;
    double energy = 0.5;
    void validate() const;
};

// tau_1 = ceil(mu log(1/theta)), at least 1.
int local_iterations(const AccuracyProfile& profile);

// tau_2 = ceil(delta log(1/xi) / (1 - theta)), at least 1.
int edge_iterations(const AccuracyProfile& profile);

// tau_1 c D / f and tau_1 (beta/2) f^2 c D.
TimeEnergy local_compute_cost(const ComputeProfile& profile, int tau1);

// Per-iteration costs of one orchestrated client (compute is already
// multiplied by tau_1; communication is one upload).
struct ClientCost {
    std::size_t client = 0;
    double t_cmp = 0;
    double e_cmp = 0;
    double t_com = 0;
    double e_com = 0;

    double iteration_time() const { return t_cmp + t_com; }
    double iteration_energy() const { return e_cmp + e_com; }
};

// Synchronous edge phase: T = max tau_2 (t_cmp + t_com), E = sum tau_2 (e_cmp + e_com).
TimeEnergy edge_phase_cost(std::span<const ClientCost> clients, int tau2);

struct EdgeCost {
    TimeEnergy edge;
    TimeEnergy cloud;

    double total_time() const { return edge.time + cloud.time; }
    double total_energy() const { return cloud.energy + edge.energy; }
};

struct RoundCostReport {
    std::vector<ClientCost> clients;
    std::vector<EdgeCost> edges;
    std::vector<int> z;
    Weights weights;
    double time = 0;    // T
    double energy = 0;  // E
    double cost = 0;    // lambda_t T + lambda_e E
};

double weighted_cost(double time, double energy, const Weights& w);

// Fills T, E and the weighted cost from z and the per-edge totals.
// E is accumulated in edge order, so re-summing the components in the
// same order reproduces it bit for bit.
RoundCostReport system_cost(std::span<const int> z, std::span<const EdgeCost> edges,
                            const Weights& weights);

}  // namespace nomahfl::cost
