#pragma once
#include <nomahfl/common.hpp>
#include <nomahfl/cost.hpp>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nomahfl::pdd {

/*
 * Edge-server scheduling data for one global round.
 *
 *   minimize  lambda_t W + lambda_e sum_m z_m E_m
 *   s.t.      W >= z_m (T^cloud_m + tau_2 U),  U = max client iteration time,
 *             z_m in {0, 1}.
 */
struct SchedulingInstance {
    std::vector<double> edge_energy;                // E^cloud_m + E^edge_m, joules
    std::vector<double> cloud_time;                 // T^cloud_m, seconds
    std::vector<std::vector<double>> client_times;  // per edge: t_cmp + t_com per client
    int tau2 = 1;
    cost::Weights weights;

    std::size_t num_edges() const { return edge_energy.size(); }
    void validate() const;

    // U = max over every client of t_cmp + t_com.
    double max_client_time() const;

    // T^cloud_m + tau_2 U, the time an edge contributes when scheduled.
    std::vector<double> edge_time_terms(double u) const;

    // Objective for a (possibly relaxed) schedule with W at its minimum.
    double objective(std::span<const double> z) const;
    double objective(std::span<const int> z) const;
};

// Per-edge cost of scheduling only that edge; the binary repair picks its argmin.
std::vector<double> singleton_costs(const SchedulingInstance& inst);

enum class GammaRule {
    exact,       // KKT multiplier of the W-constraint, z-block solved exactly
    subgradient  // projected subgradient with a diminishing step
};

struct PddParams {
    double epsilon = 1e-4;        // inner-loop objective change
    int max_outer = 50;           // L^max
    int max_inner = 500;
    double penalty0 = 1.0;        // v^0
    double shrink = 0.8;          // v^{l+1} = shrink v^l
    double eta0 = 1.0;            // residual tolerance, halved every outer iteration
    double residual_tol = 1e-3;
    double z_init = 0.5;
    GammaRule gamma_rule = GammaRule::exact;
    double gamma_step = 0.1;      // subgradient rule: step / sqrt(k)
};

struct TraceRow {
    int outer = 0;
    int inner = 0;
    double objective = 0;      // augmented Lagrangian
    double residual_eq = 0;    // max |z - z~|
    double residual_bin = 0;   // max |z (1 - z~)|
    double penalty = 0;
};

struct ScheduleSolution {
    std::vector<double> z, z_tilde;
    std::vector<double> q, q_tilde;
    std::vector<double> gamma;
    double u = 0;
    double w = 0;
    double penalty = 0;
    std::vector<TraceRow> trace;
    std::vector<double> outer_objective;  // AL value at the end of each outer iteration
    int outer_iterations = 0;
    bool converged = false;
    bool repaired = false;
    std::vector<int> binary;
    double binary_objective = 0;

    double residual() const;
};

std::vector<double> update_z_tilde(std::span<const double> z, std::span<const double> q,
                                   std::span<const double> q_tilde, double v);

// Closed-form z_m of the z-subproblem for a given multiplier gamma, clipped to [0, 1].
std::vector<double> update_z(const SchedulingInstance& inst, std::span<const double> z_tilde,
                             std::span<const double> q, std::span<const double> q_tilde,
                             double v, std::span<const double> gamma, double u);

struct Epigraph {
    double u = 0;
    double w = 0;
};

// U* = max client iteration time, W* = max_m z_m (T^cloud_m + tau_2 U*).
Epigraph update_u_w(const SchedulingInstance& inst, std::span<const double> z);

struct Duals {
    std::vector<double> q, q_tilde;
};

Duals update_duals(std::span<const double> z, std::span<const double> z_tilde,
                   std::span<const double> q, std::span<const double> q_tilde, double v);

// gamma'_m = max(0, gamma_m + step (z_m c_m - W)), c_m = T^cloud_m + tau_2 U.
std::vector<double> update_gamma(std::span<const double> gamma, std::span<const double> z,
                                 std::span<const double> edge_time, double w, double step);

struct ZBlock {
    std::vector<double> z;
    std::vector<double> gamma;
    double w = 0;
};

// Exact minimizer of the AL over z (W eliminated) and the matching multipliers.
ZBlock solve_z_block(const SchedulingInstance& inst, std::span<const double> z_tilde,
                     std::span<const double> q, std::span<const double> q_tilde, double v,
                     double u);

double augmented_lagrangian(const SchedulingInstance& inst, std::span<const double> z,
                            std::span<const double> z_tilde, std::span<const double> q,
                            std::span<const double> q_tilde, double v, double w);

ScheduleSolution solve(const SchedulingInstance& inst, const PddParams& params = {});

// Exhaustive search over every nonempty binary schedule (M <= 20).
std::vector<int> enumerate_best(const SchedulingInstance& inst);

void write_trace_csv(std::ostream& os, const ScheduleSolution& sol);

SchedulingInstance load_instance(const std::string& path);

}  // namespace nomahfl::pdd
