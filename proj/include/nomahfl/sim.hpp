#pragma once
#include <nomahfl/config.hpp>
#include <nomahfl/cost.hpp>
#include <nomahfl/dataset.hpp>
#include <nomahfl/ddpg.hpp>
#include <nomahfl/fuzzy.hpp>
#include <nomahfl/hfl.hpp>
#include <nomahfl/phy.hpp>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace nomahfl::sim {

using config::AccessMode;
using config::AllocationMode;
using config::AssociationMode;
using config::ExperimentConfig;
using config::Scheme;

// Edges halfway between the centre and each corner (extra edges on a ring); clients uniform.
phy::Topology make_topology(const ExperimentConfig& cfg, std::uint64_t seed);

// Per-seed world shared by every scheme: positions, shards and test set.
struct Scenario {
    std::uint64_t seed = 0;
    phy::Topology topology;
    std::vector<data::Dataset> shards;
    data::Dataset test;
    std::vector<double> data_sizes;
    double max_data_size = 0;
};

Scenario make_scenario(const ExperimentConfig& cfg, std::uint64_t seed);

// Distinct fading seed per (experiment seed, round).
std::uint64_t round_seed(std::uint64_t seed, std::uint64_t round);

struct AssociationInputs {
    const phy::ChannelRealization* channels = nullptr;
    const phy::Topology* topology = nullptr;
    std::span<const double> data_sizes;
    std::span<const int> staleness;
    std::size_t capacity = 4;
    double radius = 250;
};

fuzzy::AssociationProblem association_problem(const AssociationInputs& in);

// FCEA through the fuzzy engine.
fuzzy::Association fuzzy_associate(const AssociationInputs& in, const fuzzy::FuzzyEngine& engine);

// RCEA: clients in random order, each to a uniformly drawn covering edge with room.
// GCEA: every edge ranks by channel gain, conflicts go to the nearest edge.
fuzzy::Association baseline_associate(AssociationMode mode, const AssociationInputs& in, rng_t& rng);

// RRA draws both uniformly; FPA pins power and FCA pins frequency at the
// midpoint of their range, taking the other variable from `actor`; MID pins both.
ddpg::Allocation baseline_allocate(AllocationMode mode, std::size_t slots, const ddpg::ActionBounds& bounds,
                                   rng_t& rng, const ddpg::Allocation* actor = nullptr);

// Equal band split: R = (B/k) log2(1 + p|h|^2 / (sigma^2 / k)), k = |clients|.
std::vector<double> oma_access(std::span<const std::size_t> clients, const phy::ChannelRealization& ch,
                               const phy::TxConfig& tx, std::size_t m);

struct RoundOutcome {
    cost::RoundCostReport report;
    std::vector<int> z;             // per edge
    std::vector<std::size_t> active;  // edges with clients
    bool fastest_agrees = true;     // select_fastest with M_c = |selected| gives the same set
    bool schedule_converged = true;
    bool schedule_repaired = false;
};

/*
 * Channel draw, association, staleness bookkeeping and cost accounting for
 * one scheme on one scenario. Rounds are addressed by index so that every
 * scheme sees the same channels in round i.
 */
class RoundSimulator {
public:
    RoundSimulator(const ExperimentConfig& cfg, const Scenario& scenario, AssociationMode association,
                   AccessMode access);

    std::size_t slots() const { return cfg_.edges * cfg_.capacity; }

    // Draws channels for `round`, associates with the current staleness and
    // then applies the staleness recursion. Returns the allocation state.
    ddpg::MdpState prepare(std::uint64_t round);

    RoundOutcome finish(const ddpg::Allocation& allocation);

    void reset_staleness();

    const fuzzy::Association& association() const { return assoc_; }
    const phy::ChannelRealization& channels() const { return ch_; }
    const std::vector<int>& staleness() const { return staleness_; }
    const std::vector<int>& previous_staleness() const { return prev_staleness_; }
    double average_staleness() const;
    std::size_t capacity() const;

    // slot index of member k at edge m
    std::size_t slot(std::size_t m, std::size_t k) const { return m * cfg_.capacity + k; }

private:
    const ExperimentConfig& cfg_;
    const Scenario& scenario_;
    AssociationMode association_;
    AccessMode access_;
    fuzzy::FuzzyEngine engine_;
    std::uint64_t round_ = 0;
    phy::ChannelRealization ch_;
    fuzzy::Association assoc_;
    std::vector<int> staleness_, prev_staleness_;
    bool prepared_ = false;
};

// Turns per-slot allocations into per-client costs, edge totals, a schedule and the report.
RoundOutcome account_round(const ExperimentConfig& cfg, AccessMode access, const fuzzy::Association& assoc,
                           const phy::ChannelRealization& ch, std::span<const double> data_sizes,
                           const ddpg::Allocation& slot_allocation);

// Training environment: FCEA association, one step per round, rounds far
// from the evaluation range. `pinned` (FPA or FCA) overrides one variable.
class RoundEnvironment : public ddpg::Environment {
public:
    RoundEnvironment(const ExperimentConfig& cfg, const Scenario& scenario, AccessMode access,
                     AllocationMode pinned = AllocationMode::ddpg);

    std::size_t slots() const override { return sim_.slots(); }
    ddpg::MdpState reset(std::uint64_t episode) override;
    ddpg::StepOutcome step(const ddpg::Allocation& allocation) override;

private:
    const ExperimentConfig& cfg_;
    RoundSimulator sim_;
    AllocationMode pinned_;
    std::uint64_t round_ = 0;
};

inline constexpr std::uint64_t training_round_offset = 1'000'000;

ddpg::TrainResult train_policy(const ExperimentConfig& cfg, const Scenario& scenario, AccessMode access,
                               AllocationMode pinned = AllocationMode::ddpg);

// Allocation for one round of a scheme (policy required for DDPG / FPA / FCA).
ddpg::Allocation allocate(const Scheme& scheme, const ExperimentConfig& cfg, const ddpg::MdpState& state,
                          const ddpg::Policy* policy, std::uint64_t seed, std::uint64_t round);

// Cost-only rollout over rounds [0, rounds); returns the per-round costs.
std::vector<double> rollout_costs(const ExperimentConfig& cfg, const Scenario& scenario, const Scheme& scheme,
                                  const ddpg::Policy* policy, int rounds);

struct MetricsRow {
    std::string scheme;
    std::uint64_t seed = 0;
    int round = 0;
    double accuracy = 0;
    double loss = 0;
    double avg_ms = 0;
    double time = 0;
    double energy = 0;
    double cost = 0;
};

struct CellResult {
    std::vector<MetricsRow> rows;
    std::size_t fastest_agreements = 0;
    std::size_t unconverged_schedules = 0;
    std::size_t edge_models_produced = 0;
    std::size_t edge_models_consumed = 0;
    std::size_t edge_models_pending = 0;
};

// Full learning run of one scheme on one scenario for cfg.rounds rounds.
CellResult run_cell(const ExperimentConfig& cfg, const Scenario& scenario, const Scheme& scheme,
                    const ddpg::Policy* policy);

struct PolicyKey {
    std::uint64_t seed;
    AccessMode access;
    AllocationMode pinned;
    auto operator<=>(const PolicyKey&) const = default;
};

PolicyKey policy_key(const ExperimentConfig& cfg, const Scheme& scheme, std::uint64_t seed);

struct ExperimentResult {
    std::vector<MetricsRow> rows;
    std::vector<std::string> failures;
    std::map<std::string, CellResult> cells;  // "scheme/seed"
};

// Runs every (scheme x seed) cell, in parallel, and returns rows sorted by scheme, seed, round.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

void write_csv(std::ostream& os, std::span<const MetricsRow> rows);
void write_summary(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace nomahfl::sim
