#pragma once
#include <nomahfl/common.hpp>
#include <nomahfl/cost.hpp>
#include <nomahfl/dataset.hpp>
#include <nomahfl/ddpg.hpp>
#include <nomahfl/pdd.hpp>
#include <nomahfl/phy.hpp>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nomahfl::config {

enum class AssociationMode { fuzzy, random, greedy };
enum class AccessMode { noma, oma };
enum class AllocationMode { ddpg, rra, fpa, fca, mid };
enum class ScheduleMode { pdd, fastest };

struct Scheme {
    std::string name;
    AssociationMode association = AssociationMode::fuzzy;
    AccessMode access = AccessMode::noma;
    AllocationMode allocation = AllocationMode::ddpg;

    bool needs_policy() const;
};

std::string to_string(AssociationMode m);
std::string to_string(AccessMode m);
std::string to_string(AllocationMode m);

/*
 * Scheme names are '+'-joined tokens, e.g. "RCEA", "OMA", "FPA" or
 * "GCEA+RRA". Association tokens FCEA|RCEA|GCEA, access NOMA|OMA,
 * allocation DDPG|RRA|FPA|FCA|MID. Missing parts fall back to FCEA,
 * NOMA and `default_allocation`.
 */
Scheme parse_scheme(const std::string& name, AllocationMode default_allocation);

struct ExperimentConfig {
    // topology
    double side = 500;
    std::size_t edges = 4;
    std::size_t clients = 64;
    std::size_t capacity = 4;         // N_m
    double coverage_radius = 0;       // <= 0: side / 2
    std::size_t m_c = 2;

    phy::ChannelParams channel;
    phy::DecodeMetric decode_metric = phy::DecodeMetric::sqrt_power_gain;
    bool oma_reduced_capacity = false;  // OMA serves capacity / 2 clients instead of splitting the band

    // clients
    ddpg::ActionBounds bounds;
    double cycles_per_sample = 1e7;
    double capacitance = 1e-28;
    double model_bits = 1e6;

    // edge-cloud link
    double cloud_rate = 1e7;
    double cloud_power = 1.0;
    double cloud_bits = 1e6;

    cost::AccuracyProfile accuracy;
    cost::Weights weights;

    // learning task
    double learning_rate = 0.01;
    int rounds = 50;
    data::SyntheticParams synthetic;
    data::PartitionParams partition{data::PartitionMode::iid, 50, 200};
    std::string mnist_images, mnist_labels;  // both set: MNIST instead of synthetic data
    std::size_t mnist_limit = 0;

    ScheduleMode schedule = ScheduleMode::pdd;
    pdd::PddParams pdd;

    ddpg::Hyperparams ddpg;
    bool separate_baseline_training = true;  // FPA / FCA train their own actor with one variable pinned
    std::string policy_path;                 // pretrained actor for DDPG schemes

    std::vector<std::uint64_t> seeds{1};
    std::vector<std::string> schemes{"FCEA", "RCEA", "GCEA", "OMA", "DDPG", "RRA", "FPA", "FCA"};
    AllocationMode default_allocation = AllocationMode::ddpg;
    std::string out_dir = "out";
    int eval_rounds = 100;
    int threads = 0;  // 0: hardware concurrency

    double radius() const { return coverage_radius > 0 ? coverage_radius : side / 2; }
    void validate() const;
};

// INI with sections; unknown keys are rejected so typos surface.
ExperimentConfig load(std::istream& in);
ExperimentConfig load_file(const std::string& path);

// NOMAHFL_SEED replaces the seed list, NOMAHFL_OUT the output directory.
void apply_environment(ExperimentConfig& cfg);

std::vector<std::uint64_t> parse_seeds(const std::string& list);
std::vector<std::string> split_list(const std::string& list);

}  // namespace nomahfl::config
