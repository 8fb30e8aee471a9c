#pragma once
#include <nomahfl/common.hpp>
#include <nomahfl/dataset.hpp>
#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace nomahfl::hfl {

// Multinomial logistic regression, flattened column-major from a
// classes x (features + 1) matrix whose last column is the bias.
using ModelParams = Eigen::VectorXd;

ModelParams zero_model(std::size_t features, int classes);

// Mean cross-entropy on the shard.
double loss(const ModelParams& w, const data::Dataset& shard);

// Gradient of the mean cross-entropy.
ModelParams gradient(const ModelParams& w, const data::Dataset& shard);

// tau_1 full-batch steps w <- w - eta grad L_n(w).
ModelParams local_train(ModelParams w, const data::Dataset& shard, double eta, int tau1);

// sum D_n w_n / sum D_n
ModelParams edge_aggregate(std::span<const ModelParams> models, std::span<const double> sizes);

// sum z_m D_m w_m / sum z_m D_m
ModelParams cloud_aggregate(std::span<const ModelParams> edge_models,
                            std::span<const double> edge_sizes, std::span<const int> z);

// z_m = 1 for the M_c smallest times, ties to the lower edge index.
std::vector<int> select_fastest(std::span<const double> edge_times, std::size_t m_c);

struct Evaluation {
    double accuracy = 0;
    double loss = 0;
};

Evaluation evaluate(const ModelParams& w, const data::Dataset& test);

struct EdgeResult {
    ModelParams model;
    double data_size = 0;  // D_{N_m}
};

// tau_2 edge iterations: every member trains from the edge model, then
// the edge averages them by dataset size.
EdgeResult edge_train(const ModelParams& start, std::span<const data::Dataset* const> shards,
                      double eta, int tau1, int tau2);

/*
 * Per-edge bookkeeping for semi-synchronous aggregation. Every edge keeps
 * the last global model it received. Results of an unselected edge wait
 * in its queue and are folded into the cloud average the next time the
 * edge is selected, so no trained edge model is dropped or used twice.
 */
class CloudState {
public:
    CloudState(ModelParams initial, std::size_t edges);

    const ModelParams& global() const { return global_; }
    const ModelParams& base(std::size_t m) const { return base_.at(m); }
    std::size_t pending(std::size_t m) const { return queue_.at(m).size(); }

    void submit(std::size_t m, EdgeResult result);

    // Averages the queues of selected edges into the new global model,
    // which the selected edges then receive. Returns how many results were consumed.
    std::size_t aggregate(std::span<const int> z);

    std::size_t produced() const { return produced_; }
    std::size_t consumed() const { return consumed_; }

private:
    ModelParams global_;
    std::vector<ModelParams> base_;
    std::vector<std::vector<EdgeResult>> queue_;
    std::size_t produced_ = 0;
    std::size_t consumed_ = 0;
};

}  // namespace nomahfl::hfl
