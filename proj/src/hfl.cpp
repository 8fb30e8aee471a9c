#include <nomahfl/hfl.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace nomahfl::hfl {

namespace {

using Mat = Eigen::Map<Eigen::MatrixXd>;
using ConstMat = Eigen::Map<const Eigen::MatrixXd>;

Eigen::Index feature_count(const ModelParams& w, int classes)
{
    if (classes < 2 || w.size() % classes != 0) throw config_error("model size does not fit the class count");
    return w.size() / classes - 1;
}

// Row-wise softmax of the logits, one row per sample.
Eigen::MatrixXd probabilities(const ModelParams& w, const data::Dataset& d)
{
    const auto f = feature_count(w, d.classes);
    if (f != d.x.cols()) throw config_error("model and data feature counts differ");
    ConstMat wm(w.data(), d.classes, f + 1);
    Eigen::MatrixXd logits = d.x * wm.leftCols(f).transpose();
    logits.rowwise() += wm.col(f).transpose();
    const Eigen::VectorXd mx = logits.rowwise().maxCoeff();
    logits.colwise() -= mx;
    Eigen::MatrixXd p = logits.array().exp().matrix();
    const Eigen::VectorXd norm = p.rowwise().sum();
    for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= norm(i);
    return p;
}

}  // namespace

ModelParams zero_model(std::size_t features, int classes)
{
    return ModelParams::Zero(static_cast<Eigen::Index>(classes) * static_cast<Eigen::Index>(features + 1));
}

double loss(const ModelParams& w, const data::Dataset& shard)
{
    if (shard.size() == 0) throw config_error("loss of an empty shard");
    const auto p = probabilities(w, shard);
    double total = 0;
    for (std::size_t i = 0; i < shard.size(); ++i) {
        total -= std::log(std::max(p(static_cast<Eigen::Index>(i), shard.y[i]), 1e-300));
    }
    return total / static_cast<double>(shard.size());
}

ModelParams gradient(const ModelParams& w, const data::Dataset& shard)
{
    if (shard.size() == 0) throw config_error("gradient of an empty shard");
    Eigen::MatrixXd residual = probabilities(w, shard);
    for (std::size_t i = 0; i < shard.size(); ++i) residual(static_cast<Eigen::Index>(i), shard.y[i]) -= 1.0;
    const double inv_n = 1.0 / static_cast<double>(shard.size());
    const auto f = shard.x.cols();
    ModelParams g(w.size());
    Mat gm(g.data(), shard.classes, f + 1);
    gm.leftCols(f) = inv_n * residual.transpose() * shard.x;
    gm.col(f) = inv_n * residual.colwise().sum().transpose();
    return g;
}

ModelParams local_train(ModelParams w, const data::Dataset& shard, double eta, int tau1)
{
    if (tau1 < 1) throw config_error("tau_1 must be at least 1");
    if (eta < 0) throw config_error("learning rate must be nonnegative");
    for (int k = 0; k < tau1; ++k) {
        const auto g = gradient(w, shard);
        if (!g.allFinite()) {
            throw runtime_error("non-finite gradient at local step " + std::to_string(k) + " on a shard of " +
                                std::to_string(shard.size()) + " samples");
        }
        w -= eta * g;
    }
    return w;
}

namespace {

ModelParams weighted_mean(std::span<const ModelParams> models, std::span<const double> weights)
{
    if (models.empty() || models.size() != weights.size()) {
        throw config_error("aggregation needs one weight per model");
    }
    double total = 0;
    for (double s : weights) {
        if (s < 0) throw config_error("aggregation weights must be nonnegative");
        total += s;
    }
    if (total <= 0) throw config_error("aggregation over zero total data size");
    ModelParams out = ModelParams::Zero(models.front().size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (models[i].size() != out.size()) throw config_error("models differ in dimension");
        out += (weights[i] / total) * models[i];
    }
    return out;
}

}  // namespace

ModelParams edge_aggregate(std::span<const ModelParams> models, std::span<const double> sizes)
{
    return weighted_mean(models, sizes);
}

ModelParams cloud_aggregate(std::span<const ModelParams> edge_models, std::span<const double> edge_sizes,
                            std::span<const int> z)
{
    if (z.size() != edge_models.size()) throw config_error("one indicator per edge model");
    std::vector<double> w(edge_sizes.begin(), edge_sizes.end());
    bool any = false;
    for (std::size_t m = 0; m < z.size(); ++m) {
        if (z[m] != 0) {
            any = true;
        } else {
            w.at(m) = 0;
        }
    }
    if (!any) throw runtime_error("no edge selected");
    return weighted_mean(edge_models, w);
}

std::vector<int> select_fastest(std::span<const double> edge_times, std::size_t m_c)
{
    if (m_c < 1 || m_c > edge_times.size()) throw config_error("M_c must lie in [1, M]");
    std::vector<std::size_t> idx(edge_times.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return edge_times[a] < edge_times[b]; });
    std::vector<int> z(edge_times.size(), 0);
    for (std::size_t k = 0; k < m_c; ++k) z[idx[k]] = 1;
    return z;
}

Evaluation evaluate(const ModelParams& w, const data::Dataset& test)
{
    if (test.size() == 0) throw config_error("empty test set");
    const auto p = probabilities(w, test);
    Evaluation ev;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        Eigen::Index best = 0;
        p.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        if (best == test.y[i]) ++hits;
        ev.loss -= std::log(std::max(p(static_cast<Eigen::Index>(i), test.y[i]), 1e-300));
    }
    ev.accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
    ev.loss /= static_cast<double>(test.size());
    return ev;
}

EdgeResult edge_train(const ModelParams& start, std::span<const data::Dataset* const> shards, double eta,
                      int tau1, int tau2)
{
    if (shards.empty()) throw runtime_error("edge has no clients");
    if (tau2 < 1) throw config_error("tau_2 must be at least 1");
    std::vector<double> sizes;
    for (const auto* s : shards) sizes.push_back(static_cast<double>(s->size()));
    EdgeResult r;
    r.model = start;
    r.data_size = std::accumulate(sizes.begin(), sizes.end(), 0.0);
    std::vector<ModelParams> locals(shards.size());
    for (int k = 0; k < tau2; ++k) {
        for (std::size_t i = 0; i < shards.size(); ++i) locals[i] = local_train(r.model, *shards[i], eta, tau1);
        r.model = edge_aggregate(locals, sizes);
    }
    return r;
}

CloudState::CloudState(ModelParams initial, std::size_t edges)
    : global_(std::move(initial)), base_(edges, global_), queue_(edges)
{
}

void CloudState::submit(std::size_t m, EdgeResult result)
{
    queue_.at(m).push_back(std::move(result));
    ++produced_;
}

std::size_t CloudState::aggregate(std::span<const int> z)
{
    if (z.size() != queue_.size()) throw config_error("one indicator per edge");
    std::vector<ModelParams> models;
    std::vector<double> sizes;
    for (std::size_t m = 0; m < z.size(); ++m) {
        if (z[m] == 0) continue;
        for (auto& r : queue_[m]) {
            models.push_back(std::move(r.model));
            sizes.push_back(r.data_size);
        }
    }
    if (models.empty()) throw runtime_error("no edge selected");
    global_ = weighted_mean(models, sizes);
    for (std::size_t m = 0; m < z.size(); ++m) {
        if (z[m] == 0) continue;
        queue_[m].clear();
        base_[m] = global_;
    }
    consumed_ += models.size();
    return models.size();
}

}  // namespace nomahfl::hfl
