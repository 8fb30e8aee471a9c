#pragma once
#include <nomahfl/common.hpp>
#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace nomahfl::data {

// Rows are samples.
struct Dataset {
    Eigen::MatrixXd x;
    std::vector<int> y;
    int classes = 10;

    std::size_t size() const { return y.size(); }
    std::size_t features() const { return static_cast<std::size_t>(x.cols()); }
    void validate() const;
    Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct SyntheticParams {
    std::size_t train_samples = 32000;
    std::size_t test_samples = 4000;
    std::size_t features = 20;
    int classes = 10;
    double separation = 1.0;  // std-dev of the class means
    double noise = 1.0;       // within-class std-dev
};

struct TrainTest {
    Dataset train;
    Dataset test;
};

// Gaussian blobs around per-class means; means, train and test use separate draws.
TrainTest synthetic_clusters(const SyntheticParams& params, std::uint64_t seed);

// MNIST-style IDX files (0x00000803 images, 0x00000801 labels), pixels scaled to [0, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit = 0);

enum class PartitionMode { iid, non_iid };

PartitionMode partition_mode_from_string(const std::string& s);

struct PartitionParams {
    PartitionMode mode = PartitionMode::iid;
    std::size_t min_size = 0;  // both zero: equal split of the whole dataset
    std::size_t max_size = 0;
};

/*
 * IID: shuffled rows dealt out with sizes uniform in [min_size, max_size].
 * Non-IID: each client draws two distinct labels and takes half of its
 * samples from each label's shuffled pool, so it holds at most 2 classes.
 */
std::vector<Dataset> partition(const Dataset& data, std::size_t clients,
                               const PartitionParams& params, std::uint64_t seed);

std::vector<std::size_t> label_histogram(const Dataset& d);

}  // namespace nomahfl::data
