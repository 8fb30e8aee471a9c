#include <nomahfl/dataset.hpp>
#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

namespace nomahfl::data {

void Dataset::validate() const
{
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw config_error("feature and label counts differ");
    for (int label : y) {
        if (label < 0 || label >= classes) throw config_error("label outside the class set");
    }
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const
{
    Dataset out;
    out.classes = classes;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
        out.y.push_back(y[rows[i]]);
    }
    return out;
}

namespace {

Dataset draw_blobs(const Eigen::MatrixXd& means, std::size_t n, double noise, rng_t& rng)
{
    const int classes = static_cast<int>(means.rows());
    std::uniform_int_distribution<int> pick(0, classes - 1);
    std::normal_distribution<double> gauss(0.0, noise);
    Dataset d;
    d.classes = classes;
    d.x.resize(static_cast<Eigen::Index>(n), means.cols());
    d.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = pick(rng);
        d.y[i] = c;
        for (Eigen::Index j = 0; j < means.cols(); ++j) {
            d.x(static_cast<Eigen::Index>(i), j) = means(c, j) + gauss(rng);
        }
    }
    return d;
}

}  // namespace

TrainTest synthetic_clusters(const SyntheticParams& p, std::uint64_t seed)
{
    if (p.classes < 2 || p.features == 0 || p.train_samples == 0 || p.test_samples == 0) {
        throw config_error("synthetic task needs classes >= 2, features and samples");
    }
    if (!(p.separation > 0 && p.noise > 0)) throw config_error("separation and noise must be positive");
    auto mean_rng = make_rng(seed, stream::data, 0);
    std::normal_distribution<double> gauss(0.0, p.separation);
    Eigen::MatrixXd means(p.classes, static_cast<Eigen::Index>(p.features));
    for (Eigen::Index c = 0; c < means.rows(); ++c) {
        for (Eigen::Index j = 0; j < means.cols(); ++j) means(c, j) = gauss(mean_rng);
    }
    auto train_rng = make_rng(seed, stream::data, 1);
    auto test_rng = make_rng(seed, stream::data, 2);
    return {draw_blobs(means, p.train_samples, p.noise, train_rng),
            draw_blobs(means, p.test_samples, p.noise, test_rng)};
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path)
{
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw config_error("truncated IDX file " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | b[3];
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t limit)
{
    std::ifstream img(images_path, std::ios::binary);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!img) throw config_error("cannot open " + images_path);
    if (!lab) throw config_error("cannot open " + labels_path);
    if (read_be32(img, images_path) != 0x00000803) throw config_error("bad image magic in " + images_path);
    if (read_be32(lab, labels_path) != 0x00000801) throw config_error("bad label magic in " + labels_path);
    std::size_t n = read_be32(img, images_path);
    const std::size_t rows = read_be32(img, images_path);
    const std::size_t cols = read_be32(img, images_path);
    if (read_be32(lab, labels_path) != n) throw config_error("image and label counts differ");
    if (limit > 0) n = std::min(n, limit);

    Dataset d;
    d.classes = 10;
    d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows * cols));
    d.y.resize(n);
    std::vector<unsigned char> buf(rows * cols);
    for (std::size_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
            throw config_error("truncated IDX images " + images_path);
        }
        for (std::size_t j = 0; j < buf.size(); ++j) {
            d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[j] / 255.0;
        }
        char c = 0;
        if (!lab.get(c)) throw config_error("truncated IDX labels " + labels_path);
        d.y[i] = static_cast<unsigned char>(c);
    }
    d.validate();
    return d;
}

PartitionMode partition_mode_from_string(const std::string& s)
{
    if (s == "iid" || s == "IID") return PartitionMode::iid;
    if (s == "non-iid" || s == "non_iid" || s == "noniid" || s == "non-IID") return PartitionMode::non_iid;
    throw config_error("unknown partition mode '" + s + "'");
}

std::vector<Dataset> partition(const Dataset& data, std::size_t clients, const PartitionParams& p,
                               std::uint64_t seed)
{
    data.validate();
    if (data.size() == 0) throw config_error("cannot partition an empty dataset");
    if (clients == 0) throw config_error("need at least one client");
    if (clients > data.size()) throw config_error("more clients than samples");
    if (p.min_size > p.max_size) throw config_error("partition size range is inverted");

    auto rng = make_rng(seed, stream::data, 10);
    std::vector<std::size_t> sizes(clients);
    if (p.max_size == 0) {
        std::fill(sizes.begin(), sizes.end(), data.size() / clients);
    } else {
        std::uniform_int_distribution<std::size_t> u(std::max<std::size_t>(p.min_size, 1), p.max_size);
        for (auto& s : sizes) s = u(rng);
    }

    std::vector<Dataset> shards;
    shards.reserve(clients);
    if (p.mode == PartitionMode::iid) {
        if (std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) > data.size()) {
            throw config_error("shard sizes exceed the dataset");
        }
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::size_t cursor = 0;
        for (auto s : sizes) {
            std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                          order.begin() + static_cast<std::ptrdiff_t>(cursor + s));
            cursor += s;
            shards.push_back(data.subset(rows));
        }
        return shards;
    }

    std::vector<std::vector<std::size_t>> pools(static_cast<std::size_t>(data.classes));
    for (std::size_t i = 0; i < data.size(); ++i) pools[static_cast<std::size_t>(data.y[i])].push_back(i);
    for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> cursor(pools.size(), 0);
    std::vector<int> nonempty;
    for (std::size_t c = 0; c < pools.size(); ++c) {
        if (!pools[c].empty()) nonempty.push_back(static_cast<int>(c));
    }
    for (auto s : sizes) {
        std::vector<int> labels = nonempty;
        std::shuffle(labels.begin(), labels.end(), rng);
        labels.resize(std::min<std::size_t>(2, labels.size()));
        std::vector<std::size_t> rows;
        for (std::size_t k = 0; k < labels.size(); ++k) {
            const auto c = static_cast<std::size_t>(labels[k]);
            const std::size_t want = s / labels.size() + (k < s % labels.size() ? 1 : 0);
            if (cursor[c] + want > pools[c].size()) {
                throw config_error("label pool exhausted; reduce shard sizes for non-IID partition");
            }
            for (std::size_t j = 0; j < want; ++j) rows.push_back(pools[c][cursor[c]++]);
        }
        shards.push_back(data.subset(rows));
    }
    return shards;
}

std::vector<std::size_t> label_histogram(const Dataset& d)
{
    std::vector<std::size_t> h(static_cast<std::size_t>(d.classes), 0);
    for (int label : d.y) ++h[static_cast<std::size_t>(label)];
    return h;
}

}  // namespace nomahfl::data
