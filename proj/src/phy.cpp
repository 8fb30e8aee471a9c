#include <nomahfl/phy.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace nomahfl::phy {

double distance(Point a, Point b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

void ChannelRealization::validate() const
{
    if (!gains.allFinite() || (gains.size() > 0 && gains.minCoeff() <= 0)) {
        throw config_error("channel gains must be positive and finite");
    }
    if (noise_power.size() != num_edges()) {
        throw config_error("noise power must be given per edge");
    }
    for (double s : noise_power) {
        if (!(s > 0)) throw config_error("noise power must be positive");
    }
    if (!(bandwidth > 0)) throw config_error("bandwidth must be positive");
}

double noise_power_watts(double psd_dbm_hz, double bandwidth_hz)
{
    return std::pow(10.0, (psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz;
}

double path_gain(double distance_m, const ChannelParams& params)
{
    constexpr double speed_of_light = 299792458.0;
    const double wavelength = speed_of_light / params.carrier_hz;
    const double free_space = std::pow(wavelength / (4 * std::numbers::pi * params.reference_m), 2);
    const double d = std::max(distance_m, params.reference_m);
    return free_space * std::pow(d / params.reference_m, -params.pathloss_exponent);
}

ChannelRealization draw_channels(const Topology& topology, std::uint64_t fading_seed,
                                 const ChannelParams& params)
{
    if (!(params.pathloss_exponent > 2)) {
        throw config_error("path-loss exponent must exceed 2");
    }
    if (!(params.bandwidth_hz > 0) || !(params.carrier_hz > 0) || !(params.reference_m > 0)) {
        throw config_error("bandwidth, carrier and reference distance must be positive");
    }
    auto inside = [&](Point p) {
        return p.x >= 0 && p.y >= 0 && p.x <= topology.side && p.y <= topology.side;
    };
    for (const auto& p : topology.clients) {
        if (!inside(p)) throw config_error("client outside the simulation square");
    }
    for (const auto& p : topology.edges) {
        if (!inside(p)) throw config_error("edge server outside the simulation square");
    }

    const auto n_clients = topology.clients.size();
    const auto n_edges = topology.edges.size();
    ChannelRealization ch;
    ch.gains.resize(static_cast<Eigen::Index>(n_clients), static_cast<Eigen::Index>(n_edges));
    ch.bandwidth = params.bandwidth_hz;
    ch.noise_power.assign(n_edges, noise_power_watts(params.noise_psd_dbm_hz, params.bandwidth_hz));

    auto rng = make_rng(fading_seed, stream::channel);
    std::exponential_distribution<double> fading(1.0);
    for (std::size_t n = 0; n < n_clients; ++n) {
        for (std::size_t m = 0; m < n_edges; ++m) {
            const double d = distance(topology.clients[n], topology.edges[m]);
            if (d < params.reference_m) ++ch.clamped_links;
            double fade = fading(rng);
            // exponential_distribution may return exactly 0; gains must stay positive
            if (fade <= 0) fade = std::numeric_limits<double>::min();
            ch.gains(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
                path_gain(d, params) * fade;
        }
    }
    return ch;
}

namespace {

double received_power(std::size_t n, const ChannelRealization& ch, const TxConfig& tx,
                      std::size_t m)
{
    return tx.power.at(n) * ch.gains(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
}

std::size_t position_of(std::size_t n, std::span<const std::size_t> order)
{
    const auto it = std::find(order.begin(), order.end(), n);
    if (it == order.end()) {
        throw config_error("client " + std::to_string(n) + " is not in the decode order");
    }
    return static_cast<std::size_t>(it - order.begin());
}

}  // namespace

std::vector<std::size_t> sic_order(std::span<const std::size_t> clients,
                                   const ChannelRealization& ch, const TxConfig& tx,
                                   std::size_t m, DecodeMetric metric)
{
    if (clients.empty()) throw config_error("sic_order needs at least one client");
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(clients.size());
    for (auto n : clients) {
        const double g = ch.gains(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
        const double p = tx.power.at(n);
        const double key = metric == DecodeMetric::sqrt_power_gain ? std::sqrt(p) * g : p * g;
        keyed.emplace_back(key, n);
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::size_t> order;
    order.reserve(keyed.size());
    for (const auto& [key, n] : keyed) order.push_back(n);
    return order;
}

double interference(std::size_t n, std::span<const std::size_t> order,
                    const ChannelRealization& ch, const TxConfig& tx, std::size_t m)
{
    const auto pos = position_of(n, order);
    double sum = 0;
    for (auto j = pos + 1; j < order.size(); ++j) sum += received_power(order[j], ch, tx, m);
    return sum;
}

double sinr(std::size_t n, std::span<const std::size_t> order, const ChannelRealization& ch,
            const TxConfig& tx, std::size_t m)
{
    return received_power(n, ch, tx, m) / (interference(n, order, ch, tx, m) + ch.noise_power.at(m));
}

double shannon_rate(double bandwidth_hz, double s)
{
    return bandwidth_hz * std::log2(1 + s);
}

double rate(std::size_t n, std::span<const std::size_t> order, const ChannelRealization& ch,
            const TxConfig& tx, std::size_t m)
{
    return shannon_rate(ch.bandwidth, sinr(n, order, ch, tx, m));
}

std::vector<double> chain_rates(std::span<const std::size_t> order, const ChannelRealization& ch,
                                const TxConfig& tx, std::size_t m)
{
    std::vector<double> out(order.size());
    double suffix = 0;
    for (auto k = order.size(); k-- > 0;) {
        const double own = received_power(order[k], ch, tx, m);
        out[k] = shannon_rate(ch.bandwidth, own / (suffix + ch.noise_power.at(m)));
        suffix += own;
    }
    return out;
}

TimeEnergy transmission_cost(double bits, double rate_bps, double power_w)
{
    if (bits == 0) return {};
    if (!(rate_bps > 0)) throw unreachable_client("unreachable client: zero achievable rate");
    const double t = bits / rate_bps;
    return {t, power_w * t};
}

TimeEnergy uplink_cost(std::size_t n, std::span<const std::size_t> order,
                       const ChannelRealization& ch, const TxConfig& tx, std::size_t m)
{
    const double bits = tx.model_bits.at(n);
    if (bits == 0) return {};
    return transmission_cost(bits, rate(n, order, ch, tx, m), tx.power.at(n));
}

TimeEnergy edge_cloud_cost(double rate_bps, double power_w, double bits)
{
    if (!(rate_bps > 0)) throw config_error("edge-cloud rate must be positive");
    const double t = bits / rate_bps;
    return {t, power_w * t};
}

}  // namespace nomahfl::phy
