#pragma once
#include <nomahfl/common.hpp>
#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace nomahfl::phy {

struct Point {
    double x = 0;
    double y = 0;
};

double distance(Point a, Point b);

struct Topology {
    double side = 500;  // meters
    std::vector<Point> clients;
    std::vector<Point> edges;
};

struct ChannelParams {
    double pathloss_exponent = 3.76;
    double carrier_hz = 1e9;
    double reference_m = 1;
    double bandwidth_hz = 1e6;
    double noise_psd_dbm_hz = -174;
};

/*
 * Block-fading channel state for one global round.
 * gains(n, m) is |h_{n,m}|^2 between client n and edge m (linear).
 */
struct ChannelRealization {
    Eigen::MatrixXd gains;
    std::vector<double> noise_power;  // watts, per edge
    double bandwidth = 1e6;           // hertz
    std::size_t clamped_links = 0;    // links closer than the reference distance

    std::size_t num_clients() const { return static_cast<std::size_t>(gains.rows()); }
    std::size_t num_edges() const { return static_cast<std::size_t>(gains.cols()); }
    void validate() const;
};

struct TxConfig {
    std::vector<double> power;       // watts, per client
    std::vector<double> model_bits;  // bits, per client
};

enum class DecodeMetric {
    sqrt_power_gain,  // sqrt(p) |h|^2
    received_power,   // p |h|^2
};

double noise_power_watts(double psd_dbm_hz, double bandwidth_hz);

// Free-space constant at the carrier times (d / d0)^-exponent, d clamped to d0.
double path_gain(double distance_m, const ChannelParams& params);

// Path gain times unit-mean exponential (Rayleigh power) fading per link.
ChannelRealization draw_channels(const Topology& topology, std::uint64_t fading_seed,
                                 const ChannelParams& params);

// Decode order at edge m: descending metric, ties by ascending client index.
std::vector<std::size_t> sic_order(std::span<const std::size_t> clients,
                                   const ChannelRealization& ch, const TxConfig& tx,
                                   std::size_t m,
                                   DecodeMetric metric = DecodeMetric::sqrt_power_gain);

// Interference seen by client n: received power of everyone decoded after it.
double interference(std::size_t n, std::span<const std::size_t> order,
                    const ChannelRealization& ch, const TxConfig& tx, std::size_t m);

double sinr(std::size_t n, std::span<const std::size_t> order, const ChannelRealization& ch,
            const TxConfig& tx, std::size_t m);

double rate(std::size_t n, std::span<const std::size_t> order, const ChannelRealization& ch,
            const TxConfig& tx, std::size_t m);

// Rates of every client in `order`, same order. O(N) via a suffix sum.
std::vector<double> chain_rates(std::span<const std::size_t> order, const ChannelRealization& ch,
                                const TxConfig& tx, std::size_t m);

double shannon_rate(double bandwidth_hz, double sinr);

// d / R and p d / R. Throws unreachable_client when R == 0 and d > 0.
TimeEnergy transmission_cost(double bits, double rate_bps, double power_w);

TimeEnergy uplink_cost(std::size_t n, std::span<const std::size_t> order,
                       const ChannelRealization& ch, const TxConfig& tx, std::size_t m);

// OFDMA edge-to-cloud upload. Throws config_error when rate <= 0.
TimeEnergy edge_cloud_cost(double rate_bps, double power_w, double bits);

}  // namespace nomahfl::phy
