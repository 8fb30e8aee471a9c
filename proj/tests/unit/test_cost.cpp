#include <doctest.h>
#include <nomahfl/cost.hpp>
#include <cmath>

using namespace nomahfl;
using doctest::Approx;

TEST_CASE("iteration counts")
{
    cost::AccuracyProfile p;
    CHECK(cost::local_iterations(p) == 2);
    CHECK(cost::edge_iterations(p) == 3);

    p.local_accuracy = std::exp(-1.0);
    CHECK(cost::local_iterations(p) == 2);
    p.local_accuracy = 0.999999;
    CHECK(cost::local_iterations(p) == 1);
    p.local_accuracy = 0.5;
    p.mu = 10;
    CHECK(cost::local_iterations(p) == 7);

    cost::AccuracyProfile e;
    e.delta = 2;
    e.edge_accuracy = std::exp(-1.0);
    e.local_accuracy = 0.5;
    CHECK(cost::edge_iterations(e) == 4);
    e.local_accuracy = 1e-12;
    e.edge_accuracy = 0.1;
    CHECK(cost::edge_iterations(e) == static_cast<int>(std::ceil(2 * std::log(10.0))));
    e.delta = 1;
    e.local_accuracy = 0.9;
    CHECK(cost::edge_iterations(e) == 24);

    cost::AccuracyProfile bad;
    bad.local_accuracy = 1.5;
    CHECK_THROWS_AS(cost::local_iterations(bad), config_error);
}

TEST_CASE("local compute cost")
{
    cost::ComputeProfile c;
    c.dataset_size = 100;
    const auto te = cost::local_compute_cost(c, 2);
    CHECK(te.time == Approx(2.0));
    CHECK(te.energy == Approx(0.1));
    c.dataset_size = 0;
    const auto zero = cost::local_compute_cost(c, 2);
    CHECK(zero.time == 0.0);
    CHECK(zero.energy == 0.0);

    // faster clock: less time, more energy
    c.dataset_size = 100;
    c.frequency = 2e9;
    const auto fast = cost::local_compute_cost(c, 2);
    CHECK(fast.time < te.time);
    CHECK(fast.energy > te.energy);
}

TEST_CASE("edge phase")
{
    std::vector<cost::ClientCost> two(2);
    two[0].t_cmp = 2;
    two[0].t_com = 1;
    two[1].t_cmp = 1;
    two[1].t_com = 1;
    CHECK(cost::edge_phase_cost(two, 1).time == Approx(3));

    two[0].e_cmp = 0.05;
    two[0].e_com = 0.05;
    two[1].e_cmp = 0.2;
    CHECK(cost::edge_phase_cost(two, 2).energy == Approx(0.6));

    std::vector<cost::ClientCost> one(1, two[0]);
    const auto single = cost::edge_phase_cost(one, 3);
    CHECK(single.time == Approx(3 * two[0].iteration_time()));
    CHECK(single.energy == Approx(3 * two[0].iteration_energy()));
}

TEST_CASE("system cost")
{
    std::vector<cost::EdgeCost> edges(2);
    edges[0].edge = {4, 0.5};
    edges[0].cloud = {1, 0.5};
    edges[1].edge = {8, 1.0};
    edges[1].cloud = {1, 1.0};
    cost::Weights w;

    const std::vector<int> first{1, 0};
    const auto r1 = cost::system_cost(first, edges, w);
    CHECK(r1.time == Approx(5));
    CHECK(r1.energy == Approx(1));

    const std::vector<int> both{1, 1};
    const auto r2 = cost::system_cost(both, edges, w);
    CHECK(r2.time == Approx(9));
    CHECK(r2.energy == Approx(3));
    CHECK(r2.cost == Approx(0.5 * 9 + 0.5 * 3));
    CHECK(cost::weighted_cost(4, 2, w) == Approx(3));

    // E is the edge-ordered sum, bit for bit
    double e = 0;
    for (const auto& x : edges) e += x.total_energy();
    CHECK(r2.energy == e);

    const std::vector<int> none{0, 0};
    CHECK_THROWS(cost::system_cost(none, edges, w));
}

TEST_CASE("weights validation")
{
    cost::Weights w{-0.1, 1.1};
    CHECK_THROWS_AS(w.validate(), config_error);
    cost::Weights ok{0.3, 0.7};
    CHECK_NOTHROW(ok.validate());
}
