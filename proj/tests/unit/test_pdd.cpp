#include <doctest.h>
#include <nomahfl/pdd.hpp>
#include <sstream>

using namespace nomahfl;
using doctest::Approx;

namespace {

pdd::SchedulingInstance two_edges()
{
    pdd::SchedulingInstance inst;
    inst.edge_energy = {1.0, 2.0};
    inst.cloud_time = {0.1, 0.2};
    inst.client_times = {{3.0}, {2.0}};
    inst.tau2 = 1;
    return inst;
}

}  // namespace

TEST_CASE("z-tilde closed form")
{
    const std::vector<double> one{1}, zero{0}, half{0.5};
    CHECK(pdd::update_z_tilde(one, zero, zero, 1)[0] == Approx(1));
    CHECK(pdd::update_z_tilde(zero, zero, zero, 1)[0] == Approx(0));
    const std::vector<double> q{0.2}, qt{0.1};
    CHECK(pdd::update_z_tilde(half, q, qt, 1)[0] == Approx(0.76));
}

TEST_CASE("z closed form")
{
    pdd::SchedulingInstance inst;
    inst.edge_energy = {0.6};
    inst.cloud_time = {0.0};
    inst.client_times = {{1.0}};
    inst.weights = {0.5, 0.5};
    const std::vector<double> one{1}, zero{0}, gamma{0};
    CHECK(pdd::update_z(inst, one, zero, zero, 1, gamma, 1)[0] == Approx(0.7));
    inst.edge_energy = {10};
    CHECK(pdd::update_z(inst, one, zero, zero, 1, gamma, 1)[0] == 0.0);
    inst.edge_energy = {0};
    CHECK(pdd::update_z(inst, zero, zero, zero, 1, gamma, 1)[0] == 0.0);
}

TEST_CASE("epigraph variables")
{
    auto inst = two_edges();
    const std::vector<double> zero{0, 0};
    const auto e0 = pdd::update_u_w(inst, zero);
    CHECK(e0.u == Approx(3));
    CHECK(e0.w == 0.0);

    pdd::SchedulingInstance b;
    b.edge_energy = {1, 1};
    b.cloud_time = {1, 4};
    b.client_times = {{2.0}, {1.0}};
    b.tau2 = 1;
    const std::vector<double> z{1, 0.5};
    CHECK(pdd::update_u_w(b, z).w == Approx(3));
}

TEST_CASE("dual updates")
{
    const std::vector<double> z{0.5}, zt{0.25}, q{0}, qt{0};
    const auto d = pdd::update_duals(z, zt, q, qt, 0.5);
    CHECK(d.q_tilde[0] == Approx(0.5));
    const std::vector<double> one{1}, half{0.5};
    CHECK(pdd::update_duals(one, half, q, qt, 1).q[0] == Approx(0.5));
    const std::vector<double> bin{1}, same{1};
    const auto fixed = pdd::update_duals(bin, same, q, qt, 1);
    CHECK(fixed.q[0] == 0.0);
    CHECK(fixed.q_tilde[0] == 0.0);
}

TEST_CASE("gamma projection")
{
    const std::vector<double> g{0.3}, z{1}, c{1};
    CHECK(pdd::update_gamma(g, z, c, 2.0, 0.5)[0] == 0.0);
    const std::vector<double> g0{0};
    CHECK(pdd::update_gamma(g0, z, c, 0.0, 0.5)[0] == Approx(0.5));
    CHECK(pdd::update_gamma(g, z, c, 1.0, 0.5)[0] == Approx(0.3));
}

TEST_CASE("solve")
{
    SUBCASE("one edge is forced")
    {
        pdd::SchedulingInstance inst;
        inst.edge_energy = {5};
        inst.cloud_time = {1};
        inst.client_times = {{2.0}};
        CHECK(pdd::solve(inst).binary == std::vector<int>{1});
    }
    SUBCASE("dominated edge stays out")
    {
        pdd::SchedulingInstance inst;
        inst.edge_energy = {1, 3, 2};
        inst.cloud_time = {0.1, 0.5, 0.2};
        inst.client_times = {{1.0}, {1.0}, {1.0}};
        inst.weights = {0, 1};
        const auto s = pdd::solve(inst);
        CHECK(s.binary[1] == 0);
        CHECK(s.binary_objective == Approx(inst.objective(std::span<const int>(pdd::enumerate_best(inst)))));
    }
    SUBCASE("both gamma rules agree with enumeration")
    {
        auto rng = make_rng(5, 5);
        std::uniform_real_distribution<double> u(0.1, 3);
        for (int t = 0; t < 30; ++t) {
            pdd::SchedulingInstance inst;
            for (int m = 0; m < 3; ++m) {
                inst.edge_energy.push_back(u(rng));
                inst.cloud_time.push_back(u(rng) / 4);
                inst.client_times.push_back({u(rng), u(rng)});
            }
            inst.tau2 = 2;
            const double best = inst.objective(std::span<const int>(pdd::enumerate_best(inst)));
            CHECK(pdd::solve(inst).binary_objective == Approx(best).epsilon(1e-3));
            pdd::PddParams sg;
            sg.gamma_rule = pdd::GammaRule::subgradient;
            CHECK(pdd::solve(inst, sg).binary_objective == Approx(best).epsilon(1e-3));
        }
    }
    SUBCASE("trace csv has a header and one row per inner step")
    {
        const auto s = pdd::solve(two_edges());
        std::ostringstream os;
        pdd::write_trace_csv(os, s);
        std::size_t lines = 0;
        for (char ch : os.str()) lines += ch == '\n';
        CHECK(lines == s.trace.size() + 1);
    }
}

TEST_CASE("exact z-block minimises the AL in z")
{
    auto rng = make_rng(6, 6);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 50; ++t) {
        pdd::SchedulingInstance inst;
        for (int m = 0; m < 3; ++m) {
            inst.edge_energy.push_back(2 * u(rng));
            inst.cloud_time.push_back(u(rng));
            inst.client_times.push_back({u(rng) + 0.1});
        }
        const std::vector<double> zt{u(rng), u(rng), u(rng)}, q{u(rng) - 0.5, 0, 0.2}, qt{0.1, -0.1, 0};
        const double v = 0.5;
        const double uu = inst.max_client_time();
        const auto blk = pdd::solve_z_block(inst, zt, q, qt, v, uu);
        const double best = pdd::augmented_lagrangian(inst, blk.z, zt, q, qt, v, blk.w);
        // random feasible z in the box never does better
        for (int k = 0; k < 200; ++k) {
            std::vector<double> z{u(rng), u(rng), u(rng)};
            const double w = pdd::update_u_w(inst, z).w;
            CHECK(pdd::augmented_lagrangian(inst, z, zt, q, qt, v, w) >= best - 1e-9);
        }
    }
}

TEST_CASE("instance validation")
{
    pdd::SchedulingInstance inst;
    CHECK_THROWS_AS(inst.validate(), config_error);
    inst = two_edges();
    inst.cloud_time.pop_back();
    CHECK_THROWS_AS(inst.validate(), config_error);
}
