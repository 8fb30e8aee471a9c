#include <doctest.h>
#include <nomahfl/fuzzy.hpp>
#include <algorithm>
#include <sstream>

using namespace nomahfl;
using doctest::Approx;

TEST_CASE("staleness recursion and normalisation")
{
    CHECK(fuzzy::update_staleness(3, false) == 4);
    CHECK(fuzzy::update_staleness(7, true) == 1);
    CHECK(fuzzy::update_staleness(1, false) == 2);

    CHECK(fuzzy::normalize(50, 100).value == Approx(0.5));
    CHECK(fuzzy::normalize(100, 100).value == 1.0);
    const auto over = fuzzy::normalize(120, 100);
    CHECK(over.value == 1.0);
    CHECK(over.clamped);
    CHECK_FALSE(fuzzy::normalize(50, 100).clamped);
}

TEST_CASE("fuzzification")
{
    const auto cq = fuzzy::channel_quality();
    const auto mid = fuzzy::fuzzify(0.5, cq);
    CHECK(mid[1] == 1.0);
    const auto zero = fuzzy::fuzzify(0.0, cq);
    CHECK(zero[0] == 1.0);
    CHECK(zero[1] == 0.0);
    CHECK(zero[2] == 0.0);
    const auto one = fuzzy::fuzzify(1.0, cq);
    CHECK(one[2] == 1.0);
    // neighbours overlap fully: degrees sum to one everywhere
    for (double x = 0; x <= 1.0; x += 0.01) {
        const auto d = fuzzy::fuzzify(x, cq);
        CHECK(d[0] + d[1] + d[2] == Approx(1.0));
    }
    CHECK(cq.index_of("STRONG") == 2);
    CHECK_THROWS_AS(cq.index_of("bogus"), config_error);
}

TEST_CASE("rule table")
{
    const auto rules = fuzzy::FuzzyRuleBase::standard();
    REQUIRE(rules.rules().size() == 27);
    std::vector<int> seen(27, 0);
    for (const auto& r : rules.rules()) ++seen[r.cq * 9 + r.dq * 3 + r.ms];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

    const auto out = fuzzy::output_level();
    const auto& r24 = rules.lookup(0, 1, 2);
    CHECK(r24.id == 24);
    CHECK(out.classes[r24.out].name == "average");
    CHECK(out.classes[rules.lookup(2, 2, 2).out].name == "excellent");
    CHECK(out.classes[rules.lookup(0, 0, 0).out].name == "poor");

    std::istringstream dup("1 strong shortage fresh fair\n2 strong shortage fresh poor\n");
    CHECK_THROWS_AS(fuzzy::FuzzyRuleBase::load(dup), config_error);
    std::istringstream unknown("1 strong shortage warm fair\n");
    CHECK_THROWS_AS(fuzzy::FuzzyRuleBase::load(unknown), config_error);
}

TEST_CASE("max-min inference")
{
    const auto rules = fuzzy::FuzzyRuleBase::standard();
    const fuzzy::Degrees weak{1, 0, 0}, average{0, 1, 0}, stale{0, 0, 1}, none{0, 0, 0};
    const auto inf = fuzzy::infer(weak, average, stale, rules);
    CHECK(inf.activation[2] == 1.0);
    CHECK(inf.strongest_rule() == 24);
    const auto zero = fuzzy::infer(none, none, none, rules);
    for (double a : zero.activation) CHECK(a == 0.0);

    // raising one antecedent degree never lowers an activation
    auto rng = make_rng(1, 1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 200; ++t) {
        fuzzy::Degrees a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)}, c{u(rng), u(rng), u(rng)};
        const auto base = fuzzy::infer(a, b, c, rules);
        a[t % 3] = std::min(1.0, a[t % 3] + 0.3);
        const auto up = fuzzy::infer(a, b, c, rules);
        for (std::size_t k = 0; k < base.activation.size(); ++k) CHECK(up.activation[k] >= base.activation[k]);
    }
}

TEST_CASE("centre of gravity")
{
    const auto out = fuzzy::output_level();
    CHECK(fuzzy::defuzzify({0, 0, 1, 0, 0}, out) == Approx(0.5).epsilon(1e-9));
    const double top = fuzzy::defuzzify({0, 0, 0, 0, 1}, out);
    CHECK(top > 0.5);
    CHECK(top == Approx(1.0 - 0.25 / 3).epsilon(2e-3));  // right triangle centroid

    auto rng = make_rng(2, 1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 100; ++t) {
        fuzzy::Degrees act(5);
        for (auto& a : act) a = u(rng);
        const double base = fuzzy::defuzzify(act, out);
        CHECK(base >= 0.0);
        CHECK(base <= 1.0);
    }
    // Clipping reshapes each consequent, so scaling activations moves the centroid in
    // general. A lone symmetric class keeps its centre at any level.
    for (double k : {0.1, 0.37, 0.8}) {
        CHECK(fuzzy::defuzzify({0, k, 0, 0, 0}, out) == Approx(0.25).epsilon(1e-9));
        CHECK(fuzzy::defuzzify({0, 0, 0, k, 0}, out) == Approx(0.75).epsilon(1e-9));
    }
    // equal levels on mirrored classes stay centred
    for (double k : {0.2, 0.6, 1.0}) CHECK(fuzzy::defuzzify({k, 0, 0, 0, k}, out) == Approx(0.5).epsilon(1e-9));
}

TEST_CASE("engine matches the reference pipeline")
{
    const fuzzy::FuzzyEngine engine;
    const auto rules = fuzzy::FuzzyRuleBase::standard();
    auto rng = make_rng(4, 1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 200; ++t) {
        const double a = u(rng), b = u(rng), c = u(rng);
        const auto inf = fuzzy::infer(fuzzy::fuzzify(a, engine.cq()), fuzzy::fuzzify(b, engine.dq()),
                                      fuzzy::fuzzify(c, engine.ms()), rules);
        CHECK(engine.score(a, b, c) == Approx(fuzzy::defuzzify(inf.activation, engine.output())).epsilon(1e-12));
    }
    const auto cls = engine.classify(0.2, 0.5, 0.8);
    CHECK(cls == std::array<std::size_t, 3>{0, 1, 2});
    CHECK(engine.output().classes[engine.evaluate(0.2, 0.5, 0.8).dominant_class()].name == "average");
}

namespace {

fuzzy::AssociationProblem problem(std::size_t clients, std::size_t edges, std::size_t capacity)
{
    fuzzy::AssociationProblem p;
    p.score = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clients), static_cast<Eigen::Index>(edges));
    p.distance = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(clients), static_cast<Eigen::Index>(edges));
    p.covered.setConstant(static_cast<Eigen::Index>(clients), static_cast<Eigen::Index>(edges), true);
    p.capacity = capacity;
    return p;
}

}  // namespace

TEST_CASE("association")
{
    SUBCASE("top scores")
    {
        auto p = problem(3, 1, 2);
        p.score.col(0) << 0.9, 0.5, 0.1;
        const auto a = fuzzy::associate(p);
        CHECK(a.members[0] == std::vector<std::size_t>{0, 1});
        CHECK(a.edge_of[2] == -1);
    }
    SUBCASE("conflict goes to the nearer edge, the loser substitutes")
    {
        auto p = problem(4, 2, 1);
        p.score.col(0) << 0.9, 0.8, 0.1, 0.1;
        p.score.col(1) << 0.9, 0.1, 0.7, 0.1;
        p.distance.col(0) << 10, 10, 10, 10;
        p.distance.col(1) << 20, 20, 20, 20;
        const auto a = fuzzy::associate(p);
        CHECK(a.edge_of[0] == 0);
        CHECK(a.members[1] == std::vector<std::size_t>{2});
    }
    SUBCASE("equal scores: ascending index")
    {
        auto p = problem(5, 1, 3);
        p.score.setConstant(0.5);
        CHECK(fuzzy::associate(p).members[0] == std::vector<std::size_t>{0, 1, 2});
    }
    SUBCASE("capacity and uniqueness under fuzzing")
    {
        auto rng = make_rng(9, 1);
        std::uniform_real_distribution<double> u(0, 1);
        std::bernoulli_distribution cover(0.6);
        for (int t = 0; t < 200; ++t) {
            const std::size_t n = 3 + t % 20, m = 1 + t % 4, cap = 1 + t % 5;
            auto p = problem(n, m, cap);
            for (Eigen::Index i = 0; i < p.score.size(); ++i) {
                p.score(i) = u(rng);
                p.distance(i) = u(rng);
                p.covered(i) = cover(rng);
            }
            const auto a = fuzzy::associate(p);
            std::size_t total = 0;
            for (std::size_t j = 0; j < m; ++j) {
                CHECK(a.members[j].size() <= cap);
                for (auto c : a.members[j]) {
                    CHECK(a.edge_of[c] == static_cast<int>(j));
                    CHECK(p.covered(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)));
                }
                total += a.members[j].size();
            }
            CHECK(total == a.assigned());
            // no edge left with room while a covered client sits idle
            for (std::size_t j = 0; j < m; ++j) {
                if (a.members[j].size() == cap) continue;
                for (std::size_t c = 0; c < n; ++c) {
                    if (p.covered(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j))) CHECK(a.edge_of[c] >= 0);
                }
            }
        }
    }
}
