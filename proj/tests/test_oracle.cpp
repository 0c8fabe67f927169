#include <doctest.h>

#include "checks.hpp"

using namespace flexgrid;

TEST_CASE("two-node manageability at the limit") {
    const Grid g = fixtures::two_node();
    const std::vector<double> x{2.0};
    CHECK(oracle::oracle_manageable(g, x, std::vector<double>{0.0, -3.0}));
    CHECK_FALSE(oracle::oracle_manageable(g, x, std::vector<double>{0.0, -3.01}));
    const oracle::Network net(g);
    CHECK(net.base_feasible(x, std::vector<double>{0.0, 0.0}));
}

TEST_CASE("two-node flexibility") {
    const Grid g = fixtures::two_node();
    const oracle::Network net(g);
    const auto box = oracle::box_region(g);
    CHECK(box.host_radius == doctest::Approx(8.0));
    const auto at = oracle::oracle_flexibility_at(net, box, std::vector<double>{2.0});
    CHECK(at.value == doctest::Approx(3.0).epsilon(1e-4));
    const auto best = oracle::oracle_flexibility(net, box);
    CHECK(best.value == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("fully manageable host") {
    Grid g = fixtures::two_node();
    g.edges[0].limit = 100.0;
    const oracle::Network net(g);
    const auto box = oracle::box_region(g);
    CHECK(oracle::oracle_flexibility_at(net, box, std::vector<double>{2.0}).value == doctest::Approx(box.host_radius));
}

TEST_CASE("closed-form redistribution") {
    const Grid g = fixtures::two_generator();
    const std::vector<double> x{1.0, 0.0};
    const auto small = oracle::redistribution(g, x, 1.0);
    REQUIRE(small);
    CHECK((*small)[0] == doctest::Approx(0.7));
    CHECK((*small)[1] == doctest::Approx(0.3));
    const auto sat = oracle::redistribution(g, x, 3.5);
    REQUIRE(sat);
    CHECK((*sat)[0] == doctest::Approx(2.0));
    CHECK((*sat)[1] == doctest::Approx(1.5));
    CHECK_FALSE(oracle::redistribution(g, x, 4.5));
    // identical to the solver-side scalar search
    for (int k = 0; k <= 216; ++k) {
        const double d = -6.9 + 0.05 * k;
        const auto a = oracle::redistribution(g, x, d);
        const auto b = redistribution_offsets(g, x, d);
        for (std::size_t i = 0; i < 2; ++i) CHECK((*a)[i] == doctest::Approx(b[i]).epsilon(1e-9));
    }
}

TEST_CASE("mirrored grids have equal flexibility") {
    const auto grids = fixtures::feasible_random_grids(41, 4);
    const auto oc = fixtures::coarse_oracle();
    for (const auto& g : grids) {
        const Grid m = fixtures::mirrored(g);
        const oracle::Network a(g, oc), b(m, oc);
        const double va = oracle::oracle_flexibility(a, oracle::box_region(g), oc).value;
        const double vb = oracle::oracle_flexibility(b, oracle::box_region(m), oc).value;
        CHECK(va == doctest::Approx(vb).epsilon(1e-6));
    }
}

TEST_CASE("larger line limits never reduce flexibility") {
    const auto grids = fixtures::feasible_random_grids(43, 4);
    auto oc = fixtures::coarse_oracle();
    for (const auto& g : grids) {
        Grid wide = g;
        for (auto& e : wide.edges)
            if (e.limit) *e.limit *= 1.3;
        const oracle::Network a(g, oc), b(wide, oc);
        const auto base = oracle::oracle_flexibility(a, oracle::box_region(g), oc);
        // evaluate the wider grid at the same set-points as well
        const auto more = oracle::oracle_flexibility(b, oracle::box_region(wide), oc, {base.x});
        CHECK(more.value >= base.value - base.slack - 1e-9);
    }
}

TEST_CASE("solver and oracle agree on the two-node grid") {
    const auto c = checks::compare_with_oracle(fixtures::two_node(), fixtures::coarse_oracle());
    CHECK(c.agrees);
}

TEST_CASE("caps") {
    Grid g = fixtures::two_node();
    for (int k = 0; k < 6; ++k) {
        g.nodes.push_back({"p" + std::to_string(k), 0.0, 0.0, 0.0});
        auto e = fixtures::line("q" + std::to_string(k), 0, g.node_count() - 1, 1.0);
        e.pst = PstSpec{1.0, -0.1, 0.1};
        g.edges.push_back(e);
        g.edges.push_back(fixtures::line("r" + std::to_string(k), 1, g.node_count() - 1, 1.0));
    }
    g.forecast.assign(g.node_count(), 0.0);
    CHECK_THROWS_AS(oracle::Network{g}, oracle::CapExceeded);
}
