#include <doctest.h>

#include "checks.hpp"

using namespace flexgrid;

TEST_CASE("two-node scenarios at the line limit") {
    const Grid g = fixtures::two_node();
    const std::vector<double> x{2.0};
    CHECK(inner_min(g, x, std::vector<double>{0.0, -3.0}).g_star == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(inner_min(g, x, std::vector<double>{0.0, -3.01}).g_star > 0.0);
    const auto r = inner_min(g, x, std::vector<double>{0.0, 0.0});
    CHECK(r.g_star == doctest::Approx(2.0 / 5.0 - 1.0));
    CHECK(r.flows.at(0) == doctest::Approx(2.0));
    CHECK(r.gen_offsets.at(0) == doctest::Approx(0.0));
}

TEST_CASE("scenario beyond the load-distribution capacity") {
    const Grid g = fixtures::two_node();
    CHECK_THROWS_AS(inner_min(g, std::vector<double>{2.0}, std::vector<double>{0.0, -20.0}), std::domain_error);
}

TEST_CASE("worst case on the two-node grid") {
    const Grid g = fixtures::two_node();
    const Region region = make_hyperbox(g, 1e3);
    const std::vector<double> x{2.0};
    std::vector<ControlChoice> pool;
    const auto ok = worst_case(g, region, x, 2.9, 0.5, pool);
    CHECK(ok.certified);
    CHECK(ok.feasible());
    pool.clear();
    const auto bad = worst_case(g, region, x, 3.5, 0.5, pool);
    CHECK(bad.certified);
    CHECK_FALSE(bad.feasible());
    REQUIRE(bad.y_star.size() == 2);
    CHECK(bad.y_star[1] < -3.0);
    CHECK(bad.value <= bad.upper + 1e-9);
}

TEST_CASE("worst case agrees with the oracle on random grids") {
    const auto grids = fixtures::feasible_random_grids(31, 6);
    auto oc = fixtures::coarse_oracle();
    for (const auto& g : grids) {
        const auto region = make_hyperbox(g, 1e3);
        const oracle::Network net(g, oc);
        const auto x = oracle::oracle_flexibility(net, fixtures::oracle_box(region), oc).x;
        const double at = oracle::oracle_flexibility_at(net, fixtures::oracle_box(region), x, oc).value;
        std::vector<ControlChoice> pool;
        const double inside = 0.8 * at;
        const auto wc = worst_case(g, Region{region}, x, inside, 0.5, pool);
        CHECK(wc.feasible());
        if (at < region.host_radius * 0.95) {
            pool.clear();
            const auto over = worst_case(g, Region{region}, x, std::min(region.host_radius, 1.2 * at + 0.05), 0.5, pool);
            CHECK_FALSE(over.feasible());
        }
    }
}

TEST_CASE("auxiliary evaluation is pessimistic and tight") {
    const Grid g = fixtures::two_node();
    const Region region = make_hyperbox(g, 1e3);
    const auto r = evaluate_flexibility_at(g, region, std::vector<double>{2.0}, 0.5);
    CHECK(r.converged);
    CHECK(r.delta_wc_relax <= 3.0 + 1e-6);
    CHECK(r.delta_wc_relax >= 0.975 * 3.0 - 1e-6);
}

TEST_CASE("fully manageable host yields the host radius") {
    Grid g = fixtures::two_node();
    g.edges[0].limit = 100.0;
    const auto region = make_hyperbox(g, 1e3);
    const auto r = evaluate_flexibility_at(g, Region{region}, std::vector<double>{2.0}, 0.5);
    CHECK(r.delta_wc_relax == doctest::Approx(region.host_radius));
}
