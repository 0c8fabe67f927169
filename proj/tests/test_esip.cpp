#include <doctest.h>

#include "checks.hpp"

using namespace flexgrid;

namespace {

Scenario scenario(std::vector<double> y, double h) {
    Scenario s;
    s.y = std::move(y);
    s.h = h;
    return s;
}

}  // namespace

TEST_CASE("pool deduplicates within 1e-9") {
    DiscretizationPool pool;
    CHECK(pool.add(scenario({0.0, 1.0}, 1.0)));
    CHECK_FALSE(pool.add(scenario({0.0, 1.0 + 1e-10}, 1.0)));
    CHECK(pool.add(scenario({0.0, 1.0 + 1e-6}, 1.0)));
    CHECK(pool.size() == 2);
}

TEST_CASE("dropping") {
    DiscretizationPool pool;
    pool.add(scenario({8.0}, 8.0));
    pool.add(scenario({2.9}, 2.9));
    CHECK(pool.drop_at_or_above(3.0) == 1);
    CHECK(pool.active_count() == 1);
    CHECK(pool.active().front().h == doctest::Approx(2.9));

    DiscretizationPool host;
    host.add(scenario({8.0}, 8.0));
    CHECK(host.drop_at_or_above(8.0) == 0);
}

TEST_CASE("interval test") {
    CHECK(interval_closed(3.0, 2.9, 0.05));
    CHECK_FALSE(interval_closed(3.0, 2.5, 0.05));
    CHECK(interval_closed(5e-4, 4.5e-4, 0.05));
    CHECK_FALSE(interval_closed(5e-4, 2e-4, 0.05));
}

TEST_CASE("config validation") {
    Config c;
    CHECK_NOTHROW(c.validate());
    c.r_r = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("upper level on the two-node grid") {
    const Grid g = fixtures::two_node();
    const Region region = make_hyperbox(g, 1e3);
    const auto first = upper_level(g, region, {}, {}, 0.0, 0.5, 8.0, {});
    REQUIRE(first.status == milp::SolveStatus::Optimal);
    CHECK(first.delta == doctest::Approx(8.0));
    CHECK(first.x.at(0) == doctest::Approx(2.0));

    std::vector<Scenario> pool{scenario({0.0, -8.0}, 8.0)};
    const auto cut = upper_level(g, region, pool, {}, 0.0, 0.5, 8.0, {});
    REQUIRE(cut.status == milp::SolveStatus::Optimal);
    CHECK(cut.delta == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("infeasible base case is reported") {
    Grid g = fixtures::two_node();
    g.edges[0].limit = 1.0;
    CHECK_THROWS_AS(solve_flexibility(g, make_hyperbox(g, 1e3), checks::fixture_config()), InfeasibleBaseCase);
}

TEST_CASE("two-node solve") {
    const Grid g = fixtures::two_node();
    for (bool single : {true, false}) {
        Config c = checks::fixture_config();
        c.single_thread = single;
        const auto r = solve_flexibility(g, make_hyperbox(g, 1e3), c);
        CHECK(r.certified);
        CHECK(r.delta_guaranteed <= r.delta_optimistic + 1e-9);
        CHECK(r.delta_guaranteed == doctest::Approx(3.0).epsilon(0.05));
        CHECK(r.delta_optimistic >= 3.0 - 1e-6);
    }
}

TEST_CASE("bounds move monotonically and the certificate holds") {
    const auto grids = fixtures::feasible_random_grids(77, 4);
    for (const auto& g : grids) {
        const auto region = make_hyperbox(g, 1e3);
        std::vector<LogRecord> seen;
        const auto r = solve_flexibility(g, region, checks::fixture_config(), [&](const LogRecord& rec) { seen.push_back(rec); });
        for (std::size_t k = 1; k < seen.size(); ++k) {
            CHECK(seen[k].delta_optimistic <= seen[k - 1].delta_optimistic + 1e-9);
            CHECK(seen[k].delta_guaranteed >= seen[k - 1].delta_guaranteed - 1e-9);
            CHECK(seen[k].delta_guaranteed <= seen[k].delta_optimistic + 1e-9);
        }
        REQUIRE(r.certified);
        std::vector<ControlChoice> pool;
        const auto wc = worst_case(g, Region{region}, r.x_star, r.delta_guaranteed, r.alpha, pool);
        CHECK(wc.value <= 1e-6);
    }
}

TEST_CASE("single-thread runs are reproducible") {
    const auto grids = fixtures::feasible_random_grids(78, 2);
    for (const auto& g : grids) {
        const auto region = make_hyperbox(g, 1e3);
        const auto a = solve_flexibility(g, region, checks::fixture_config());
        const auto b = solve_flexibility(g, region, checks::fixture_config());
        REQUIRE(a.log.size() == b.log.size());
        for (std::size_t k = 0; k < a.log.size(); ++k) {
            CHECK(a.log[k].procedure == b.log[k].procedure);
            CHECK(a.log[k].delta_candidate == b.log[k].delta_candidate);
            CHECK(a.log[k].event == b.log[k].event);
        }
        CHECK(a.delta_guaranteed == b.delta_guaranteed);
    }
}

TEST_CASE("time limit stops with best-effort bounds") {
    const auto g = parse_grid(fixtures::case_path("transfer_three_node.json"));
    Config c;
    c.time_limit = 1e-6;
    const auto r = solve_flexibility(g, make_transfer(g), c);
    CHECK(r.timed_out);
    CHECK_FALSE(r.certified);
    CHECK(r.delta_guaranteed <= r.delta_optimistic);
}

TEST_CASE("transfer solve brackets the oracle") {
    const auto g = parse_grid(fixtures::case_path("transfer_three_node.json"));
    auto tr = make_transfer(g);
    const auto r = solve_flexibility(g, tr, checks::fixture_config());
    CHECK(r.certified);
    transfer_limits(g, tr, {});
    auto oc = fixtures::coarse_oracle();
    oc.y_grid_resolution = 0.01;
    const oracle::Network net(g, oc);
    const auto est = oracle::oracle_flexibility_at(net, oracle::transfer_region(g, tr.delta_cap), r.x_star, oc);
    CHECK(r.delta_guaranteed <= est.value + 1e-6);
    CHECK(est.value <= r.delta_optimistic + est.slack);
}
