#include <doctest.h>

#include "checks.hpp"

using namespace flexgrid;

TEST_CASE("hyperbox from the two-node grid") {
    const auto r = make_hyperbox(fixtures::two_node(), 1e3);
    CHECK(r.host_radius == doctest::Approx(8.0));
    const std::vector<double> y{0.0, -3.0};
    CHECK(h_box(r, y) == doctest::Approx(3.0));
    const std::vector<double> z{0.0, 0.0};
    CHECK(h_box(r, z) == 0.0);
}

TEST_CASE("pinned dimensions") {
    HyperboxRegion r{{0.0, 0.0}, {0.0, 1.0}, {0.0, 2.0}, 5.0};
    CHECK(h_box(r, std::vector<double>{0.0, 1.0}) == doctest::Approx(0.5));
    CHECK(std::isinf(h_box(r, std::vector<double>{0.1, 0.0})));
}

TEST_CASE("box membership matches the region function") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-4.0, 4.0), w(0.0, 2.0), d(0.0, 3.0);
    int mismatches = 0;
    for (int k = 0; k < 10000; ++k) {
        HyperboxRegion r{{u(rng), u(rng)}, {w(rng) + 0.1, w(rng) + 0.1}, {w(rng) + 0.1, w(rng) + 0.1}, 10.0};
        const std::vector<double> y{u(rng), u(rng)};
        const double delta = d(rng);
        bool inside = true;
        for (std::size_t n = 0; n < 2; ++n)
            inside = inside && y[n] >= r.y0[n] - r.delta_minus[n] * delta && y[n] <= r.y0[n] + r.delta_plus[n] * delta;
        if (inside != (h_box(r, y) <= delta)) ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("box region function is positively homogeneous") {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0), s(0.0, 4.0);
    HyperboxRegion r{{0.5, -1.0, 0.0}, {1.0, 2.0, 0.5}, {1.5, 1.0, 0.25}, 10.0};
    for (int k = 0; k < 500; ++k) {
        std::vector<double> y{u(rng), u(rng), u(rng)};
        const double scale = s(rng);
        std::vector<double> z(3);
        for (std::size_t n = 0; n < 3; ++n) z[n] = r.y0[n] + scale * (y[n] - r.y0[n]);
        CHECK(h_box(r, z) == doctest::Approx(scale * h_box(r, y)).epsilon(1e-9));
    }
}

TEST_CASE("transfer region function ignores the recourse control") {
    const Grid g = parse_grid(fixtures::case_path("transfer_three_node.json"));
    const auto r = make_transfer(g);
    const std::vector<double> x{-1.0, 1.0};
    std::mt19937 rng(9);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> y(g.node_count(), 0.0);
        for (std::size_t n = 0; n < y.size(); ++n)
            y[n] = r.y_lo[n] + (r.y_hi[n] - r.y_lo[n]) * std::uniform_real_distribution<double>(0, 1)(rng);
        const double h = h_transfer(r, g, x, y);
        // the same from the MILP pieces under every control role
        for (const auto role : {ControlRole::base(), ControlRole::decision()}) {
            milp::Model m;
            const auto v = add_scenario(m, g, {constant_exprs(x), constant_exprs(y), role}, "");
            const auto pieces = region_pieces(Region{r}, constant_exprs(y), v);
            m.minimize(milp::LinExpr(0.0));
            const auto out = milp::solve(m);
            REQUIRE(out.optimal());
            double lowest = std::numeric_limits<double>::infinity();
            for (const auto& p : pieces.pieces) lowest = std::min(lowest, out.value(p));
            CHECK(lowest == doctest::Approx(h).epsilon(1e-7));
        }
        CHECK(h == doctest::Approx(oracle::transfer_h(g, oracle::transfer_region(g, 0.0), x, y)).epsilon(1e-9));
    }
}

TEST_CASE("scenario value") {
    const HyperboxRegion box{{0.0}, {1.0}, {1.0}, 5.0};
    CHECK(scenario_value(Region{box}, 0.5, 2.0, 1.0, 0.3) == doctest::Approx(0.3));
    CHECK(scenario_value(Region{box}, 0.5, 2.0, 3.0, 0.3) == doctest::Approx(-0.5));
    const TransferRegion tr{};
    CHECK(scenario_value(Region{tr}, 0.5, 2.0, -1.0, 0.3) == doctest::Approx(-0.5));
}

TEST_CASE("transfer limits") {
    const Grid g = parse_grid(fixtures::case_path("transfer_three_node.json"));
    auto r = make_transfer(g);
    const double norm = transfer_limits(g, r, {});
    CHECK(r.delta_cap > 0.0);
    CHECK(norm > 0.0);
    CHECK(norm <= r.delta_cap + 1e-9);
}

TEST_CASE("transfer needs both node sets") {
    Grid g = fixtures::two_node();
    CHECK_THROWS_AS(make_transfer(g), std::invalid_argument);
}
