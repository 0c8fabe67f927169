#include <doctest.h>

#include "checks.hpp"

using namespace flexgrid;

TEST_CASE("load distribution matches the exact response, both saturation kinks") {
    const auto r = checks::redistribution_sweep(200);
    CHECK(r.points >= 200);
    CHECK(r.covers_kinks);
    CHECK(r.worst <= 1e-6);
}

TEST_CASE("phase shifter follows the five-regime law") {
    const auto r = checks::pst_sweep();
    CHECK(r.points == 161);
    CHECK(r.worst <= 1e-6);
}

TEST_CASE("closed-form PST law at its breakpoints") {
    const auto at = [](double u) { return checks::pst_closed_form(u, 1.0, 2.0, -3.0, 3.0); };
    CHECK(at(2.0).flow == doctest::Approx(2.0));
    CHECK(at(5.0).flow == doctest::Approx(2.0));
    CHECK(at(5.0).shift == doctest::Approx(-3.0));
    CHECK(at(7.0).flow == doctest::Approx(4.0));
    CHECK(at(-5.0).flow == doctest::Approx(-2.0));
    CHECK(at(-8.0).flow == doctest::Approx(-5.0));
}

TEST_CASE("conservation and state uniqueness on random grids") {
    const auto t = checks::formulation_properties(2024, 20);
    CHECK(t.grids == 20);
    CHECK(t.conservation_failures == 0);
    CHECK(t.uniqueness_failures == 0);
}

TEST_CASE("violation terms") {
    const Grid g = fixtures::two_node();
    milp::Model m;
    const std::vector<double> x{2.0}, y{0.0, -4.0};
    const auto v = add_scenario(m, g, {constant_exprs(x), constant_exprs(y), ControlRole::base()}, "");
    const auto terms = violation_terms(g, v);
    CHECK(terms.size() == 2);
    const milp::Var viol = add_violation(m, g, v, ViolationEncoding::Exact, "");
    m.minimize(milp::LinExpr(viol));
    const auto out = milp::solve(m);
    REQUIRE(out.optimal());
    // the generator picks up 4 MW: 6 MW on a 5 MW line
    CHECK(out.value(viol) == doctest::Approx(0.2));

    Grid free = g;
    free.edges[0].limit.reset();
    milp::Model n;
    const auto w = add_scenario(n, free, {constant_exprs(x), constant_exprs(y), ControlRole::base()}, "");
    const auto t = violation_terms(free, w);
    REQUIRE(t.size() == 1);
    CHECK(t.front().is_constant());
    CHECK(t.front().constant() == -1.0);
}

TEST_CASE("merge control closes at most one pair") {
    Grid g = fixtures::two_node();
    g.nodes.push_back({"M", 0.0, 0.0, 0.0});
    g.edges.push_back(fixtures::line("g-m", 0, 2, 1.0));
    g.edges.push_back(fixtures::line("m-l", 2, 1, 1.0, 1.0));
    g.merge_pairs = {{"a", 0, 2}, {"b", 2, 1}};
    g.forecast.assign(3, 0.0);
    g.validate();
    milp::Model m;
    const std::vector<double> x{2.0}, y{0.0, 0.0, 0.0};
    const auto v = add_scenario(m, g, {constant_exprs(x), constant_exprs(y), ControlRole::decision()}, "");
    milp::LinExpr both = milp::LinExpr(*v.merge[0]) + milp::LinExpr(*v.merge[1]);
    m.maximize(both);
    const auto out = milp::solve(m);
    REQUIRE(out.optimal());
    CHECK(out.objective == doctest::Approx(1.0));
}
