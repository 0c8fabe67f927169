#include <doctest.h>

#include <cmath>
#include <sstream>

#include "flexgrid/encodings.hpp"
#include "flexgrid/milp.hpp"

using namespace flexgrid::milp;

namespace {

// Evaluate an encoded function at a constant input through a tiny model.
template <class Encode>
double encoded_at(double input, double lo, double hi, Encode&& encode) {
    Model m;
    const Var v = m.add_continuous(lo, hi, "in");
    m.fix(v, input);
    const Var out = encode(m, LinExpr(v));
    m.minimize(LinExpr(out));
    const auto res = solve(m);
    REQUIRE(res.optimal());
    CHECK(big_m_boundary_hits(m, res.values).empty());
    // maximizing must give the same value: the encoding is exact, not a bound
    m.maximize(LinExpr(out));
    const auto res_max = solve(m);
    REQUIRE(res_max.optimal());
    CHECK(res_max.value(out) == doctest::Approx(res.value(out)).epsilon(1e-9));
    return res.value(out);
}

}  // namespace

TEST_CASE("trivial models") {
    Model m;
    const Var x = m.add_continuous(0.0, 10.0, "x");
    m.add_constraint(LinExpr(x), Sense::Ge, 3.0);
    m.minimize(LinExpr(x));
    const auto res = solve(m);
    REQUIRE(res.optimal());
    CHECK(res.value(x) == doctest::Approx(3.0));

    Model inf;
    const Var y = inf.add_continuous(0.0, 10.0, "y");
    inf.add_constraint(LinExpr(y), Sense::Le, -1.0);
    inf.maximize(LinExpr(y));
    CHECK(solve(inf).status == SolveStatus::Infeasible);
}

TEST_CASE("model checks") {
    Model unbounded;
    unbounded.add_continuous(0.0, kInf);
    CHECK_THROWS_AS(unbounded.check(), std::invalid_argument);
    Model m;
    CHECK_THROWS_AS(m.add_continuous(1.0, 0.0), std::invalid_argument);
    const Var x = m.add_continuous(-1.0, 2.0);
    const Interval r = m.bounds(LinExpr(x, -2.0) + 1.0);
    CHECK(r.lo == doctest::Approx(-3.0));
    CHECK(r.hi == doctest::Approx(3.0));
}

TEST_CASE("lp export names every variable") {
    Model m;
    const Var x = m.add_continuous(0.0, 1.0, "x");
    const Var b = m.add_binary("b");
    m.add_constraint(LinExpr(x) + LinExpr(b), Sense::Le, 1.5, "cap");
    m.maximize(LinExpr(x));
    std::ostringstream out;
    write_lp(m, out);
    const auto text = out.str();
    CHECK(text.find("cap") != std::string::npos);
    CHECK(text.find("Binar") != std::string::npos);
}

TEST_CASE("encodings reproduce their functions on a grid") {
    double worst = 0.0;
    for (int k = 0; k <= 120; ++k) {
        const double t = -6.0 + 0.1 * k;
        const double a = encoded_at(t, -6.0, 6.0, [](Model& m, const LinExpr& e) { return encode_abs(m, e); });
        worst = std::max(worst, std::abs(a - std::abs(t)));
        const double c = encoded_at(t, -6.0, 6.0, [](Model& m, const LinExpr& e) { return encode_clamp(m, e, -2.0, 3.5); });
        worst = std::max(worst, std::abs(c - std::clamp(t, -2.0, 3.5)));
        const double mn =
            encoded_at(t, -6.0, 6.0, [](Model& m, const LinExpr& e) { return encode_min2(m, e, LinExpr(1.25)); });
        worst = std::max(worst, std::abs(mn - std::min(t, 1.25)));
        const double mx = encoded_at(t, -6.0, 6.0, [](Model& m, const LinExpr& e) {
            const std::vector<LinExpr> terms{e, -1.0 * e - 1.0, LinExpr(0.5)};
            return encode_max(m, terms);
        });
        worst = std::max(worst, std::abs(mx - std::max({t, -t - 1.0, 0.5})));
        const double mi = encoded_at(t, -6.0, 6.0, [](Model& m, const LinExpr& e) {
            const std::vector<LinExpr> terms{e, 2.0 - e};
            return encode_min(m, terms);
        });
        worst = std::max(worst, std::abs(mi - std::min(t, 2.0 - t)));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("disjunction and le_max") {
    // x in [0,10], (x <= 2) or (x >= 7): maximizing x - 8|...| style check
    Model m;
    const Var x = m.add_continuous(0.0, 10.0, "x");
    add_disjunction(m, {{{LinExpr(x), Sense::Le, 2.0}}, {{LinExpr(x), Sense::Ge, 7.0}}});
    m.add_constraint(LinExpr(x), Sense::Le, 5.0);
    m.maximize(LinExpr(x));
    auto res = solve(m);
    REQUIRE(res.optimal());
    CHECK(res.value(x) == doctest::Approx(2.0));

    Model n;
    const Var t = n.add_continuous(-5.0, 5.0, "t");
    const Var y = n.add_continuous(-5.0, 5.0, "y");
    n.fix(y, 1.0);
    const std::vector<LinExpr> terms{LinExpr(y), -1.0 * LinExpr(y) + 3.0};
    add_le_max(n, LinExpr(t), terms);
    n.maximize(LinExpr(t));
    res = solve(n);
    REQUIRE(res.optimal());
    CHECK(res.value(t) == doctest::Approx(2.0));
}

TEST_CASE("implied rows skip when always satisfied") {
    Model m;
    const Var x = m.add_continuous(0.0, 1.0);
    const Var b = m.add_binary();
    const auto before = m.constraints().size();
    add_implied(m, b, true, {LinExpr(x), Sense::Le, 2.0});
    CHECK(m.constraints().size() == before);
    add_implied(m, b, true, {LinExpr(x), Sense::Le, 0.5});
    CHECK(m.constraints().size() == before + 1);
    CHECK(m.big_m_rows().size() == 1);
    CHECK(m.big_m_rows().front().big_m > 0.5);
}

TEST_CASE("repeated solves are deterministic") {
    Model m;
    std::vector<Var> b;
    LinExpr sum;
    for (int i = 0; i < 6; ++i) {
        b.push_back(m.add_binary());
        sum.add(b.back(), 1.0);
    }
    m.add_constraint(sum, Sense::Eq, 3.0);
    m.maximize(LinExpr(0.0));
    const auto first = solve(m);
    for (int k = 0; k < 5; ++k) CHECK(solve(m).values == first.values);
}

TEST_CASE("cancel flag interrupts") {
    std::atomic<bool> stop{true};
    Model m;
    LinExpr sum;
    for (int i = 0; i < 30; ++i) {
        Var v = m.add_binary();
        sum.add(v, 1.0 + i % 7);
    }
    m.add_constraint(sum, Sense::Le, 40.5);
    m.maximize(sum);
    SolveOptions o;
    o.cancel = &stop;
    const auto res = solve(m, o);
    CHECK((res.status == SolveStatus::TimeLimit || res.status == SolveStatus::Optimal));
}
