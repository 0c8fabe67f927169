#include "flexgrid/encodings.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flexgrid::milp {

namespace {

// Slack added on top of the exact big-M so a deactivated row never sits on
// its relaxation boundary; keeps the truncation diagnostic meaningful.
double padded(double need) { return need + 1e-2 * (1.0 + std::abs(need)); }

std::string suffix(const std::string& name, const char* tag) { return name.empty() ? std::string{} : name + tag; }

void require_finite(const Interval& r, const std::string& name) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi))
        throw std::invalid_argument("encoding '" + name + "' needs finite bounds");
}

void add_implied_one(Model& model, Var bin, bool active, const LinExpr& expr, Sense sense, double rhs,
                     const std::string& name) {
    const Interval r = model.bounds(expr);
    require_finite(r, name);
    if (sense == Sense::Le) {
        const double need = r.hi - rhs;
        if (need <= 0.0) return;
        const double m = padded(need);
        // active: expr <= rhs + m(1-b) ; inactive: expr <= rhs + m b
        LinExpr e = expr;
        std::size_t row;
        if (active) {
            e.add(bin, m);
            row = model.add_constraint(e, Sense::Le, rhs + m, name);
        } else {
            e.add(bin, -m);
            row = model.add_constraint(e, Sense::Le, rhs, name);
        }
        model.record_big_m({row, bin, active, m});
    } else {
        const double need = rhs - r.lo;
        if (need <= 0.0) return;
        const double m = padded(need);
        LinExpr e = expr;
        std::size_t row;
        if (active) {
            e.add(bin, -m);
            row = model.add_constraint(e, Sense::Ge, rhs - m, name);
        } else {
            e.add(bin, m);
            row = model.add_constraint(e, Sense::Ge, rhs, name);
        }
        model.record_big_m({row, bin, active, m});
    }
}

Var select_extreme(Model& model, std::span<const LinExpr> terms, bool maximum, const std::string& name) {
    if (terms.empty()) throw std::invalid_argument("encode_max/min: no terms");
    // Work with max; min is max of negated terms.
    const double s = maximum ? 1.0 : -1.0;
    std::vector<LinExpr> t;
    std::vector<Interval> r;
    double floor = -kInf;
    for (const auto& term : terms) {
        t.push_back(term * s);
        r.push_back(model.bounds(t.back()));
        require_finite(r.back(), name);
        floor = std::max(floor, r.back().lo);
    }
    double ceil = -kInf;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (r[i].hi < floor) continue;  // can never attain the max
        live.push_back(i);
        ceil = std::max(ceil, r[i].hi);
    }
    const Var m = model.add_continuous(floor, ceil, name);
    if (live.size() == 1) {
        model.add_constraint(LinExpr(m) - t[live[0]], Sense::Eq, 0.0, suffix(name, "_eq"));
    } else {
        LinExpr pick;
        for (std::size_t k = 0; k < live.size(); ++k) {
            const auto& e = t[live[k]];
            model.add_constraint(LinExpr(m) - e, Sense::Ge, 0.0, suffix(name, "_ge"));
            const Var b = model.add_binary(suffix(name, "_sel"));
            pick.add(b, 1.0);
            add_implied_one(model, b, true, LinExpr(m) - e, Sense::Le, 0.0, suffix(name, "_le"));
        }
        model.add_constraint(pick, Sense::Eq, 1.0, suffix(name, "_one"));
    }
    if (maximum) return m;
    const Var out = model.add_continuous(-ceil, -floor, name);
    model.add_constraint(LinExpr(out) + LinExpr(m), Sense::Eq, 0.0, suffix(name, "_neg"));
    return out;
}

}  // namespace

void add_implied(Model& model, Var binary, bool active_value, const Row& row, const std::string& name) {
    if (row.sense == Sense::Eq) {
        add_implied_one(model, binary, active_value, row.expr, Sense::Le, row.rhs, name);
        add_implied_one(model, binary, active_value, row.expr, Sense::Ge, row.rhs, name);
    } else {
        add_implied_one(model, binary, active_value, row.expr, row.sense, row.rhs, name);
    }
}

Var encode_abs(Model& model, const LinExpr& expr, double bound, const std::string& name) {
    if (!std::isfinite(bound) || bound < 0.0) throw std::invalid_argument("encode_abs: bound must be finite");
    const Var a = model.add_continuous(0.0, bound, name);
    model.add_constraint(LinExpr(a) - expr, Sense::Ge, 0.0, suffix(name, "_pos"));
    model.add_constraint(LinExpr(a) + expr, Sense::Ge, 0.0, suffix(name, "_neg"));
    const Interval r = model.bounds(expr);
    if (r.lo >= 0.0) {
        model.add_constraint(LinExpr(a) - expr, Sense::Le, 0.0, suffix(name, "_eq"));
    } else if (r.hi <= 0.0) {
        model.add_constraint(LinExpr(a) + expr, Sense::Le, 0.0, suffix(name, "_eq"));
    } else {
        const Var b = model.add_binary(suffix(name, "_sign"));
        add_implied_one(model, b, true, LinExpr(a) - expr, Sense::Le, 0.0, suffix(name, "_up"));
        add_implied_one(model, b, false, LinExpr(a) + expr, Sense::Le, 0.0, suffix(name, "_dn"));
    }
    return a;
}

Var encode_abs(Model& model, const LinExpr& expr, const std::string& name) {
    const Interval r = model.bounds(expr);
    require_finite(r, name);
    return encode_abs(model, expr, std::max(std::abs(r.lo), std::abs(r.hi)), name);
}

Var encode_min2(Model& model, const LinExpr& a, const LinExpr& b, const std::string& name) {
    const std::vector<LinExpr> terms{a, b};
    return select_extreme(model, terms, false, name);
}

Var encode_max(Model& model, std::span<const LinExpr> terms, const std::string& name) {
    return select_extreme(model, terms, true, name);
}

Var encode_min(Model& model, std::span<const LinExpr> terms, const std::string& name) {
    return select_extreme(model, terms, false, name);
}

Var encode_clamp(Model& model, const LinExpr& input, double lo, double hi, const std::string& name) {
    if (lo > hi) throw std::invalid_argument("encode_clamp: lo > hi");
    const Interval r = model.bounds(input);
    require_finite(r, name);
    const Var c = model.add_continuous(lo, hi, name);
    if (lo == hi) return c;
    if (r.hi <= lo) {
        model.fix(c, lo);
        return c;
    }
    if (r.lo >= hi) {
        model.fix(c, hi);
        return c;
    }
    const bool can_low = r.lo < lo;
    const bool can_high = r.hi > hi;
    LinExpr saturated;
    if (can_low) {
        const Var b = model.add_binary(suffix(name, "_lo"));
        saturated.add(b, 1.0);
        add_implied_one(model, b, true, LinExpr(c), Sense::Le, lo, suffix(name, "_atlo"));
        add_implied_one(model, b, true, input, Sense::Le, lo, suffix(name, "_inlo"));
    }
    if (can_high) {
        const Var b = model.add_binary(suffix(name, "_hi"));
        saturated.add(b, 1.0);
        add_implied_one(model, b, true, LinExpr(c), Sense::Ge, hi, suffix(name, "_athi"));
        add_implied_one(model, b, true, input, Sense::Ge, hi, suffix(name, "_inhi"));
    }
    if (can_low && can_high) model.add_constraint(saturated, Sense::Le, 1.0, suffix(name, "_one"));
    if (!can_low && !can_high) {
        model.add_constraint(LinExpr(c) - input, Sense::Eq, 0.0, suffix(name, "_pass"));
        return c;
    }
    // Pass-through when neither saturation binary is set.
    const double m_up = padded(hi - r.lo);
    const double m_dn = padded(r.hi - lo);
    model.add_constraint(LinExpr(c) - input - saturated * m_up, Sense::Le, 0.0, suffix(name, "_passup"));
    model.add_constraint(input - LinExpr(c) - saturated * m_dn, Sense::Le, 0.0, suffix(name, "_passdn"));
    return c;
}

std::vector<Var> add_disjunction(Model& model, const std::vector<std::vector<Row>>& alternatives,
                                 const std::string& name) {
    if (alternatives.empty()) throw std::invalid_argument("add_disjunction: no alternatives");
    if (alternatives.size() == 1) {
        for (const auto& row : alternatives.front()) model.add_constraint(row.expr, row.sense, row.rhs, name);
        return {};
    }
    std::vector<Var> selectors;
    LinExpr any;
    for (const auto& alt : alternatives) {
        const Var b = model.add_binary(suffix(name, "_alt"));
        selectors.push_back(b);
        any.add(b, 1.0);
        for (const auto& row : alt) add_implied(model, b, true, row, name);
    }
    model.add_constraint(any, Sense::Ge, 1.0, suffix(name, "_any"));
    return selectors;
}

void add_le_max(Model& model, const LinExpr& lhs, std::span<const LinExpr> terms, const std::string& name) {
    std::vector<std::vector<Row>> alts;
    alts.reserve(terms.size());
    for (const auto& t : terms) alts.push_back({Row{lhs - t, Sense::Le, 0.0}});
    add_disjunction(model, alts, name);
}

}  // namespace flexgrid::milp
