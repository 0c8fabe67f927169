#include "flexgrid/milp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace flexgrid::milp {

LinExpr& LinExpr::add(Var v, double coef) {
    if (!v.valid()) throw std::invalid_argument("LinExpr: invalid variable");
    if (coef != 0.0) terms_.emplace_back(v.index, coef);
    return *this;
}

LinExpr& LinExpr::add(const LinExpr& other, double scale) {
    if (scale == 0.0) return *this;
    terms_.reserve(terms_.size() + other.terms_.size());
    for (const auto& [idx, c] : other.terms_) terms_.emplace_back(idx, c * scale);
    constant_ += other.constant_ * scale;
    return *this;
}

LinExpr& LinExpr::operator*=(double s) {
    if (s == 0.0) {
        terms_.clear();
        constant_ = 0.0;
        return *this;
    }
    for (auto& t : terms_) t.second *= s;
    constant_ *= s;
    return *this;
}

double LinExpr::evaluate(std::span<const double> values) const {
    double v = constant_;
    for (const auto& [idx, c] : terms_) v += c * values[static_cast<std::size_t>(idx)];
    return v;
}

void LinExpr::normalize() {
    std::sort(terms_.begin(), terms_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> merged;
    for (const auto& t : terms_) {
        if (!merged.empty() && merged.back().first == t.first) {
            merged.back().second += t.second;
        } else {
            merged.push_back(t);
        }
    }
    std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
    terms_ = std::move(merged);
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }
LinExpr operator*(LinExpr a, double s) { return a *= s; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }

Var Model::add_continuous(double lb, double ub, std::string name) {
    if (!(lb <= ub)) throw std::invalid_argument("Model: variable '" + name + "' has lb > ub");
    vars_.push_back({lb, ub, VarType::Continuous, std::move(name)});
    return Var{static_cast<int>(vars_.size() - 1)};
}

Var Model::add_binary(std::string name) {
    vars_.push_back({0.0, 1.0, VarType::Binary, std::move(name)});
    return Var{static_cast<int>(vars_.size() - 1)};
}

std::size_t Model::add_constraint(const LinExpr& expr, Sense sense, double rhs, std::string name) {
    LinExpr e = expr;
    e.normalize();
    const double folded = rhs - e.constant();
    e.add(LinExpr(-e.constant()));
    rows_.push_back({std::move(e), sense, folded, std::move(name)});
    return rows_.size() - 1;
}

void Model::set_objective(const LinExpr& objective, ObjectiveSense sense) {
    objective_ = objective;
    objective_.normalize();
    sense_ = sense;
}

void Model::fix(Var v, double value) { set_bounds(v, value, value); }

void Model::set_bounds(Var v, double lb, double ub) {
    auto& var = vars_.at(static_cast<std::size_t>(v.index));
    if (!(lb <= ub)) throw std::invalid_argument("Model: bounds of '" + var.name + "' are inverted");
    var.lb = lb;
    var.ub = ub;
}

Interval Model::bounds(const LinExpr& expr) const {
    Interval out{expr.constant(), expr.constant()};
    for (const auto& [idx, c] : expr.terms()) {
        const auto& v = vars_.at(static_cast<std::size_t>(idx));
        if (c > 0) {
            out.lo += c * v.lb;
            out.hi += c * v.ub;
        } else {
            out.lo += c * v.ub;
            out.hi += c * v.lb;
        }
    }
    return out;
}

std::size_t Model::binary_count() const {
    return static_cast<std::size_t>(
        std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) { return v.type == VarType::Binary; }));
}

void Model::check() const {
    for (const auto& v : vars_) {
        if (v.type == VarType::Continuous && (!std::isfinite(v.lb) || !std::isfinite(v.ub)))
            throw std::invalid_argument("Model: continuous variable '" + v.name + "' needs finite bounds");
    }
    const auto n = static_cast<int>(vars_.size());
    for (const auto& r : rows_) {
        for (const auto& [idx, c] : r.expr.terms()) {
            if (idx < 0 || idx >= n) throw std::invalid_argument("Model: row '" + r.name + "' references unknown variable");
            if (!std::isfinite(c)) throw std::invalid_argument("Model: row '" + r.name + "' has a non-finite coefficient");
        }
        if (!std::isfinite(r.rhs)) throw std::invalid_argument("Model: row '" + r.name + "' has a non-finite rhs");
    }
    for (const auto& [idx, c] : objective_.terms()) {
        if (idx < 0 || idx >= n) throw std::invalid_argument("Model: objective references unknown variable");
    }
}

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::TimeLimit: return "time_limit";
        case SolveStatus::Error: return "error";
    }
    return "unknown";
}

namespace {

// LP format names must not start with a digit or contain spaces.
std::string lp_label(char prefix, std::size_t idx, const std::string& name) {
    std::string out = prefix + std::to_string(idx);
    if (!name.empty()) {
        out += '_';
        for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
    }
    return out;
}

std::string lp_name(const Model& model, int idx) {
    const auto i = static_cast<std::size_t>(idx);
    return lp_label('v', i, model.variables()[i].name);
}

void write_terms(const Model& model, const LinExpr& e, std::ostream& out) {
    for (const auto& [idx, c] : e.terms()) out << (c < 0 ? " - " : " + ") << std::abs(c) << ' ' << lp_name(model, idx);
    if (e.terms().empty()) out << " 0 " << lp_name(model, 0);
}

}  // namespace

void write_lp(const Model& model, std::ostream& out) {
    out.precision(17);
    out << (model.objective_sense() == ObjectiveSense::Minimize ? "Minimize\n" : "Maximize\n");
    out << " obj:";
    if (model.variables().empty()) {
        out << " 0\n";
    } else {
        write_terms(model, model.objective(), out);
        out << '\n';
    }
    out << "Subject To\n";
    std::size_t k = 0;
    for (const auto& r : model.constraints()) {
        out << ' ' << lp_label('c', k++, r.name) << ':';
        write_terms(model, r.expr, out);
        out << (r.sense == Sense::Le ? " <= " : r.sense == Sense::Ge ? " >= " : " = ") << r.rhs << '\n';
    }
    out << "Bounds\n";
    for (std::size_t i = 0; i < model.variables().size(); ++i) {
        const auto& v = model.variables()[i];
        out << ' ' << v.lb << " <= " << lp_name(model, static_cast<int>(i)) << " <= " << v.ub << '\n';
    }
    bool any_binary = false;
    for (std::size_t i = 0; i < model.variables().size(); ++i) {
        if (model.variables()[i].type != VarType::Binary) continue;
        if (!any_binary) out << "Binary\n";
        any_binary = true;
        out << ' ' << lp_name(model, static_cast<int>(i)) << '\n';
    }
    out << "End\n";
}

std::vector<std::size_t> big_m_boundary_hits(const Model& model, std::span<const double> values, double tol) {
    std::vector<std::size_t> hits;
    for (const auto& row : model.big_m_rows()) {
        const double b = values[static_cast<std::size_t>(row.binary.index)];
        const bool active = (b > 0.5) == row.active_value;
        if (active) continue;
        const auto& c = model.constraints()[row.constraint];
        const double lhs = c.expr.evaluate(values);
        // Row is stored with the binary term on the left; slack of the
        // relaxed row equals the remaining room below rhs.
        const double slack = c.sense == Sense::Ge ? lhs - c.rhs : c.rhs - lhs;
        if (slack <= tol) hits.push_back(row.constraint);
    }
    return hits;
}

}  // namespace flexgrid::milp
