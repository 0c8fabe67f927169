#pragma once

#include <span>
#include <string>
#include <vector>

#include "flexgrid/milp.hpp"

// Mixed-integer encodings of small nonlinear building blocks. Every big-M is
// computed from the variable bounds reachable by the expressions involved.
namespace flexgrid::milp {

struct Row {
    LinExpr expr;
    Sense sense = Sense::Le;
    double rhs = 0.0;
};

/// Enforce `expr sense rhs` whenever `binary == active_value`.
/// Rows that already hold over the whole variable box are skipped.
void add_implied(Model& model, Var binary, bool active_value, const Row& row, const std::string& name = {});

/// a = |expr|, with `bound` >= max |expr| over the feasible box.
Var encode_abs(Model& model, const LinExpr& expr, double bound, const std::string& name = {});
Var encode_abs(Model& model, const LinExpr& expr, const std::string& name = {});

/// m = min{a, b} (single selector binary).
Var encode_min2(Model& model, const LinExpr& a, const LinExpr& b, const std::string& name = {});

/// m = max over terms / min over terms (one selector binary per term).
Var encode_max(Model& model, std::span<const LinExpr> terms, const std::string& name = {});
Var encode_min(Model& model, std::span<const LinExpr> terms, const std::string& name = {});

/// c = mid(lo, input, hi) with two regime binaries.
Var encode_clamp(Model& model, const LinExpr& input, double lo, double hi, const std::string& name = {});

/// At least one alternative (a conjunction of rows) holds. Returns one
/// selector per alternative; a single alternative is added unconditionally.
std::vector<Var> add_disjunction(Model& model, const std::vector<std::vector<Row>>& alternatives,
                                 const std::string& name = {});

/// lhs <= max over terms, exact from below.
void add_le_max(Model& model, const LinExpr& lhs, std::span<const LinExpr> terms, const std::string& name = {});

}  // namespace flexgrid::milp
