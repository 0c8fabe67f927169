#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flexgrid/grid.hpp"
#include "flexgrid/encodings.hpp"
#include "flexgrid/milp.hpp"

namespace flexgrid {

/// Discrete recourse decision: which merge pair (if any) is closed. PST
/// shifts are not a free choice; they follow their law.
struct ControlChoice {
    std::optional<std::size_t> merged;
    friend bool operator==(const ControlChoice&, const ControlChoice&) = default;
};

std::string describe(const Grid& grid, const ControlChoice& choice);

/// How the recourse control enters a model.
struct ControlRole {
    enum class Kind { Base, Decision, Fixed };
    Kind kind = Kind::Base;
    ControlChoice fixed;

    static ControlRole base() { return {Kind::Base, {}}; }
    static ControlRole decision() { return {Kind::Decision, {}}; }
    static ControlRole given(ControlChoice c) { return {Kind::Fixed, c}; }
};

/// Inputs of one scenario block. Set-points and uncertain offsets are affine
/// expressions, so constants (fixed role) and decision variables share one path.
struct ScenarioInputs {
    std::vector<milp::LinExpr> setpoints;  // per generator, MW
    std::vector<milp::LinExpr> offsets;    // per node, MW, relative to injection0
    ControlRole control;
};

std::vector<milp::LinExpr> constant_exprs(const std::vector<double>& values);

/// Variables of one grid state inside a model.
struct GridVariables {
    std::vector<milp::Var> angle;                   // per node, rad
    std::vector<milp::Var> flow;                    // per edge, MW
    std::vector<std::optional<milp::Var>> shift;    // per edge, PST edges only
    std::vector<milp::Var> merge_flow;              // per merge pair, MW, node_a -> node_b
    std::vector<std::optional<milp::Var>> merge;    // per merge pair, absent when not free
    ControlChoice preset;                           // merge state when not free
    std::optional<milp::Var> redistribution;        // scalar demand increase seen by the clamp
    std::vector<milp::LinExpr> gen_offset;          // per generator, MW
    std::vector<milp::LinExpr> injection;           // per node, MW
};

/// Load-distribution response. Fills `redistribution`, `gen_offset`.
void add_redistribution(milp::Model& model, const Grid& grid, const ScenarioInputs& in, GridVariables& vars,
                        const std::string& prefix);

/// Injections, angles, flows and nodal balance. Requires add_redistribution.
void add_dc_physics(milp::Model& model, const Grid& grid, const ScenarioInputs& in, GridVariables& vars,
                    const std::string& prefix);

/// Five-regime phase-shifter law on one PST edge.
void add_pst_law(milp::Model& model, const Grid& grid, std::size_t edge, GridVariables& vars,
                 const std::string& prefix);

/// Merge coupler logic for every pair under the given role.
void add_merge_control(milp::Model& model, const Grid& grid, const ControlRole& role, GridVariables& vars,
                       const std::string& prefix);

/// Everything above, composed in order.
GridVariables add_scenario(milp::Model& model, const Grid& grid, const ScenarioInputs& in,
                           const std::string& prefix);

/// The affine terms +-P_e/limit - 1 whose maximum is the violation; a single
/// constant -1 when the grid has no critical edge.
std::vector<milp::LinExpr> violation_terms(const Grid& grid, const GridVariables& vars);

enum class ViolationEncoding {
    Exact,     // g equals the max at every feasible point
    Epigraph,  // g >= every term; exact when minimized
};

milp::Var add_violation(milp::Model& model, const Grid& grid, const GridVariables& vars, ViolationEncoding enc,
                        const std::string& prefix);

/// Rows for violation <= level, i.e. |P_e| <= limit (1 + level).
std::vector<milp::Row> violation_at_most(const Grid& grid, const GridVariables& vars, double level);

/// Extract the merge decision from a solved model.
ControlChoice read_control(const GridVariables& vars, const milp::SolveOutcome& out);

}  // namespace flexgrid
