#include "flexgrid/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flexgrid/encodings.hpp"

namespace flexgrid {

using milp::LinExpr;
using milp::Model;
using milp::Row;
using milp::Sense;
using milp::Var;

std::string describe(const Grid& grid, const ControlChoice& choice) {
    if (!choice.merged) return "none";
    return grid.merge_pairs.at(*choice.merged).id;
}

std::vector<LinExpr> constant_exprs(const std::vector<double>& values) {
    return {values.begin(), values.end()};
}

namespace {

std::string tag(const std::string& prefix, const std::string& what) { return prefix + what; }

void check_inputs(const Grid& grid, const ScenarioInputs& in) {
    if (in.setpoints.size() != grid.generator_count())
        throw std::invalid_argument("scenario: expected " + std::to_string(grid.generator_count()) + " set-points");
    if (in.offsets.size() != grid.node_count())
        throw std::invalid_argument("scenario: expected " + std::to_string(grid.node_count()) + " offsets");
}

}  // namespace

void add_redistribution(Model& model, const Grid& grid, const ScenarioInputs& in, GridVariables& vars,
                        const std::string& prefix) {
    check_inputs(grid, in);
    LinExpr demand;  // power the generators must make up for
    for (const auto& y : in.offsets) demand -= y;

    // Beyond this range every responsive generator is saturated.
    double reach = 0.0;
    for (const auto& g : grid.generators)
        if (g.contribution > 0.0) reach = std::max(reach, (g.x_max - g.x_min) / g.contribution);
    reach = reach * 1.01 + 1.0;
    const Var t = model.add_continuous(-reach, reach, tag(prefix, "dist"));
    vars.redistribution = t;

    vars.gen_offset.clear();
    LinExpr total;
    for (std::size_t k = 0; k < grid.generator_count(); ++k) {
        const auto& g = grid.generators[k];
        if (g.contribution <= 0.0) {
            vars.gen_offset.emplace_back(0.0);
            continue;
        }
        LinExpr response = in.setpoints[k];
        response.add(t, g.contribution);
        const Var out = milp::encode_clamp(model, response, g.x_min, g.x_max, tag(prefix, "out_" + g.id));
        LinExpr offset = LinExpr(out) - in.setpoints[k];
        total += offset;
        vars.gen_offset.push_back(offset);
    }
    model.add_constraint(total - demand, Sense::Eq, 0.0, tag(prefix, "dist_sum"));
}

void add_dc_physics(Model& model, const Grid& grid, const ScenarioInputs& in, GridVariables& vars,
                    const std::string& prefix) {
    check_inputs(grid, in);
    const double a = grid.angle_bound;

    vars.injection.assign(grid.node_count(), LinExpr{});
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        vars.injection[n] = LinExpr(grid.nodes[n].injection0) + in.offsets[n];
    }
    for (std::size_t k = 0; k < grid.generator_count(); ++k) {
        const auto node = grid.generators[k].node;
        vars.injection[node] += in.setpoints[k];
        vars.injection[node] += vars.gen_offset.at(k);
    }

    vars.angle.clear();
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        const bool ref = n == grid.reference_node;
        vars.angle.push_back(model.add_continuous(ref ? 0.0 : -a, ref ? 0.0 : a, tag(prefix, "th_" + grid.nodes[n].id)));
    }

    vars.flow.clear();
    vars.shift.assign(grid.edge_count(), std::nullopt);
    for (std::size_t e = 0; e < grid.edge_count(); ++e) {
        const auto& edge = grid.edges[e];
        double reach = 2.0 * a;
        if (edge.pst) {
            vars.shift[e] = model.add_continuous(edge.pst->shift_min, edge.pst->shift_max, tag(prefix, "sh_" + edge.id));
            reach += std::max(-edge.pst->shift_min, edge.pst->shift_max);
        }
        const double cap = edge.susceptance * reach;
        const Var p = model.add_continuous(-cap, cap, tag(prefix, "P_" + edge.id));
        vars.flow.push_back(p);
        LinExpr law = LinExpr(p);
        law.add(vars.angle[edge.from], -edge.susceptance);
        law.add(vars.angle[edge.to], edge.susceptance);
        if (vars.shift[e]) law.add(*vars.shift[e], -edge.susceptance);
        model.add_constraint(law, Sense::Eq, 0.0, tag(prefix, "dc_" + edge.id));
    }

    // A coupler can carry at most the total injected power.
    double coupler_cap = 0.0;
    for (const auto& inj : vars.injection) {
        const auto r = model.bounds(inj);
        coupler_cap += std::max(std::abs(r.lo), std::abs(r.hi));
    }
    coupler_cap = coupler_cap * 1.01 + 1.0;
    vars.merge_flow.clear();
    for (const auto& pair : grid.merge_pairs)
        vars.merge_flow.push_back(model.add_continuous(-coupler_cap, coupler_cap, tag(prefix, "F_" + pair.id)));

    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        LinExpr net;
        for (std::size_t e = 0; e < grid.edge_count(); ++e) {
            if (grid.edges[e].from == n) net.add(vars.flow[e], 1.0);
            if (grid.edges[e].to == n) net.add(vars.flow[e], -1.0);
        }
        for (std::size_t b = 0; b < grid.merge_pairs.size(); ++b) {
            if (grid.merge_pairs[b].node_a == n) net.add(vars.merge_flow[b], 1.0);
            if (grid.merge_pairs[b].node_b == n) net.add(vars.merge_flow[b], -1.0);
        }
        model.add_constraint(net - vars.injection[n], Sense::Eq, 0.0, tag(prefix, "bal_" + grid.nodes[n].id));
    }
}

void add_pst_law(Model& model, const Grid& grid, std::size_t edge, GridVariables& vars, const std::string& prefix) {
    const auto& e = grid.edges.at(edge);
    if (!e.pst || !vars.shift[edge]) throw std::invalid_argument("add_pst_law: edge '" + e.id + "' has no PST");
    const double h = e.susceptance;
    const double lim = e.pst->threshold;
    const double lo = e.pst->shift_min;
    const double hi = e.pst->shift_max;
    const Var shift = *vars.shift[edge];
    const Var flow = vars.flow[edge];
    LinExpr u;  // flow the line would carry without the shifter
    u.add(vars.angle[e.from], h);
    u.add(vars.angle[e.to], -h);

    const std::string base = tag(prefix, "pst_" + e.id);
    struct Regime {
        const char* name;
        std::vector<Row> rows;
    };
    const std::vector<Regime> regimes{
        {"_wait", {{LinExpr(shift), Sense::Eq, 0.0}, {u, Sense::Le, lim}, {u, Sense::Ge, -lim}}},
        {"_holdhi", {{LinExpr(flow), Sense::Eq, lim}, {u, Sense::Ge, lim}, {u, Sense::Le, lim - h * lo}}},
        {"_sathi", {{LinExpr(shift), Sense::Eq, lo}, {u, Sense::Ge, lim - h * lo}}},
        {"_holdlo", {{LinExpr(flow), Sense::Eq, -lim}, {u, Sense::Le, -lim}, {u, Sense::Ge, -lim - h * hi}}},
        {"_satlo", {{LinExpr(shift), Sense::Eq, hi}, {u, Sense::Le, -lim - h * hi}}},
    };
    LinExpr one;
    for (const auto& r : regimes) {
        const Var b = model.add_binary(base + r.name);
        one.add(b, 1.0);
        for (const auto& row : r.rows) milp::add_implied(model, b, true, row, base + r.name);
    }
    model.add_constraint(one, Sense::Eq, 1.0, base + "_one");
}

void add_merge_control(Model& model, const Grid& grid, const ControlRole& role, GridVariables& vars,
                       const std::string& prefix) {
    vars.merge.assign(grid.merge_pairs.size(), std::nullopt);
    vars.preset = role.kind == ControlRole::Kind::Fixed ? role.fixed : ControlChoice{};
    if (vars.preset.merged && *vars.preset.merged >= grid.merge_pairs.size())
        throw std::invalid_argument("add_merge_control: merge index out of range");

    LinExpr closed;
    for (std::size_t b = 0; b < grid.merge_pairs.size(); ++b) {
        const auto& pair = grid.merge_pairs[b];
        const Var f = vars.merge_flow[b];
        LinExpr gap = LinExpr(vars.angle[pair.node_a]) - LinExpr(vars.angle[pair.node_b]);
        const std::string name = tag(prefix, "mg_" + pair.id);
        if (role.kind != ControlRole::Kind::Decision) {
            if (vars.preset.merged == b) {
                model.add_constraint(gap, Sense::Eq, 0.0, name);
            } else {
                model.fix(f, 0.0);
            }
            continue;
        }
        const Var p = model.add_binary(name);
        vars.merge[b] = p;
        closed.add(p, 1.0);
        milp::add_implied(model, p, false, {LinExpr(f), Sense::Eq, 0.0}, name + "_open");
        milp::add_implied(model, p, true, {gap, Sense::Eq, 0.0}, name + "_shut");
    }
    if (!closed.is_constant()) model.add_constraint(closed, Sense::Le, 1.0, tag(prefix, "mg_one"));
}

GridVariables add_scenario(Model& model, const Grid& grid, const ScenarioInputs& in, const std::string& prefix) {
    GridVariables vars;
    add_redistribution(model, grid, in, vars, prefix);
    add_dc_physics(model, grid, in, vars, prefix);
    for (std::size_t e : grid.pst_edges()) add_pst_law(model, grid, e, vars, prefix);
    add_merge_control(model, grid, in.control, vars, prefix);
    return vars;
}

std::vector<LinExpr> violation_terms(const Grid& grid, const GridVariables& vars) {
    std::vector<LinExpr> terms;
    for (std::size_t e : grid.critical_edges()) {
        const double lim = *grid.edges[e].limit;
        terms.push_back(LinExpr(vars.flow[e], 1.0 / lim) - 1.0);
        terms.push_back(LinExpr(vars.flow[e], -1.0 / lim) - 1.0);
    }
    if (terms.empty()) terms.emplace_back(-1.0);  // nothing can overload
    return terms;
}

Var add_violation(Model& model, const Grid& grid, const GridVariables& vars, ViolationEncoding enc,
                  const std::string& prefix) {
    const auto terms = violation_terms(grid, vars);
    if (enc == ViolationEncoding::Exact) return milp::encode_max(model, terms, tag(prefix, "viol"));
    double hi = -1.0;
    for (const auto& t : terms) hi = std::max(hi, model.bounds(t).hi);
    const Var g = model.add_continuous(-1.0, hi, tag(prefix, "viol"));
    for (const auto& t : terms) model.add_constraint(LinExpr(g) - t, Sense::Ge, 0.0, tag(prefix, "viol_ge"));
    return g;
}

std::vector<Row> violation_at_most(const Grid& grid, const GridVariables& vars, double level) {
    std::vector<Row> rows;
    for (const auto& t : violation_terms(grid, vars)) rows.push_back({t, Sense::Le, level});
    return rows;
}

ControlChoice read_control(const GridVariables& vars, const milp::SolveOutcome& out) {
    ControlChoice c = vars.preset;
    for (std::size_t b = 0; b < vars.merge.size(); ++b) {
        if (vars.merge[b] && out.value(*vars.merge[b]) > 0.5) c.merged = b;
    }
    return c;
}

}  // namespace flexgrid
