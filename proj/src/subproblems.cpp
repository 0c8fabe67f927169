#include "flexgrid/subproblems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "flexgrid/encodings.hpp"

namespace flexgrid {

using milp::LinExpr;
using milp::Model;
using milp::Sense;
using milp::SolveStatus;
using milp::Var;

namespace {

constexpr double kUnmanageable = 1e-7;  // inner violation above this is a real overload

std::vector<LinExpr> constants(std::span<const double> v) { return {v.begin(), v.end()}; }

InnerMinResult solve_single(const Grid& grid, std::span<const double> x, std::span<const double> y,
                            const ControlRole& role, const milp::SolveOptions& options) {
    if (x.size() != grid.generator_count() || y.size() != grid.node_count())
        throw std::invalid_argument("inner_min: vector sizes do not match the grid");
    Model model;
    ScenarioInputs in{constants(x), constants(y), role};
    const auto vars = add_scenario(model, grid, in, "");
    const Var g = add_violation(model, grid, vars, ViolationEncoding::Epigraph, "");
    model.minimize(g);
    auto opts = options;
    opts.label = "inner";
    const auto out = milp::solve(model, opts);
    if (out.status == SolveStatus::Infeasible)
        throw std::domain_error("load distribution cannot absorb this scenario");
    if (!out.optimal()) throw std::runtime_error(std::string("inner minimization failed: ") + to_string(out.status) + " (" + out.message + ")");
    InnerMinResult r;
    r.g_star = out.value(g);
    r.z_star = read_control(vars, out);
    for (std::size_t e = 0; e < grid.edge_count(); ++e) {
        r.flows.push_back(out.value(vars.flow[e]));
        r.shifts.push_back(vars.shift[e] ? out.value(*vars.shift[e]) : 0.0);
    }
    for (const auto& dz : vars.gen_offset) r.gen_offsets.push_back(out.value(dz));
    return r;
}

// A model with the scenario as decision and one physics copy per pooled
// control; the redistribution is shared since it does not depend on z.
struct PooledModel {
    Model model;
    std::vector<LinExpr> y;
    std::vector<GridVariables> blocks;
};

PooledModel build_pooled(const Grid& grid, const Region& region, std::span<const double> x,
                         const std::vector<ControlChoice>& pool) {
    PooledModel pm;
    const auto lo = host_lower(region);
    const auto hi = host_upper(region);
    for (std::size_t n = 0; n < grid.node_count(); ++n)
        pm.y.emplace_back(pm.model.add_continuous(lo[n], hi[n], "y_" + grid.nodes[n].id));
    ScenarioInputs in{constants(x), pm.y, ControlRole::base()};
    GridVariables shared;
    add_redistribution(pm.model, grid, in, shared, "r_");
    for (std::size_t k = 0; k < pool.size(); ++k) {
        GridVariables v;
        v.redistribution = shared.redistribution;
        v.gen_offset = shared.gen_offset;
        const std::string prefix = "k" + std::to_string(k) + "_";
        add_dc_physics(pm.model, grid, in, v, prefix);
        for (std::size_t e : grid.pst_edges()) add_pst_law(pm.model, grid, e, v, prefix);
        add_merge_control(pm.model, grid, ControlRole::given(pool[k]), v, prefix);
        pm.blocks.push_back(std::move(v));
    }
    return pm;
}

std::vector<double> values_of(const std::vector<LinExpr>& exprs, const milp::SolveOutcome& out) {
    std::vector<double> v;
    for (const auto& e : exprs) v.push_back(out.value(e));
    return v;
}

bool contains(const std::vector<ControlChoice>& pool, const ControlChoice& c) {
    return std::ranges::find(pool, c) != pool.end();
}

double piece_span(const Model& model, const RegionPieces& pieces) {
    double s = 0.0;
    for (const auto& p : pieces.pieces) {
        const auto r = model.bounds(p);
        s = std::max({s, std::abs(r.lo), std::abs(r.hi)});
    }
    return s;
}

}  // namespace

InnerMinResult inner_min(const Grid& grid, std::span<const double> setpoints, std::span<const double> y,
                         const milp::SolveOptions& options) {
    return solve_single(grid, setpoints, y, ControlRole::decision(), options);
}

InnerMinResult evaluate_control(const Grid& grid, std::span<const double> setpoints, std::span<const double> y,
                                const ControlChoice& control, const milp::SolveOptions& options) {
    return solve_single(grid, setpoints, y, ControlRole::given(control), options);
}

WorstCaseOutcome worst_case(const Grid& grid, const Region& region, std::span<const double> setpoints, double delta,
                            double alpha, std::vector<ControlChoice>& pool, const WorstCaseOptions& options) {
    if (pool.empty()) pool.push_back(ControlChoice{});
    WorstCaseOutcome wc;
    wc.value = -std::numeric_limits<double>::infinity();
    wc.upper = std::numeric_limits<double>::infinity();

    for (wc.rounds = 1; wc.rounds <= options.max_rounds; ++wc.rounds) {
        auto pm = build_pooled(grid, region, setpoints, pool);
        auto& model = pm.model;
        const auto pieces = region_pieces(region, pm.y, pm.blocks.front());
        const double reach = piece_span(model, pieces);
        const double top = alpha * std::max(delta, 0.0) + 1.0;
        const Var m = model.add_continuous(-2.0 - alpha * (reach + std::abs(delta)), top, "value");

        // m <= alpha (delta - h)
        if (pieces.is_max) {
            for (const auto& p : pieces.pieces)
                model.add_constraint(LinExpr(m) + p * alpha, Sense::Le, alpha * delta, "region");
        } else {
            std::vector<LinExpr> terms;
            for (const auto& p : pieces.pieces) terms.push_back(LinExpr(alpha * delta) - p * alpha);
            milp::add_le_max(model, LinExpr(m), terms, "region");
            for (const auto& p : pieces.pieces) model.add_constraint(LinExpr(m) - p * alpha, Sense::Le, 0.0, "reverse");
        }
        for (std::size_t k = 0; k < pm.blocks.size(); ++k)
            milp::add_le_max(model, LinExpr(m), violation_terms(grid, pm.blocks[k]), "pool" + std::to_string(k));
        model.maximize(m);

        auto opts = options.milp;
        opts.label = "worst_case";
        const auto out = milp::solve(model, opts);
        if (out.status == SolveStatus::TimeLimit) {
            wc.timed_out = true;
            return wc;
        }
        if (!out.optimal()) throw std::runtime_error(std::string("worst-case outer problem: ") + to_string(out.status));
        // The polished objective is exact for the chosen binaries; the MIP tolerances
        // are far below the feasibility threshold.
        wc.upper = std::min(wc.upper, out.objective);
        const auto y = values_of(pm.y, out);

        const auto inner = inner_min(grid, setpoints, y, options.milp);
        const double h = region_h(region, grid, setpoints, y);
        const double value = scenario_value(region, alpha, delta, h, inner.g_star);
        if (value > wc.value || wc.y_star.empty()) {
            wc.value = value;
            wc.y_star = y;
        }
        const bool known = contains(pool, inner.z_star);
        if (!known) pool.push_back(inner.z_star);
        if (wc.upper - wc.value <= options.tol || wc.upper <= 0.0 || known) {
            wc.certified = true;
            break;
        }
    }
    wc.pool = pool;
    wc.rounds = std::min(wc.rounds, options.max_rounds);
    return wc;
}

AuxiliaryResult evaluate_flexibility_at(const Grid& grid, const Region& region, std::span<const double> setpoints,
                                        double alpha, const AuxiliaryOptions& options) {
    AuxiliaryResult res;
    const double ceiling = delta_ceiling(region);
    res.upper = ceiling;
    std::vector<ControlChoice> pool{ControlChoice{}};
    double eps = options.eps0;
    double lower = 0.0;
    std::vector<double> y_lower;

    struct Master {
        SolveStatus status;
        double bound = 0.0;
        std::vector<double> y;
    };
    const auto master = [&](double restriction) {
        auto pm = build_pooled(grid, region, setpoints, pool);
        auto& model = pm.model;
        const auto pieces = region_pieces(region, pm.y, pm.blocks.front());
        Var h;
        if (pieces.is_max) {
            h = model.add_continuous(0.0, ceiling + 1.0, "h");
            for (const auto& p : pieces.pieces) model.add_constraint(LinExpr(h) - p, Sense::Ge, 0.0, "h_ge");
        } else {
            h = milp::encode_min(model, pieces.pieces, "h");
            // reverse transfers are always manageable
            for (const auto& p : pieces.pieces) model.add_constraint(p * alpha, Sense::Ge, restriction, "forward");
        }
        for (std::size_t k = 0; k < pm.blocks.size(); ++k)
            milp::add_le_max(model, LinExpr(restriction), violation_terms(grid, pm.blocks[k]), "pool" + std::to_string(k));
        model.minimize(h);
        auto opts = options.milp;
        opts.label = "auxiliary";
        const auto out = milp::solve(model, opts);
        Master r{out.status, 0.0, {}};
        if (out.status == SolveStatus::Optimal) {
            r.bound = std::min(out.objective, out.bound);
            r.y = values_of(pm.y, out);
        }
        return r;
    };
    // Returns true when y is a verified unmanageable scenario.
    const auto check = [&](const std::vector<double>& y, bool& grew) {
        const auto inner = inner_min(grid, setpoints, y, options.milp);
        if (inner.g_star > kUnmanageable) {
            const double h = region_h(region, grid, setpoints, y);
            if (h < res.upper) {
                res.upper = h;
                res.y_witness = y;
                res.witness_unmanageable = true;
            }
            return true;
        }
        if (!contains(pool, inner.z_star)) {
            pool.push_back(inner.z_star);
            grew = true;
        }
        return false;
    };
    const auto done = [&] { return res.upper - lower <= options.tol * res.upper; };

    for (res.rounds = 1; res.rounds <= options.max_rounds; ++res.rounds) {
        bool grew = false;
        const auto lb = master(0.0);
        if (lb.status == SolveStatus::TimeLimit) {
            res.timed_out = true;
            break;
        }
        if (lb.status == SolveStatus::Infeasible) {
            // every scenario of the host set has a rescuing control
            lower = ceiling;
            res.upper = ceiling;
            res.converged = true;
            break;
        }
        if (lb.status != SolveStatus::Optimal) throw std::runtime_error("auxiliary lower master failed");
        lower = std::clamp(lb.bound, lower, ceiling);
        y_lower = lb.y;
        check(lb.y, grew);
        if (done()) {
            res.converged = true;
            break;
        }

        const auto ub = master(eps);
        if (ub.status == SolveStatus::TimeLimit) {
            res.timed_out = true;
            break;
        }
        const double eps_before = eps;
        const double upper_before = res.upper;
        if (ub.status == SolveStatus::Optimal) {
            const bool unmanageable = check(ub.y, grew);
            if (unmanageable || !grew) eps = std::max(options.eps_floor, eps / options.reduction);
        } else if (ub.status == SolveStatus::Infeasible) {
            eps = std::max(options.eps_floor, eps / options.reduction);
        } else {
            throw std::runtime_error("auxiliary upper master failed");
        }
        if (done()) {
            res.converged = true;
            break;
        }
        if (!grew && eps == eps_before && res.upper == upper_before) {
            // restriction at its floor and no new control: the lower value stands
            res.converged = true;
            break;
        }
    }
    res.delta_wc_relax = std::min(lower, ceiling);
    if (!res.witness_unmanageable) res.y_witness = y_lower;
    res.rounds = std::min(res.rounds, options.max_rounds);
    return res;
}

}  // namespace flexgrid
