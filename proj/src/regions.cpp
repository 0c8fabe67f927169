#include "flexgrid/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "flexgrid/encodings.hpp"

namespace flexgrid {

using milp::LinExpr;
using milp::Row;
using milp::Sense;

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::vector<double> forecast_or_zero(const Grid& grid) {
    if (grid.forecast.empty()) return std::vector<double>(grid.node_count(), 0.0);
    return grid.forecast;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

HyperboxRegion make_hyperbox(const Grid& grid, double host_cap) {
    HyperboxRegion r;
    r.y0 = forecast_or_zero(grid);
    for (const auto& n : grid.nodes) {
        r.delta_minus.push_back(n.dy_minus);
        r.delta_plus.push_back(n.dy_plus);
    }
    r.host_radius = uniqueness_bound(grid, r.delta_minus, r.delta_plus, host_cap);
    if (r.host_radius <= 0.0)
        throw std::invalid_argument("the forecast imbalance exceeds the generators' load-distribution capacity");
    return r;
}

TransferRegion make_transfer(const Grid& grid) {
    const auto a = grid.regions.find("A");
    const auto b = grid.regions.find("B");
    if (a == grid.regions.end() || b == grid.regions.end())
        throw std::invalid_argument("transfer region needs node sets \"A\" and \"B\" in the case file");
    TransferRegion r;
    r.region_a = a->second;
    r.region_b = b->second;
    for (std::size_t g = 0; g < grid.generator_count(); ++g) {
        const auto node = grid.generators[g].node;
        if (std::ranges::find(r.region_a, node) != r.region_a.end()) r.gens_a.push_back(g);
        if (std::ranges::find(r.region_b, node) != r.region_b.end()) r.gens_b.push_back(g);
    }
    r.y0 = forecast_or_zero(grid);
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        r.y_lo.push_back(r.y0[n] - grid.nodes[n].dy_minus);
        r.y_hi.push_back(r.y0[n] + grid.nodes[n].dy_plus);
    }
    const double base = grid.total_injection0();
    const double lo = base + std::accumulate(r.y_lo.begin(), r.y_lo.end(), 0.0);
    const double hi = base + std::accumulate(r.y_hi.begin(), r.y_hi.end(), 0.0);
    if (lo < -grid.total_x_max() - 1e-9 || hi > -grid.total_x_min() + 1e-9)
        throw std::invalid_argument("transfer host box exceeds the generators' load-distribution capacity");
    return r;
}

double h_box(const HyperboxRegion& region, std::span<const double> y) {
    double h = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n) {
        const double d = y[n] - region.y0[n];
        if (d > 0.0) {
            if (region.delta_plus[n] > 0.0) {
                h = std::max(h, d / region.delta_plus[n]);
            } else if (d > 1e-12) {
                return kInfinity;
            }
        } else if (d < 0.0) {
            if (region.delta_minus[n] > 0.0) {
                h = std::max(h, -d / region.delta_minus[n]);
            } else if (d < -1e-12) {
                return kInfinity;
            }
        }
    }
    return h;
}

std::vector<double> redistribution_offsets(const Grid& grid, std::span<const double> setpoints, double demand) {
    const auto shifted = [&](double t) {
        double s = 0.0;
        for (std::size_t g = 0; g < grid.generator_count(); ++g) {
            const auto& gen = grid.generators[g];
            s += std::clamp(setpoints[g] + gen.contribution * t, gen.x_min, gen.x_max) - setpoints[g];
        }
        return s;
    };
    double reach = 1.0;
    for (const auto& g : grid.generators)
        if (g.contribution > 0.0) reach = std::max(reach, 2.0 * (g.x_max - g.x_min) / g.contribution);
    double lo = -reach, hi = reach;
    if (demand < shifted(lo) - 1e-9 || demand > shifted(hi) + 1e-9)
        throw std::domain_error("load distribution cannot cover a demand change of " + std::to_string(demand) + " MW");
    for (int i = 0; i < 200 && hi - lo > 1e-14 * reach; ++i) {
        const double mid = 0.5 * (lo + hi);
        (shifted(mid) < demand ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    std::vector<double> out;
    for (std::size_t g = 0; g < grid.generator_count(); ++g) {
        const auto& gen = grid.generators[g];
        out.push_back(std::clamp(setpoints[g] + gen.contribution * t, gen.x_min, gen.x_max) - setpoints[g]);
    }
    return out;
}

double h_transfer(const TransferRegion& region, const Grid& grid, std::span<const double> setpoints,
                  std::span<const double> y) {
    const double demand = -std::accumulate(y.begin(), y.end(), 0.0);
    const auto dz = redistribution_offsets(grid, setpoints, demand);
    double up = 0.0, down = 0.0;
    for (auto n : region.region_a) up += y[n];
    for (auto g : region.gens_a) up += dz[g];
    for (auto n : region.region_b) down -= y[n];
    for (auto g : region.gens_b) down -= dz[g];
    return std::min(up, down);
}

double region_h(const Region& region, const Grid& grid, std::span<const double> setpoints,
                std::span<const double> y) {
    return std::visit(overloaded{[&](const HyperboxRegion& r) { return h_box(r, y); },
                                 [&](const TransferRegion& r) { return h_transfer(r, grid, setpoints, y); }},
                      region);
}

double scenario_value(const Region& region, double alpha, double delta, double h, double violation) {
    double v = std::min(alpha * (delta - h), violation);
    if (!is_box(region)) v = std::min(v, alpha * h);
    return v;
}

std::vector<double> host_lower(const Region& region) {
    return std::visit(overloaded{[](const HyperboxRegion& r) {
                                     std::vector<double> lo;
                                     for (std::size_t n = 0; n < r.y0.size(); ++n)
                                         lo.push_back(r.y0[n] - r.delta_minus[n] * r.host_radius);
                                     return lo;
                                 },
                                 [](const TransferRegion& r) { return r.y_lo; }},
                      region);
}

std::vector<double> host_upper(const Region& region) {
    return std::visit(overloaded{[](const HyperboxRegion& r) {
                                     std::vector<double> hi;
                                     for (std::size_t n = 0; n < r.y0.size(); ++n)
                                         hi.push_back(r.y0[n] + r.delta_plus[n] * r.host_radius);
                                     return hi;
                                 },
                                 [](const TransferRegion& r) { return r.y_hi; }},
                      region);
}

std::vector<double> forecast(const Region& region) {
    return std::visit([](const auto& r) { return r.y0; }, region);
}

double delta_ceiling(const Region& region) {
    return std::visit(overloaded{[](const HyperboxRegion& r) { return r.host_radius; },
                                 [](const TransferRegion& r) { return r.delta_cap; }},
                      region);
}

bool is_box(const Region& region) { return std::holds_alternative<HyperboxRegion>(region); }

RegionPieces region_pieces(const Region& region, const std::vector<LinExpr>& offsets, const GridVariables& vars) {
    RegionPieces out;
    if (const auto* box = std::get_if<HyperboxRegion>(&region)) {
        out.is_max = true;
        const bool fixed = std::ranges::all_of(offsets, [](const LinExpr& e) { return e.is_constant(); });
        if (fixed) {
            std::vector<double> y;
            for (const auto& e : offsets) y.push_back(e.constant());
            out.pieces.emplace_back(h_box(*box, y));
            return out;
        }
        out.pieces.emplace_back(0.0);
        for (std::size_t n = 0; n < offsets.size(); ++n) {
            if (box->delta_plus[n] > 0.0) out.pieces.push_back((offsets[n] - box->y0[n]) * (1.0 / box->delta_plus[n]));
            if (box->delta_minus[n] > 0.0)
                out.pieces.push_back((LinExpr(box->y0[n]) - offsets[n]) * (1.0 / box->delta_minus[n]));
        }
        return out;
    }
    const auto& tr = std::get<TransferRegion>(region);
    out.is_max = false;
    LinExpr up, down;
    for (auto n : tr.region_a) up += offsets[n];
    for (auto g : tr.gens_a) up += vars.gen_offset.at(g);
    for (auto n : tr.region_b) down -= offsets[n];
    for (auto g : tr.gens_b) down -= vars.gen_offset.at(g);
    out.pieces = {up, down};
    return out;
}

std::vector<std::vector<Row>> scenario_alternatives(const Region& region, double alpha, const LinExpr& delta,
                                                    const RegionPieces& h, const std::vector<LinExpr>& violation,
                                                    double level) {
    std::vector<std::vector<Row>> alts;
    const double slack = level / alpha;
    for (const auto& p : h.pieces)
        if (p.is_constant() && !std::isfinite(p.constant())) return {};  // outside every region
    // alpha (delta - h) <= level  <=>  h >= delta - level/alpha
    if (h.is_max) {
        for (const auto& p : h.pieces) alts.push_back({Row{delta - p, Sense::Le, slack}});
    } else {
        std::vector<Row> all;
        for (const auto& p : h.pieces) all.push_back({delta - p, Sense::Le, slack});
        alts.push_back(std::move(all));
    }
    if (!is_box(region)) {
        // alpha h <= level, h = min of pieces
        for (const auto& p : h.pieces) alts.push_back({Row{p, Sense::Le, slack}});
    }
    std::vector<Row> lines;
    for (const auto& t : violation) lines.push_back({t, Sense::Le, level});
    alts.push_back(std::move(lines));

    // Drop alternatives that are constant and false; keep constant-true ones
    // as a shortcut that makes the whole constraint redundant.
    std::vector<std::vector<Row>> live;
    for (auto& alt : alts) {
        bool constant = true, holds = true;
        for (const auto& r : alt) {
            if (!r.expr.is_constant()) {
                constant = false;
                break;
            }
            const double v = r.expr.constant();
            holds = holds && (r.sense == Sense::Le ? v <= r.rhs : r.sense == Sense::Ge ? v >= r.rhs : v == r.rhs);
        }
        if (constant && holds) return {};
        if (!constant) live.push_back(std::move(alt));
    }
    if (live.empty()) throw std::invalid_argument("scenario constraint is infeasible for every decision");
    return live;
}

double transfer_max(const Grid& grid, const TransferRegion& region, bool respect_limits,
                    const milp::SolveOptions& options) {
    milp::Model model;
    ScenarioInputs in;
    LinExpr balance;
    for (const auto& g : grid.generators) {
        const auto x = model.add_continuous(g.x_min, g.x_max, "x_" + g.id);
        in.setpoints.emplace_back(x);
        balance.add(x, 1.0);
    }
    model.add_constraint(balance, Sense::Eq, grid.required_setpoint_sum(), "balance");
    for (std::size_t n = 0; n < grid.node_count(); ++n)
        in.offsets.emplace_back(model.add_continuous(region.y_lo[n], region.y_hi[n], "y_" + grid.nodes[n].id));
    in.control = ControlRole::decision();
    GridVariables vars;
    if (respect_limits) {
        vars = add_scenario(model, grid, in, "s_");
        for (const auto& row : violation_at_most(grid, vars, 0.0)) model.add_constraint(row.expr, row.sense, row.rhs);
    } else {
        add_redistribution(model, grid, in, vars, "s_");
    }
    const auto pieces = region_pieces(Region{region}, in.offsets, vars);
    double hi = kInfinity;
    for (const auto& p : pieces.pieces) hi = std::min(hi, model.bounds(p).hi);
    double lo = -kInfinity;
    for (const auto& p : pieces.pieces) lo = std::max(lo, model.bounds(p).lo);
    const auto w = model.add_continuous(std::min(lo, hi), hi, "transfer");
    for (const auto& p : pieces.pieces) model.add_constraint(LinExpr(w) - p, Sense::Le, 0.0);
    model.maximize(w);
    auto opts = options;
    opts.label = respect_limits ? "transfer_norm" : "transfer_cap";
    const auto out = milp::solve(model, opts);
    if (out.status == milp::SolveStatus::Infeasible) return 0.0;
    if (!out.optimal()) throw std::runtime_error("transfer bound MILP failed: " + std::string(to_string(out.status)));
    return out.objective;
}

double transfer_limits(const Grid& grid, TransferRegion& region, const milp::SolveOptions& options) {
    region.delta_cap = std::max(0.0, transfer_max(grid, region, false, options));
    const double norm = transfer_max(grid, region, true, options);
    return norm > 1e-9 ? norm : 1.0;
}

}  // namespace flexgrid
