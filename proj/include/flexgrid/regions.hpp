#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flexgrid/formulation.hpp"
#include "flexgrid/grid.hpp"
#include "flexgrid/milp.hpp"

namespace flexgrid {

/// Box [y0 - dminus*delta, y0 + dplus*delta] around the forecast offsets.
struct HyperboxRegion {
    std::vector<double> y0;
    std::vector<double> delta_minus;
    std::vector<double> delta_plus;
    double host_radius = 0.0;
};

/// Net transfer from node set A to node set B inside a fixed host box.
struct TransferRegion {
    std::vector<std::size_t> region_a;
    std::vector<std::size_t> region_b;
    std::vector<std::size_t> gens_a;
    std::vector<std::size_t> gens_b;
    std::vector<double> y_lo;
    std::vector<double> y_hi;
    std::vector<double> y0;
    /// No point of the host box transfers more than this.
    double delta_cap = 0.0;
};

using Region = std::variant<HyperboxRegion, TransferRegion>;

struct AlphaScaling {
    double alpha_prime = 0.5;
    double delta_norm = 1.0;
    double alpha() const { return alpha_prime / delta_norm; }
};

/// Hyperbox from the per-node half-widths and forecast of a grid. Throws
/// std::invalid_argument when even the forecast cannot be balanced.
HyperboxRegion make_hyperbox(const Grid& grid, double host_cap);

/// Transfer region over the grid's "A" and "B" node sets; the host box is the
/// per-node uncertainty range. `delta_cap` is left for transfer_limits().
TransferRegion make_transfer(const Grid& grid);

double h_box(const HyperboxRegion& region, std::span<const double> y);

/// Generator offsets induced by a total demand increase (closed form).
std::vector<double> redistribution_offsets(const Grid& grid, std::span<const double> setpoints, double demand);

double h_transfer(const TransferRegion& region, const Grid& grid, std::span<const double> setpoints,
                  std::span<const double> y);

double region_h(const Region& region, const Grid& grid, std::span<const double> setpoints,
                std::span<const double> y);

/// Value of the scenario constraint, the quantity that must be <= 0.
/// Transfer regions exempt reverse transfers (h <= 0).
double scenario_value(const Region& region, double alpha, double delta, double h, double violation);

std::vector<double> host_lower(const Region& region);
std::vector<double> host_upper(const Region& region);
std::vector<double> forecast(const Region& region);

/// Largest useful delta: host radius for boxes, transfer cap otherwise.
double delta_ceiling(const Region& region);

bool is_box(const Region& region);

/// Region function inside a model as affine pieces. For a box h is the max
/// of `pieces`; for a transfer it is the min.
struct RegionPieces {
    bool is_max = true;
    std::vector<milp::LinExpr> pieces;
};

RegionPieces region_pieces(const Region& region, const std::vector<milp::LinExpr>& offsets,
                           const GridVariables& vars);

/// Rows of the alternatives whose disjunction says
/// scenario_value(alpha, delta, h, g) <= level. `violation` are the terms
/// whose max is g.
std::vector<std::vector<milp::Row>> scenario_alternatives(const Region& region, double alpha,
                                                          const milp::LinExpr& delta, const RegionPieces& h,
                                                          const std::vector<milp::LinExpr>& violation,
                                                          double level);

/// Maximum transfer over the host box and balanced set-points; with
/// `respect_limits` the flows must also stay within limits for some control.
double transfer_max(const Grid& grid, const TransferRegion& region, bool respect_limits,
                    const milp::SolveOptions& options);

/// Fill delta_cap and return the alpha normalization for a transfer region.
double transfer_limits(const Grid& grid, TransferRegion& region, const milp::SolveOptions& options);

}  // namespace flexgrid
