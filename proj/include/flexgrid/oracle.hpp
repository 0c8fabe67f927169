#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "flexgrid/grid.hpp"

namespace flexgrid::oracle {

/// Enumeration reference for tiny grids. It enumerates the discrete regimes
/// and solves the linear DC equations directly; no MILP solver is involved.
struct OracleConfig {
    double x_grid_resolution = 0.25;  // MW between set-point candidates
    double y_grid_resolution = 0.1;   // fraction of each box side between ray directions
    double delta_bisect_tol = 1e-5;   // along each ray
    int scan_steps = 400;             // coarse steps along a ray before bisection
    int refine_levels = 3;            // x-grid refinement passes around the best point
    std::size_t max_combinations = 3125;

    void validate() const;
};

class CapExceeded : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Box {
    std::vector<double> y0;
    std::vector<double> delta_minus;
    std::vector<double> delta_plus;
    double host_radius = 0.0;
};

struct Transfer {
    std::vector<std::size_t> nodes_a;
    std::vector<std::size_t> nodes_b;
    std::vector<double> y_lo;
    std::vector<double> y_hi;
    double cap = 0.0;  // no host point transfers more
};

using Region = std::variant<Box, Transfer>;

/// Box from the grid's half-widths with the capacity-limited radius.
Box box_region(const Grid& grid, double host_cap = 1e3);
/// Transfer over regions "A" and "B"; the host is the per-node range.
Transfer transfer_region(const Grid& grid, double cap);

/// Generator offsets of the proportional response with saturation, solved
/// exactly on the piecewise-linear response curve. nullopt when the demand exceeds
/// what the generators can cover.
std::optional<std::vector<double>> redistribution(const Grid& grid, std::span<const double> x, double demand);

/// Which merge states to try: all (any decision) or exactly one.
struct MergeFilter {
    bool any = true;
    std::optional<std::size_t> merged;  // used when !any; nullopt = all open

    static MergeFilter all() { return {}; }
    static MergeFilter open() { return {false, std::nullopt}; }
};

/// Precomputed linear maps for every (merge, PST regime) combination of one grid.
class Network {
public:
    explicit Network(const Grid& grid, const OracleConfig& cfg = {});
    ~Network();
    Network(Network&&) noexcept;

    /// Smallest violation max_e |P_e|/limit - 1 over consistent combinations,
    /// +inf when none is consistent or the load cannot be distributed.
    double violation(std::span<const double> x, std::span<const double> y,
                     const MergeFilter& filter = MergeFilter::all()) const;

    bool manageable(std::span<const double> x, std::span<const double> y) const {
        return violation(x, y) <= kTolerance;
    }

    /// Forecast scenario under the base control (all couplers open).
    bool base_feasible(std::span<const double> x, std::span<const double> y0) const {
        return violation(x, y0, MergeFilter::open()) <= kTolerance;
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t combinations() const noexcept;

    static constexpr double kTolerance = 1e-9;

private:
    struct Combo;
    const Grid& grid_;
    std::vector<Combo> combos_;
};

bool oracle_manageable(const Grid& grid, std::span<const double> x, std::span<const double> y,
                       const OracleConfig& cfg = {});

/// Net A->B transfer of a scenario, min of the export of A and import of B.
double transfer_h(const Grid& grid, const Transfer& region, std::span<const double> x, std::span<const double> y);

struct Estimate {
    double value = 0.0;
    double slack = 0.0;  // resolution allowance
    std::vector<double> x;
    std::vector<double> witness;  // an unmanageable scenario at h = value, if any
};

/// Flexibility of fixed set-points. 0 when x violates the base case.
Estimate oracle_flexibility_at(const Network& net, const Region& region, std::span<const double> x,
                               const OracleConfig& cfg = {});

/// Best flexibility over a grid of balanced set-points, refined around the
/// incumbent. `candidates` are evaluated in addition to the grid.
Estimate oracle_flexibility(const Network& net, const Region& region, const OracleConfig& cfg = {},
                            const std::vector<std::vector<double>>& candidates = {});

}  // namespace flexgrid::oracle
