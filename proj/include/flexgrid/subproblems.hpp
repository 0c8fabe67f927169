#pragma once

#include <span>
#include <vector>

#include "flexgrid/formulation.hpp"
#include "flexgrid/grid.hpp"
#include "flexgrid/milp.hpp"
#include "flexgrid/regions.hpp"

namespace flexgrid {

/// Physical state of one scenario under its best control.
struct InnerMinResult {
    double g_star = 0.0;
    ControlChoice z_star;
    std::vector<double> flows;        // per edge, MW
    std::vector<double> shifts;       // per edge, rad (0 without PST)
    std::vector<double> gen_offsets;  // per generator, MW
};

/// Minimize the violation over recourse controls for fixed set-points and
/// scenario. Throws std::domain_error when the load distribution cannot
/// absorb the scenario.
InnerMinResult inner_min(const Grid& grid, std::span<const double> setpoints, std::span<const double> y,
                         const milp::SolveOptions& options = {});

/// Violation of a fixed control, for diagnostics and the base case.
InnerMinResult evaluate_control(const Grid& grid, std::span<const double> setpoints, std::span<const double> y,
                                const ControlChoice& control, const milp::SolveOptions& options = {});

struct WorstCaseOptions {
    double tol = 1e-6;
    int max_rounds = 64;
    milp::SolveOptions milp;
};

struct WorstCaseOutcome {
    double value = 0.0;  // best inner evaluation (lower estimate)
    double upper = 0.0;  // outer relaxation bound
    std::vector<double> y_star;
    std::vector<ControlChoice> pool;
    bool certified = false;  // upper and lower agree, or upper <= 0
    bool timed_out = false;
    int rounds = 0;

    /// No scenario of the region is unmanageable.
    bool feasible() const { return upper <= 1e-6; }
};

/// Max-min scenario search at fixed (x, delta). `pool` seeds the outer
/// relaxation and receives the controls discovered on the way.
WorstCaseOutcome worst_case(const Grid& grid, const Region& region, std::span<const double> setpoints, double delta,
                            double alpha, std::vector<ControlChoice>& pool, const WorstCaseOptions& options = {});

struct AuxiliaryOptions {
    double tol = 0.025;
    double eps0 = 0.005;
    double eps_floor = 1e-6;
    double reduction = 2.0;
    int max_rounds = 200;
    milp::SolveOptions milp;
};

struct AuxiliaryResult {
    double delta_wc_relax = 0.0;  // pessimistic flexibility at x
    double upper = 0.0;           // h of the best verified unmanageable scenario
    std::vector<double> y_witness;
    bool witness_unmanageable = false;
    bool converged = false;
    bool timed_out = false;
    int rounds = 0;
};

/// Pessimistic flexibility of fixed set-points: the smallest region value of
/// any unmanageable scenario, from below.
AuxiliaryResult evaluate_flexibility_at(const Grid& grid, const Region& region, std::span<const double> setpoints,
                                        double alpha, const AuxiliaryOptions& options = {});

}  // namespace flexgrid
