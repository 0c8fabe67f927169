#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexgrid/formulation.hpp"
#include "flexgrid/grid.hpp"
#include "flexgrid/milp.hpp"
#include "flexgrid/regions.hpp"

namespace flexgrid {

struct Config {
    double alpha_prime = 0.5;
    double rel_tol = 0.05;
    double eps_r0 = 0.05;
    double r_r = 2.0;
    double aux_tol = 0.025;
    double aux_eps0 = 0.005;
    double time_limit = std::numeric_limits<double>::infinity();  // seconds
    bool use_transformation = true;
    bool use_dropping = true;
    bool use_auxiliary = true;
    /// Keep dropped scenarios as transformed constraints.
    bool keep_transformed = false;
    bool single_thread = false;
    int seed = 0;
    bool integrality_focus = false;
    /// Upper end of the host radius when the uncertainty never reaches a
    /// generator capacity limit.
    double host_cap = 1e3;
    int max_iterations = 400;
    std::optional<std::filesystem::path> dump_lp_dir;

    void validate() const;
};

struct Scenario {
    std::vector<double> y;
    double h = 0.0;
    int origin_iter = 0;
    std::string origin;
    bool dropped = false;
};

class DiscretizationPool {
public:
    /// False when a scenario within 1e-9 (componentwise) is already present.
    bool add(Scenario s);
    /// Mark every scenario with h >= threshold; returns how many were newly dropped.
    std::size_t drop_at_or_above(double threshold);
    std::vector<Scenario> active() const;
    const std::vector<Scenario>& all() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t active_count() const;

private:
    std::vector<Scenario> items_;
};

struct BoundState {
    double delta_optimistic = 0.0;
    double delta_guaranteed = 0.0;
    std::vector<double> incumbent_x;  // witness of delta_guaranteed
    int lower_iter = 0;
    int upper_iter = 0;
    double eps_r = 0.0;
    int upper_failures = 0;
};

struct LogRecord {
    std::string procedure;  // "lower", "upper", "auxiliary"
    int iter = 0;
    double eps_r = 0.0;
    double delta_candidate = 0.0;
    double wc_value = 0.0;
    std::size_t pool_size = 0;
    double wall_ms = 0.0;
    double delta_optimistic = 0.0;
    double delta_guaranteed = 0.0;
    std::string event;
};

struct FlexibilityResult {
    double delta_guaranteed = 0.0;
    double delta_optimistic = 0.0;
    std::vector<double> x_star;
    bool certified = false;
    bool timed_out = false;
    double alpha = 0.0;
    double ceiling = 0.0;
    std::size_t pool_size = 0;
    std::size_t dropped = 0;
    int lower_iterations = 0;
    int upper_iterations = 0;
    int auxiliary_runs = 0;
    double wall_ms = 0.0;
    std::vector<LogRecord> log;
};

/// Raised when no set-point vector keeps the forecast within limits.
class InfeasibleBaseCase : public std::runtime_error {
public:
    InfeasibleBaseCase() : std::runtime_error("no feasible preventive action: the base case overloads a line for every set-point") {}
};

struct UpperLevelOptions {
    bool use_transformation = true;
    milp::SolveOptions milp;
};

struct UpperLevelResult {
    milp::SolveStatus status = milp::SolveStatus::Error;
    double delta = 0.0;
    double bound = 0.0;  // dual bound on delta
    std::vector<double> x;
    std::vector<ControlChoice> controls;  // per scenario constraint
};

/// Discretized master over (delta, x, per-scenario controls) with restriction
/// `eps_r`. `transformed` selects scenarios that enter only in transformed
/// form (box regions), in addition to `active`.
UpperLevelResult upper_level(const Grid& grid, const Region& region, const std::vector<Scenario>& active,
                             const std::vector<Scenario>& transformed_only, double eps_r, double alpha,
                             double delta_max, const UpperLevelOptions& options);

using LogSink = std::function<void(const LogRecord&)>;

/// Certified flexibility interval. For transfer regions with a zero
/// `delta_cap` the cap and the alpha normalization are computed first.
FlexibilityResult solve_flexibility(const Grid& grid, Region region, const Config& config,
                                    const LogSink& sink = {});

/// Relative (or small absolute) gap test used for termination.
bool interval_closed(double optimistic, double guaranteed, double rel_tol);

}  // namespace flexgrid
