#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flexgrid::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Var {
    int index = -1;
    bool valid() const noexcept { return index >= 0; }
    friend bool operator==(Var, Var) = default;
};

/// Affine expression sum_i c_i * v_i + constant.
class LinExpr {
public:
    LinExpr() = default;
    LinExpr(double constant) : constant_(constant) {}  // NOLINT(google-explicit-constructor)
    LinExpr(Var v, double coef = 1.0) { add(v, coef); }  // NOLINT(google-explicit-constructor)

    LinExpr& add(Var v, double coef);
    LinExpr& add(const LinExpr& other, double scale = 1.0);

    LinExpr& operator+=(const LinExpr& rhs) { return add(rhs, 1.0); }
    LinExpr& operator-=(const LinExpr& rhs) { return add(rhs, -1.0); }
    LinExpr& operator*=(double s);

    double constant() const noexcept { return constant_; }
    const std::vector<std::pair<int, double>>& terms() const noexcept { return terms_; }
    bool is_constant() const noexcept { return terms_.empty(); }

    double evaluate(std::span<const double> values) const;

    /// Merge duplicate variables and drop zero coefficients.
    void normalize();

private:
    std::vector<std::pair<int, double>> terms_;
    double constant_ = 0.0;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a);
LinExpr operator*(LinExpr a, double s);
LinExpr operator*(double s, LinExpr a);

enum class Sense { Le, Eq, Ge };
enum class VarType { Continuous, Binary };
enum class ObjectiveSense { Minimize, Maximize };

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct Variable {
    double lb = 0.0;
    double ub = 0.0;
    VarType type = VarType::Continuous;
    std::string name;
};

struct Constraint {
    LinExpr expr;  // constant folded into rhs when added
    Sense sense = Sense::Le;
    double rhs = 0.0;
    std::string name;
};

/// A row that only applies while `binary == active_value`; relaxed by
/// `big_m` otherwise. Kept for the slack-boundary diagnostic.
struct BigMRow {
    std::size_t constraint = 0;
    Var binary;
    bool active_value = true;
    double big_m = 0.0;
};

/// Single-owner MILP model. Continuous variables must have finite bounds.
class Model {
public:
    Var add_continuous(double lb, double ub, std::string name = {});
    Var add_binary(std::string name = {});
    std::size_t add_constraint(const LinExpr& expr, Sense sense, double rhs, std::string name = {});

    void minimize(const LinExpr& objective) { set_objective(objective, ObjectiveSense::Minimize); }
    void maximize(const LinExpr& objective) { set_objective(objective, ObjectiveSense::Maximize); }
    void set_objective(const LinExpr& objective, ObjectiveSense sense);

    void fix(Var v, double value);
    void set_bounds(Var v, double lb, double ub);

    /// Bound interval of an affine expression from the variable bounds.
    Interval bounds(const LinExpr& expr) const;

    const std::vector<Variable>& variables() const noexcept { return vars_; }
    const Variable& variable(Var v) const { return vars_.at(static_cast<std::size_t>(v.index)); }
    const std::vector<Constraint>& constraints() const noexcept { return rows_; }
    const LinExpr& objective() const noexcept { return objective_; }
    ObjectiveSense objective_sense() const noexcept { return sense_; }
    std::size_t binary_count() const;

    void record_big_m(BigMRow row) { big_m_rows_.push_back(row); }
    const std::vector<BigMRow>& big_m_rows() const noexcept { return big_m_rows_; }

    /// Throws std::invalid_argument if a row references an unknown variable
    /// or a continuous variable has a non-finite bound.
    void check() const;

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> rows_;
    std::vector<BigMRow> big_m_rows_;
    LinExpr objective_;
    ObjectiveSense sense_ = ObjectiveSense::Minimize;
};

enum class SolveStatus { Optimal, Infeasible, TimeLimit, Error };

const char* to_string(SolveStatus status);

struct SolveOptions {
    double time_limit = kInf;  // seconds
    double mip_gap = 1e-6;     // relative
    double mip_abs_gap = 1e-7;
    double feasibility_tol = 1e-6;
    double integrality_tol = 1e-6;
    bool integrality_focus = false;
    int seed = 0;
    /// Re-solve the LP with binaries fixed at their rounded values so the
    /// reported continuous values are free of integrality slack.
    bool polish = true;
    const std::atomic<bool>* cancel = nullptr;
    std::optional<std::filesystem::path> dump_lp_dir;
    std::string label = "model";
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::Error;
    std::vector<double> values;
    double objective = 0.0;
    double bound = 0.0;  // best dual bound, in objective sense
    double gap = 0.0;
    std::string message;

    bool optimal() const noexcept { return status == SolveStatus::Optimal; }
    bool has_solution() const noexcept { return !values.empty(); }
    double value(Var v) const { return values.at(static_cast<std::size_t>(v.index)); }
    double value(const LinExpr& e) const { return e.evaluate(values); }
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual SolveOutcome solve(const Model& model, const SolveOptions& options) const = 0;
};

/// The build-time default engine (HiGHS).
std::unique_ptr<Backend> make_default_backend();
const Backend& default_backend();

SolveOutcome solve(const Model& model, const SolveOptions& options = {});

/// Standard LP text format.
void write_lp(const Model& model, std::ostream& out);

/// Deactivated big-M rows whose slack is within `tol` of the big-M boundary
/// at the given point. A non-empty result means a big-M value truncated the
/// feasible region.
std::vector<std::size_t> big_m_boundary_hits(const Model& model, std::span<const double> values, double tol = 1e-4);

}  // namespace flexgrid::milp
