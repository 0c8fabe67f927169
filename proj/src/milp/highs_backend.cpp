#include <Highs.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>

#include "flexgrid/milp.hpp"

namespace flexgrid::milp {

namespace {

struct Csr {
    std::vector<HighsInt> start{0};
    std::vector<HighsInt> index;
    std::vector<double> value;
};

Csr rowwise(const Model& model) {
    Csr m;
    for (const auto& r : model.constraints()) {
        for (const auto& [idx, c] : r.expr.terms()) {
            m.index.push_back(idx);
            m.value.push_back(c);
        }
        m.start.push_back(static_cast<HighsInt>(m.index.size()));
    }
    return m;
}

void interrupt_callback(int, const std::string&, const HighsCallbackOutput*, HighsCallbackInput* in, void* data) {
    const auto* cancel = static_cast<const std::atomic<bool>*>(data);
    if (cancel != nullptr && cancel->load(std::memory_order_relaxed)) in->user_interrupt = true;
}

class HighsBackend final : public Backend {
public:
    std::string name() const override { return "highs"; }

    SolveOutcome solve(const Model& model, const SolveOptions& options) const override {
        model.check();
        if (options.dump_lp_dir) dump(model, options);
        auto out = solve_once(model, options, 0);
        // HiGHS occasionally reports a solve error on badly scaled big-M rows;
        // a run without presolve usually gets through.
        if (out.status == SolveStatus::Error) {
            auto retry = solve_once(model, options, 1);
            if (retry.status != SolveStatus::Error) return retry;
        }
        return out;
    }

private:
    static SolveOutcome solve_once(const Model& model, const SolveOptions& options, int attempt) {
        SolveOutcome out;
        if (options.cancel != nullptr && options.cancel->load()) {
            out.status = SolveStatus::TimeLimit;
            out.message = "cancelled before start";
            return out;
        }

        const auto& vars = model.variables();
        const auto n = static_cast<HighsInt>(vars.size());
        const auto m = static_cast<HighsInt>(model.constraints().size());
        std::vector<double> cost(vars.size(), 0.0), lower(vars.size()), upper(vars.size());
        std::vector<HighsInt> integrality(vars.size(), 0);
        bool has_integer = false;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            lower[i] = vars[i].lb;
            upper[i] = vars[i].ub;
            if (vars[i].type == VarType::Binary) {
                integrality[i] = 1;
                has_integer = true;
            }
        }
        for (const auto& [idx, c] : model.objective().terms()) cost[static_cast<std::size_t>(idx)] += c;
        std::vector<double> row_lo(static_cast<std::size_t>(m)), row_hi(static_cast<std::size_t>(m));
        for (std::size_t r = 0; r < model.constraints().size(); ++r) {
            const auto& c = model.constraints()[r];
            row_lo[r] = c.sense == Sense::Le ? -kHighsInf : c.rhs;
            row_hi[r] = c.sense == Sense::Ge ? kHighsInf : c.rhs;
        }
        const Csr a = rowwise(model);
        const HighsInt sense = model.objective_sense() == ObjectiveSense::Minimize ? 1 : -1;

        Highs highs;
        configure(highs, options);
        if (attempt > 0) {
            highs.setOptionValue("presolve", "off");
            highs.setOptionValue("random_seed", options.seed + attempt);
        }
        const auto status = highs.passModel(n, m, static_cast<HighsInt>(a.index.size()), 2 /* rowwise */, sense,
                                            model.objective().constant(), cost.data(), lower.data(), upper.data(),
                                            row_lo.data(), row_hi.data(), a.start.data(), a.index.data(),
                                            a.value.data(), has_integer ? integrality.data() : nullptr);
        if (status == HighsStatus::kError) {
            out.message = "backend rejected the model";
            return out;
        }
        if (options.cancel != nullptr) {
            highs.setCallback(interrupt_callback, const_cast<std::atomic<bool>*>(options.cancel));
            highs.startCallback(kCallbackSimplexInterrupt);
            highs.startCallback(kCallbackIpmInterrupt);
            if (has_integer) highs.startCallback(kCallbackMipInterrupt);
        }
        const auto run = highs.run();
        const auto ms = highs.getModelStatus();
        const auto& info = highs.getInfo();

        if (run == HighsStatus::kError && ms != HighsModelStatus::kInfeasible) {
            out.status = SolveStatus::Error;
            out.message = "numerical failure: " + highs.modelStatusToString(ms);
            return out;
        }
        switch (ms) {
            case HighsModelStatus::kOptimal: out.status = SolveStatus::Optimal; break;
            case HighsModelStatus::kInfeasible:
            case HighsModelStatus::kUnboundedOrInfeasible: out.status = SolveStatus::Infeasible; break;
            case HighsModelStatus::kTimeLimit:
            case HighsModelStatus::kInterrupt:
            case HighsModelStatus::kIterationLimit:
            case HighsModelStatus::kSolutionLimit: out.status = SolveStatus::TimeLimit; break;
            default:
                out.status = SolveStatus::Error;
                out.message = "backend status: " + highs.modelStatusToString(ms);
                return out;
        }
        if (ms == HighsModelStatus::kInterrupt) out.message = "interrupted";
        if (out.status == SolveStatus::Infeasible) return out;

        const auto& sol = highs.getSolution();
        if (sol.value_valid && info.primal_solution_status == kSolutionStatusFeasible) {
            out.values.assign(sol.col_value.begin(), sol.col_value.end());
            out.objective = info.objective_function_value;
        }
        if (has_integer) {
            out.bound = info.mip_dual_bound;
            out.gap = info.mip_gap;
        } else {
            out.bound = out.objective;
            out.gap = 0.0;
        }
        if (out.status == SolveStatus::Optimal && out.values.empty()) {
            out.status = SolveStatus::Error;
            out.message = "optimal status without a primal solution";
            return out;
        }
        if (out.status == SolveStatus::Optimal && has_integer && options.polish) polish(highs, model, out);
        return out;
    }

    static void configure(Highs& highs, const SolveOptions& options) {
        highs.setOptionValue("output_flag", false);
        highs.setOptionValue("threads", 1);
        highs.setOptionValue("random_seed", options.seed);
        highs.setOptionValue("mip_rel_gap", options.mip_gap);
        highs.setOptionValue("mip_abs_gap", options.mip_abs_gap);
        highs.setOptionValue("primal_feasibility_tolerance", options.feasibility_tol);
        highs.setOptionValue("dual_feasibility_tolerance", options.feasibility_tol);
        highs.setOptionValue("mip_feasibility_tolerance", options.integrality_tol);
        if (options.integrality_focus) {
            // Closest HiGHS analogue: tighter integrality plus exhaustive
            // heuristics so near-integral LP points are not accepted early.
            highs.setOptionValue("mip_feasibility_tolerance", std::min(options.integrality_tol, 1e-9));
            highs.setOptionValue("mip_heuristic_effort", 0.3);
        }
        if (std::isfinite(options.time_limit)) highs.setOptionValue("time_limit", std::max(options.time_limit, 1e-3));
    }

    // Fix binaries and re-solve the LP to remove integrality slack.
    static void polish(Highs& highs, const Model& model, SolveOutcome& out) {
        const auto& vars = model.variables();
        std::vector<double> lower(vars.size()), upper(vars.size());
        for (std::size_t i = 0; i < vars.size(); ++i) {
            lower[i] = vars[i].lb;
            upper[i] = vars[i].ub;
            if (vars[i].type == VarType::Binary) lower[i] = upper[i] = std::round(out.values[i]);
        }
        const auto n = static_cast<HighsInt>(vars.size());
        std::vector<HighsVarType> cont(vars.size(), HighsVarType::kContinuous);
        highs.changeColsIntegrality(0, n - 1, cont.data());
        highs.changeColsBounds(0, n - 1, lower.data(), upper.data());
        if (highs.run() == HighsStatus::kError) return;
        if (highs.getModelStatus() != HighsModelStatus::kOptimal) return;
        const auto& sol = highs.getSolution();
        out.values.assign(sol.col_value.begin(), sol.col_value.end());
        out.objective = highs.getInfo().objective_function_value;
    }

    static void dump(const Model& model, const SolveOptions& options) {
        static std::atomic<int> counter{0};
        std::filesystem::create_directories(*options.dump_lp_dir);
        const int k = counter.fetch_add(1);
        std::ofstream f(*options.dump_lp_dir / (options.label + "_" + std::to_string(k) + ".lp"));
        write_lp(model, f);
    }
};

}  // namespace

std::unique_ptr<Backend> make_default_backend() { return std::make_unique<HighsBackend>(); }

const Backend& default_backend() {
    static const HighsBackend backend;
    return backend;
}

SolveOutcome solve(const Model& model, const SolveOptions& options) { return default_backend().solve(model, options); }

}  // namespace flexgrid::milp
