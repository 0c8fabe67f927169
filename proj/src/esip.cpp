#include "flexgrid/esip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "flexgrid/encodings.hpp"
#include "flexgrid/subproblems.hpp"

namespace flexgrid {

using milp::LinExpr;
using milp::Model;
using milp::Sense;
using milp::SolveStatus;
using milp::Var;

void Config::validate() const {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
    if (!(r_r > 1.0)) throw std::invalid_argument("r_r must exceed 1");
    if (!(eps_r0 > 0.0)) throw std::invalid_argument("eps_r0 must be positive");
    if (!(alpha_prime > 0.0)) throw std::invalid_argument("alpha_prime must be positive");
    if (!(aux_tol > 0.0) || !(aux_eps0 > 0.0)) throw std::invalid_argument("auxiliary tolerances must be positive");
    if (!(time_limit > 0.0)) throw std::invalid_argument("time_limit must be positive");
}

namespace {

bool same_point(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol) return false;
    return true;
}

}  // namespace

bool DiscretizationPool::add(Scenario s) {
    for (const auto& other : items_)
        if (same_point(other.y, s.y, 1e-9)) return false;
    items_.push_back(std::move(s));
    return true;
}

std::size_t DiscretizationPool::drop_at_or_above(double threshold) {
    // Boundary points (h equal to the threshold) stay active.
    std::size_t n = 0;
    for (auto& s : items_) {
        if (!s.dropped && s.h > threshold + 1e-9) {
            s.dropped = true;
            ++n;
        }
    }
    return n;
}

std::vector<Scenario> DiscretizationPool::active() const {
    std::vector<Scenario> out;
    for (const auto& s : items_)
        if (!s.dropped) out.push_back(s);
    return out;
}

std::size_t DiscretizationPool::active_count() const {
    return static_cast<std::size_t>(std::ranges::count_if(items_, [](const Scenario& s) { return !s.dropped; }));
}

bool interval_closed(double optimistic, double guaranteed, double rel_tol) {
    const double gap = optimistic - guaranteed;
    if (optimistic < 1e-3) return gap <= 1e-4;
    return gap <= rel_tol * optimistic;
}

UpperLevelResult upper_level(const Grid& grid, const Region& region, const std::vector<Scenario>& active,
                             const std::vector<Scenario>& transformed_only, double eps_r, double alpha,
                             double delta_max, const UpperLevelOptions& options) {
    Model model;
    const Var delta = model.add_continuous(0.0, std::max(0.0, delta_max), "delta");
    std::vector<LinExpr> x;
    LinExpr balance;
    for (const auto& g : grid.generators) {
        const Var v = model.add_continuous(g.x_min, g.x_max, "x_" + g.id);
        x.emplace_back(v);
        balance.add(v, 1.0);
    }
    model.add_constraint(balance, Sense::Eq, grid.required_setpoint_sum(), "balance");

    const auto y0 = forecast(region);
    const auto base = add_scenario(model, grid, {x, constant_exprs(y0), ControlRole::base()}, "b_");
    for (const auto& row : violation_at_most(grid, base, -eps_r)) model.add_constraint(row.expr, row.sense, row.rhs, "base");

    std::vector<GridVariables> blocks;
    const bool box = is_box(region);
    const auto add_transformed = [&](const Scenario& s, const std::string& prefix) {
        if (!(s.h > 1e-12) || !std::isfinite(s.h)) return;
        const Var along = milp::encode_min2(model, LinExpr(delta), LinExpr(s.h), prefix + "s");
        std::vector<LinExpr> y;
        for (std::size_t n = 0; n < y0.size(); ++n) y.push_back(LinExpr(y0[n]) + LinExpr(along, (s.y[n] - y0[n]) / s.h));
        blocks.push_back(add_scenario(model, grid, {x, y, ControlRole::decision()}, prefix));
        for (const auto& row : violation_at_most(grid, blocks.back(), -eps_r))
            model.add_constraint(row.expr, row.sense, row.rhs, prefix + "lim");
    };

    for (std::size_t i = 0; i < active.size(); ++i) {
        const auto& s = active[i];
        const std::string prefix = "d" + std::to_string(i) + "_";
        if (box && options.use_transformation) {
            add_transformed(s, prefix);
            continue;
        }
        const auto ys = constant_exprs(s.y);
        blocks.push_back(add_scenario(model, grid, {x, ys, ControlRole::decision()}, prefix));
        const auto pieces = region_pieces(region, ys, blocks.back());
        const auto alts =
            scenario_alternatives(region, alpha, LinExpr(delta), pieces, violation_terms(grid, blocks.back()), -eps_r);
        if (!alts.empty()) milp::add_disjunction(model, alts, prefix + "or");
    }
    if (box) {
        for (std::size_t i = 0; i < transformed_only.size(); ++i)
            add_transformed(transformed_only[i], "t" + std::to_string(i) + "_");
    }

    model.maximize(delta);
    auto opts = options.milp;
    opts.label = "upper_level";
    const auto out = milp::solve(model, opts);
    UpperLevelResult r;
    r.status = out.status;
    if (!out.optimal()) return r;
    r.delta = out.value(delta);
    r.bound = std::max(out.bound, out.objective);
    for (const auto& e : x) r.x.push_back(out.value(e));
    for (const auto& b : blocks) r.controls.push_back(read_control(b, out));
    return r;
}

namespace {

using Clock = std::chrono::steady_clock;

LogRecord entry(const char* procedure, int iter, double eps_r, double candidate, double wc_value) {
    LogRecord r;
    r.procedure = procedure;
    r.iter = iter;
    r.eps_r = eps_r;
    r.delta_candidate = candidate;
    r.wc_value = wc_value;
    return r;
}

class Orchestrator {
public:
    Orchestrator(const Grid& grid, Region region, const Config& cfg, const LogSink& sink)
        : grid_(grid), region_(std::move(region)), cfg_(cfg), sink_(sink) {}

    FlexibilityResult run() {
        cfg_.validate();
        start_ = Clock::now();
        double norm = 1.0;
        if (auto* tr = std::get_if<TransferRegion>(&region_); tr && tr->delta_cap <= 0.0)
            norm = transfer_limits(grid_, *tr, base_options());
        alpha_ = cfg_.alpha_prime / norm;
        ceiling_ = delta_ceiling(region_);
        b_.delta_optimistic = ceiling_;
        b_.delta_guaranteed = 0.0;
        b_.eps_r = cfg_.eps_r0;

        if (cfg_.single_thread) {
            run_guarded([&] {
                while (!stop_) {
                    lower_step();
                    drain_auxiliary();
                    if (stop_) break;
                    upper_step();
                    drain_auxiliary();
                }
            });
        } else {
            std::thread lower([&] { run_guarded([&] { while (!stop_) lower_step(); }); });
            std::thread upper([&] { run_guarded([&] { while (!stop_) upper_step(); }); });
            std::thread aux([&] { run_guarded([&] { auxiliary_worker(); }); });
            lower.join();
            upper.join();
            {
                std::lock_guard lock(mu_);
                stop_ = true;
            }
            aux_cv_.notify_all();
            aux.join();
        }
        if (error_) std::rethrow_exception(error_);

        FlexibilityResult r;
        r.delta_guaranteed = b_.delta_guaranteed;
        r.delta_optimistic = b_.delta_optimistic;
        r.x_star = b_.incumbent_x;
        r.certified = converged_;
        r.timed_out = timed_out_ && !converged_;
        r.alpha = alpha_;
        r.ceiling = ceiling_;
        r.pool_size = pool_.size();
        r.dropped = pool_.size() - pool_.active_count();
        r.lower_iterations = b_.lower_iter;
        r.upper_iterations = b_.upper_iter;
        r.auxiliary_runs = aux_runs_;
        r.wall_ms = elapsed_ms();
        r.log = log_;
        return r;
    }

private:
    const Grid& grid_;
    Region region_;
    Config cfg_;
    LogSink sink_;
    double alpha_ = 1.0;
    double ceiling_ = 0.0;

    std::mutex mu_;
    DiscretizationPool pool_;
    BoundState b_;
    std::vector<LogRecord> log_;
    std::vector<std::vector<double>> dispatched_;
    std::deque<std::vector<double>> aux_queue_;
    std::condition_variable aux_cv_;
    std::atomic<bool> stop_{false};
    bool timed_out_ = false;
    bool converged_ = false;
    int aux_runs_ = 0;
    Clock::time_point start_;
    std::exception_ptr error_;

    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    }

    milp::SolveOptions base_options() const {
        milp::SolveOptions o;
        o.seed = cfg_.seed;
        o.integrality_focus = cfg_.integrality_focus;
        o.dump_lp_dir = cfg_.dump_lp_dir;
        return o;
    }

    // Options for the next solve; nullopt once the deadline has passed.
    std::optional<milp::SolveOptions> options() {
        auto o = base_options();
        o.cancel = &stop_;
        if (std::isfinite(cfg_.time_limit)) {
            const double left = cfg_.time_limit - elapsed_ms() / 1000.0;
            if (left <= 0.0) {
                deadline_hit();
                return std::nullopt;
            }
            o.time_limit = left;
        }
        return o;
    }

    void deadline_hit() {
        std::lock_guard lock(mu_);
        timed_out_ = true;
        stop_ = true;
        aux_cv_.notify_all();
    }

    // A solve that did not finish: either the deadline or another worker
    // stopping the run.
    void interrupted() {
        if (std::isfinite(cfg_.time_limit) && elapsed_ms() / 1000.0 >= cfg_.time_limit) deadline_hit();
    }

    template <class F>
    void run_guarded(F&& body) {
        try {
            body();
        } catch (...) {
            std::lock_guard lock(mu_);
            // Solves aborted by a stop request surface as errors; ignore those.
            if (!stop_ && !error_) error_ = std::current_exception();
            if (std::isfinite(cfg_.time_limit) && elapsed_ms() / 1000.0 >= cfg_.time_limit) timed_out_ = true;
            stop_ = true;
            aux_cv_.notify_all();
        }
    }

    void record_locked(LogRecord rec) {
        rec.wall_ms = elapsed_ms();
        rec.pool_size = pool_.active_count();
        rec.delta_optimistic = b_.delta_optimistic;
        rec.delta_guaranteed = b_.delta_guaranteed;
        if (sink_) sink_(rec);
        log_.push_back(std::move(rec));
    }

    void check_done_locked() {
        if (!b_.incumbent_x.empty() && interval_closed(b_.delta_optimistic, b_.delta_guaranteed, cfg_.rel_tol)) {
            converged_ = true;
            stop_ = true;
        }
        if (b_.lower_iter + b_.upper_iter >= cfg_.max_iterations) stop_ = true;
        if (stop_) aux_cv_.notify_all();
    }

    void raise_guaranteed_locked(double delta, const std::vector<double>& x) {
        const double capped = std::min(delta, b_.delta_optimistic);
        if (capped > b_.delta_guaranteed || b_.incumbent_x.empty()) {
            b_.delta_guaranteed = std::max(b_.delta_guaranteed, capped);
            b_.incumbent_x = x;
        }
    }

    void dispatch_locked(const std::vector<double>& x) {
        if (!cfg_.use_auxiliary) return;
        for (const auto& seen : dispatched_)
            if (same_point(seen, x, 1e-9)) return;
        dispatched_.push_back(x);
        aux_queue_.push_back(x);
        aux_cv_.notify_one();
    }

    struct Snapshot {
        std::vector<Scenario> active;
        std::vector<Scenario> transformed_only;
        double delta_max = 0.0;
        double eps_r = 0.0;
        int iter = 0;
    };

    Snapshot snapshot_locked() const {
        Snapshot s;
        s.active = pool_.active();
        if (cfg_.keep_transformed && cfg_.use_transformation && is_box(region_)) {
            for (const auto& sc : pool_.all())
                if (sc.dropped) s.transformed_only.push_back(sc);
        }
        s.delta_max = b_.delta_optimistic;
        s.eps_r = b_.eps_r;
        return s;
    }

    bool add_scenario_locked(const std::vector<double>& y, const std::vector<double>& x, int iter, const char* origin) {
        Scenario s;
        s.y = y;
        s.h = region_h(region_, grid_, x, y);
        s.origin_iter = iter;
        s.origin = origin;
        if (cfg_.use_dropping && is_box(region_) && s.h > b_.delta_optimistic + 1e-9) s.dropped = true;
        return pool_.add(std::move(s));
    }

    WorstCaseOutcome check_candidate(const UpperLevelResult& cand, const milp::SolveOptions& opts) {
        std::vector<ControlChoice> controls;
        WorstCaseOptions wo;
        wo.milp = opts;
        return worst_case(grid_, region_, cand.x, cand.delta, alpha_, controls, wo);
    }

    void lower_step() {
        Snapshot snap;
        {
            std::lock_guard lock(mu_);
            snap = snapshot_locked();
            snap.iter = ++b_.lower_iter;
        }
        auto opts = options();
        if (!opts) return;
        UpperLevelOptions uo{cfg_.use_transformation, *opts};
        const auto cand = upper_level(grid_, region_, snap.active, snap.transformed_only, 0.0, alpha_, snap.delta_max, uo);
        if (cand.status == SolveStatus::TimeLimit) return interrupted();
        if (cand.status == SolveStatus::Infeasible) throw InfeasibleBaseCase();
        if (cand.status != SolveStatus::Optimal) throw std::runtime_error("lower-bounding master failed");
        {
            std::lock_guard lock(mu_);
            b_.delta_optimistic = std::max(b_.delta_guaranteed, std::min(b_.delta_optimistic, cand.bound));
            if (cfg_.use_dropping && is_box(region_)) pool_.drop_at_or_above(b_.delta_optimistic);
            dispatch_locked(cand.x);
        }
        const auto wc = check_candidate(cand, *opts);
        if (wc.timed_out) return interrupted();
        std::lock_guard lock(mu_);
        auto rec = entry("lower", snap.iter, 0.0, cand.delta, wc.upper);
        if (!wc.certified) {
            rec.event = "worst case not certified";
        } else if (wc.feasible()) {
            raise_guaranteed_locked(cand.delta, cand.x);
            rec.event = "certified";
        } else {
            rec.event = add_scenario_locked(wc.y_star, cand.x, snap.iter, "lower") ? "scenario added" : "duplicate scenario";
        }
        record_locked(std::move(rec));
        check_done_locked();
    }

    void upper_step() {
        Snapshot snap;
        {
            std::lock_guard lock(mu_);
            snap = snapshot_locked();
            snap.iter = ++b_.upper_iter;
        }
        auto opts = options();
        if (!opts) return;
        UpperLevelOptions uo{cfg_.use_transformation, *opts};
        const auto cand =
            upper_level(grid_, region_, snap.active, snap.transformed_only, snap.eps_r, alpha_, snap.delta_max, uo);
        if (cand.status == SolveStatus::TimeLimit) return interrupted();
        if (cand.status == SolveStatus::Infeasible) {
            std::lock_guard lock(mu_);
            b_.eps_r /= cfg_.r_r;
            b_.upper_failures = 0;
            auto rec = entry("upper", snap.iter, snap.eps_r, 0.0, 0.0);
            rec.event = "restricted master infeasible";
            record_locked(std::move(rec));
            check_done_locked();
            return;
        }
        if (cand.status != SolveStatus::Optimal) throw std::runtime_error("upper-bounding master failed");
        {
            std::lock_guard lock(mu_);
            dispatch_locked(cand.x);
        }
        const auto wc = check_candidate(cand, *opts);
        if (wc.timed_out) return interrupted();
        std::lock_guard lock(mu_);
        auto rec = entry("upper", snap.iter, snap.eps_r, cand.delta, wc.upper);
        if (wc.certified && wc.feasible()) {
            raise_guaranteed_locked(cand.delta, cand.x);
            // A certified candidate cannot improve at this restriction once the
            // pool stays unchanged, so restrict less.
            b_.eps_r /= cfg_.r_r;
            b_.upper_failures = 0;
            rec.event = "certified";
        } else {
            if (wc.certified)
                rec.event = add_scenario_locked(wc.y_star, cand.x, snap.iter, "upper") ? "scenario added"
                                                                                         : "duplicate scenario";
            else
                rec.event = "worst case not certified";
            if (++b_.upper_failures >= 2) {
                b_.eps_r /= cfg_.r_r;
                b_.upper_failures = 0;
            }
        }
        record_locked(std::move(rec));
        check_done_locked();
    }

    void evaluate_auxiliary(const std::vector<double>& x) {
        auto opts = options();
        if (!opts) return;
        AuxiliaryOptions ao;
        ao.tol = cfg_.aux_tol;
        ao.eps0 = cfg_.aux_eps0;
        ao.reduction = cfg_.r_r;
        ao.milp = *opts;
        const auto res = evaluate_flexibility_at(grid_, region_, x, alpha_, ao);
        if (res.timed_out) return interrupted();
        std::lock_guard lock(mu_);
        ++aux_runs_;
        const double before = b_.delta_guaranteed;
        raise_guaranteed_locked(res.delta_wc_relax, x);
        auto rec = entry("auxiliary", aux_runs_, 0.0, res.delta_wc_relax, 0.0);
        rec.event = b_.delta_guaranteed > before ? "guaranteed raised" : "no improvement";
        record_locked(std::move(rec));
        check_done_locked();
    }

    void drain_auxiliary() {
        while (!stop_) {
            std::vector<double> x;
            {
                std::lock_guard lock(mu_);
                if (aux_queue_.empty()) return;
                x = std::move(aux_queue_.front());
                aux_queue_.pop_front();
            }
            evaluate_auxiliary(x);
        }
    }

    void auxiliary_worker() {
        while (true) {
            std::vector<double> x;
            {
                std::unique_lock lock(mu_);
                aux_cv_.wait(lock, [&] { return stop_ || !aux_queue_.empty(); });
                if (stop_) return;
                // Newest set-points first: older ones are usually superseded.
                x = std::move(aux_queue_.back());
                aux_queue_.pop_back();
            }
            evaluate_auxiliary(x);
        }
    }
};

}  // namespace

FlexibilityResult solve_flexibility(const Grid& grid, Region region, const Config& config, const LogSink& sink) {
    Orchestrator orch(grid, std::move(region), config, sink);
    return orch.run();
}

}  // namespace flexgrid
