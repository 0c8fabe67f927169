#include "flexgrid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

namespace flexgrid::oracle {

namespace {

enum class Regime { Wait, HoldHigh, SatHigh, HoldLow, SatLow };
constexpr Regime kRegimes[] = {Regime::Wait, Regime::HoldHigh, Regime::SatHigh, Regime::HoldLow, Regime::SatLow};

constexpr double kConsistency = 1e-8;

std::vector<double> forecast_of(const Grid& grid) {
    return grid.forecast.empty() ? std::vector<double>(grid.node_count(), 0.0) : grid.forecast;
}

}  // namespace

void OracleConfig::validate() const {
    if (!(x_grid_resolution > 0.0) || !(y_grid_resolution > 0.0) || !(delta_bisect_tol > 0.0) || scan_steps <= 0)
        throw std::invalid_argument("oracle resolutions must be positive");
}

struct Network::Combo {
    std::optional<std::size_t> merged;
    std::vector<Regime> regimes;  // per PST edge
    Eigen::MatrixXd flow;         // edges x nodes
    Eigen::VectorXd flow0;
    Eigen::MatrixXd unshifted;    // PST edges x nodes
    Eigen::VectorXd unshifted0;
    Eigen::MatrixXd angle;        // nodes x nodes
    Eigen::VectorXd angle0;
    Eigen::MatrixXd residual;     // rows x nodes
    Eigen::VectorXd residual0;
};

Network::~Network() = default;
Network::Network(Network&&) noexcept = default;
std::size_t Network::combinations() const noexcept { return combos_.size(); }

Network::Network(const Grid& grid, const OracleConfig& cfg) : grid_(grid) {
    cfg.validate();
    const auto psts = grid.pst_edges();
    const std::size_t n_nodes = grid.node_count();
    const std::size_t n_pst = psts.size();
    if (grid.merge_pairs.size() + n_pst > 12) throw CapExceeded("oracle: more than 12 discrete devices");
    std::size_t count = grid.merge_pairs.size() + 1;
    for (std::size_t p = 0; p < n_pst; ++p) {
        count *= 5;
        if (count > cfg.max_combinations) throw CapExceeded("oracle: too many regime combinations");
    }
    std::vector<int> pst_slot(grid.edge_count(), -1);
    for (std::size_t p = 0; p < n_pst; ++p) pst_slot[psts[p]] = static_cast<int>(p);

    for (std::size_t m = 0; m <= grid.merge_pairs.size(); ++m) {
        const std::optional<std::size_t> merged = m == 0 ? std::nullopt : std::optional(m - 1);
        for (std::size_t code = 0; code < count / (grid.merge_pairs.size() + 1); ++code) {
            Combo c;
            c.merged = merged;
            std::size_t rest = code;
            for (std::size_t p = 0; p < n_pst; ++p) {
                c.regimes.push_back(kRegimes[rest % 5]);
                rest /= 5;
            }
            // unknowns: angles, shifts, merge flow
            const Eigen::Index k = static_cast<Eigen::Index>(n_nodes + n_pst + (merged ? 1 : 0));
            const Eigen::Index rows = k + 1;
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, k);
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(n_nodes));
            Eigen::VectorXd b0 = Eigen::VectorXd::Zero(rows);
            Eigen::MatrixXd flow_rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.edge_count()), k);
            Eigen::MatrixXd u_rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_pst), k);

            for (std::size_t e = 0; e < grid.edge_count(); ++e) {
                const auto& edge = grid.edges[e];
                const auto ei = static_cast<Eigen::Index>(e);
                flow_rows(ei, static_cast<Eigen::Index>(edge.from)) += edge.susceptance;
                flow_rows(ei, static_cast<Eigen::Index>(edge.to)) -= edge.susceptance;
                if (pst_slot[e] >= 0) {
                    u_rows.row(pst_slot[e]) = flow_rows.row(ei);
                    flow_rows(ei, static_cast<Eigen::Index>(n_nodes) + pst_slot[e]) = edge.susceptance;
                }
            }
            Eigen::Index r = 0;
            a(r++, static_cast<Eigen::Index>(grid.reference_node)) = 1.0;
            for (std::size_t n = 0; n < n_nodes; ++n, ++r) {
                for (std::size_t e = 0; e < grid.edge_count(); ++e) {
                    const auto& edge = grid.edges[e];
                    if (edge.from == n) a.row(r) += flow_rows.row(static_cast<Eigen::Index>(e));
                    if (edge.to == n) a.row(r) -= flow_rows.row(static_cast<Eigen::Index>(e));
                }
                if (merged) {
                    const auto& pair = grid.merge_pairs[*merged];
                    if (pair.node_a == n) a(r, k - 1) += 1.0;
                    if (pair.node_b == n) a(r, k - 1) -= 1.0;
                }
                b(r, static_cast<Eigen::Index>(n)) = 1.0;
            }
            for (std::size_t p = 0; p < n_pst; ++p, ++r) {
                const auto& pst = *grid.edges[psts[p]].pst;
                const auto shift_col = static_cast<Eigen::Index>(n_nodes + p);
                switch (c.regimes[p]) {
                    case Regime::Wait: a(r, shift_col) = 1.0; break;
                    case Regime::SatHigh: a(r, shift_col) = 1.0; b0(r) = pst.shift_min; break;
                    case Regime::SatLow: a(r, shift_col) = 1.0; b0(r) = pst.shift_max; break;
                    case Regime::HoldHigh:
                        a.row(r) = flow_rows.row(static_cast<Eigen::Index>(psts[p]));
                        b0(r) = pst.threshold;
                        break;
                    case Regime::HoldLow:
                        a.row(r) = flow_rows.row(static_cast<Eigen::Index>(psts[p]));
                        b0(r) = -pst.threshold;
                        break;
                }
            }
            if (merged) {
                const auto& pair = grid.merge_pairs[*merged];
                a(r, static_cast<Eigen::Index>(pair.node_a)) = 1.0;
                a(r, static_cast<Eigen::Index>(pair.node_b)) = -1.0;
                ++r;
            }

            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
            if (cod.rank() < k) {
                // Only a PST edge that is a bridge leaves the state underdetermined;
                // such combinations are skipped, the others still cover the law.
                continue;
            }
            const Eigen::MatrixXd pinv = cod.pseudoInverse();
            const Eigen::MatrixXd sol = pinv * b;
            const Eigen::VectorXd sol0 = pinv * b0;
            const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(rows, rows) - a * pinv;
            c.flow = flow_rows * sol;
            c.flow0 = flow_rows * sol0;
            c.unshifted = u_rows * sol;
            c.unshifted0 = u_rows * sol0;
            c.angle = sol.topRows(static_cast<Eigen::Index>(n_nodes));
            c.angle0 = sol0.head(static_cast<Eigen::Index>(n_nodes));
            c.residual = proj * b;
            c.residual0 = proj * b0;
            combos_.push_back(std::move(c));
        }
    }
}

std::optional<std::vector<double>> redistribution(const Grid& grid, std::span<const double> x, double demand) {
    // Total response S(t) = sum_g clamp(x_g + c_g t) - x_g is piecewise linear
    // in t with breakpoints where a generator saturates.
    std::vector<double> knots{0.0};
    double s_lo = 0.0, s_hi = 0.0;
    for (std::size_t g = 0; g < grid.generator_count(); ++g) {
        const auto& gen = grid.generators[g];
        if (gen.contribution <= 0.0) continue;
        knots.push_back((gen.x_min - x[g]) / gen.contribution);
        knots.push_back((gen.x_max - x[g]) / gen.contribution);
        s_lo += gen.x_min - x[g];
        s_hi += gen.x_max - x[g];
    }
    if (demand < s_lo - 1e-9 || demand > s_hi + 1e-9) return std::nullopt;
    demand = std::clamp(demand, s_lo, s_hi);
    std::ranges::sort(knots);
    const auto offsets_at = [&](double t) {
        std::vector<double> dz(grid.generator_count(), 0.0);
        for (std::size_t g = 0; g < grid.generator_count(); ++g) {
            const auto& gen = grid.generators[g];
            if (gen.contribution > 0.0) dz[g] = std::clamp(x[g] + gen.contribution * t, gen.x_min, gen.x_max) - x[g];
        }
        return dz;
    };
    const auto total = [&](double t) {
        const auto dz = offsets_at(t);
        return std::accumulate(dz.begin(), dz.end(), 0.0);
    };
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double t0 = knots[i], t1 = knots[i + 1];
        const double s0 = total(t0), s1 = total(t1);
        if (demand >= s0 - 1e-15 && demand <= s1 + 1e-15) {
            const double t = s1 > s0 ? t0 + (demand - s0) / (s1 - s0) * (t1 - t0) : t0;
            return offsets_at(t);
        }
    }
    return offsets_at(demand >= 0 ? knots.back() : knots.front());
}

double Network::violation(std::span<const double> x, std::span<const double> y, const MergeFilter& filter) const {
    const double demand = -std::accumulate(y.begin(), y.end(), 0.0);
    const auto dz = redistribution(grid_, x, demand);
    if (!dz) return std::numeric_limits<double>::infinity();
    Eigen::VectorXd inj(static_cast<Eigen::Index>(grid_.node_count()));
    for (std::size_t n = 0; n < grid_.node_count(); ++n) inj(static_cast<Eigen::Index>(n)) = grid_.nodes[n].injection0 + y[n];
    for (std::size_t g = 0; g < grid_.generator_count(); ++g)
        inj(static_cast<Eigen::Index>(grid_.generators[g].node)) += x[g] + (*dz)[g];
    const double scale = 1.0 + inj.cwiseAbs().maxCoeff();

    const auto psts = grid_.pst_edges();
    const auto critical = grid_.critical_edges();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : combos_) {
        if (!filter.any && c.merged != filter.merged) continue;
        const Eigen::VectorXd res = c.residual * inj + c.residual0;
        if (res.cwiseAbs().maxCoeff() > 1e-7 * scale) continue;
        const Eigen::VectorXd u = c.unshifted * inj + c.unshifted0;
        bool ok = true;
        for (std::size_t p = 0; p < psts.size() && ok; ++p) {
            const auto& e = grid_.edges[psts[p]];
            const double lim = e.pst->threshold;
            const double h = e.susceptance;
            const double v = u(static_cast<Eigen::Index>(p));
            const double tol = kConsistency * scale;
            switch (c.regimes[p]) {
                case Regime::Wait: ok = std::abs(v) <= lim + tol; break;
                case Regime::HoldHigh: ok = v >= lim - tol && v <= lim - h * e.pst->shift_min + tol; break;
                case Regime::SatHigh: ok = v >= lim - h * e.pst->shift_min - tol; break;
                case Regime::HoldLow: ok = v <= -lim + tol && v >= -lim - h * e.pst->shift_max - tol; break;
                case Regime::SatLow: ok = v <= -lim - h * e.pst->shift_max + tol; break;
            }
        }
        if (!ok) continue;
        const Eigen::VectorXd theta = c.angle * inj + c.angle0;
        if (theta.cwiseAbs().maxCoeff() > grid_.angle_bound + 1e-9) continue;
        const Eigen::VectorXd flow = c.flow * inj + c.flow0;
        double g = -1.0;
        for (auto e : critical) g = std::max(g, std::abs(flow(static_cast<Eigen::Index>(e))) / *grid_.edges[e].limit - 1.0);
        best = std::min(best, g);
    }
    return best;
}

bool oracle_manageable(const Grid& grid, std::span<const double> x, std::span<const double> y, const OracleConfig& cfg) {
    return Network(grid, cfg).manageable(x, y);
}

Box box_region(const Grid& grid, double host_cap) {
    Box b;
    b.y0 = forecast_of(grid);
    for (const auto& n : grid.nodes) {
        b.delta_minus.push_back(n.dy_minus);
        b.delta_plus.push_back(n.dy_plus);
    }
    b.host_radius = uniqueness_bound(grid, b.delta_minus, b.delta_plus, host_cap);
    return b;
}

Transfer transfer_region(const Grid& grid, double cap) {
    const auto a = grid.regions.find("A");
    const auto b = grid.regions.find("B");
    if (a == grid.regions.end() || b == grid.regions.end())
        throw std::invalid_argument("transfer region needs node sets A and B");
    Transfer t;
    t.nodes_a = a->second;
    t.nodes_b = b->second;
    const auto y0 = forecast_of(grid);
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        t.y_lo.push_back(y0[n] - grid.nodes[n].dy_minus);
        t.y_hi.push_back(y0[n] + grid.nodes[n].dy_plus);
    }
    t.cap = cap;
    return t;
}

double transfer_h(const Grid& grid, const Transfer& region, std::span<const double> x, std::span<const double> y) {
    const double demand = -std::accumulate(y.begin(), y.end(), 0.0);
    const auto dz = redistribution(grid, x, demand);
    if (!dz) throw std::domain_error("transfer_h: load cannot be distributed");
    const auto in = [](const std::vector<std::size_t>& set, std::size_t n) { return std::ranges::find(set, n) != set.end(); };
    double up = 0.0, down = 0.0;
    for (auto n : region.nodes_a) up += y[n];
    for (auto n : region.nodes_b) down -= y[n];
    for (std::size_t g = 0; g < grid.generator_count(); ++g) {
        if (in(region.nodes_a, grid.generators[g].node)) up += (*dz)[g];
        if (in(region.nodes_b, grid.generators[g].node)) down -= (*dz)[g];
    }
    return std::min(up, down);
}

namespace {

// Calls f with every point of a lattice with `steps` intervals per axis over
// [lo, hi]; axes with lo == hi stay fixed.
template <class F>
void for_each_lattice(const std::vector<double>& lo, const std::vector<double>& hi, int steps, F&& f) {
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (hi[i] > lo[i]) axes.push_back(i);
    std::vector<int> idx(axes.size(), 0);
    std::vector<double> p = lo;
    while (true) {
        for (std::size_t a = 0; a < axes.size(); ++a)
            p[axes[a]] = lo[axes[a]] + (hi[axes[a]] - lo[axes[a]]) * idx[a] / steps;
        f(p, idx);
        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++idx[a] <= steps) break;
            idx[a] = 0;
        }
        if (a == axes.size()) return;
    }
}

int lattice_steps(double resolution) { return std::max(1, static_cast<int>(std::lround(1.0 / resolution))); }

Estimate box_at(const Network& net, const Box& box, std::span<const double> x, const OracleConfig& cfg) {
    Estimate est;
    est.x.assign(x.begin(), x.end());
    est.value = box.host_radius;
    const auto bad = [&](double s, const std::vector<double>& dir) {
        std::vector<double> y(box.y0.size());
        for (std::size_t n = 0; n < y.size(); ++n) y[n] = box.y0[n] + s * dir[n];
        return !net.manageable(x, y);
    };
    std::vector<double> lo, hi;
    for (std::size_t n = 0; n < box.y0.size(); ++n) {
        lo.push_back(-box.delta_minus[n]);
        hi.push_back(box.delta_plus[n]);
    }
    const int steps = lattice_steps(cfg.y_grid_resolution);
    // Every scenario lies on a ray y0 + s*d with d on the unit box surface and
    // s equal to its region value, so scanning surface directions suffices.
    const auto scan = [&](double reach) {
        const double ds = reach / cfg.scan_steps;
        for_each_lattice(lo, hi, steps, [&](const std::vector<double>& dir, const std::vector<int>& idx) {
            if (std::ranges::none_of(idx, [&](int i) { return i == 0 || i == steps; })) return;
            double prev = 0.0;
            for (int k = 1; prev < est.value; ++k) {
                const double s = std::min(k * ds, est.value);
                if (!bad(s, dir)) {
                    prev = s;
                    continue;
                }
                double good = prev;
                double fail = s;
                while (fail - good > cfg.delta_bisect_tol) {
                    const double mid = 0.5 * (good + fail);
                    (bad(mid, dir) ? fail : good) = mid;
                }
                if (fail < est.value || est.witness.empty()) {
                    est.value = std::min(est.value, fail);
                    est.witness.resize(dir.size());
                    for (std::size_t n = 0; n < dir.size(); ++n) est.witness[n] = box.y0[n] + fail * dir[n];
                }
                return;
            }
        });
    };
    scan(box.host_radius);
    // second pass with steps scaled to the value found
    if (est.value < box.host_radius) scan(est.value);
    est.slack = cfg.y_grid_resolution * est.value + cfg.delta_bisect_tol;
    return est;
}

Estimate transfer_at(const Network& net, const Transfer& tr, std::span<const double> x, const OracleConfig& cfg) {
    Estimate est;
    est.x.assign(x.begin(), x.end());
    est.value = tr.cap;
    const int steps = lattice_steps(cfg.y_grid_resolution);
    for_each_lattice(tr.y_lo, tr.y_hi, steps, [&](const std::vector<double>& y, const std::vector<int>&) {
        const double h = transfer_h(net.grid(), tr, x, y);
        if (h <= 0.0 || h >= est.value) return;
        if (!net.manageable(x, y)) {
            est.value = h;
            est.witness = y;
        }
    });
    double span = 0.0;
    for (std::size_t n = 0; n < tr.y_lo.size(); ++n) span += tr.y_hi[n] - tr.y_lo[n];
    est.slack = cfg.y_grid_resolution * span;
    return est;
}

}  // namespace

Estimate oracle_flexibility_at(const Network& net, const Region& region, std::span<const double> x,
                               const OracleConfig& cfg) {
    const auto& grid = net.grid();
    if (x.size() != grid.generator_count()) throw std::invalid_argument("oracle: set-point size mismatch");
    const auto fc = forecast_of(grid);
    if (!net.base_feasible(x, fc)) {
        Estimate e;
        e.x.assign(x.begin(), x.end());
        return e;
    }
    if (const auto* b = std::get_if<Box>(&region)) return box_at(net, *b, x, cfg);
    return transfer_at(net, std::get<Transfer>(region), x, cfg);
}

namespace {

// Balanced set-points on a lattice: the last generator closes the balance.
std::vector<std::vector<double>> setpoint_lattice(const Grid& grid, const std::vector<double>& centre, double radius,
                                                  double step) {
    const std::size_t g_count = grid.generator_count();
    std::vector<std::vector<double>> out;
    if (g_count == 0) return {{}};
    const double total = grid.required_setpoint_sum();
    std::vector<double> lo, hi;
    for (std::size_t g = 0; g + 1 < g_count; ++g) {
        const auto& gen = grid.generators[g];
        lo.push_back(centre.empty() ? gen.x_min : std::max(gen.x_min, centre[g] - radius));
        hi.push_back(centre.empty() ? gen.x_max : std::min(gen.x_max, centre[g] + radius));
    }
    std::vector<int> counts;
    for (std::size_t g = 0; g < lo.size(); ++g) counts.push_back(std::max(1, static_cast<int>(std::ceil((hi[g] - lo[g]) / step))));
    std::vector<int> idx(lo.size(), 0);
    while (true) {
        std::vector<double> x(g_count);
        double sum = 0.0;
        for (std::size_t g = 0; g < lo.size(); ++g) {
            x[g] = lo[g] + (hi[g] - lo[g]) * idx[g] / counts[g];
            sum += x[g];
        }
        x.back() = total - sum;
        const auto& last = grid.generators.back();
        if (x.back() >= last.x_min - 1e-9 && x.back() <= last.x_max + 1e-9) {
            x.back() = std::clamp(x.back(), last.x_min, last.x_max);
            out.push_back(std::move(x));
        }
        std::size_t a = 0;
        for (; a < idx.size(); ++a) {
            if (++idx[a] <= counts[a]) break;
            idx[a] = 0;
        }
        if (a == idx.size()) break;
    }
    return out;
}

}  // namespace

Estimate oracle_flexibility(const Network& net, const Region& region, const OracleConfig& cfg,
                            const std::vector<std::vector<double>>& candidates) {
    const auto& grid = net.grid();
    if (grid.generator_count() > 3) throw CapExceeded("oracle: more than 3 generators");
    Estimate best;
    best.value = -1.0;
    const auto consider = [&](const std::vector<double>& x) {
        auto e = oracle_flexibility_at(net, region, x, cfg);
        if (e.value > best.value) best = std::move(e);
    };
    for (const auto& x : setpoint_lattice(grid, {}, 0.0, cfg.x_grid_resolution)) consider(x);
    for (const auto& x : candidates) consider(x);
    double step = cfg.x_grid_resolution;
    for (int level = 0; level < cfg.refine_levels && !best.x.empty(); ++level) {
        const auto centre = best.x;
        for (const auto& x : setpoint_lattice(grid, centre, step, step / 4.0)) consider(x);
        step /= 4.0;
    }
    best.value = std::max(best.value, 0.0);
    return best;
}

}  // namespace flexgrid::oracle
