#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "flexgrid/grid.hpp"
#include "flexgrid/oracle.hpp"
#include "flexgrid/regions.hpp"

namespace fixtures {

using flexgrid::Edge;
using flexgrid::Generator;
using flexgrid::Grid;
using flexgrid::MergePair;
using flexgrid::Node;
using flexgrid::PstSpec;

inline std::string source_dir() { return FLEXGRID_SOURCE_DIR; }
inline std::string case_path(const std::string& name) { return source_dir() + "/cases/" + name; }

inline Edge line(std::string id, std::size_t from, std::size_t to, double h, std::optional<double> limit = {}) {
    Edge e;
    e.id = std::move(id);
    e.from = from;
    e.to = to;
    e.susceptance = h;
    e.limit = limit;
    return e;
}

/// Generator node G, load node L (-2 MW, +-1 MW), one 5 MW line.
inline Grid two_node() {
    Grid g;
    g.nodes = {{"G", 0.0, 0.0, 0.0}, {"L", -2.0, 1.0, 1.0}};
    g.generators = {{"g", 0, -10.0, 10.0, 1.0}};
    g.edges = {line("line", 0, 1, 1.0, 5.0)};
    g.forecast.assign(2, 0.0);
    g.validate();
    return g;
}

/// Two generators sharing a load, for the redistribution sweep.
inline Grid two_generator() {
    Grid g;
    g.nodes = {{"A", 0.0, 0.0, 0.0}, {"B", 0.0, 0.0, 0.0}, {"L", -1.0, 7.0, 7.0}};
    g.generators = {{"ga", 0, -2.0, 3.0, 0.7}, {"gb", 1, -4.0, 2.0, 0.3}};
    g.edges = {line("a-l", 0, 2, 1.0), line("b-l", 1, 2, 1.0)};
    g.forecast.assign(3, 0.0);
    g.validate();
    return g;
}

/// Mirror image of a grid: node order reversed. Flexibility is invariant.
inline Grid mirrored(const Grid& in) {
    Grid g = in;
    const std::size_t n = in.node_count();
    const auto flip = [&](std::size_t i) { return n - 1 - i; };
    for (std::size_t i = 0; i < n; ++i) g.nodes[flip(i)] = in.nodes[i];
    for (auto& gen : g.generators) gen.node = flip(gen.node);
    for (auto& e : g.edges) {
        e.from = flip(e.from);
        e.to = flip(e.to);
    }
    for (auto& m : g.merge_pairs) {
        m.node_a = flip(m.node_a);
        m.node_b = flip(m.node_b);
    }
    for (auto& [name, ids] : g.regions)
        for (auto& id : ids) id = flip(id);
    g.reference_node = flip(in.reference_node);
    for (std::size_t i = 0; i < n; ++i) g.forecast[flip(i)] = in.forecast[i];
    g.validate();
    return g;
}

struct RandomSpec {
    int min_nodes = 3;
    int max_nodes = 6;
    int max_generators = 2;
    bool allow_pst = true;
    bool allow_merge = true;
    int max_uncertain = 3;
};

/// Random connected tiny grid. The base case is not guaranteed feasible.
inline Grid random_grid(std::mt19937& rng, const RandomSpec& spec = {}) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto uni = [&](double a, double b) { return a + (b - a) * unit(rng); };
    const auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    Grid g;
    const int n = pick(spec.min_nodes, spec.max_nodes);
    for (int i = 0; i < n; ++i) g.nodes.push_back({"n" + std::to_string(i), 0.0, 0.0, 0.0});
    // spanning tree, then a few chords
    for (int i = 1; i < n; ++i) {
        const int parent = pick(0, i - 1);
        g.edges.push_back(line("e" + std::to_string(g.edges.size()), static_cast<std::size_t>(parent),
                               static_cast<std::size_t>(i), uni(0.5, 2.0)));
    }
    const int chords = pick(1, 2);
    for (int c = 0; c < chords; ++c) {
        int a = pick(0, n - 1), b = pick(0, n - 1);
        if (a == b) b = (a + 1) % n;
        g.edges.push_back(line("e" + std::to_string(g.edges.size()), static_cast<std::size_t>(a),
                               static_cast<std::size_t>(b), uni(0.5, 2.0)));
    }
    for (auto& e : g.edges)
        if (unit(rng) < 0.7) e.limit = uni(1.5, 5.0);
    if (std::ranges::none_of(g.edges, [](const Edge& e) { return e.critical(); })) g.edges.front().limit = uni(1.5, 5.0);
    // a chord lies on a cycle, so its angle difference is never free
    if (spec.allow_pst && unit(rng) < 0.5) {
        auto& e = g.edges.back();
        e.pst = PstSpec{uni(0.3, 1.5), -uni(0.1, 0.5), uni(0.1, 0.5)};
    }

    const int gens = pick(1, spec.max_generators);
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double share = 1.0;
    for (int k = 0; k < gens; ++k) {
        const double c = k + 1 == gens ? share : std::round(uni(0.2, 0.8) * 100.0) / 100.0;
        share -= c;
        g.generators.push_back({"g" + std::to_string(k), order[static_cast<std::size_t>(k)], -uni(2.0, 6.0), uni(2.0, 6.0), c});
    }
    for (int i = gens; i < n; ++i) g.nodes[order[static_cast<std::size_t>(i)]].injection0 = std::round(uni(-2.0, 2.0) * 4.0) / 4.0;

    const int uncertain = pick(1, std::min(spec.max_uncertain, n - gens));
    for (int k = 0; k < uncertain; ++k) {
        auto& node = g.nodes[order[static_cast<std::size_t>(gens + k)]];
        node.dy_minus = std::round(uni(0.5, 2.0) * 4.0) / 4.0;
        node.dy_plus = std::round(uni(0.5, 2.0) * 4.0) / 4.0;
    }
    if (spec.allow_merge && unit(rng) < 0.5) {
        int a = pick(0, n - 1), b = pick(0, n - 1);
        if (a == b) b = (a + 1) % n;
        g.merge_pairs.push_back({"m0", static_cast<std::size_t>(a), static_cast<std::size_t>(b)});
    }
    g.reference_node = 0;
    g.forecast.assign(static_cast<std::size_t>(n), 0.0);
    return g;
}

inline flexgrid::oracle::OracleConfig coarse_oracle() {
    flexgrid::oracle::OracleConfig c;
    c.x_grid_resolution = 0.5;
    c.y_grid_resolution = 0.125;
    c.scan_steps = 120;
    c.refine_levels = 2;
    return c;
}

/// Random grids whose balance is reachable and some balanced set-point keeps
/// the forecast within limits (so the flexibility problem is well posed).
inline std::vector<Grid> feasible_random_grids(unsigned seed, std::size_t count, const RandomSpec& spec = {}) {
    std::mt19937 rng(seed);
    std::vector<Grid> out;
    while (out.size() < count) {
        Grid g = random_grid(rng, spec);
        try {
            g.validate();
        } catch (const flexgrid::GridError&) {
            continue;
        }
        const double need = g.required_setpoint_sum();
        if (need < g.total_x_min() + 0.5 || need > g.total_x_max() - 0.5) continue;
        const auto box = flexgrid::oracle::box_region(g, 1e3);
        if (box.host_radius < 0.2 || box.host_radius > 50.0) continue;
        const flexgrid::oracle::Network net(g, coarse_oracle());
        auto cfg = coarse_oracle();
        cfg.refine_levels = 0;
        cfg.x_grid_resolution = 1.0;
        const auto est = flexgrid::oracle::oracle_flexibility(net, box, cfg);
        if (est.value < 0.1) continue;
        out.push_back(std::move(g));
    }
    return out;
}

inline flexgrid::oracle::Box oracle_box(const flexgrid::HyperboxRegion& r) {
    return {r.y0, r.delta_minus, r.delta_plus, r.host_radius};
}

}  // namespace fixtures
