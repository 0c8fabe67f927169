#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace flexgrid {

/// Raised for any problem with a case file. The message starts with the
/// JSON path of the offending field, e.g. "generators[1].contribution: ...".
class GridError : public std::runtime_error {
public:
    GridError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct Node {
    std::string id;
    double injection0 = 0.0;  // MW, predicted injection
    double dy_minus = 0.0;    // MW, lower uncertainty half-width
    double dy_plus = 0.0;     // MW, upper uncertainty half-width
};

struct Generator {
    std::string id;
    std::size_t node = 0;
    double x_min = 0.0;  // MW
    double x_max = 0.0;  // MW
    double contribution = 0.0;
};

struct PstSpec {
    double threshold = 0.0;  // MW
    double shift_min = 0.0;  // rad, <= 0
    double shift_max = 0.0;  // rad, >= 0
};

struct Edge {
    std::string id;
    std::size_t from = 0;
    std::size_t to = 0;
    double susceptance = 1.0;  // MW/rad
    std::optional<PstSpec> pst;
    std::optional<double> limit;  // MW; present on critical edges only

    bool critical() const noexcept { return limit.has_value(); }
};

struct MergePair {
    std::string id;
    std::size_t node_a = 0;
    std::size_t node_b = 0;
};

/// Immutable validated grid. Build through parse_grid / grid_from_json or
/// GridBuilder-style aggregate init followed by validate().
class Grid {
public:
    std::vector<Node> nodes;
    std::vector<Generator> generators;
    std::vector<Edge> edges;
    std::vector<MergePair> merge_pairs;
    std::map<std::string, std::vector<std::size_t>> regions;
    std::size_t reference_node = 0;
    /// Forecast offsets y0 per node (defaults to zero).
    std::vector<double> forecast;
    /// Symmetric bound on every voltage angle, rad.
    double angle_bound = 2.0 * 3.14159265358979323846 * 4.0;

    std::size_t node_count() const noexcept { return nodes.size(); }
    std::size_t generator_count() const noexcept { return generators.size(); }
    std::size_t edge_count() const noexcept { return edges.size(); }

    std::optional<std::size_t> find_node(const std::string& id) const;
    std::optional<std::size_t> find_generator(const std::string& id) const;

    std::vector<std::size_t> critical_edges() const;
    std::vector<std::size_t> pst_edges() const;
    /// Generators located at a node, in declaration order.
    std::vector<std::size_t> generators_at(std::size_t node) const;

    double total_injection0() const;
    double total_x_min() const;
    double total_x_max() const;

    /// Balanced base-case set-point sum, -sum_n I_n^0.
    double required_setpoint_sum() const { return -total_injection0(); }

    /// Throws GridError on any invariant violation.
    void validate() const;
};

struct ParseOptions {
    bool lenient = false;  // accept unknown keys
};

Grid grid_from_json(const nlohmann::json& doc, const ParseOptions& options = {});
Grid parse_grid(const std::filesystem::path& path, const ParseOptions& options = {});
nlohmann::json grid_to_json(const Grid& grid);

/// Equality on every field that the case file carries.
bool same_grid(const Grid& a, const Grid& b);

/// Largest delta such that every y in the scaled hyperbox
/// [y0 - dy_minus*delta, y0 + dy_plus*delta] keeps the total imbalance coverable
/// by the generator ranges. Returns 0 when even the nominal point fails and
/// `cap` when the box never reaches a capacity limit.
double uniqueness_bound(const Grid& grid, const std::vector<double>& delta_minus,
                        const std::vector<double>& delta_plus, double cap);

}  // namespace flexgrid
