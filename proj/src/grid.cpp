#include "flexgrid/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace flexgrid {

using nlohmann::json;

std::optional<std::size_t> Grid::find_node(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id == id) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> Grid::find_generator(const std::string& id) const {
    for (std::size_t i = 0; i < generators.size(); ++i) {
        if (generators[i].id == id) return i;
    }
    return std::nullopt;
}

std::vector<std::size_t> Grid::critical_edges() const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].critical()) out.push_back(e);
    }
    return out;
}

std::vector<std::size_t> Grid::pst_edges() const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].pst) out.push_back(e);
    }
    return out;
}

std::vector<std::size_t> Grid::generators_at(std::size_t node) const {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < generators.size(); ++g) {
        if (generators[g].node == node) out.push_back(g);
    }
    return out;
}

double Grid::total_injection0() const {
    double s = 0.0;
    for (const auto& n : nodes) s += n.injection0;
    return s;
}

double Grid::total_x_min() const {
    double s = 0.0;
    for (const auto& g : generators) s += g.x_min;
    return s;
}

double Grid::total_x_max() const {
    double s = 0.0;
    for (const auto& g : generators) s += g.x_max;
    return s;
}

namespace {

std::string at(const std::string& list, std::size_t i, const std::string& field = {}) {
    std::string p = list + "[" + std::to_string(i) + "]";
    if (!field.empty()) p += "." + field;
    return p;
}

std::string fmt_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// Connectivity over edges only; merge couplers are open in the base state.
bool connected(const Grid& grid) {
    const std::size_t n = grid.nodes.size();
    if (n == 0) return false;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& e : grid.edges) parent[find(e.from)] = find(e.to);
    const std::size_t root = find(0);
    for (std::size_t i = 1; i < n; ++i) {
        if (find(i) != root) return false;
    }
    return true;
}

}  // namespace

void Grid::validate() const {
    if (nodes.empty()) throw GridError("nodes", "at least one node is required");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (!seen.insert(n.id).second) throw GridError(at("nodes", i, "id"), "duplicate node id '" + n.id + "'");
        if (!std::isfinite(n.injection0)) throw GridError(at("nodes", i, "injection0"), "must be finite");
        if (!(n.dy_minus >= 0.0) || !std::isfinite(n.dy_minus)) throw GridError(at("nodes", i, "dy_minus"), "must be finite and >= 0");
        if (!(n.dy_plus >= 0.0) || !std::isfinite(n.dy_plus)) throw GridError(at("nodes", i, "dy_plus"), "must be finite and >= 0");
    }
    if (reference_node >= nodes.size()) throw GridError("reference_node", "unknown node");

    seen.clear();
    double csum = 0.0;
    for (std::size_t g = 0; g < generators.size(); ++g) {
        const auto& gen = generators[g];
        if (!seen.insert(gen.id).second) throw GridError(at("generators", g, "id"), "duplicate generator id '" + gen.id + "'");
        if (gen.node >= nodes.size()) throw GridError(at("generators", g, "node"), "unknown node");
        if (!std::isfinite(gen.x_min) || !std::isfinite(gen.x_max) || gen.x_min > gen.x_max)
            throw GridError(at("generators", g, "x_min"), "x_min must not exceed x_max");
        if (!(gen.contribution >= 0.0)) throw GridError(at("generators", g, "contribution"), "must be >= 0");
        csum += gen.contribution;
    }
    if (generators.empty()) throw GridError("generators", "at least one generator is required");
    if (std::abs(csum - 1.0) > 1e-9) throw GridError("generators", "contribution factors sum to " + fmt_number(csum));

    seen.clear();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& edge = edges[e];
        if (!seen.insert(edge.id).second) throw GridError(at("edges", e, "id"), "duplicate edge id '" + edge.id + "'");
        if (edge.from >= nodes.size()) throw GridError(at("edges", e, "from"), "unknown node");
        if (edge.to >= nodes.size()) throw GridError(at("edges", e, "to"), "unknown node");
        if (edge.from == edge.to) throw GridError(at("edges", e, "to"), "self loop");
        if (!(edge.susceptance > 0.0) || !std::isfinite(edge.susceptance))
            throw GridError(at("edges", e, "susceptance"), "must be positive");
        if (edge.limit && !(*edge.limit > 0.0)) throw GridError(at("edges", e, "limit"), "must be positive");
        if (edge.pst) {
            const auto& p = *edge.pst;
            if (!(p.threshold >= 0.0)) throw GridError(at("edges", e, "pst.threshold"), "must be >= 0");
            if (!(p.shift_min <= 0.0)) throw GridError(at("edges", e, "pst.shift_min"), "must be <= 0");
            if (!(p.shift_max >= 0.0)) throw GridError(at("edges", e, "pst.shift_max"), "must be >= 0");
        }
    }

    seen.clear();
    for (std::size_t b = 0; b < merge_pairs.size(); ++b) {
        const auto& mp = merge_pairs[b];
        if (!seen.insert(mp.id).second) throw GridError(at("merge_pairs", b, "id"), "duplicate merge pair id '" + mp.id + "'");
        if (mp.node_a >= nodes.size()) throw GridError(at("merge_pairs", b, "node_a"), "unknown node");
        if (mp.node_b >= nodes.size()) throw GridError(at("merge_pairs", b, "node_b"), "unknown node");
        if (mp.node_a == mp.node_b) throw GridError(at("merge_pairs", b, "node_b"), "node_a and node_b must differ");
    }

    std::set<std::size_t> in_region;
    for (const auto& [name, members] : regions) {
        for (auto n : members) {
            if (n >= nodes.size()) throw GridError("regions." + name, "unknown node");
            if (!in_region.insert(n).second) throw GridError("regions." + name, "regions must be disjoint (node '" + nodes[n].id + "')");
        }
    }

    if (!forecast.empty() && forecast.size() != nodes.size()) throw GridError("forecast", "size mismatch");
    if (!(angle_bound > 0.0) || !std::isfinite(angle_bound)) throw GridError("angle_bound", "must be positive and finite");

    if (!connected(*this)) throw GridError("edges", "graph is not connected");
}

namespace {

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed, bool lenient) {
    if (!obj.is_object()) throw GridError(path, "expected an object");
    if (lenient) return;
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
            throw GridError(path.empty() ? key : path + "." + key, "unknown key");
    }
}

const json& require(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw GridError(path.empty() ? std::string(key) : path + "." + key, "missing");
    return *it;
}

double number(const json& obj, const std::string& path, const char* key) {
    const auto& v = require(obj, path, key);
    if (!v.is_number()) throw GridError(path + "." + key, "expected a number");
    return v.get<double>();
}

std::string text(const json& v, const std::string& path) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw GridError(path, "expected an identifier");
}

}  // namespace

Grid grid_from_json(const json& doc, const ParseOptions& options) {
    check_keys(doc, "",
               {"units", "reference_node", "nodes", "generators", "edges", "merge_pairs", "regions", "forecast",
                "angle_bound", "name", "description"},
               options.lenient);
    if (auto u = doc.find("units"); u != doc.end()) {
        check_keys(*u, "units", {"power", "angle"}, options.lenient);
        if (u->contains("power") && (*u)["power"] != "MW") throw GridError("units.power", "only MW is supported");
        if (u->contains("angle") && (*u)["angle"] != "rad") throw GridError("units.angle", "only rad is supported");
    }

    Grid grid;
    std::map<std::string, std::size_t> node_index;

    const auto& nodes = require(doc, "", "nodes");
    if (!nodes.is_array()) throw GridError("nodes", "expected an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        const auto p = at("nodes", i);
        check_keys(n, p, {"id", "injection0", "dy_minus", "dy_plus", "name"}, options.lenient);
        Node node;
        node.id = text(require(n, p, "id"), p + ".id");
        node.injection0 = number(n, p, "injection0");
        node.dy_minus = n.contains("dy_minus") ? number(n, p, "dy_minus") : 0.0;
        node.dy_plus = n.contains("dy_plus") ? number(n, p, "dy_plus") : 0.0;
        if (!node_index.emplace(node.id, i).second) throw GridError(p + ".id", "duplicate node id '" + node.id + "'");
        grid.nodes.push_back(std::move(node));
    }

    auto resolve = [&](const json& v, const std::string& path) {
        const auto id = text(v, path);
        auto it = node_index.find(id);
        if (it == node_index.end()) throw GridError(path, "dangling node reference '" + id + "'");
        return it->second;
    };

    grid.reference_node = resolve(require(doc, "", "reference_node"), "reference_node");

    const auto& gens = require(doc, "", "generators");
    if (!gens.is_array()) throw GridError("generators", "expected an array");
    for (std::size_t g = 0; g < gens.size(); ++g) {
        const auto& j = gens[g];
        const auto p = at("generators", g);
        check_keys(j, p, {"id", "node", "x_min", "x_max", "contribution", "name"}, options.lenient);
        Generator gen;
        gen.id = text(require(j, p, "id"), p + ".id");
        gen.node = resolve(require(j, p, "node"), p + ".node");
        gen.x_min = number(j, p, "x_min");
        gen.x_max = number(j, p, "x_max");
        gen.contribution = number(j, p, "contribution");
        grid.generators.push_back(std::move(gen));
    }

    if (auto edges = doc.find("edges"); edges != doc.end()) {
        if (!edges->is_array()) throw GridError("edges", "expected an array");
        for (std::size_t e = 0; e < edges->size(); ++e) {
            const auto& j = (*edges)[e];
            const auto p = at("edges", e);
            check_keys(j, p, {"id", "from", "to", "susceptance", "limit", "pst", "name"}, options.lenient);
            Edge edge;
            edge.id = text(require(j, p, "id"), p + ".id");
            edge.from = resolve(require(j, p, "from"), p + ".from");
            edge.to = resolve(require(j, p, "to"), p + ".to");
            edge.susceptance = number(j, p, "susceptance");
            if (j.contains("limit") && !j["limit"].is_null()) edge.limit = number(j, p, "limit");
            if (j.contains("pst") && !j["pst"].is_null()) {
                const auto& s = j["pst"];
                const auto sp = p + ".pst";
                check_keys(s, sp, {"threshold", "shift_min", "shift_max"}, options.lenient);
                edge.pst = PstSpec{number(s, sp, "threshold"), number(s, sp, "shift_min"), number(s, sp, "shift_max")};
            }
            grid.edges.push_back(std::move(edge));
        }
    }

    if (auto pairs = doc.find("merge_pairs"); pairs != doc.end()) {
        if (!pairs->is_array()) throw GridError("merge_pairs", "expected an array");
        for (std::size_t b = 0; b < pairs->size(); ++b) {
            const auto& j = (*pairs)[b];
            const auto p = at("merge_pairs", b);
            check_keys(j, p, {"id", "node_a", "node_b", "name"}, options.lenient);
            MergePair mp;
            mp.id = text(require(j, p, "id"), p + ".id");
            mp.node_a = resolve(require(j, p, "node_a"), p + ".node_a");
            mp.node_b = resolve(require(j, p, "node_b"), p + ".node_b");
            grid.merge_pairs.push_back(std::move(mp));
        }
    }

    if (auto regions = doc.find("regions"); regions != doc.end()) {
        if (!regions->is_object()) throw GridError("regions", "expected an object");
        for (const auto& [name, members] : regions->items()) {
            if (!members.is_array()) throw GridError("regions." + name, "expected an array");
            std::vector<std::size_t> ids;
            for (std::size_t k = 0; k < members.size(); ++k)
                ids.push_back(resolve(members[k], at("regions." + name, k)));
            grid.regions.emplace(name, std::move(ids));
        }
    }

    grid.forecast.assign(grid.nodes.size(), 0.0);
    if (auto fc = doc.find("forecast"); fc != doc.end()) {
        if (!fc->is_object()) throw GridError("forecast", "expected an object of node id -> offset");
        for (const auto& [id, v] : fc->items()) {
            auto it = node_index.find(id);
            if (it == node_index.end()) throw GridError("forecast." + id, "dangling node reference '" + id + "'");
            if (!v.is_number()) throw GridError("forecast." + id, "expected a number");
            grid.forecast[it->second] = v.get<double>();
        }
    }
    if (auto ab = doc.find("angle_bound"); ab != doc.end()) {
        if (!ab->is_number()) throw GridError("angle_bound", "expected a number");
        grid.angle_bound = ab->get<double>();
    }

    grid.validate();
    return grid;
}

Grid parse_grid(const std::filesystem::path& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) throw GridError("", "cannot open case file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& err) {
        throw GridError("", std::string("malformed JSON: ") + err.what());
    }
    return grid_from_json(doc, options);
}

json grid_to_json(const Grid& grid) {
    json doc;
    doc["units"] = {{"power", "MW"}, {"angle", "rad"}};
    doc["reference_node"] = grid.nodes.at(grid.reference_node).id;
    doc["nodes"] = json::array();
    for (const auto& n : grid.nodes)
        doc["nodes"].push_back({{"id", n.id}, {"injection0", n.injection0}, {"dy_minus", n.dy_minus}, {"dy_plus", n.dy_plus}});
    doc["generators"] = json::array();
    for (const auto& g : grid.generators)
        doc["generators"].push_back({{"id", g.id},
                                     {"node", grid.nodes[g.node].id},
                                     {"x_min", g.x_min},
                                     {"x_max", g.x_max},
                                     {"contribution", g.contribution}});
    doc["edges"] = json::array();
    for (const auto& e : grid.edges) {
        json j = {{"id", e.id}, {"from", grid.nodes[e.from].id}, {"to", grid.nodes[e.to].id}, {"susceptance", e.susceptance}};
        if (e.limit) j["limit"] = *e.limit;
        if (e.pst) j["pst"] = {{"threshold", e.pst->threshold}, {"shift_min", e.pst->shift_min}, {"shift_max", e.pst->shift_max}};
        doc["edges"].push_back(std::move(j));
    }
    doc["merge_pairs"] = json::array();
    for (const auto& b : grid.merge_pairs)
        doc["merge_pairs"].push_back({{"id", b.id}, {"node_a", grid.nodes[b.node_a].id}, {"node_b", grid.nodes[b.node_b].id}});
    if (!grid.regions.empty()) {
        json r = json::object();
        for (const auto& [name, members] : grid.regions) {
            json ids = json::array();
            for (auto n : members) ids.push_back(grid.nodes[n].id);
            r[name] = std::move(ids);
        }
        doc["regions"] = std::move(r);
    }
    if (std::any_of(grid.forecast.begin(), grid.forecast.end(), [](double v) { return v != 0.0; })) {
        json f = json::object();
        for (std::size_t n = 0; n < grid.nodes.size(); ++n)
            if (grid.forecast[n] != 0.0) f[grid.nodes[n].id] = grid.forecast[n];
        doc["forecast"] = std::move(f);
    }
    doc["angle_bound"] = grid.angle_bound;
    return doc;
}

bool same_grid(const Grid& a, const Grid& b) {
    return grid_to_json(a) == grid_to_json(b);
}

double uniqueness_bound(const Grid& grid, const std::vector<double>& delta_minus,
                        const std::vector<double>& delta_plus, double cap) {
    // Feasible total: -sum x_max <= sum_n (I0 + y) <= -sum x_min.
    double base = grid.total_injection0();
    for (double v : grid.forecast) base += v;
    const double low = -grid.total_x_max();
    const double high = -grid.total_x_min();
    if (base < low - 1e-12 || base > high + 1e-12) return 0.0;
    const double down = std::accumulate(delta_minus.begin(), delta_minus.end(), 0.0);
    const double up = std::accumulate(delta_plus.begin(), delta_plus.end(), 0.0);
    double bound = cap;
    if (down > 0.0) bound = std::min(bound, (base - low) / down);
    if (up > 0.0) bound = std::min(bound, (high - base) / up);
    return std::max(0.0, bound);
}

}  // namespace flexgrid
