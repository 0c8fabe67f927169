// flexgrid command-line front end: solve, evaluate, check, oracle.
//
// Exit codes: 0 success (certified for solve), 1 input error, 2 solver
// failure, 3 time limit reached.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexgrid/esip.hpp"
#include "flexgrid/oracle.hpp"
#include "flexgrid/regions.hpp"
#include "flexgrid/report.hpp"
#include "flexgrid/subproblems.hpp"

using namespace flexgrid;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInput = 1, kSolver = 2, kTimeLimit = 3 };

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonArgs {
    std::string case_path;
    std::string region = "box";
    bool lenient = false;
    double host_cap = 1e3;
    std::string output;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// A vector argument is an inline JSON array or a file holding one, possibly
// inside an object under one of `keys` (so a solve report can be fed back).
std::vector<double> read_vector(const std::string& path, std::initializer_list<const char*> keys, std::size_t size) {
    json doc;
    try {
        const bool inline_array = !path.empty() && path.front() == '[';
        doc = json::parse(inline_array ? path : read_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
    if (doc.is_object()) {
        for (const char* k : keys)
            if (doc.contains(k)) {
                doc = doc[k];
                break;
            }
    }
    if (!doc.is_array()) throw InputError(path + ": expected a JSON array of numbers");
    std::vector<double> v;
    for (const auto& e : doc) {
        if (!e.is_number()) throw InputError(path + ": expected a JSON array of numbers");
        v.push_back(e.get<double>());
    }
    if (v.size() != size)
        throw InputError(path + ": expected " + std::to_string(size) + " values, got " + std::to_string(v.size()));
    return v;
}

Region make_region(const Grid& grid, const CommonArgs& args) {
    try {
        if (args.region == "box") return make_hyperbox(grid, args.host_cap);
        return make_transfer(grid);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

void emit(const CommonArgs& args, const json& doc) {
    if (args.output.empty()) {
        std::cout << doc.dump(2) << '\n';
        return;
    }
    std::ofstream out(args.output);
    if (!out) throw InputError("cannot write '" + args.output + "'");
    out << doc.dump(2) << '\n';
}

void check_setpoints(const Grid& grid, const std::vector<double>& x) {
    double sum = 0.0;
    for (std::size_t g = 0; g < x.size(); ++g) {
        const auto& gen = grid.generators[g];
        if (x[g] < gen.x_min - 1e-9 || x[g] > gen.x_max + 1e-9)
            throw InputError("set-point of '" + gen.id + "' outside [" + std::to_string(gen.x_min) + ", " +
                             std::to_string(gen.x_max) + "]");
        sum += x[g];
    }
    if (std::abs(sum - grid.required_setpoint_sum()) > 1e-6)
        throw InputError("set-points do not balance the predicted injections");
}

std::vector<double> forecast_of(const Grid& grid) {
    return grid.forecast.empty() ? std::vector<double>(grid.node_count(), 0.0) : grid.forecast;
}

milp::SolveOptions milp_options(int seed) {
    milp::SolveOptions o;
    o.seed = seed;
    return o;
}

int cmd_solve(const CommonArgs& args, Config cfg, const std::string& log_path) {
    const std::string bytes = read_file(args.case_path);
    const Grid grid = grid_from_json(json::parse(bytes), {args.lenient});
    cfg.host_cap = args.host_cap;
    auto region = make_region(grid, args);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw InputError("cannot write '" + log_path + "'");
    }
    LogSink sink;
    if (log.is_open()) sink = [&](const LogRecord& r) { write_log_line(log, r); log.flush(); };

    RunReport rep;
    rep.case_path = args.case_path;
    rep.input_digest = hex_digest(bytes);
    rep.region = args.region;
    rep.config = cfg;
    rep.log_path = log_path;
    try {
        rep.result = solve_flexibility(grid, std::move(region), cfg, sink);
    } catch (const InfeasibleBaseCase& e) {
        throw InputError(e.what());
    }
    emit(args, to_json(rep));
    if (rep.result.certified) return kOk;
    if (rep.result.timed_out) return kTimeLimit;
    std::cerr << "flexgrid: stopped without closing the interval (iteration cap)\n";
    return kSolver;
}

int cmd_evaluate(const CommonArgs& args, const std::string& x_path, const Config& cfg) {
    const Grid grid = parse_grid(args.case_path, {args.lenient});
    const auto x = read_vector(x_path, {"x_star", "x"}, grid.generator_count());
    check_setpoints(grid, x);
    auto region = make_region(grid, args);
    const auto opts = milp_options(cfg.seed);
    const auto base = evaluate_control(grid, x, forecast_of(grid), ControlChoice{}, opts);
    if (base.g_star > 1e-7) throw InputError("infeasible base case: the forecast overloads a line at these set-points");
    double alpha = cfg.alpha_prime;
    if (auto* tr = std::get_if<TransferRegion>(&region)) alpha /= transfer_limits(grid, *tr, opts);

    AuxiliaryOptions ao;
    ao.tol = cfg.aux_tol;
    ao.eps0 = cfg.aux_eps0;
    ao.milp = opts;
    const auto res = evaluate_flexibility_at(grid, region, x, alpha, ao);
    emit(args, {{"schema_version", kReportSchemaVersion},
                {"version", std::string(kVersion)},
                {"command", "evaluate"},
                {"region", args.region},
                {"x", x},
                {"delta_wc_relax", res.delta_wc_relax},
                {"upper", res.upper},
                {"witness", res.y_witness},
                {"witness_unmanageable", res.witness_unmanageable},
                {"converged", res.converged},
                {"rounds", res.rounds}});
    return kOk;
}

// Points on a lattice over the host box of the region's uncertain nodes.
void write_sample(const Grid& grid, const Region& region, const std::vector<double>& x, int n, const std::string& path,
                  const milp::SolveOptions& opts) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    const auto lo = host_lower(region);
    const auto hi = host_upper(region);
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (hi[i] > lo[i]) axes.push_back(i);
    }
    for (auto a : axes) out << "y_" << grid.nodes[a].id << ',';
    out << "h,manageable\n";
    std::vector<int> idx(axes.size(), 0);
    std::vector<double> y = forecast(region);
    while (true) {
        for (std::size_t k = 0; k < axes.size(); ++k)
            y[axes[k]] = lo[axes[k]] + (hi[axes[k]] - lo[axes[k]]) * idx[k] / std::max(1, n - 1);
        const double h = region_h(region, grid, x, y);
        const bool ok = inner_min(grid, x, y, opts).g_star <= 1e-7;
        for (auto a : axes) out << y[a] << ',';
        out << h << ',' << (ok ? 1 : 0) << '\n';
        std::size_t k = 0;
        for (; k < axes.size(); ++k) {
            if (++idx[k] < n) break;
            idx[k] = 0;
        }
        if (k == axes.size()) break;
    }
}

int cmd_check(const CommonArgs& args, const std::string& x_path, const std::string& y_path, int sample,
              const std::string& csv, const Config& cfg) {
    const Grid grid = parse_grid(args.case_path, {args.lenient});
    const auto x = read_vector(x_path, {"x_star", "x"}, grid.generator_count());
    check_setpoints(grid, x);
    const auto y = y_path.empty() ? forecast_of(grid) : read_vector(y_path, {"y", "witness"}, grid.node_count());
    const auto opts = milp_options(cfg.seed);
    InnerMinResult r;
    try {
        r = inner_min(grid, x, y, opts);
    } catch (const std::domain_error& e) {
        throw InputError(std::string("scenario violates the load-distribution capacity: ") + e.what());
    }
    json flows = json::object();
    json shifts = json::object();
    for (std::size_t e = 0; e < grid.edge_count(); ++e) {
        flows[grid.edges[e].id] = r.flows[e];
        if (grid.edges[e].pst) shifts[grid.edges[e].id] = r.shifts[e];
    }
    json offsets = json::object();
    for (std::size_t g = 0; g < grid.generator_count(); ++g) offsets[grid.generators[g].id] = r.gen_offsets[g];
    emit(args, {{"schema_version", kReportSchemaVersion},
                {"version", std::string(kVersion)},
                {"command", "check"},
                {"x", x},
                {"y", y},
                {"g_star", r.g_star},
                {"manageable", r.g_star <= 1e-7},
                {"control", describe(grid, r.z_star)},
                {"flows", flows},
                {"shifts", shifts},
                {"generator_offsets", offsets}});
    if (sample > 0) write_sample(grid, make_region(grid, args), x, sample, csv, opts);
    return kOk;
}

int cmd_oracle(const CommonArgs& args, const std::string& x_path, double x_res, double y_res) {
    const Grid grid = parse_grid(args.case_path, {args.lenient});
    oracle::OracleConfig oc;
    oc.x_grid_resolution = x_res;
    oc.y_grid_resolution = y_res;
    oracle::Region region;
    if (args.region == "box") {
        region = oracle::box_region(grid, args.host_cap);
    } else {
        auto tr = std::get<TransferRegion>(make_region(grid, args));
        transfer_limits(grid, tr, {});
        region = oracle::transfer_region(grid, tr.delta_cap);
    }
    const oracle::Network net(grid, oc);
    oracle::Estimate est;
    if (!x_path.empty()) {
        const auto x = read_vector(x_path, {"x_star", "x"}, grid.generator_count());
        check_setpoints(grid, x);
        est = oracle::oracle_flexibility_at(net, region, x, oc);
    } else {
        est = oracle::oracle_flexibility(net, region, oc);
    }
    emit(args, {{"schema_version", kReportSchemaVersion},
                {"version", std::string(kVersion)},
                {"command", "oracle"},
                {"region", args.region},
                {"value", est.value},
                {"slack", est.slack},
                {"x", est.x},
                {"witness", est.witness}});
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flexibility-index maximization for DC power grids"};
    app.require_subcommand(1);

    CommonArgs common;
    Config cfg;
    std::string log_path, x_path, y_path, csv_path;
    std::string dump_dir;
    int sample = 0;
    double x_res = 0.25, y_res = 0.1;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("case", common.case_path, "case file (JSON)")->required();
        sub->add_option("--region", common.region, "uncertainty region")->check(CLI::IsMember({"box", "transfer"}));
        sub->add_flag("--lenient", common.lenient, "accept unknown keys in the case file");
        sub->add_option("--host-cap", common.host_cap, "host radius when generators never saturate");
        sub->add_option("-o,--output", common.output, "write the report here instead of stdout");
        sub->add_option("--seed", cfg.seed, "solver seed");
        sub->add_option("--alpha-prime", cfg.alpha_prime, "scaling of the region constraint");
    };

    auto* solve = app.add_subcommand("solve", "maximize the flexibility index");
    add_common(solve);
    solve->add_option("--rel-tol", cfg.rel_tol, "relative termination gap");
    solve->add_option("--eps-r0", cfg.eps_r0, "initial restriction of the upper procedure");
    solve->add_option("--r-r", cfg.r_r, "restriction reduction factor");
    solve->add_option("--aux-tol", cfg.aux_tol, "relative gap of the auxiliary evaluation");
    solve->add_flag("!--no-transformation", cfg.use_transformation, "disable the scenario transformation");
    solve->add_flag("!--no-dropping", cfg.use_dropping, "disable scenario dropping");
    solve->add_flag("!--no-auxiliary", cfg.use_auxiliary, "disable the auxiliary evaluation");
    solve->add_flag("--keep-transformed", cfg.keep_transformed, "keep dropped scenarios in transformed form");
    solve->add_flag("--single-thread", cfg.single_thread, "deterministic single-threaded schedule");
    solve->add_option("--time-limit", cfg.time_limit, "wall-clock limit in seconds");
    solve->add_option("--max-iterations", cfg.max_iterations, "cap on master iterations");
    solve->add_option("--dump-lp", dump_dir, "write every MILP to this directory");
    solve->add_option("--log", log_path, "iteration log (JSON lines); embedded in the report if absent");

    auto* evaluate = app.add_subcommand("evaluate", "pessimistic flexibility of fixed set-points");
    add_common(evaluate);
    evaluate->add_option("--x", x_path, "set-points (JSON array or report)")->required();
    evaluate->add_option("--aux-tol", cfg.aux_tol, "relative gap");

    auto* check = app.add_subcommand("check", "best control for one scenario");
    add_common(check);
    check->add_option("--x", x_path, "set-points (JSON array or report)")->required();
    check->add_option("--y", y_path, "scenario offsets per node (JSON array); forecast if absent");
    auto* sample_opt = check->add_option("--sample", sample, "N points per uncertain axis of the host box");
    check->add_option("--csv", csv_path, "sampling output")->needs(sample_opt);
    sample_opt->needs(check->get_option("--csv"));

    auto* oracle_cmd = app.add_subcommand("oracle", "enumeration reference value (tiny grids only)");
    add_common(oracle_cmd);
    oracle_cmd->add_option("--x", x_path, "evaluate these set-points only");
    oracle_cmd->add_option("--x-resolution", x_res, "set-point grid spacing, MW");
    oracle_cmd->add_option("--y-resolution", y_res, "direction grid spacing, fraction of the box");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }
    if (!dump_dir.empty()) cfg.dump_lp_dir = dump_dir;

    try {
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        if (*solve) return cmd_solve(common, cfg, log_path);
        if (*evaluate) return cmd_evaluate(common, x_path, cfg);
        if (*check) return cmd_check(common, x_path, y_path, sample, csv_path, cfg);
        return cmd_oracle(common, x_path, x_res, y_res);
    } catch (const InputError& e) {
        std::cerr << "flexgrid: " << e.what() << '\n';
        return kInput;
    } catch (const GridError& e) {
        std::cerr << "flexgrid: " << e.what() << '\n';
        return kInput;
    } catch (const json::exception& e) {
        std::cerr << "flexgrid: " << e.what() << '\n';
        return kInput;
    } catch (const oracle::CapExceeded& e) {
        std::cerr << "flexgrid: " << e.what() << '\n';
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "flexgrid: solver failure: " << e.what() << '\n';
        return kSolver;
    }
}
