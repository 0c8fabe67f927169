#include "flexgrid/report.hpp"

#include <cmath>
#include <cstdio>

namespace flexgrid {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex_digest(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

namespace {

// JSON has no infinity; unlimited values are written as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const Config& c) {
    return {
        {"alpha_prime", c.alpha_prime},
        {"rel_tol", c.rel_tol},
        {"eps_r0", c.eps_r0},
        {"r_r", c.r_r},
        {"aux_tol", c.aux_tol},
        {"aux_eps0", c.aux_eps0},
        {"time_limit", finite_or_null(c.time_limit)},
        {"use_transformation", c.use_transformation},
        {"use_dropping", c.use_dropping},
        {"use_auxiliary", c.use_auxiliary},
        {"keep_transformed", c.keep_transformed},
        {"single_thread", c.single_thread},
        {"seed", c.seed},
        {"integrality_focus", c.integrality_focus},
        {"host_cap", c.host_cap},
        {"max_iterations", c.max_iterations},
    };
}

json to_json(const LogRecord& r) {
    return {
        {"procedure", r.procedure},
        {"iter", r.iter},
        {"eps_r", r.eps_r},
        {"delta_candidate", r.delta_candidate},
        {"wc_value", finite_or_null(r.wc_value)},
        {"pool_size", r.pool_size},
        {"wall_ms", r.wall_ms},
        {"delta_optimistic", r.delta_optimistic},
        {"delta_guaranteed", r.delta_guaranteed},
        {"objective_lower", -r.delta_optimistic},
        {"objective_upper", -r.delta_guaranteed},
        {"event", r.event},
    };
}

void write_log_line(std::ostream& out, const LogRecord& record) { out << to_json(record).dump() << '\n'; }

json to_json(const RunReport& rep) {
    const auto& r = rep.result;
    json log = json::array();
    if (rep.log_path.empty())
        for (const auto& rec : r.log) log.push_back(to_json(rec));
    return {
        {"schema_version", kReportSchemaVersion},
        {"version", std::string(kVersion)},
        {"case", rep.case_path},
        {"input_digest", rep.input_digest},
        {"region", rep.region},
        {"config", to_json(rep.config)},
        {"interval",
         {{"delta_guaranteed", r.delta_guaranteed},
          {"delta_optimistic", r.delta_optimistic},
          {"objective_lower", -r.delta_optimistic},
          {"objective_upper", -r.delta_guaranteed}}},
        {"certified", r.certified},
        {"timed_out", r.timed_out},
        {"x_star", r.x_star},
        {"alpha", r.alpha},
        {"delta_ceiling", r.ceiling},
        {"pool", {{"size", r.pool_size}, {"dropped", r.dropped}}},
        {"iterations", {{"lower", r.lower_iterations}, {"upper", r.upper_iterations}, {"auxiliary", r.auxiliary_runs}}},
        {"timings", {{"wall_ms", r.wall_ms}}},
        {"log_path", rep.log_path.empty() ? json(nullptr) : json(rep.log_path)},
        {"log", log},
    };
}

}  // namespace flexgrid
