#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "flexgrid/esip.hpp"

namespace flexgrid {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kVersion = "1.0.0";

/// 64-bit FNV-1a, used to tie a report to the exact case-file bytes.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex_digest(std::string_view bytes);

nlohmann::json to_json(const Config& config);
nlohmann::json to_json(const LogRecord& record);

/// One JSON object per line, flexibility and objective (-delta) conventions.
void write_log_line(std::ostream& out, const LogRecord& record);

struct RunReport {
    std::string case_path;
    std::string input_digest;
    std::string region;
    Config config;
    FlexibilityResult result;
    std::string log_path;  // empty when the log is embedded
};

nlohmann::json to_json(const RunReport& report);

}  // namespace flexgrid
