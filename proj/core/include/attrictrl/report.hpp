#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "attrictrl/eval.hpp"

namespace attrictrl {

enum class ReportFormat { Csv, Json, Svg };

ReportFormat parse_report_format(std::string_view name);
std::string_view extension(ReportFormat f) noexcept;

// CSV: one row per pair followed by one summary row per result.
// JSON: {"format_version": 1, "results": [...]}.
// SVG: mean v_result against v_target per attribute, with the identity line.
// Throws ContractError when results is empty or any result has no pairs.
std::string emit_report(std::span<const SweepResult> results, ReportFormat format);

void write_report(const std::filesystem::path& path, std::span<const SweepResult> results, ReportFormat format);

}  // namespace attrictrl
