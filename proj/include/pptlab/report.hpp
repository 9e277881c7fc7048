#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pptlab/harness.hpp"

namespace pptlab {

enum class ReportLayout { Main, Uni, Sweep, Convergence };
ReportLayout parse_layout(std::string_view name);
std::string_view to_string(ReportLayout layout);

/// Percent mean to one decimal with the std as a subscript: "93.5₍₀.₃₎".
std::string format_cell(double mean, double std);

struct Report {
  std::string csv;
  std::string markdown;
  std::vector<std::string> warnings;
};

/// Main/uni: method rows by task columns. Sweep: method rows by
/// task@samples columns. Bold marks the best cell of a column, underline the
/// best prompt-tuning method (main and sweep only). Missing cells render as
/// "—" and are listed in the warnings. Convergence: mean dev metric per
/// evaluation step and method.
Report render_report(std::span<const ExperimentResult> results, ReportLayout layout);

/// Writes <out_dir>/<layout>.csv and <out_dir>/<layout>.md.
Report emit_report(std::span<const ExperimentResult> results, ReportLayout layout, const std::filesystem::path& out_dir);

}  // namespace pptlab
