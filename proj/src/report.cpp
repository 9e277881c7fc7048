#include "pptlab/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>

#include "pptlab/corpus_builders.hpp"
#include "pptlab/error.hpp"

namespace pptlab {
namespace {

constexpr const char* kDash = "—";

const std::vector<std::string>& main_order() {
  static const std::vector<std::string> order = {"FT",  "PT",         "Hybrid PT",   "LM Adaption",
                                                 "PPT", "Hybrid PPT", "Unified PPT", "PT (MC)"};
  return order;
}

const std::vector<std::string>& uni_order() {
  static const std::vector<std::string> order = {"FT", "PT", "PT (MC)", "Unified PPT"};
  return order;
}

std::string subscript(const std::string& s) {
  static const char* digits[] = {"₀", "₁", "₂", "₃", "₄", "₅", "₆", "₇", "₈", "₉"};
  std::string out;
  for (char c : s) {
    if (c >= '0' && c <= '9') out += digits[c - '0'];
    else out.push_back(c);
  }
  return out;
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

bool is_ft(const std::string& method) {
  try {
    return !is_prompt_method(parse_method(method));
  } catch (const Error&) {
    return false;
  }
}

struct Column {
  std::string task;
  std::size_t samples = 0;
  std::string header;
};

// Rows in canonical order, then unknown methods by first appearance.
std::vector<std::string> row_order(std::span<const ExperimentResult> results, const std::vector<std::string>& canon,
                                   bool canon_only) {
  std::vector<std::string> present;
  for (const auto& r : results) {
    if (std::find(present.begin(), present.end(), r.method) == present.end()) present.push_back(r.method);
  }
  std::vector<std::string> rows;
  for (const auto& m : canon) {
    if (std::find(present.begin(), present.end(), m) != present.end()) rows.push_back(m);
  }
  if (!canon_only) {
    for (const auto& m : present) {
      if (std::find(rows.begin(), rows.end(), m) == rows.end()) rows.push_back(m);
    }
  }
  return rows;
}

Report render_grid(std::span<const ExperimentResult> results, const std::vector<std::string>& rows,
                   const std::vector<Column>& cols, bool underline, bool params_column, const std::string& title) {
  Report rep;
  std::map<std::pair<std::string, std::size_t>, const ExperimentResult*> cell;
  auto key_of = [](const std::string& method, std::size_t col) { return std::pair{method, col}; };
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (const auto& r : results) {
      if (r.task != cols[c].task || (cols[c].samples && r.samples != cols[c].samples)) continue;
      if (std::find(rows.begin(), rows.end(), r.method) == rows.end()) continue;
      auto [it, inserted] = cell.try_emplace(key_of(r.method, c), &r);
      if (!inserted) rep.warnings.push_back("duplicate result for " + r.method + " / " + cols[c].header + "; first kept");
    }
  }

  // Best values compare the displayed (rounded) numbers so ties are marked alike.
  std::vector<std::optional<std::string>> best(cols.size()), best_pt(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    std::optional<double> b, bp;
    for (const auto& m : rows) {
      auto it = cell.find(key_of(m, c));
      if (it == cell.end()) continue;
      const double v = std::stod(fixed(it->second->mean * 100.0, 1));
      if (!b || v > *b) b = v;
      if (!is_ft(m) && (!bp || v > *bp)) bp = v;
    }
    if (b) best[c] = fixed(*b, 1);
    if (bp) best_pt[c] = fixed(*bp, 1);
  }

  std::string md = "# " + title + "\n\n| Method |";
  std::string sep = "|---|";
  if (params_column) {
    md += " Params |";
    sep += "---:|";
  }
  for (const auto& col : cols) {
    md += " " + col.header + " |";
    sep += "---:|";
  }
  md += "\n" + sep + "\n";
  std::string csv = "method,task,samples,metric,mean,std,n_seeds,tunable_params,best,best_pt\n";

  for (const auto& m : rows) {
    md += "| " + m + " |";
    if (params_column) {
      std::optional<std::size_t> params;
      for (std::size_t c = 0; c < cols.size() && !params; ++c) {
        auto it = cell.find(key_of(m, c));
        if (it != cell.end()) params = it->second->tunable_params;
      }
      md += " " + (params ? std::to_string(*params) : std::string(kDash)) + " |";
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      auto it = cell.find(key_of(m, c));
      if (it == cell.end()) {
        md += " " + std::string(kDash) + " |";
        rep.warnings.push_back("missing cell: " + m + " / " + cols[c].header);
        continue;
      }
      const auto& r = *it->second;
      const auto shown = fixed(r.mean * 100.0, 1);
      const bool is_best = best[c] && shown == *best[c];
      const bool is_best_pt = underline && !is_ft(m) && best_pt[c] && shown == *best_pt[c];
      std::string text = format_cell(r.mean, r.std);
      if (is_best_pt) text = "<u>" + text + "</u>";
      if (is_best) text = "**" + text + "**";
      md += " " + text + " |";
      csv += m + "," + r.task + "," + std::to_string(r.samples) + "," + r.metric + "," + fixed(r.mean, 6) + "," +
             fixed(r.std, 6) + "," + std::to_string(r.per_seed.size()) + "," + std::to_string(r.tunable_params) + "," +
             (is_best ? "1" : "0") + "," + (is_best_pt ? "1" : "0") + "\n";
    }
    md += "\n";
  }
  if (!rep.warnings.empty()) {
    md += "\nWarnings:\n\n";
    for (const auto& w : rep.warnings) md += "- " + w + "\n";
  }
  rep.csv = std::move(csv);
  rep.markdown = std::move(md);
  return rep;
}

std::vector<Column> task_columns(std::span<const ExperimentResult> results) {
  std::vector<Column> cols;
  for (const auto& r : results) {
    if (std::none_of(cols.begin(), cols.end(), [&](const Column& c) { return c.task == r.task; })) {
      cols.push_back({r.task, 0, r.task});
    }
  }
  return cols;
}

Report render_convergence(std::span<const ExperimentResult> results) {
  Report rep;
  std::string csv = "method,task,seed,step,dev_metric\n";
  std::string md = "# Convergence\n";
  std::vector<std::string> tasks;
  for (const auto& r : results) {
    if (std::find(tasks.begin(), tasks.end(), r.task) == tasks.end()) tasks.push_back(r.task);
  }
  const auto rows = row_order(results, main_order(), false);
  for (const auto& task : tasks) {
    std::vector<const ExperimentResult*> series;
    for (const auto& m : rows) {
      for (const auto& r : results) {
        if (r.task == task && r.method == m) {
          series.push_back(&r);
          break;
        }
      }
    }
    // Mean over seeds at each recorded step.
    std::map<std::int64_t, std::map<std::size_t, std::pair<double, int>>> table;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const auto& r = *series[s];
      if (r.dev_curves.empty()) rep.warnings.push_back("no dev curve for " + r.method + " / " + task);
      for (std::size_t k = 0; k < r.dev_curves.size(); ++k) {
        const auto seed = k < r.seeds.size() ? r.seeds[k] : 0;
        for (const auto& p : r.dev_curves[k]) {
          csv += r.method + "," + task + "," + std::to_string(seed) + "," + std::to_string(p.step) + "," +
                 fixed(p.value, 6) + "\n";
          auto& acc = table[p.step][s];
          acc.first += p.value;
          acc.second += 1;
        }
      }
    }
    md += "\n## " + task + "\n\n| Step |";
    std::string sep = "|---:|";
    for (const auto* r : series) {
      md += " " + r->method + " |";
      sep += "---:|";
    }
    md += "\n" + sep + "\n";
    for (const auto& [step, by_series] : table) {
      md += "| " + std::to_string(step) + " |";
      for (std::size_t s = 0; s < series.size(); ++s) {
        auto it = by_series.find(s);
        md += " " + (it == by_series.end() ? std::string(kDash) : fixed(100.0 * it->second.first / it->second.second, 1)) +
              " |";
      }
      md += "\n";
    }
  }
  if (!rep.warnings.empty()) {
    md += "\nWarnings:\n\n";
    for (const auto& w : rep.warnings) md += "- " + w + "\n";
  }
  rep.csv = std::move(csv);
  rep.markdown = std::move(md);
  return rep;
}

}  // namespace

ReportLayout parse_layout(std::string_view name) {
  std::string n(name);
  for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (n == "main" || n == "main_table") return ReportLayout::Main;
  if (n == "uni" || n == "uni_table") return ReportLayout::Uni;
  if (n == "sweep") return ReportLayout::Sweep;
  if (n == "convergence") return ReportLayout::Convergence;
  throw Error("unknown report layout '" + std::string(name) + "'");
}

std::string_view to_string(ReportLayout layout) {
  switch (layout) {
    case ReportLayout::Main: return "main";
    case ReportLayout::Uni: return "uni";
    case ReportLayout::Sweep: return "sweep";
    case ReportLayout::Convergence: return "convergence";
  }
  return "main";
}

std::string format_cell(double mean, double std) {
  return fixed(mean * 100.0, 1) + "₍" + subscript(fixed(std * 100.0, 1)) + "₎";
}

Report render_report(std::span<const ExperimentResult> results, ReportLayout layout) {
  switch (layout) {
    case ReportLayout::Main:
      return render_grid(results, row_order(results, main_order(), false), task_columns(results), true, true,
                         "Main results");
    case ReportLayout::Uni:
      return render_grid(results, row_order(results, uni_order(), true), task_columns(results), false, false,
                         "Unified multiple-choice results");
    case ReportLayout::Sweep: {
      std::vector<Column> cols;
      for (const auto& task : task_columns(results)) {
        std::vector<std::size_t> sizes;
        for (const auto& r : results) {
          if (r.task == task.task && std::find(sizes.begin(), sizes.end(), r.samples) == sizes.end()) {
            sizes.push_back(r.samples);
          }
        }
        std::sort(sizes.begin(), sizes.end());
        for (auto s : sizes) cols.push_back({task.task, s, task.task + "@" + std::to_string(s)});
      }
      return render_grid(results, row_order(results, main_order(), false), cols, true, false, "Sample sweep");
    }
    case ReportLayout::Convergence:
      return render_convergence(results);
  }
  throw Error("unknown report layout");
}

Report emit_report(std::span<const ExperimentResult> results, ReportLayout layout, const std::filesystem::path& out_dir) {
  auto rep = render_report(results, layout);
  const std::string name(to_string(layout));
  write_file_atomic(out_dir / (name + ".csv"), rep.csv);
  write_file_atomic(out_dir / (name + ".md"), rep.markdown);
  return rep;
}

}  // namespace pptlab
