#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "golden_util.hpp"
#include "pptlab/error.hpp"
#include "pptlab/report.hpp"
#include "report_fixture.hpp"

using namespace pptlab;
using namespace pptlab::testing;

namespace {

// PPTLAB_UPDATE_GOLDEN=1 rewrites the stored files instead of comparing.
void check_golden(const std::string& name, const std::string& actual) {
  const auto path = golden_path(name);
  if (std::getenv("PPTLAB_UPDATE_GOLDEN")) {
    std::ofstream(path, std::ios::binary) << actual;
    return;
  }
  INFO(name);
  CHECK(read_file(path) == actual);
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("cell format") {
  CHECK(format_cell(0.935, 0.003) == "93.5₍₀.₃₎");
  CHECK(format_cell(0.5, 0.0) == "50.0₍₀.₀₎");
  CHECK(format_cell(1.0, 0.1234) == "100.0₍₁₂.₃₎");
}

TEST_CASE("layout names") {
  CHECK(parse_layout("main") == ReportLayout::Main);
  CHECK(parse_layout("main_table") == ReportLayout::Main);
  CHECK(parse_layout("uni_table") == ReportLayout::Uni);
  CHECK(parse_layout("sweep") == ReportLayout::Sweep);
  CHECK(parse_layout("convergence") == ReportLayout::Convergence);
  CHECK_THROWS_AS(parse_layout("figure"), Error);
}

TEST_CASE("single result gives a one-cell table") {
  const std::vector<ExperimentResult> one = {fixture_result("PT", "sst2", {0.5}, 6400)};
  const auto rep = render_report(one, ReportLayout::Main);
  CHECK(rep.warnings.empty());
  CHECK(rep.markdown == "# Main results\n\n| Method | Params | sst2 |\n|---|---:|---:|\n| PT | 6400 | **<u>50.0₍₀.₀₎</u>** |\n");
}

TEST_CASE("best prompt method is underlined") {
  const std::vector<ExperimentResult> rs = {
      fixture_result("FT", "t", {0.9}, 100),
      fixture_result("PT", "t", {0.347}, 10),
      fixture_result("PPT", "t", {0.600}, 10),
  };
  const auto md = render_report(rs, ReportLayout::Main).markdown;
  CHECK(md.find("| PPT | 10 | <u>60.0₍₀.₀₎</u> |") != std::string::npos);
  CHECK(md.find("| PT | 10 | 34.7₍₀.₀₎ |") != std::string::npos);
  CHECK(md.find("| FT | 100 | **90.0₍₀.₀₎** |") != std::string::npos);
}

TEST_CASE("main layout marks and warnings") {
  const auto rs = main_fixture();
  const auto rep = render_report(rs, ReportLayout::Main);
  REQUIRE(rep.warnings.size() == 1);
  CHECK(rep.warnings[0] == "missing cell: Hybrid PT / rte");
  CHECK(rep.markdown.find("| Hybrid PT | 6400 | 86.0₍₀.₀₎ | 62.0₍₀.₀₎ | —") != std::string::npos);
  // ties on the displayed value are marked alike
  CHECK(count(rep.markdown, "**<u>93.5") == 2);
  CHECK(count(rep.markdown, "**<u>63.0") == 2);
  CHECK(rep.markdown.find("**71.0₍₁.₀₎**") != std::string::npos);
  CHECK(rep.markdown.find("<u>66.0₍₀.₀₎</u>") != std::string::npos);
  // FT is never underlined
  CHECK(rep.markdown.find("<u>91.0") == std::string::npos);
}

TEST_CASE("params column follows the results") {
  const auto md = render_report(main_fixture(), ReportLayout::Main).markdown;
  CHECK(md.find("| FT | 442432 |") != std::string::npos);
  CHECK(count(md, "| 6400 |") == 6);
}

TEST_CASE("report output is stable and matches the stored files") {
  const auto main = main_fixture();
  const auto a = render_report(main, ReportLayout::Main);
  const auto b = render_report(main, ReportLayout::Main);
  CHECK(a.markdown == b.markdown);
  CHECK(a.csv == b.csv);
  check_golden("report_main.md", a.markdown);
  check_golden("report_main.csv", a.csv);

  const auto uni = render_report(uni_fixture(), ReportLayout::Uni);
  check_golden("report_uni.md", uni.markdown);
  CHECK(uni.markdown.find("| PPT |") == std::string::npos);
  CHECK(uni.markdown.find("<u>") == std::string::npos);

  const auto sweep = render_report(sweep_fixture(), ReportLayout::Sweep);
  check_golden("report_sweep.md", sweep.markdown);
  CHECK(sweep.markdown.find("| Method | sst2@32 | sst2@64 | sst2@128 |") != std::string::npos);

  const auto conv = render_report(convergence_fixture(), ReportLayout::Convergence);
  check_golden("report_convergence.md", conv.markdown);
  check_golden("report_convergence.csv", conv.csv);
}

TEST_CASE("convergence means per step") {
  const auto rep = render_report(convergence_fixture(), ReportLayout::Convergence);
  CHECK(rep.markdown.find("| 12 | 62.5 | 40.6 | 71.9 |") != std::string::npos);
  CHECK(rep.csv.find("PPT,nss,20,6,0.687500\n") != std::string::npos);
}

TEST_CASE("emit_report writes csv and markdown") {
  const auto dir = std::filesystem::temp_directory_path() / "pptlab_test_report";
  std::filesystem::create_directories(dir);
  const auto rs = main_fixture();
  const auto rep = emit_report(rs, ReportLayout::Main, dir);
  CHECK(read_file((dir / "main.md").string()) == rep.markdown);
  CHECK(read_file((dir / "main.csv").string()) == rep.csv);
  std::filesystem::remove_all(dir);
}
