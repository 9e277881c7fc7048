#pragma once

#include <string>
#include <vector>

#include "pptlab/harness.hpp"

namespace pptlab::testing {

inline ExperimentResult fixture_result(std::string method, std::string task, std::vector<double> per_seed,
                                       std::size_t params, std::size_t samples = 32) {
  ExperimentResult r;
  r.method = std::move(method);
  r.task = std::move(task);
  r.samples = samples;
  for (std::size_t i = 0; i < per_seed.size(); ++i) r.seeds.push_back(10 * (i + 1));
  r.per_seed = std::move(per_seed);
  const auto agg = aggregate(r.per_seed);
  r.mean = agg.mean;
  r.std = agg.std;
  r.tunable_params = params;
  return r;
}

// Main-table fixture. sst2: PPT and Hybrid PPT tie at 93.5 above FT.
// boolq: FT best, Hybrid PPT best among prompt methods. rte: PPT and
// Unified PPT tie after rounding; Hybrid PT has no result.
inline std::vector<ExperimentResult> main_fixture() {
  constexpr std::size_t ft = 442432, pt = 6400;
  return {
      fixture_result("FT", "sst2", {0.90, 0.92}, ft),
      fixture_result("FT", "boolq", {0.70, 0.72}, ft),
      fixture_result("FT", "rte", {0.60, 0.62}, ft),
      fixture_result("PT", "sst2", {0.80, 0.90}, pt),
      fixture_result("PT", "boolq", {0.60}, pt),
      fixture_result("PT", "rte", {0.50, 0.55}, pt),
      fixture_result("Hybrid PT", "sst2", {0.86}, pt),
      fixture_result("Hybrid PT", "boolq", {0.62}, pt),
      fixture_result("LM Adaption", "sst2", {0.84}, pt),
      fixture_result("LM Adaption", "boolq", {0.61}, pt),
      fixture_result("LM Adaption", "rte", {0.52}, pt),
      fixture_result("PPT", "sst2", {0.9302, 0.9402}, pt),
      fixture_result("PPT", "boolq", {0.65}, pt),
      fixture_result("PPT", "rte", {0.63, 0.63}, pt),
      fixture_result("Hybrid PPT", "sst2", {0.9348}, pt),
      fixture_result("Hybrid PPT", "boolq", {0.66}, pt),
      fixture_result("Hybrid PPT", "rte", {0.58}, pt),
      fixture_result("Unified PPT", "sst2", {0.92}, pt),
      fixture_result("Unified PPT", "boolq", {0.647}, pt),
      fixture_result("Unified PPT", "rte", {0.6296}, pt),
  };
}

inline std::vector<ExperimentResult> uni_fixture() {
  constexpr std::size_t ft = 442432, pt = 6400;
  return {
      fixture_result("Unified PPT", "tnews", {0.50, 0.52}, pt),
      fixture_result("FT", "tnews", {0.44, 0.46}, ft),
      fixture_result("PT", "tnews", {0.40, 0.30}, pt),
      fixture_result("PT (MC)", "tnews", {0.42}, pt),
      fixture_result("FT", "yahoo", {0.61}, ft),
      fixture_result("PT", "yahoo", {0.35}, pt),
      fixture_result("PT (MC)", "yahoo", {0.52}, pt),
      fixture_result("Unified PPT", "yahoo", {0.58, 0.60}, pt),
      fixture_result("PPT", "yahoo", {0.9}, pt),
  };
}

inline std::vector<ExperimentResult> sweep_fixture() {
  constexpr std::size_t ft = 442432, pt = 6400;
  std::vector<ExperimentResult> out;
  const std::size_t sizes[] = {128, 32, 64};
  const double ft_acc[] = {0.80, 0.62, 0.70};
  const double pt_acc[] = {0.70, 0.55, 0.61};
  const double ppt_acc[] = {0.78, 0.66, 0.72};
  for (int i = 0; i < 3; ++i) {
    out.push_back(fixture_result("PPT", "sst2", {ppt_acc[i], ppt_acc[i] + 0.01}, pt, sizes[i]));
    out.push_back(fixture_result("PT", "sst2", {pt_acc[i], pt_acc[i] + 0.04}, pt, sizes[i]));
    out.push_back(fixture_result("FT", "sst2", {ft_acc[i], ft_acc[i] + 0.02}, ft, sizes[i]));
  }
  return out;
}

inline std::vector<ExperimentResult> convergence_fixture() {
  std::vector<ExperimentResult> out;
  auto with_curves = [](ExperimentResult r, std::vector<std::vector<CurvePoint>> curves) {
    r.dev_curves = std::move(curves);
    return r;
  };
  out.push_back(with_curves(fixture_result("PT", "nss", {0.40, 0.45}, 6400),
                            {{{0, 0.25}, {6, 0.25}, {12, 0.375}}, {{0, 0.25}, {6, 0.3125}, {12, 0.4375}}}));
  out.push_back(with_curves(fixture_result("PPT", "nss", {0.70, 0.72}, 6400),
                            {{{0, 0.5}, {6, 0.625}, {12, 0.6875}}, {{0, 0.5625}, {6, 0.6875}, {12, 0.75}}}));
  out.push_back(with_curves(fixture_result("FT", "nss", {0.5, 0.6}, 442432),
                            {{{0, 0.25}, {6, 0.5}}, {{0, 0.25}, {6, 0.625}, {12, 0.625}}}));
  return out;
}

}  // namespace pptlab::testing
