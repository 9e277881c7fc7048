#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "model_fixtures.hpp"
#include "pptlab/error.hpp"
#include "pptlab/harness.hpp"
#include "pptlab/rng.hpp"

using namespace pptlab;

namespace {

// Sentiment-style source: label 1 sentences contain "good", label 0 "bad".
DownstreamDataset sentiment_source(std::size_t per_label, std::size_t n_test) {
  DownstreamDataset d;
  d.name = "toy_sst";
  d.format = Format::SSC;
  d.n_class = 2;
  Rng rng(5);
  auto sentence = [&](int label) {
    std::string s = label ? "good" : "bad";
    for (int i = 0; i < 4; ++i) s += " w" + std::to_string(rng.uniform_index(12));
    return s;
  };
  for (std::size_t i = 0; i < 2 * per_label; ++i) {
    TaskInstance t;
    t.label = static_cast<int>(i % 2);
    t.slots["s"] = sentence(*t.label);
    d.train_pool.push_back(t);
  }
  for (std::size_t i = 0; i < n_test; ++i) {
    TaskInstance t;
    t.label = static_cast<int>(i % 2);
    t.slots["s"] = sentence(*t.label);
    d.test_pool.push_back(t);
  }
  return d;
}

Vocabulary vocab_of(const DownstreamDataset& data) {
  std::vector<std::string> texts;
  for (const auto& t : data.train_pool) texts.push_back(t.slots.at("s"));
  return Vocabulary::build(texts, 200, reserved_words());
}

Transformer<float> model_for(const Vocabulary& vocab) {
  auto mc = pptlab::testing::tiny_config(static_cast<int>(vocab.size()));
  mc.max_len = 64;
  return Transformer<float>::init(mc, 1);
}

struct Fixture {
  DownstreamDataset data = sentiment_source(24, 10);
  Vocabulary vocab = vocab_of(data);
  Transformer<float> model = model_for(vocab);
  ExperimentConfig config;
  std::filesystem::path workdir;

  Fixture() {
    workdir = std::filesystem::temp_directory_path() / "pptlab_test_harness";
    std::filesystem::remove_all(workdir);
    config.workdir = workdir;
    config.prompt_length = 4;
    config.tune.lr_grid = {1e-2};
    config.tune.epochs = 2;
    config.tune.batch_size = 8;
    config.tune.eval_every = 2;
    config.ft_lr_grid = std::vector<double>{1e-3};
  }
  ~Fixture() { std::filesystem::remove_all(workdir); }

  ExperimentContext ctx() const { return {&model, nullptr, &vocab}; }
};

ExperimentSpec spec_for(Method m, std::vector<std::uint64_t> seeds = {10}) {
  ExperimentSpec s;
  s.method = m;
  s.task = "toy_sst";
  s.seeds = std::move(seeds);
  s.samples = 8;
  return s;
}

}  // namespace

TEST_CASE("aggregate") {
  auto a = aggregate(std::vector<double>{1, 1, 1});
  CHECK(a.mean == 1.0);
  CHECK(a.std == 0.0);
  a = aggregate(std::vector<double>{0, 1});
  CHECK(a.mean == 0.5);
  CHECK(a.std == 0.5);
  a = aggregate(std::vector<double>{0.8, 0.9, 0.85, 0.8, 0.9});
  CHECK(a.mean == doctest::Approx(0.85));
  CHECK(a.std == doctest::Approx(0.0447).epsilon(1e-3));
  CHECK_THROWS_AS(aggregate(std::vector<double>{}), Error);

  // one-pass (Welford) cross-check
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v;
    const auto n = 1 + rng.uniform_index(30);
    for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform01());
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double delta = v[i] - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (v[i] - mean);
    }
    const auto agg = aggregate(v);
    CHECK(std::abs(agg.mean - mean) < 1e-12);
    CHECK(std::abs(agg.std - std::sqrt(m2 / static_cast<double>(v.size()))) < 1e-12);
  }
}

TEST_CASE("method names") {
  for (auto m : {Method::FT, Method::PT, Method::HybridPT, Method::LMAdaption, Method::PPT, Method::HybridPPT,
                 Method::UnifiedPPT, Method::PT_MC}) {
    CHECK(parse_method(method_cli_name(m)) == m);
    CHECK(parse_method(method_display_name(m)) == m);
  }
  CHECK(method_display_name(Method::LMAdaption) == "LM Adaption");
  CHECK_THROWS_AS(parse_method("adapter"), Error);
  CHECK_FALSE(is_prompt_method(Method::FT));
  CHECK(uses_pretrained_prompt(Method::HybridPPT));
  CHECK_FALSE(uses_pretrained_prompt(Method::PT_MC));
}

TEST_CASE("prompt groups and checkpoint paths") {
  CHECK(prompt_group(Method::PPT, Format::SPC) == "SPC");
  CHECK(prompt_group(Method::HybridPPT, Format::SSC) == "SSC");
  CHECK(prompt_group(Method::UnifiedPPT, Format::SSC) == "UNIFIED");
  CHECK(prompt_checkpoint_path("w", "MCC") == std::filesystem::path("w/prompts/MCC.ppt"));
}

TEST_CASE("method views") {
  const auto data = sentiment_source(20, 4);
  const auto split = sample_fewshot(data, 1, 8);
  const auto plain = method_view(Method::PPT, Format::SSC, 2, split);
  const auto hybrid = method_view(Method::HybridPPT, Format::SSC, 2, split);
  const auto unified = method_view(Method::UnifiedPPT, Format::SSC, 2, split);
  TaskInstance t;
  t.slots["s"] = "fine movie";
  CHECK(render_text(plain.pattern, t) == "fine movie . <X> .");
  CHECK(render_text(hybrid.pattern, t) == "fine movie . it was <X> .");
  CHECK(unified.pattern.format() == Format::UNIFIED_MC);
  REQUIRE(unified.train.size() == split.train.size());
  CHECK(unified.train[0].label == split.train[0].label);
  CHECK(unified.train[0].slots.count("sq") == 1);
  CHECK(plain.test.size() == 4);
}

TEST_CASE("single-seed experiment has zero std and the tunable count") {
  Fixture f;
  const auto r = run_experiment(spec_for(Method::PT), f.data, f.config, f.ctx());
  CHECK(r.method == "PT");
  CHECK(r.task == "toy_sst");
  CHECK(r.per_seed.size() == 1);
  CHECK(r.std == 0.0);
  CHECK(r.tunable_params == count_tunable(f.model.config(), 4, TuneMode::PT));
  CHECK(r.tunable_params == 4u * 16u);
  REQUIRE(r.dev_curves.size() == 1);
  CHECK_FALSE(r.dev_curves[0].empty());

  const auto ft = run_experiment(spec_for(Method::FT), f.data, f.config, f.ctx());
  CHECK(ft.tunable_params == f.model.num_params());
}

TEST_CASE("experiments are reproducible per seed") {
  Fixture f;
  const auto a = run_experiment(spec_for(Method::HybridPT, {10, 20}), f.data, f.config, f.ctx());
  const auto b = run_experiment(spec_for(Method::HybridPT, {10, 20}), f.data, f.config, f.ctx());
  CHECK(a.per_seed == b.per_seed);
  CHECK(a.seeds == std::vector<std::uint64_t>{10, 20});
  const auto agg = aggregate(a.per_seed);
  CHECK(a.mean == agg.mean);
  CHECK(a.std == agg.std);
}

TEST_CASE("pre-trained methods need their group checkpoint") {
  Fixture f;
  CHECK_THROWS_WITH_AS(run_experiment(spec_for(Method::PPT), f.data, f.config, f.ctx()),
                       doctest::Contains("pre-trained prompt not found for group SSC"), Error);
  CHECK_THROWS_WITH_AS(run_experiment(spec_for(Method::UnifiedPPT), f.data, f.config, f.ctx()),
                       doctest::Contains("pre-trained prompt not found for group UNIFIED"), Error);
  CHECK_THROWS_WITH_AS(run_experiment(spec_for(Method::LMAdaption), f.data, f.config, f.ctx()),
                       doctest::Contains("lm-adapted backbone not available"), Error);

  Rng rng(2);
  const SoftPrompt p{pptlab::testing::random_prompt<float>(rng, 4, 16)};
  std::filesystem::create_directories(f.workdir / "prompts");
  save_prompt(prompt_checkpoint_path(f.workdir, "SSC"), p);
  const auto r = run_experiment(spec_for(Method::PPT), f.data, f.config, f.ctx());
  CHECK(r.method == "PPT");

  // the checkpoint's shape must match the configured prompt length
  auto cfg = f.config;
  cfg.prompt_length = 5;
  CHECK_THROWS_AS(run_experiment(spec_for(Method::PPT), f.data, cfg, f.ctx()), Error);
}

TEST_CASE("results jsonl round trip and merge") {
  Fixture f;
  const auto a = run_experiment(spec_for(Method::PT, {10}), f.data, f.config, f.ctx());
  const auto b = run_experiment(spec_for(Method::PT, {20}), f.data, f.config, f.ctx());
  const auto path = f.workdir / "results.jsonl";
  std::filesystem::create_directories(f.workdir);
  append_result(path, a);
  append_result(path, b);
  const auto loaded = load_results(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].per_seed == a.per_seed);
  CHECK(loaded[1].seeds == b.seeds);
  CHECK(loaded[0].dev_curves.size() == a.dev_curves.size());
  CHECK(loaded[0].tunable_params == a.tunable_params);

  const auto merged = merge_results(loaded);
  CHECK(merged.seeds == std::vector<std::uint64_t>{10, 20});
  const auto both = run_experiment(spec_for(Method::PT, {10, 20}), f.data, f.config, f.ctx());
  CHECK(merged.per_seed == both.per_seed);
  CHECK(merged.mean == both.mean);
  CHECK_THROWS_AS(merge_results(std::vector<ExperimentResult>{a, a}), Error);

  // stored mean/std are recomputed from the per-seed values
  auto line = result_to_json_line(a);
  const auto pos = line.find("\"mean\":");
  line.replace(pos, 7, "\"mean\":12345,\"x\":");
  CHECK(result_from_json_line(line).mean == a.mean);
  CHECK_THROWS_AS(result_from_json_line("{\"method\":\"PT\"}"), Error);
}
