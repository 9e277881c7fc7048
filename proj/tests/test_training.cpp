#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "model_fixtures.hpp"
#include "pptlab/error.hpp"
#include "pptlab/training.hpp"
#include "toy_corpus.hpp"

using namespace pptlab;
using pptlab::testing::random_example;
using pptlab::testing::tiny_config;

namespace {

constexpr int kVocab = 40;
const std::vector<TokenId> kVerbalizer = {10, 11};

// Label 1 iff token 20 occurs in the input; the target is the verbalizer id.
std::vector<Seq2SeqExample> keyword_task(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<Seq2SeqExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto ex = random_example(rng, kVocab, 8);
    for (auto& t : ex.input_ids) {
      if (t == 20) t = 21;
    }
    const bool positive = i % 2 == 0;
    if (positive) ex.input_ids[(ex.mask_position + 3) % ex.input_ids.size()] = 20;
    ex.targets = {kVerbalizer[positive ? 1 : 0]};
    out.push_back(ex);
  }
  return out;
}

SoftPrompt prompt_of(std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  return {pptlab::testing::random_prompt<float>(rng, k, 16)};
}

TuneConfig quick_tune() {
  TuneConfig c;
  c.lr_grid = {1e-2, 5e-2};
  c.epochs = 3;
  c.batch_size = 4;
  c.eval_every = 2;
  return c;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pptlab_test_training_" + name);
}

}  // namespace

TEST_CASE("lr schedules") {
  CHECK(lr_schedule(Scheduler::InverseSqrt, 0.1, 1) == doctest::Approx(0.1));
  CHECK(lr_schedule(Scheduler::InverseSqrt, 0.1, 100) == doctest::Approx(0.01));
  CHECK(lr_schedule(Scheduler::Constant, 5e-3, 1) == 5e-3);
  CHECK(lr_schedule(Scheduler::Constant, 5e-3, 123456) == 5e-3);
  CHECK_THROWS_AS(lr_schedule(Scheduler::Constant, 0.1, 0), Error);
  double prev = lr_schedule(Scheduler::InverseSqrt, 0.3, 1);
  for (std::int64_t t = 2; t < 500; ++t) {
    const double cur = lr_schedule(Scheduler::InverseSqrt, 0.3, t);
    CHECK(cur <= prev);
    prev = cur;
  }
  CHECK(parse_scheduler("inverse_sqrt") == Scheduler::InverseSqrt);
  CHECK(parse_scheduler("constant") == Scheduler::Constant);
  CHECK_THROWS_AS(parse_scheduler("cosine"), Error);
}

TEST_CASE("full-model lr grid per size tag") {
  CHECK(ft_lr_grid("small") == std::vector<double>{2e-4, 5e-4, 1e-3});
  CHECK(ft_lr_grid("base") == std::vector<double>{2e-4, 5e-4, 1e-3});
  CHECK(ft_lr_grid("large") == std::vector<double>{5e-5, 1e-4, 2e-4});
  CHECK(ft_lr_grid("XL") == std::vector<double>{3e-5, 5e-5, 1e-4});
  CHECK(ft_lr_grid("XXL") == std::vector<double>{3e-6, 5e-6, 1e-5});
  CHECK_THROWS_WITH_AS(ft_lr_grid("huge"), doctest::Contains("unknown model size tag"), Error);
}

TEST_CASE("adam matches a scalar reference") {
  // Reference recursion written out in doubles.
  std::vector<float> p = {0.5f, -1.0f, 2.0f};
  std::vector<double> ref(p.begin(), p.end()), m(3, 0.0), v(3, 0.0);
  Adam opt(3);
  for (int t = 1; t <= 5; ++t) {
    std::vector<float> g = {0.1f * t, -0.2f, 0.05f * t * t};
    opt.step(p, g, 0.01);
    for (int i = 0; i < 3; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(ref[i]).epsilon(1e-6));
  CHECK(opt.steps() == 5);
}

TEST_CASE("adam with lr 0 leaves parameters unchanged") {
  std::vector<float> p = {1.0f, 2.0f};
  const auto before = p;
  Adam opt(2);
  std::vector<float> g = {3.0f, -4.0f};
  opt.step(p, g, 0.0);
  CHECK(p == before);
}

TEST_CASE("global norm clipping") {
  std::vector<float> g = {3.0f, 4.0f};
  CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[1] == doctest::Approx(0.8));
  std::vector<float> small = {0.3f, 0.4f};
  clip_global_norm(small, 1.0);
  CHECK(small[0] == 0.3f);
  std::vector<float> off = {30.0f, 40.0f};
  clip_global_norm(off, 0.0);
  CHECK(off[0] == 30.0f);
}

TEST_CASE("accuracy and macro f1 against hand counts") {
  const std::vector<int> gold = {0, 0, 1, 1, 2, 2};
  const std::vector<int> pred = {0, 1, 1, 1, 0, 2};
  CHECK(accuracy(pred, gold) == doctest::Approx(4.0 / 6.0));
  // class 0: tp1 fp1 fn1 -> 0.5; class 1: tp2 fp1 fn0 -> 0.8; class 2: tp1 fp0 fn1 -> 2/3
  CHECK(macro_f1(pred, gold, 3) == doctest::Approx((0.5 + 0.8 + 2.0 / 3.0) / 3.0));
  // a class never predicted nor present contributes 0
  CHECK(macro_f1(pred, gold, 4) == doctest::Approx((0.5 + 0.8 + 2.0 / 3.0) / 4.0));
  CHECK_THROWS_AS(accuracy(pred, std::vector<int>{0}), Error);
  CHECK(parse_metric("macro_f1") == Metric::MacroF1);
}

TEST_CASE("prompt tuning keeps the backbone frozen and is reproducible") {
  const auto model = Transformer<float>::init(tiny_config(kVocab), 3);
  const auto train = keyword_task(1, 16);
  const auto dev = keyword_task(2, 16);
  const auto hash = model.hash();
  const auto a = prompt_tune(model, prompt_of(4, 5), train, dev, kVerbalizer, quick_tune());
  const auto b = prompt_tune(model, prompt_of(4, 5), train, dev, kVerbalizer, quick_tune());
  CHECK(model.hash() == hash);
  REQUIRE(a.prompt);
  CHECK(encode_prompt(*a.prompt) == encode_prompt(*b.prompt));
  CHECK(a.lr == b.lr);
  CHECK(a.step == b.step);
  CHECK_FALSE(a.backbone);
}

TEST_CASE("tuning selection rule") {
  const auto model = Transformer<float>::init(tiny_config(kVocab), 3);
  const auto train = keyword_task(1, 16);
  const auto dev = keyword_task(2, 16);
  TrainLog log;
  const auto r = prompt_tune(model, prompt_of(4, 5), train, dev, kVerbalizer, quick_tune(), &log);
  REQUIRE(r.arms.size() == 2);
  for (const auto& arm : r.arms) {
    // 16 examples at batch 4 for 3 epochs = 12 steps, evaluated at 0,2,..,12
    REQUIRE(arm.dev_curve.size() == 7);
    for (std::size_t i = 0; i < arm.dev_curve.size(); ++i) CHECK(arm.dev_curve[i].step == 2 * std::int64_t(i));
    for (const auto& p : arm.dev_curve) {
      CHECK(r.dev_metric >= p.value);
      CHECK(arm.best_dev >= p.value);
    }
    // earliest step reaching the arm's best
    for (const auto& p : arm.dev_curve) {
      if (p.value == arm.best_dev) {
        CHECK(arm.best_step == p.step);
        break;
      }
    }
  }
  // reported metric equals the recomputed metric of the returned prompt
  const auto pred = predict(model, &r.prompt->values, dev, kVerbalizer);
  std::vector<int> gold;
  for (const auto& e : dev) gold.push_back(gold_label(e, kVerbalizer));
  CHECK(accuracy(pred, gold) == doctest::Approx(r.dev_metric));
  CHECK_FALSE(log.entries().empty());
}

TEST_CASE("single-lr grid matches fixed-lr training") {
  const auto model = Transformer<float>::init(tiny_config(kVocab), 3);
  const auto train = keyword_task(1, 16);
  const auto dev = keyword_task(2, 16);
  auto cfg = quick_tune();
  const auto both = prompt_tune(model, prompt_of(4, 5), train, dev, kVerbalizer, cfg);
  cfg.lr_grid = {5e-2};
  const auto one = prompt_tune(model, prompt_of(4, 5), train, dev, kVerbalizer, cfg);
  REQUIRE(one.arms.size() == 1);
  CHECK(one.arms[0].dev_curve.size() == both.arms[1].dev_curve.size());
  for (std::size_t i = 0; i < one.arms[0].dev_curve.size(); ++i) {
    CHECK(one.arms[0].dev_curve[i].value == both.arms[1].dev_curve[i].value);
  }
}

TEST_CASE("true few-shot requires dev") {
  const auto model = Transformer<float>::init(tiny_config(kVocab), 3);
  const auto train = keyword_task(1, 8);
  CHECK_THROWS_WITH_AS(prompt_tune(model, prompt_of(4, 5), train, {}, kVerbalizer, quick_tune()),
                       doctest::Contains("true few-shot requires dev"), Error);
  CHECK_THROWS_WITH_AS(full_model_tune(model, train, {}, kVerbalizer, quick_tune()),
                       doctest::Contains("true few-shot requires dev"), Error);
}

TEST_CASE("full-model tuning changes the backbone") {
  const auto model = Transformer<float>::init(tiny_config(kVocab), 3);
  const auto train = keyword_task(1, 16);
  const auto dev = keyword_task(2, 16);
  auto cfg = quick_tune();
  cfg.lr_grid = {1e-3};
  const auto r = full_model_tune(model, train, dev, kVerbalizer, cfg);
  REQUIRE(r.backbone);
  CHECK_FALSE(r.prompt);
  if (r.step > 0) CHECK(r.backbone->hash() != model.hash());
  // the selected snapshot reproduces its dev metric
  const auto pred = predict(*r.backbone, nullptr, dev, kVerbalizer);
  std::vector<int> gold;
  for (const auto& e : dev) gold.push_back(gold_label(e, kVerbalizer));
  CHECK(accuracy(pred, gold) == doctest::Approx(r.dev_metric));
}

TEST_CASE("prompt pre-training returns the lowest validation checkpoint") {
  const auto model = Transformer<float>::init(tiny_config(kVocab), 3);
  const auto train = keyword_task(7, 64);
  const auto valid = keyword_task(8, 16);
  PretrainConfig cfg;
  cfg.steps = 40;
  cfg.batch_size = 8;
  cfg.eval_every = 10;
  cfg.lr = 0.1;
  const auto hash = model.hash();
  const auto r = pretrain_prompt(model, prompt_of(4, 1), train, valid, cfg);
  CHECK(model.hash() == hash);
  REQUIRE(r.valid_curve.size() == 5);
  double lowest = r.valid_curve.front().value;
  for (const auto& p : r.valid_curve) lowest = std::min(lowest, p.value);
  CHECK(r.best_valid_loss == lowest);
  CHECK(mean_loss(model, &r.prompt.values, valid) == doctest::Approx(r.best_valid_loss).epsilon(1e-5));
  CHECK(r.best_valid_loss < r.valid_curve.front().value);

  const auto again = pretrain_prompt(model, prompt_of(4, 1), train, valid, cfg);
  CHECK(encode_prompt(again.prompt) == encode_prompt(r.prompt));
  CHECK_THROWS_AS(pretrain_prompt(model, prompt_of(4, 1), {}, valid, cfg), Error);
}

TEST_CASE("pre-training split shares no meta between train and validation") {
  const auto corpus = pptlab::testing::toy_corpus(6, 8, 3);
  std::vector<std::string> texts;
  for (const auto& d : corpus) {
    for (const auto& s : d.sentences) texts.push_back(s);
  }
  auto vocab = Vocabulary::build(texts, 500, reserved_words());
  auto examples = build_nsp3(corpus, 60, 4);
  const auto [train, valid] = split_validation(examples, 0.2, 11);
  std::set<std::string> seen;
  for (const auto& e : train) seen.insert(meta_key(e));
  for (const auto& e : valid) CHECK(seen.count(meta_key(e)) == 0);

  const auto model = Transformer<float>::init(tiny_config(static_cast<int>(vocab.size())), 2);
  PretrainConfig cfg;
  cfg.steps = 4;
  cfg.batch_size = 4;
  cfg.eval_every = 2;
  cfg.valid_fraction = 0.2;
  const auto r = pretrain_prompt(model, vocab, prompt_of(4, 2), examples, cfg);
  CHECK(r.n_train + r.n_valid == examples.size());
  CHECK(r.n_valid > 0);
}

TEST_CASE("lm adaption") {
  const auto model = Transformer<float>::init(tiny_config(kVocab), 3);
  Rng rng(4);
  std::vector<std::vector<TokenId>> seqs;
  for (int i = 0; i < 80; ++i) {
    // repeating pattern the model can learn
    std::vector<TokenId> s;
    const auto start = static_cast<TokenId>(4 + rng.uniform_index(10));
    for (int j = 0; j < 12; ++j) s.push_back(static_cast<TokenId>(start + j % 6));
    seqs.push_back(s);
  }
  LmConfig cfg;
  cfg.steps = 0;
  const auto idle = lm_adapt(model, seqs, cfg);
  CHECK(idle.model.hash() == model.hash());
  CHECK(idle.valid_loss_after == idle.valid_loss_before);

  cfg.steps = 60;
  cfg.batch_size = 8;
  cfg.lr = 3e-3;
  const auto r = lm_adapt(model, seqs, cfg);
  CHECK(r.n_valid > 0);
  CHECK(r.valid_loss_after < r.valid_loss_before);
  CHECK(r.model.hash() != model.hash());
}

TEST_CASE("train log mirrors entries to jsonl") {
  const auto path = temp_file("log.jsonl");
  {
    TrainLog log(path);
    log.append({1, 0.01, 0.5, std::nullopt, "lr0.01-step1"});
    log.append({6, 0.01, std::nullopt, 0.75, "lr0.01-step6"});
    CHECK(log.entries().size() == 2);
  }
  std::ifstream in(path);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["step"] == 1);
  CHECK(rows[0]["train_loss"] == 0.5);
  CHECK_FALSE(rows[0].contains("dev_metric"));
  CHECK(rows[1]["train_loss"].is_null());
  CHECK(rows[1]["dev_metric"] == 0.75);
  CHECK(rows[1]["checkpoint_id"] == "lr0.01-step6");
  std::filesystem::remove(path);
}

TEST_CASE("encoding instances") {
  const auto pvp = make_builtin_pvp(Format::SSC, 2);
  auto vocab = Vocabulary::build(std::vector<std::string>{"fine movie"}, 100, reserved_words());
  const auto vids = pvp.verbalizer.bind(vocab);
  TaskInstance inst;
  inst.slots["s"] = "fine movie";
  inst.label = 1;
  const auto ex = encode_instance(pvp.pattern, vids, inst, vocab);
  REQUIRE(ex.targets.size() == 1);
  CHECK(ex.targets[0] == vids[1]);
  CHECK(ex.input_ids[ex.mask_position] == Vocabulary::kMask);
  CHECK(gold_label(ex, vids) == 1);
  inst.label.reset();
  CHECK(encode_instance(pvp.pattern, vids, inst, vocab).targets.empty());
}
