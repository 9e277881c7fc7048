#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "pptlab/error.hpp"
#include "pptlab/fewshot.hpp"
#include "pptlab/rng.hpp"

using namespace pptlab;

namespace {

// Every instance carries a unique text so identity can be checked by value.
DownstreamDataset labeled_source(int n_class, std::vector<std::size_t> per_label, std::size_t n_test,
                                 std::uint64_t seed = 0) {
  DownstreamDataset d;
  d.name = "synthetic";
  d.format = Format::SSC;
  d.n_class = n_class;
  Rng rng(seed);
  std::size_t id = 0;
  for (int l = 0; l < n_class; ++l) {
    for (std::size_t i = 0; i < per_label[static_cast<std::size_t>(l)]; ++i) {
      TaskInstance t;
      t.slots["s"] = "train" + std::to_string(id++);
      t.label = l;
      d.train_pool.push_back(t);
    }
  }
  rng.shuffle(d.train_pool.begin(), d.train_pool.end());
  for (std::size_t i = 0; i < n_test; ++i) {
    TaskInstance t;
    t.slots["s"] = "test" + std::to_string(i);
    t.label = static_cast<int>(i % static_cast<std::size_t>(n_class));
    d.test_pool.push_back(t);
  }
  return d;
}

std::map<int, std::size_t> count_labels(const std::vector<TaskInstance>& v) {
  std::map<int, std::size_t> c;
  for (const auto& t : v) ++c[*t.label];
  return c;
}

std::set<std::string> texts(const std::vector<TaskInstance>& v) {
  std::set<std::string> s;
  for (const auto& t : v) s.insert(t.slots.at("s"));
  return s;
}

bool same(const FewShotSplit& a, const FewShotSplit& b) {
  return a.train_index == b.train_index && a.dev_index == b.dev_index;
}

}  // namespace

TEST_CASE("label counts") {
  CHECK(label_counts(2, 32, 1) == std::vector<std::size_t>{16, 16});
  const auto three = label_counts(3, 32, 1);
  CHECK(std::count(three.begin(), three.end(), 11u) == 2);
  CHECK(std::count(three.begin(), three.end(), 10u) == 1);
  CHECK(label_counts(10, 32, 1) == std::vector<std::size_t>(10, 8));
  CHECK(label_counts(6, 32, 1) == std::vector<std::size_t>(6, 8));
  // the label receiving fewer instances depends on the seed
  std::set<std::vector<std::size_t>> seen;
  for (std::uint64_t s = 0; s < 30; ++s) seen.insert(label_counts(3, 32, s));
  CHECK(seen.size() == 3);
  CHECK_THROWS_AS(label_counts(0, 32, 1), Error);
}

TEST_CASE("two-class split is 16 per label in train and dev") {
  const auto src = labeled_source(2, {60, 60}, 20);
  const auto split = sample_fewshot(src, 10);
  CHECK(split.train.size() == 32);
  CHECK(split.dev.size() == 32);
  CHECK(count_labels(split.train) == std::map<int, std::size_t>{{0, 16}, {1, 16}});
  CHECK(count_labels(split.dev) == std::map<int, std::size_t>{{0, 16}, {1, 16}});
  CHECK(split.test.size() == 20);
}

TEST_CASE("ten-class split takes 8 per label") {
  const auto src = labeled_source(10, std::vector<std::size_t>(10, 20), 10);
  const auto split = sample_fewshot(src, 10);
  CHECK(split.train.size() == 80);
  CHECK(split.dev.size() == 80);
  for (const auto& [l, c] : count_labels(split.train)) CHECK(c == 8);
}

TEST_CASE("protocol properties over random sources") {
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(trial, 99);
    const int n_class = rng.uniform_int(2, 8);
    std::vector<std::size_t> per_label;
    for (int l = 0; l < n_class; ++l) per_label.push_back(static_cast<std::size_t>(rng.uniform_int(40, 90)));
    const auto src = labeled_source(n_class, per_label, 25, trial);
    const auto seed = rng.uniform_index(1000);
    const auto split = sample_fewshot(src, seed);
    INFO("trial " << trial << " n_class " << n_class);

    const auto train = count_labels(split.train);
    const auto dev = count_labels(split.dev);
    CHECK(train == dev);
    if (n_class <= kMaxBalancedClasses) {
      CHECK(split.train.size() == 32);
      std::size_t lo = 1000, hi = 0;
      for (int l = 0; l < n_class; ++l) {
        const auto c = train.count(l) ? train.at(l) : 0;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      CHECK(hi - lo <= 1);
    } else {
      CHECK(split.train.size() == 8u * static_cast<std::size_t>(n_class));
      for (int l = 0; l < n_class; ++l) CHECK(train.at(l) == 8);
    }

    const auto tr = texts(split.train), dv = texts(split.dev), te = texts(split.test);
    CHECK(tr.size() == split.train.size());
    CHECK(dv.size() == split.dev.size());
    for (const auto& t : tr) CHECK((dv.count(t) == 0 && te.count(t) == 0));
    for (const auto& t : dv) CHECK(te.count(t) == 0);
    CHECK(te == texts(src.test_pool));

    CHECK(same(split, sample_fewshot(src, seed)));
    CHECK_FALSE(same(split, sample_fewshot(src, seed + 1)));
  }
}

TEST_CASE("sweep nesting") {
  const auto src = labeled_source(3, {300, 300, 300}, 5);
  const std::vector<std::size_t> sizes = {32, 64, 128, 256};
  const auto splits = sample_sweep(src, sizes, 20);
  REQUIRE(splits.size() == 4);
  for (std::size_t i = 0; i < splits.size(); ++i) {
    CHECK(splits[i].train.size() == sizes[i]);
    CHECK(splits[i].dev.size() == sizes[i]);
    const auto c = count_labels(splits[i].train);
    std::size_t lo = 1000, hi = 0;
    for (const auto& [l, n] : c) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(hi - lo <= 1);
    const auto dev_all = texts(splits.back().dev);
    for (const auto& t : texts(splits[i].train)) CHECK(dev_all.count(t) == 0);
  }
  for (std::size_t i = 0; i + 1 < splits.size(); ++i) {
    const auto big = texts(splits[i + 1].train);
    for (const auto& t : texts(splits[i].train)) CHECK(big.count(t) == 1);
  }
  // a single-size sweep is the plain sampler
  CHECK(same(sample_sweep(src, std::vector<std::size_t>{32}, 20).front(), sample_fewshot(src, 20)));
}

TEST_CASE("sampling errors") {
  const auto src = labeled_source(2, {60, 10}, 5);
  CHECK_THROWS_WITH_AS(sample_fewshot(src, 1), doctest::Contains("insufficient pool for label 1"), Error);
  const auto ok = labeled_source(2, {100, 100}, 5);
  CHECK_THROWS_WITH_AS(sample_sweep(ok, std::vector<std::size_t>{64, 32}, 1), doctest::Contains("sizes not ascending"),
                       Error);
}

TEST_CASE("downstream jsonl round trip") {
  std::vector<DownstreamRecord> records;
  TaskInstance a;
  a.slots = {{"s1", "the cat sat"}, {"s2", "it purred"}};
  a.label = 2;
  records.push_back({"train", Format::SPC, a});
  TaskInstance b;
  b.slots = {{"s1", "a \"quoted\" line"}, {"s2", "x"}};
  records.push_back({"test", Format::SPC, b});
  const auto line = record_to_json_line(records[0]);
  const auto back = record_from_json_line(line);
  CHECK(back.pool == "train");
  CHECK(back.format == Format::SPC);
  CHECK(back.instance.slots == a.slots);
  CHECK(back.instance.label == 2);

  const auto path = std::filesystem::temp_directory_path() / "pptlab_test_fewshot.jsonl";
  write_downstream_jsonl(path, records);
  const auto loaded = load_downstream_jsonl(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[1].instance.slots == b.slots);
  CHECK_FALSE(loaded[1].instance.label);
  const auto ds = load_dataset(path);
  CHECK(ds.train_pool.size() == 1);
  CHECK(ds.test_pool.size() == 1);
  CHECK(ds.n_class == 3);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(record_from_json_line("{\"pool\":\"train\"}"), Error);
  CHECK_THROWS_AS(record_from_json_line("not json"), Error);
}

TEST_CASE("mcc dataset class count is the option count") {
  TaskInstance t;
  t.slots = {{"sq", "q"}, {"s1", "a"}, {"s2", "b"}, {"s3", "c"}, {"s4", "d"}};
  t.label = 0;
  std::vector<DownstreamRecord> records = {{"train", Format::MCC, t}};
  CHECK(make_dataset("m", records).n_class == 4);
}
