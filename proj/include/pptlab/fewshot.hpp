#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pptlab/pvp.hpp"

namespace pptlab {

/// One line of a downstream dataset file.
struct DownstreamRecord {
  std::string pool;  // "train" or "test"
  Format format = Format::SPC;
  TaskInstance instance;
};

std::string record_to_json_line(const DownstreamRecord& record);
DownstreamRecord record_from_json_line(std::string_view line);
std::vector<DownstreamRecord> load_downstream_jsonl(const std::filesystem::path& path);
void write_downstream_jsonl(const std::filesystem::path& path, std::span<const DownstreamRecord> records);

struct DownstreamDataset {
  std::string name;
  Format format = Format::SPC;
  int n_class = 0;
  std::vector<TaskInstance> train_pool;
  std::vector<TaskInstance> test_pool;
};

/// Groups records by pool. n_class is the option count for MCC data and
/// max(label) + 1 otherwise, unless given.
DownstreamDataset make_dataset(std::string name, std::span<const DownstreamRecord> records, int n_class = 0);
DownstreamDataset load_dataset(const std::filesystem::path& path, int n_class = 0);

struct FewShotSplit {
  std::vector<TaskInstance> train;
  std::vector<TaskInstance> dev;
  std::vector<TaskInstance> test;
  std::vector<std::size_t> train_index;  // positions in the train pool
  std::vector<std::size_t> dev_index;
  std::uint64_t seed = 0;
  int n_class = 0;
};

inline constexpr std::size_t kFewShotSamples = 32;
inline constexpr int kMaxBalancedClasses = 5;

/// Per-label counts for `samples` training instances. Up to 5 classes the
/// counts differ by at most one and the extra instances go to labels in a
/// seeded random order; above 5 classes every label gets samples / 4
/// (8 at the default 32).
std::vector<std::size_t> label_counts(int n_class, std::size_t samples, std::uint64_t seed);

/// Train and dev sets of equal size and label mix drawn from the train pool;
/// the test pool is passed through untouched.
FewShotSplit sample_fewshot(const DownstreamDataset& source, std::uint64_t seed,
                            std::size_t samples = kFewShotSamples);

/// Nested splits: each smaller train set is a prefix-subset of the larger.
std::vector<FewShotSplit> sample_sweep(const DownstreamDataset& source, std::span<const std::size_t> sizes,
                                       std::uint64_t seed);

}  // namespace pptlab
