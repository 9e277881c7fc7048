#include "pptlab/fewshot.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "pptlab/error.hpp"
#include "pptlab/rng.hpp"

namespace pptlab {
namespace {

constexpr std::uint64_t kLabelOrderStream = 0xC0000001ULL;
constexpr std::uint64_t kBucketStream = 0xC0000100ULL;

int option_count(const TaskInstance& inst) {
  int n = 0;
  while (inst.slots.count("s" + std::to_string(n + 1))) ++n;
  return n;
}

}  // namespace

std::string record_to_json_line(const DownstreamRecord& r) {
  nlohmann::ordered_json j;
  j["pool"] = r.pool;
  j["format"] = std::string(to_string(r.format));
  nlohmann::ordered_json slots = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.instance.slots) slots[k] = v;
  j["slots"] = std::move(slots);
  j["label"] = r.instance.label ? nlohmann::ordered_json(*r.instance.label) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

DownstreamRecord record_from_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    DownstreamRecord r;
    r.pool = j.at("pool").get<std::string>();
    if (r.pool != "train" && r.pool != "test") throw Error("record pool must be \"train\" or \"test\"");
    r.format = parse_format(j.at("format").get<std::string>());
    for (const auto& [k, v] : j.at("slots").items()) r.instance.slots[k] = v.get<std::string>();
    if (j.contains("label") && !j.at("label").is_null()) r.instance.label = j.at("label").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed downstream record: ") + e.what());
  }
}

std::vector<DownstreamRecord> load_downstream_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  std::vector<DownstreamRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(record_from_json_line(line));
  }
  return out;
}

void write_downstream_jsonl(const std::filesystem::path& path, std::span<const DownstreamRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    for (const auto& r : records) out << record_to_json_line(r) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

DownstreamDataset make_dataset(std::string name, std::span<const DownstreamRecord> records, int n_class) {
  if (records.empty()) throw Error("empty dataset");
  DownstreamDataset ds;
  ds.name = std::move(name);
  ds.format = records.front().format;
  int inferred = 0;
  for (const auto& r : records) {
    if (r.format != ds.format) throw Error("dataset mixes formats");
    if (ds.format == Format::MCC || ds.format == Format::UNIFIED_MC) {
      inferred = std::max(inferred, option_count(r.instance));
    } else if (r.instance.label) {
      inferred = std::max(inferred, *r.instance.label + 1);
    }
    (r.pool == "train" ? ds.train_pool : ds.test_pool).push_back(r.instance);
  }
  ds.n_class = n_class > 0 ? n_class : inferred;
  if (ds.n_class < 2) throw Error("dataset needs at least 2 classes");
  for (const auto& inst : ds.train_pool) {
    if (!inst.label) throw Error("train pool instance without label");
    if (*inst.label < 0 || *inst.label >= ds.n_class) throw Error("label out of range");
  }
  return ds;
}

DownstreamDataset load_dataset(const std::filesystem::path& path, int n_class) {
  const auto records = load_downstream_jsonl(path);
  return make_dataset(path.stem().string(), records, n_class);
}

std::vector<std::size_t> label_counts(int n_class, std::size_t samples, std::uint64_t seed) {
  if (n_class < 1) throw Error("n_class must be positive");
  const auto n = static_cast<std::size_t>(n_class);
  if (n_class > kMaxBalancedClasses) return std::vector<std::size_t>(n, std::max<std::size_t>(1, samples / 4));
  std::vector<std::size_t> counts(n, samples / n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, kLabelOrderStream);
  rng.shuffle(order.begin(), order.end());
  for (std::size_t i = 0; i < samples % n; ++i) ++counts[order[i]];
  return counts;
}

std::vector<FewShotSplit> sample_sweep(const DownstreamDataset& source, std::span<const std::size_t> sizes,
                                       std::uint64_t seed) {
  if (sizes.empty()) throw Error("no sample sizes given");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw Error("sizes not ascending");
  }
  const auto n = static_cast<std::size_t>(source.n_class);
  std::vector<std::vector<std::size_t>> buckets(n);
  for (std::size_t i = 0; i < source.train_pool.size(); ++i) {
    const auto& label = source.train_pool[i].label;
    if (!label || *label < 0 || static_cast<std::size_t>(*label) >= n) throw Error("label out of range");
    buckets[static_cast<std::size_t>(*label)].push_back(i);
  }
  for (std::size_t l = 0; l < n; ++l) {
    Rng rng(seed, kBucketStream + l);
    rng.shuffle(buckets[l].begin(), buckets[l].end());
  }

  // Dev instances start after the largest train prefix of each label.
  const auto largest = label_counts(source.n_class, sizes.back(), seed);
  std::vector<FewShotSplit> out;
  for (auto size : sizes) {
    const auto counts = label_counts(source.n_class, size, seed);
    FewShotSplit split;
    split.seed = seed;
    split.n_class = source.n_class;
    for (std::size_t l = 0; l < n; ++l) {
      if (largest[l] + counts[l] > buckets[l].size()) {
        throw Error("insufficient pool for label " + std::to_string(l));
      }
      for (std::size_t k = 0; k < counts[l]; ++k) {
        split.train_index.push_back(buckets[l][k]);
        split.dev_index.push_back(buckets[l][largest[l] + k]);
      }
    }
    // Interleave labels deterministically rather than grouping them.
    Rng order(seed, kLabelOrderStream + 1);
    order.shuffle(split.train_index.begin(), split.train_index.end());
    order.shuffle(split.dev_index.begin(), split.dev_index.end());
    for (auto i : split.train_index) split.train.push_back(source.train_pool[i]);
    for (auto i : split.dev_index) split.dev.push_back(source.train_pool[i]);
    split.test = source.test_pool;
    out.push_back(std::move(split));
  }
  return out;
}

FewShotSplit sample_fewshot(const DownstreamDataset& source, std::uint64_t seed, std::size_t samples) {
  const std::size_t sizes[1] = {samples};
  return std::move(sample_sweep(source, sizes, seed).front());
}

}  // namespace pptlab
