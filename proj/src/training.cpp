#include "pptlab/training.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "pptlab/error.hpp"
#include "pptlab/rng.hpp"

namespace pptlab {
namespace {

constexpr std::uint64_t kShuffleStream = 0xB0000001ULL;
constexpr std::uint64_t kSplitStream = 0xB0000002ULL;
constexpr std::uint64_t kLmValidStream = 0xB0000003ULL;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Shuffled index batches. Each epoch is reshuffled with (seed, epoch); the
// last batch of an epoch may be short.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch, std::uint64_t seed) : n_(n), batch_(batch), seed_(seed) {
    if (n == 0) throw Error("empty training set");
    if (batch == 0) throw Error("batch size must be positive");
    order_.resize(n);
    reshuffle();
  }

  std::size_t steps_per_epoch() const { return (n_ + batch_ - 1) / batch_; }

  std::vector<std::size_t> next() {
    if (pos_ >= n_) {
      ++epoch_;
      reshuffle();
    }
    const auto end = std::min(n_, pos_ + batch_);
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
    pos_ = end;
    return out;
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    Rng rng(seed_ ^ kShuffleStream, epoch_);
    rng.shuffle(order_.begin(), order_.end());
    pos_ = 0;
  }

  std::size_t n_, batch_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::size_t pos_ = 0;
  std::vector<std::size_t> order_;
};

template <typename T>
std::vector<T> gather(std::span<const T> items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items[i]);
  return out;
}

double dev_score(const Transformer<float>& model, const Mat<float>* prompt, std::span<const Seq2SeqExample> dev,
                 std::span<const TokenId> verbalizer_ids, Metric metric) {
  const auto pred = predict(model, prompt, dev, verbalizer_ids);
  std::vector<int> gold;
  gold.reserve(dev.size());
  for (const auto& ex : dev) gold.push_back(gold_label(ex, verbalizer_ids));
  if (metric == Metric::MacroF1) return macro_f1(pred, gold, static_cast<int>(verbalizer_ids.size()));
  return accuracy(pred, gold);
}

std::string checkpoint_id(double lr, std::int64_t step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "lr=%g/step=%lld", lr, static_cast<long long>(step));
  return buf;
}

struct Candidate {
  double dev = -1.0;
  std::int64_t step = 0;
  double lr = 0.0;
};

// Higher dev wins, then the earlier step, then the smaller lr.
bool better(const Candidate& a, const Candidate& b) {
  if (a.dev != b.dev) return a.dev > b.dev;
  if (a.step != b.step) return a.step < b.step;
  return a.lr < b.lr;
}

double lm_valid_loss(const Transformer<float>& model, std::span<const std::vector<TokenId>> valid, std::uint64_t seed) {
  if (valid.empty()) return 0.0;
  double total = 0.0;
  std::size_t targets = 0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    const auto ex = make_span_corruption(valid[i], seed ^ kLmValidStream, i);
    total += model.example_loss(nullptr, ex, 1.0f, nullptr, nullptr) * static_cast<double>(ex.targets.size());
    targets += ex.targets.size();
  }
  return total / static_cast<double>(targets);
}

template <typename TrainStep, typename Evaluate, typename Snapshot>
ArmResult run_arm(double lr, const TuneConfig& config, std::size_t n_train, TrainStep&& train_step,
                  Evaluate&& evaluate, Snapshot&& snapshot, Candidate& best, TrainLog* log) {
  BatchStream stream(n_train, config.batch_size, config.seed);
  const auto total = static_cast<std::int64_t>(stream.steps_per_epoch()) * config.epochs;
  ArmResult arm;
  arm.lr = lr;
  arm.best_dev = -1.0;
  auto record = [&](std::int64_t step, std::optional<double> train_loss, double rate) {
    const double dev = evaluate();
    arm.dev_curve.push_back({step, dev});
    if (dev > arm.best_dev) {
      arm.best_dev = dev;
      arm.best_step = step;
    }
    const Candidate c{dev, step, lr};
    if (best.dev < 0.0 || better(c, best)) {
      best = c;
      snapshot();
    }
    if (log) log->append({step, rate, train_loss, dev, checkpoint_id(lr, step)});
  };
  record(0, std::nullopt, 0.0);
  for (std::int64_t step = 1; step <= total; ++step) {
    const double rate = lr_schedule(config.scheduler, lr, step);
    const double loss = train_step(stream.next(), rate);
    if (step % config.eval_every == 0) {
      record(step, loss, rate);
    } else if (log) {
      log->append({step, rate, loss, std::nullopt, checkpoint_id(lr, step)});
    }
  }
  return arm;
}

void check_tune_inputs(std::span<const Seq2SeqExample> train, std::span<const Seq2SeqExample> dev,
                       const TuneConfig& config) {
  if (dev.empty()) throw Error("true few-shot requires dev");
  if (train.empty()) throw Error("empty training set");
  if (config.lr_grid.empty()) throw Error("lr grid is empty");
  if (config.eval_every < 1) throw Error("eval_every must be >= 1");
  if (config.epochs < 0) throw Error("epochs must be >= 0");
}

}  // namespace

Scheduler parse_scheduler(std::string_view name) {
  const auto n = lower(name);
  if (n == "constant") return Scheduler::Constant;
  if (n == "inverse_sqrt" || n == "inverse-sqrt") return Scheduler::InverseSqrt;
  throw Error("unknown scheduler '" + std::string(name) + "'");
}

std::string_view to_string(Scheduler s) { return s == Scheduler::Constant ? "constant" : "inverse_sqrt"; }

double lr_schedule(Scheduler scheduler, double base_lr, std::int64_t step) {
  if (step < 1) throw Error("learning-rate step must be >= 1");
  if (scheduler == Scheduler::Constant) return base_lr;
  return base_lr / std::sqrt(static_cast<double>(step));
}

std::vector<double> ft_lr_grid(std::string_view size_tag) {
  const auto t = lower(size_tag);
  if (t == "small" || t == "base") return {2e-4, 5e-4, 1e-3};
  if (t == "large") return {5e-5, 1e-4, 2e-4};
  if (t == "xl") return {3e-5, 5e-5, 1e-4};
  if (t == "xxl") return {3e-6, 5e-6, 1e-5};
  throw Error("unknown model size tag '" + std::string(size_tag) + "'");
}

Adam::Adam(std::size_t n, AdamConfig config) : config_(config), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<float> params, std::span<const float> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw Error("optimizer size mismatch");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    double update = (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.eps);
    if (config_.weight_decay != 0.0) update += config_.weight_decay * params[i];
    params[i] = static_cast<float>(params[i] - lr * update);
  }
}

double clip_global_norm(std::span<float> grad, double max_norm) {
  double sq = 0.0;
  for (float g : grad) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto s = static_cast<float>(max_norm / norm);
    for (auto& g : grad) g *= s;
  }
  return norm;
}

TrainLog::TrainLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  std::ofstream(*path_, std::ios::trunc);
}

void TrainLog::append(TrainLogEntry entry) {
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    out << log_entry_json(entry) << '\n';
  }
  entries_.push_back(std::move(entry));
}

std::string log_entry_json(const TrainLogEntry& e) {
  nlohmann::ordered_json j;
  j["step"] = e.step;
  j["lr"] = e.lr;
  j["train_loss"] = e.train_loss ? nlohmann::ordered_json(*e.train_loss) : nlohmann::ordered_json(nullptr);
  if (e.dev_metric) j["dev_metric"] = *e.dev_metric;
  j["checkpoint_id"] = e.checkpoint_id;
  return j.dump();
}

// ------------------------------------------------------------- encoding

Pvp pretrain_pvp(const PretrainExample& ex) {
  switch (ex.task) {
    case Format::SPC: return make_builtin_pvp(Format::SPC, 3);
    case Format::SSC: return make_builtin_pvp(Format::SSC, 5);
    case Format::MCC:
    case Format::UNIFIED_MC: {
      int options = 0;
      while (ex.input.count("s" + std::to_string(options + 1))) ++options;
      return make_builtin_pvp(ex.task, 0, options);
    }
  }
  throw Error("unknown task");
}

Seq2SeqExample encode_pretrain_example(const PretrainExample& ex, const Vocabulary& vocab) {
  const auto pvp = pretrain_pvp(ex);
  const auto r = render(pvp.pattern, TaskInstance{ex.input, ex.label}, vocab);
  const auto target = vocab.find(ex.target_token);
  if (!target) throw Error("target token '" + ex.target_token + "' not in vocabulary");
  return {r.ids, r.mask_position, {*target}};
}

Seq2SeqExample encode_instance(const PatternTemplate& pattern, std::span<const TokenId> verbalizer_ids,
                               const TaskInstance& instance, const Vocabulary& vocab) {
  const auto r = render(pattern, instance, vocab);
  Seq2SeqExample ex{r.ids, r.mask_position, {}};
  if (instance.label) {
    const int l = *instance.label;
    if (l < 0 || static_cast<std::size_t>(l) >= verbalizer_ids.size()) throw Error("label out of range");
    ex.targets.push_back(verbalizer_ids[static_cast<std::size_t>(l)]);
  }
  return ex;
}

// ------------------------------------------------------------ metrics

Metric parse_metric(std::string_view name) {
  const auto n = lower(name);
  if (n == "accuracy" || n == "acc") return Metric::Accuracy;
  if (n == "macro_f1" || n == "f1") return Metric::MacroF1;
  throw Error("unknown metric '" + std::string(name) + "'");
}

double accuracy(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size() || gold.empty()) throw Error("metric inputs must be non-empty and aligned");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hit += predicted[i] == gold[i];
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

double macro_f1(std::span<const int> predicted, std::span<const int> gold, int n_classes) {
  if (predicted.size() != gold.size() || gold.empty()) throw Error("metric inputs must be non-empty and aligned");
  double sum = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (predicted[i] == c && gold[i] == c) ++tp;
      else if (predicted[i] == c) ++fp;
      else if (gold[i] == c) ++fn;
    }
    const double denom = 2.0 * static_cast<double>(tp) + static_cast<double>(fp + fn);
    sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
  }
  return sum / n_classes;
}

std::vector<int> predict(const Transformer<float>& model, const Mat<float>* prompt,
                         std::span<const Seq2SeqExample> examples, std::span<const TokenId> verbalizer_ids) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const auto dist = model.mask_distribution(prompt, ex.input_ids, ex.mask_position);
    out.push_back(static_cast<int>(predict_label(score_labels(dist, verbalizer_ids))));
  }
  return out;
}

double mean_loss(const Transformer<float>& model, const Mat<float>* prompt, std::span<const Seq2SeqExample> examples) {
  if (examples.empty()) throw Error("empty evaluation set");
  double total = 0.0;
  std::size_t targets = 0;
  for (const auto& ex : examples) {
    total += model.example_loss(prompt, ex, 1.0f, nullptr, nullptr) * static_cast<double>(ex.targets.size());
    targets += ex.targets.size();
  }
  return total / static_cast<double>(targets);
}

int gold_label(const Seq2SeqExample& ex, std::span<const TokenId> verbalizer_ids) {
  if (ex.targets.empty()) throw Error("example has no label");
  const auto it = std::find(verbalizer_ids.begin(), verbalizer_ids.end(), ex.targets.front());
  if (it == verbalizer_ids.end()) throw Error("target is not a verbalizer token");
  return static_cast<int>(it - verbalizer_ids.begin());
}

// ------------------------------------------------------ prompt pre-training

PretrainResult pretrain_prompt(const Transformer<float>& model, const SoftPrompt& init,
                               std::span<const Seq2SeqExample> train, std::span<const Seq2SeqExample> valid,
                               const PretrainConfig& config, TrainLog* log) {
  if (train.empty()) throw Error("empty pre-training data");
  if (valid.empty()) throw Error("empty validation split");
  if (config.eval_every < 1) throw Error("eval_every must be >= 1");

  Mat<float> prompt = init.values;
  Adam adam(static_cast<std::size_t>(prompt.size()));
  BatchStream stream(train.size(), config.batch_size, config.seed);

  PretrainResult result;
  result.n_train = train.size();
  result.n_valid = valid.size();
  auto evaluate = [&](std::int64_t step, std::optional<double> train_loss, double rate) {
    const double v = mean_loss(model, &prompt, valid);
    result.valid_curve.push_back({step, v});
    if (result.valid_curve.size() == 1 || v < result.best_valid_loss) {
      result.best_valid_loss = v;
      result.best_step = step;
      result.prompt.values = prompt;
    }
    if (log) log->append({step, rate, train_loss, v, "step=" + std::to_string(step)});
  };
  evaluate(0, std::nullopt, 0.0);
  for (std::int64_t step = 1; step <= config.steps; ++step) {
    const auto batch = gather(train, stream.next());
    auto lg = loss_and_grad(model, &prompt, std::span<const Seq2SeqExample>(batch), TuneMode::PT);
    std::span<float> g(lg.grads.prompt.data(), static_cast<std::size_t>(lg.grads.prompt.size()));
    clip_global_norm(g, config.clip_norm);
    const double rate = lr_schedule(config.scheduler, config.lr, step);
    adam.step(std::span<float>(prompt.data(), static_cast<std::size_t>(prompt.size())), g, rate);
    if (step % config.eval_every == 0) {
      evaluate(step, lg.loss, rate);
    } else if (log) {
      log->append({step, rate, lg.loss, std::nullopt, "step=" + std::to_string(step)});
    }
  }
  return result;
}

PretrainResult pretrain_prompt(const Transformer<float>& model, const Vocabulary& vocab, const SoftPrompt& init,
                               std::vector<PretrainExample> examples, const PretrainConfig& config, TrainLog* log) {
  if (examples.empty()) throw Error("empty pre-training data");
  const auto split = split_validation(std::move(examples), config.valid_fraction, config.seed ^ kSplitStream);
  std::vector<Seq2SeqExample> train, valid;
  for (const auto& ex : split.train) train.push_back(encode_pretrain_example(ex, vocab));
  for (const auto& ex : split.valid) valid.push_back(encode_pretrain_example(ex, vocab));
  return pretrain_prompt(model, init, train, valid, config, log);
}

// ------------------------------------------------------- few-shot tuning

TuneResult prompt_tune(const Transformer<float>& model, const SoftPrompt& init, std::span<const Seq2SeqExample> train,
                       std::span<const Seq2SeqExample> dev, std::span<const TokenId> verbalizer_ids,
                       const TuneConfig& config, TrainLog* log) {
  check_tune_inputs(train, dev, config);
  if (init.dim() != static_cast<std::size_t>(model.config().d_model)) throw Error("prompt shape mismatch");

  TuneResult result;
  Candidate best;
  for (double lr : config.lr_grid) {
    Mat<float> prompt = init.values;
    Adam adam(static_cast<std::size_t>(prompt.size()));
    auto train_step = [&](const std::vector<std::size_t>& idx, double rate) {
      const auto batch = gather(train, idx);
      auto lg = loss_and_grad(model, &prompt, std::span<const Seq2SeqExample>(batch), TuneMode::PT);
      std::span<float> g(lg.grads.prompt.data(), static_cast<std::size_t>(lg.grads.prompt.size()));
      clip_global_norm(g, config.clip_norm);
      adam.step(std::span<float>(prompt.data(), static_cast<std::size_t>(prompt.size())), g, rate);
      return lg.loss;
    };
    auto evaluate = [&] { return dev_score(model, &prompt, dev, verbalizer_ids, config.metric); };
    auto snapshot = [&] { result.prompt = SoftPrompt{prompt}; };
    result.arms.push_back(run_arm(lr, config, train.size(), train_step, evaluate, snapshot, best, log));
  }
  result.lr = best.lr;
  result.step = best.step;
  result.dev_metric = best.dev;
  return result;
}

TuneResult full_model_tune(const Transformer<float>& model, std::span<const Seq2SeqExample> train,
                           std::span<const Seq2SeqExample> dev, std::span<const TokenId> verbalizer_ids,
                           const TuneConfig& config, TrainLog* log) {
  check_tune_inputs(train, dev, config);
  TuneResult result;
  Candidate best;
  for (double lr : config.lr_grid) {
    Transformer<float> tuned = model;
    Adam adam(tuned.num_params());
    auto train_step = [&](const std::vector<std::size_t>& idx, double rate) {
      const auto batch = gather(train, idx);
      auto lg = loss_and_grad(tuned, static_cast<const Mat<float>*>(nullptr), std::span<const Seq2SeqExample>(batch),
                              TuneMode::FT);
      clip_global_norm(lg.grads.backbone, config.clip_norm);
      adam.step(tuned.params(), lg.grads.backbone, rate);
      return lg.loss;
    };
    auto evaluate = [&] { return dev_score(tuned, nullptr, dev, verbalizer_ids, config.metric); };
    auto snapshot = [&] { result.backbone = tuned; };
    result.arms.push_back(run_arm(lr, config, train.size(), train_step, evaluate, snapshot, best, log));
  }
  result.lr = best.lr;
  result.step = best.step;
  result.dev_metric = best.dev;
  return result;
}

// ------------------------------------------------------------ LM adaption

LmAdaptResult lm_adapt(const Transformer<float>& model, std::span<const std::vector<TokenId>> sequences,
                       const LmConfig& config, TrainLog* log) {
  const auto max_len = static_cast<std::size_t>(model.config().max_len);
  std::vector<std::vector<TokenId>> data;
  for (const auto& s : sequences) {
    if (s.empty()) continue;
    data.emplace_back(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(std::min(s.size(), max_len)));
  }
  if (data.empty()) throw Error("empty LM corpus");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(config.seed ^ kSplitStream);
  split_rng.shuffle(order.begin(), order.end());
  auto n_valid = static_cast<std::size_t>(std::llround(config.valid_fraction * static_cast<double>(data.size())));
  if (n_valid == 0 && data.size() > 1 && config.valid_fraction > 0.0) n_valid = 1;
  std::vector<std::vector<TokenId>> valid_seqs;
  std::vector<Seq2SeqExample> train;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_valid) valid_seqs.push_back(data[order[i]]);
    else train.push_back(Seq2SeqExample{data[order[i]], 0, {}});
  }

  LmAdaptResult result{model, 0.0, 0.0, valid_seqs.size()};
  result.valid_loss_before = lm_valid_loss(model, valid_seqs, config.seed);
  if (config.steps > 0) {
    if (train.empty()) throw Error("empty LM corpus");
    Adam adam(model.num_params());
    BatchStream stream(train.size(), config.batch_size, config.seed);
    for (std::int64_t step = 1; step <= config.steps; ++step) {
      const auto batch = gather(std::span<const Seq2SeqExample>(train), stream.next());
      auto lg = loss_and_grad(result.model, static_cast<const Mat<float>*>(nullptr),
                              std::span<const Seq2SeqExample>(batch), TuneMode::LM,
                              splitmix64(config.seed + static_cast<std::uint64_t>(step)));
      clip_global_norm(lg.grads.backbone, config.clip_norm);
      const double rate = lr_schedule(config.scheduler, config.lr, step);
      adam.step(result.model.params(), lg.grads.backbone, rate);
      if (log) log->append({step, rate, lg.loss, std::nullopt, "step=" + std::to_string(step)});
    }
  }
  result.valid_loss_after = lm_valid_loss(result.model, valid_seqs, config.seed);
  return result;
}

std::vector<std::vector<TokenId>> document_sequences(std::span<const Document> corpus, const Vocabulary& vocab) {
  std::vector<std::vector<TokenId>> out;
  const auto period = vocab.id(".");
  for (const auto& doc : corpus) {
    std::vector<TokenId> ids;
    for (const auto& s : doc.sentences) {
      const auto enc = vocab.encode(s);
      ids.insert(ids.end(), enc.begin(), enc.end());
      ids.push_back(period);
    }
    if (!ids.empty()) out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace pptlab
