#include "pptlab/desk.hpp"

#include <cstdio>

#include "pptlab/error.hpp"
#include "pptlab/soft_prompt.hpp"

namespace pptlab {
namespace {

constexpr std::uint64_t kCueStream = 0xC0E0ULL;
constexpr std::uint64_t kEvalStream = 0xC0E1ULL;

Mat<float> random_rows(Rng& rng, std::size_t rows, std::size_t cols, double std) {
  Mat<float> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(std * rng.normal());
  return m;
}

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void say(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

}  // namespace

CueTrainingResult train_cued_backbone(const Transformer<float>& model, const Vocabulary& vocab,
                                      std::span<const Document> corpus, const CueTrainingConfig& config,
                                      const Progress& progress) {
  if (config.prompt_length == 0 || config.batch_size == 0) throw Error("cue training needs a prompt and a batch");
  const auto d = static_cast<std::size_t>(model.config().d_model);
  const auto vids = make_builtin_pvp(Format::MCC, 0, 4).verbalizer.bind(vocab);

  CueTrainingResult result{model, {}, {}, {}};
  Rng cue_rng(config.seed, kCueStream);
  result.cue = random_rows(cue_rng, 1, d, 1.0);

  // Fixed evaluation prompts: one random draw, with and without the cue.
  Rng eval_rng(config.seed, kEvalStream);
  const Mat<float> plain = random_rows(eval_rng, config.prompt_length, d, config.prompt_std);
  Mat<float> cued = plain;
  cued.row(static_cast<Eigen::Index>(eval_rng.uniform_index(config.prompt_length))) = result.cue;
  std::vector<Seq2SeqExample> eval_next, eval_prev;
  for (std::size_t i = 0; i < config.n_eval; ++i) {
    eval_next.push_back(encode_pretrain_example(cued_selection_example(corpus, eval_rng, Direction::Next), vocab));
    eval_prev.push_back(encode_pretrain_example(cued_selection_example(corpus, eval_rng, Direction::Previous), vocab));
  }
  std::vector<int> gold_next, gold_prev;
  for (const auto& e : eval_next) gold_next.push_back(gold_label(e, vids));
  for (const auto& e : eval_prev) gold_prev.push_back(gold_label(e, vids));
  auto evaluate = [&](std::int64_t step) {
    result.cued_next.push_back({step, accuracy(predict(result.model, &cued, eval_next, vids), gold_next)});
    result.plain_prev.push_back({step, accuracy(predict(result.model, &plain, eval_prev, vids), gold_prev)});
  };

  auto& params = result.model.params();
  Adam adam(params.size());
  Rng rng(config.seed);
  double running = 0.0;
  for (std::int64_t step = 0; step < config.steps; ++step) {
    const auto direction = step % 2 == 0 ? Direction::Next : Direction::Previous;
    std::vector<Seq2SeqExample> batch;
    batch.reserve(config.batch_size);
    for (std::size_t i = 0; i < config.batch_size; ++i) {
      batch.push_back(encode_pretrain_example(cued_selection_example(corpus, rng, direction), vocab));
    }
    Mat<float> prompt = random_rows(rng, config.prompt_length, d, config.prompt_std);
    if (direction == Direction::Next) {
      prompt.row(static_cast<Eigen::Index>(rng.uniform_index(config.prompt_length))) = result.cue;
    }
    auto lg = loss_and_grad(result.model, &prompt, std::span<const Seq2SeqExample>(batch), TuneMode::FT);
    running = step == 0 ? lg.loss : 0.98 * running + 0.02 * lg.loss;
    clip_global_norm(lg.grads.backbone, config.clip_norm);
    adam.step(params, lg.grads.backbone, config.lr);
    if (config.eval_every > 0 && (step + 1) % config.eval_every == 0) {
      evaluate(step + 1);
      say(progress, "cue step " + std::to_string(step + 1) + " loss " + fixed(running) + " cued-next " +
                        fixed(result.cued_next.back().value) + " plain-prev " + fixed(result.plain_prev.back().value));
    }
  }
  if (result.cued_next.empty() || result.cued_next.back().step != config.steps) evaluate(config.steps);
  return result;
}

DeskExperimentResult run_desk_experiment(const DeskExperimentConfig& config, const Progress& progress) {
  const auto corpus = synthetic_corpus(config.corpus);
  if (corpus.size() < 8) throw Error("desk experiment needs at least 8 documents");
  std::vector<std::string> texts;
  for (const auto& doc : corpus) texts.insert(texts.end(), doc.sentences.begin(), doc.sentences.end());
  const auto reserved = reserved_words();
  const auto vocab = Vocabulary::build(texts, config.vocab_size, reserved);
  const std::span<const Document> all(corpus);
  const auto backbone_docs = all.first(corpus.size() / 2);
  const auto task_docs = all.subspan(corpus.size() / 2);

  DeskExperimentResult out;
  ModelConfig mc;
  mc.vocab_size = static_cast<int>(vocab.size());
  const auto base = Transformer<float>::init(mc, config.model_seed);
  const auto lm = lm_adapt(base, document_sequences(backbone_docs, vocab), config.lm);
  out.lm_loss_before = lm.valid_loss_before;
  out.lm_loss_after = lm.valid_loss_after;
  say(progress, "lm adaption valid loss " + fixed(lm.valid_loss_before) + " -> " + fixed(lm.valid_loss_after));

  const auto cue = train_cued_backbone(lm.model, vocab, backbone_docs, config.cue, progress);
  out.cued_next_accuracy = cue.cued_next.back().value;
  out.plain_prev_accuracy = cue.plain_prev.back().value;
  const auto& backbone = cue.model;

  // MCC prompt pre-training on next sentence selection.
  auto split = split_validation(build_nss(backbone_docs, config.nss_examples, config.data_seed, config.nss_options),
                                config.pretrain.valid_fraction, config.data_seed);
  std::vector<Seq2SeqExample> train, valid;
  for (const auto& ex : split.train) train.push_back(encode_pretrain_example(ex, vocab));
  for (const auto& ex : split.valid) valid.push_back(encode_pretrain_example(ex, vocab));
  PromptInitContext pctx;
  const auto init = init_soft_prompt(PromptInit::Random, backbone, kDefaultPromptLength, pctx,
                                     config.prompt_init_seed).prompt;
  const auto pre = pretrain_prompt(backbone, init, train, valid, config.pretrain);
  const auto vids = make_builtin_pvp(Format::MCC, 0, config.nss_options).verbalizer.bind(vocab);
  std::vector<int> gold;
  for (const auto& e : valid) gold.push_back(gold_label(e, vids));
  out.pretrain_valid_accuracy = accuracy(predict(backbone, &pre.prompt.values, valid, vids), gold);
  say(progress, "prompt pre-training best step " + std::to_string(pre.best_step) + " valid loss " +
                    fixed(pre.best_valid_loss) + " valid accuracy " + fixed(out.pretrain_valid_accuracy));

  std::filesystem::create_directories(config.workdir);
  ExperimentConfig ec;
  ec.workdir = config.workdir;
  ec.tune = config.tune;
  save_prompt(prompt_checkpoint_path(config.workdir, prompt_group(Method::PPT, Format::MCC)), pre.prompt);

  const auto records = synthetic_next_sentence_task(task_docs, config.n_train_pool, config.n_test, config.data_seed);
  const auto data = make_dataset("synthetic-next", records);
  const ExperimentContext ctx{&backbone, nullptr, &vocab};
  for (const auto method : {Method::PT, Method::PPT}) {
    ExperimentSpec spec;
    spec.method = method;
    spec.task = data.name;
    spec.seeds = config.seeds;
    spec.samples = config.samples;
    auto r = run_experiment(spec, data, ec, ctx);
    say(progress, std::string(method_display_name(method)) + " mean " + fixed(r.mean) + " std " + fixed(r.std));
    if (method == Method::PT) out.pt = std::move(r);
    else out.ppt = std::move(r);
  }
  out.seeds = config.seeds;
  out.pt_test = out.pt.per_seed;
  out.ppt_test = out.ppt.per_seed;
  out.pt_curves = out.pt.dev_curves;
  out.ppt_curves = out.ppt.dev_curves;
  return out;
}

std::optional<std::int64_t> steps_to_reach(std::span<const CurvePoint> curve, double target) {
  for (const auto& p : curve) {
    if (p.value >= target) return p.step;
  }
  return std::nullopt;
}

}  // namespace pptlab
