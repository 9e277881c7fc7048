#include "pptlab/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "pptlab/error.hpp"
#include "pptlab/rng.hpp"

namespace pptlab {
namespace {

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

constexpr double kNormEps = 1e-6;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("invalid model config: " + what);
}

// ------------------------------------------------------------ RMS norm

template <typename T, typename Gain>
Mat<T> rms_forward(const Mat<T>& x, const Gain& gain, Vec<T>& rstd) {
  const auto d = static_cast<T>(x.cols());
  rstd.resize(x.rows());
  Mat<T> y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const T r = T(1) / std::sqrt(x.row(i).squaredNorm() / d + static_cast<T>(kNormEps));
    rstd(i) = r;
    y.row(i) = x.row(i).cwiseProduct(gain.row(0)) * r;
  }
  return y;
}

template <typename T, typename Gain, typename GainGrad>
Mat<T> rms_backward(const Mat<T>& dy, const Mat<T>& x, const Vec<T>& rstd, const Gain& gain,
                    GainGrad* dgain) {
  const auto d = static_cast<T>(x.cols());
  Mat<T> dx(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const T r = rstd(i);
    const auto gd = dy.row(i).cwiseProduct(gain.row(0));
    const T dot = gd.dot(x.row(i));
    dx.row(i) = gd * r - x.row(i) * (r * r * r * dot / d);
    if (dgain) dgain->row(0) += dy.row(i).cwiseProduct(x.row(i)) * r;
  }
  return dx;
}

// ----------------------------------------------------------- attention

template <typename T>
struct AttnCache {
  Mat<T> q, k, v, context;
  std::vector<Mat<T>> probs;
};

template <typename T>
struct GradSink {
  std::vector<T>* data = nullptr;
  const ParamLayout* layout = nullptr;

  explicit operator bool() const { return data != nullptr; }
  Eigen::Map<Mat<T>> operator[](std::size_t index) const {
    const auto& t = layout->tensors[index];
    return Eigen::Map<Mat<T>>(data->data() + t.offset, static_cast<Eigen::Index>(t.rows),
                              static_cast<Eigen::Index>(t.cols));
  }
};

template <typename T>
Mat<T> attention_forward(const Transformer<T>& m, const ParamLayout::Attention& w, const Mat<T>& xq,
                         const Mat<T>& xkv, const std::vector<char>& key_valid, bool causal,
                         AttnCache<T>& c) {
  const int heads = m.config().n_heads;
  const Eigen::Index dh = m.config().d_model / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const Eigen::Index lq = xq.rows();
  const Eigen::Index lk = xkv.rows();

  c.q.noalias() = xq * m.tensor(w.wq);
  c.k.noalias() = xkv * m.tensor(w.wk);
  c.v.noalias() = xkv * m.tensor(w.wv);
  c.context.resize(lq, xq.cols());
  c.probs.resize(static_cast<std::size_t>(heads));

  for (int h = 0; h < heads; ++h) {
    auto& p = c.probs[static_cast<std::size_t>(h)];
    p.noalias() = c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose();
    for (Eigen::Index i = 0; i < lq; ++i) {
      T mx = -std::numeric_limits<T>::infinity();
      for (Eigen::Index j = 0; j < lk; ++j) {
        const bool ok = key_valid[static_cast<std::size_t>(j)] && (!causal || j <= i);
        if (ok) mx = std::max(mx, p(i, j) * scale);
      }
      T sum = 0;
      for (Eigen::Index j = 0; j < lk; ++j) {
        const bool ok = key_valid[static_cast<std::size_t>(j)] && (!causal || j <= i);
        const T e = ok ? std::exp(p(i, j) * scale - mx) : T(0);
        p(i, j) = e;
        sum += e;
      }
      p.row(i) /= sum;
    }
    c.context.middleCols(h * dh, dh).noalias() = p * c.v.middleCols(h * dh, dh);
  }
  return c.context * m.tensor(w.wo);
}

// Returns d(xq); adds d(xkv) into dxkv.
template <typename T>
Mat<T> attention_backward(const Transformer<T>& m, const ParamLayout::Attention& w, const Mat<T>& xq,
                          const Mat<T>& xkv, const AttnCache<T>& c, const Mat<T>& dout,
                          Mat<T>& dxkv, const GradSink<T>& grad) {
  const int heads = m.config().n_heads;
  const Eigen::Index dh = m.config().d_model / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  if (grad) grad[w.wo].noalias() += c.context.transpose() * dout;
  const Mat<T> dcontext = dout * m.tensor(w.wo).transpose();

  Mat<T> dq(c.q.rows(), c.q.cols());
  Mat<T> dk(c.k.rows(), c.k.cols());
  Mat<T> dv(c.v.rows(), c.v.cols());
  for (int h = 0; h < heads; ++h) {
    const auto& p = c.probs[static_cast<std::size_t>(h)];
    const auto dch = dcontext.middleCols(h * dh, dh);
    dv.middleCols(h * dh, dh).noalias() = p.transpose() * dch;
    Mat<T> dp = dch * c.v.middleCols(h * dh, dh).transpose();
    for (Eigen::Index i = 0; i < dp.rows(); ++i) {
      const T dot = dp.row(i).dot(p.row(i));
      dp.row(i) = p.row(i).cwiseProduct((dp.row(i).array() - dot).matrix()) * scale;
    }
    dq.middleCols(h * dh, dh).noalias() = dp * c.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = dp.transpose() * c.q.middleCols(h * dh, dh);
  }
  if (grad) {
    grad[w.wq].noalias() += xq.transpose() * dq;
    grad[w.wk].noalias() += xkv.transpose() * dk;
    grad[w.wv].noalias() += xkv.transpose() * dv;
  }
  dxkv.noalias() += dk * m.tensor(w.wk).transpose();
  dxkv.noalias() += dv * m.tensor(w.wv).transpose();
  return dq * m.tensor(w.wq).transpose();
}

// -------------------------------------------------------- feed-forward

template <typename T>
struct FfCache {
  Mat<T> pre;   // before ReLU
  Mat<T> act;   // after ReLU
};

template <typename T>
Mat<T> ff_forward(const Transformer<T>& m, std::size_t w_in, std::size_t w_out, const Mat<T>& x,
                  FfCache<T>& c) {
  c.pre.noalias() = x * m.tensor(w_in);
  c.act = c.pre.cwiseMax(T(0));
  return c.act * m.tensor(w_out);
}

template <typename T>
Mat<T> ff_backward(const Transformer<T>& m, std::size_t w_in, std::size_t w_out, const Mat<T>& x,
                   const FfCache<T>& c, const Mat<T>& dout, const GradSink<T>& grad) {
  if (grad) grad[w_out].noalias() += c.act.transpose() * dout;
  Mat<T> dpre = dout * m.tensor(w_out).transpose();
  dpre = (c.pre.array() > T(0)).select(dpre, T(0));
  if (grad) grad[w_in].noalias() += x.transpose() * dpre;
  return dpre * m.tensor(w_in).transpose();
}

// ------------------------------------------------------ forward state

template <typename T>
struct EncoderLayerCache {
  Mat<T> x_in, normed_attn, x_mid, normed_ff;
  Vec<T> rstd_attn, rstd_ff;
  AttnCache<T> attn;
  FfCache<T> ff;
};

template <typename T>
struct DecoderLayerCache {
  Mat<T> y_in, normed_self, y_self, normed_cross, y_cross, normed_ff;
  Vec<T> rstd_self, rstd_cross, rstd_ff;
  AttnCache<T> self, cross;
  FfCache<T> ff;
};

template <typename T>
struct ForwardState {
  std::size_t prompt_len = 0;
  std::vector<char> key_valid;
  std::vector<char> dec_valid;
  std::vector<EncoderLayerCache<T>> enc;
  std::vector<DecoderLayerCache<T>> dec;
  Mat<T> enc_out_raw, enc_out;
  Vec<T> enc_rstd;
  Mat<T> dec_out_raw, dec_out;
  Vec<T> dec_rstd;
  Mat<T> logits;
  std::vector<TokenId> dec_input;
};

template <typename T>
void check_inputs(const Transformer<T>& m, const Mat<T>* prompt, std::span<const TokenId> ids,
                  std::size_t mask_position) {
  const auto& cfg = m.config();
  const std::size_t k = prompt ? static_cast<std::size_t>(prompt->rows()) : 0;
  if (prompt && prompt->rows() > 0 && prompt->cols() != cfg.d_model) {
    throw Error("prompt shape mismatch");
  }
  if (k + ids.size() > static_cast<std::size_t>(cfg.max_len)) throw Error("sequence too long");
  for (TokenId id : ids) {
    if (id < 0 || id >= cfg.vocab_size) throw Error("input id out of vocabulary");
  }
  if (mask_position >= ids.size() || ids[mask_position] != Vocabulary::kMask) {
    throw Error("mask_position does not index a mask token");
  }
}

template <typename T>
void forward(const Transformer<T>& m, const Mat<T>* prompt, std::span<const TokenId> ids,
             std::span<const TokenId> dec_input, ForwardState<T>& s) {
  const auto& cfg = m.config();
  const auto& lay = m.layout();
  const std::size_t k = prompt ? static_cast<std::size_t>(prompt->rows()) : 0;
  const auto len = static_cast<Eigen::Index>(k + ids.size());
  const Eigen::Index d = cfg.d_model;
  s.prompt_len = k;

  Mat<T> x(len, d);
  if (k > 0) x.topRows(static_cast<Eigen::Index>(k)) = *prompt;
  const auto emb = m.tensor(lay.tok_emb);
  for (std::size_t i = 0; i < ids.size(); ++i) x.row(static_cast<Eigen::Index>(k + i)) = emb.row(ids[i]);
  // Input tokens keep positions 0..n-1 whatever the prompt length; prompt
  // rows take no position embedding.
  const auto n = static_cast<Eigen::Index>(ids.size());
  x.bottomRows(n) += m.tensor(lay.enc_pos).topRows(n);

  s.key_valid.assign(static_cast<std::size_t>(len), 1);
  for (std::size_t i = 0; i < ids.size(); ++i) s.key_valid[k + i] = ids[i] != Vocabulary::kPad;

  s.enc.resize(lay.encoder.size());
  for (std::size_t l = 0; l < lay.encoder.size(); ++l) {
    const auto& w = lay.encoder[l];
    auto& c = s.enc[l];
    c.x_in = std::move(x);
    c.normed_attn = rms_forward(c.x_in, m.tensor(w.norm_attn), c.rstd_attn);
    c.x_mid = c.x_in + attention_forward(m, w.attn, c.normed_attn, c.normed_attn, s.key_valid, false, c.attn);
    c.normed_ff = rms_forward(c.x_mid, m.tensor(w.norm_ff), c.rstd_ff);
    x = c.x_mid + ff_forward(m, w.ff_in, w.ff_out, c.normed_ff, c.ff);
  }
  s.enc_out_raw = std::move(x);
  s.enc_out = rms_forward(s.enc_out_raw, m.tensor(lay.enc_norm), s.enc_rstd);

  const auto mlen = static_cast<Eigen::Index>(dec_input.size());
  s.dec_input.assign(dec_input.begin(), dec_input.end());
  Mat<T> y(mlen, d);
  for (Eigen::Index i = 0; i < mlen; ++i) y.row(i) = emb.row(dec_input[static_cast<std::size_t>(i)]);
  y += m.tensor(lay.dec_pos).topRows(mlen);
  s.dec_valid.assign(static_cast<std::size_t>(mlen), 1);

  s.dec.resize(lay.decoder.size());
  for (std::size_t l = 0; l < lay.decoder.size(); ++l) {
    const auto& w = lay.decoder[l];
    auto& c = s.dec[l];
    c.y_in = std::move(y);
    c.normed_self = rms_forward(c.y_in, m.tensor(w.norm_self), c.rstd_self);
    c.y_self = c.y_in + attention_forward(m, w.self, c.normed_self, c.normed_self, s.dec_valid, true, c.self);
    c.normed_cross = rms_forward(c.y_self, m.tensor(w.norm_cross), c.rstd_cross);
    c.y_cross = c.y_self + attention_forward(m, w.cross, c.normed_cross, s.enc_out, s.key_valid, false, c.cross);
    c.normed_ff = rms_forward(c.y_cross, m.tensor(w.norm_ff), c.rstd_ff);
    y = c.y_cross + ff_forward(m, w.ff_in, w.ff_out, c.normed_ff, c.ff);
  }
  s.dec_out_raw = std::move(y);
  s.dec_out = rms_forward(s.dec_out_raw, m.tensor(lay.dec_norm), s.dec_rstd);
  s.logits.noalias() = s.dec_out * m.tensor(lay.lm_head);
}

template <typename T>
std::vector<double> softmax_row(const Mat<T>& logits, Eigen::Index row) {
  std::vector<double> p(static_cast<std::size_t>(logits.cols()));
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < logits.cols(); ++j) mx = std::max(mx, static_cast<double>(logits(row, j)));
  double sum = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    p[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(logits(row, j)) - mx);
    sum += p[static_cast<std::size_t>(j)];
  }
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace

// ------------------------------------------------------------- config

void ModelConfig::validate() const {
  require(d_model > 0, "d_model must be positive");
  require(n_heads > 0, "n_heads must be positive");
  require(d_model % n_heads == 0, "d_model must be divisible by n_heads");
  require(n_layers_enc >= 0, "n_layers_enc must be non-negative");
  require(n_layers_dec >= 0, "n_layers_dec must be non-negative");
  require(d_ff > 0, "d_ff must be positive");
  require(max_len > 0, "max_len must be positive");
  require(max_target_len > 0, "max_target_len must be positive");
  require(vocab_size > static_cast<int>(Vocabulary::kNumSpecial), "vocab_size must exceed the special tokens");
}

ParamLayout::ParamLayout(const ModelConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto ff = static_cast<std::size_t>(cfg.d_ff);
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    tensors.push_back({std::move(name), total, rows, cols});
    total += rows * cols;
    return tensors.size() - 1;
  };
  auto attention = [&](const std::string& prefix) {
    return Attention{add(prefix + ".wq", d, d), add(prefix + ".wk", d, d), add(prefix + ".wv", d, d),
                     add(prefix + ".wo", d, d)};
  };
  tok_emb = add("tok_emb", static_cast<std::size_t>(cfg.vocab_size), d);
  enc_pos = add("enc_pos", static_cast<std::size_t>(cfg.max_len), d);
  dec_pos = add("dec_pos", static_cast<std::size_t>(cfg.max_target_len), d);
  for (int l = 0; l < cfg.n_layers_enc; ++l) {
    const auto p = "enc." + std::to_string(l);
    EncoderLayer layer{};
    layer.norm_attn = add(p + ".norm_attn", 1, d);
    layer.attn = attention(p + ".attn");
    layer.norm_ff = add(p + ".norm_ff", 1, d);
    layer.ff_in = add(p + ".ff_in", d, ff);
    layer.ff_out = add(p + ".ff_out", ff, d);
    encoder.push_back(layer);
  }
  enc_norm = add("enc_norm", 1, d);
  for (int l = 0; l < cfg.n_layers_dec; ++l) {
    const auto p = "dec." + std::to_string(l);
    DecoderLayer layer{};
    layer.norm_self = add(p + ".norm_self", 1, d);
    layer.self = attention(p + ".self");
    layer.norm_cross = add(p + ".norm_cross", 1, d);
    layer.cross = attention(p + ".cross");
    layer.norm_ff = add(p + ".norm_ff", 1, d);
    layer.ff_in = add(p + ".ff_in", d, ff);
    layer.ff_out = add(p + ".ff_out", ff, d);
    decoder.push_back(layer);
  }
  dec_norm = add("dec_norm", 1, d);
  lm_head = add("lm_head", d, static_cast<std::size_t>(cfg.vocab_size));
}

std::size_t parameter_census(const ModelConfig& config) { return ParamLayout(config).total; }

std::size_t count_tunable(const ModelConfig& config, std::size_t prompt_len, TuneMode mode) {
  const std::size_t prompt = prompt_len * static_cast<std::size_t>(config.d_model);
  if (mode == TuneMode::PT) return prompt;
  return parameter_census(config) + prompt;
}

Seq2SeqExample make_span_corruption(std::span<const TokenId> raw, std::uint64_t seed,
                                    std::uint64_t stream) {
  if (raw.empty()) throw Error("span corruption needs a non-empty sequence");
  Rng rng(seed, stream);
  const auto max_span = std::min<std::size_t>(3, raw.size());
  const auto span = 1 + rng.uniform_index(max_span);
  const auto start = rng.uniform_index(raw.size() - span + 1);
  Seq2SeqExample ex;
  ex.input_ids.assign(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(start));
  ex.mask_position = ex.input_ids.size();
  ex.input_ids.push_back(Vocabulary::kMask);
  ex.input_ids.insert(ex.input_ids.end(), raw.begin() + static_cast<std::ptrdiff_t>(start + span), raw.end());
  ex.targets.assign(raw.begin() + static_cast<std::ptrdiff_t>(start),
                    raw.begin() + static_cast<std::ptrdiff_t>(start + span));
  return ex;
}

// -------------------------------------------------------- Transformer

template <typename T>
Transformer<T>::Transformer(const ModelConfig& config)
    : config_(config), layout_(config), params_(layout_.total, T(0)) {}

template <typename T>
Transformer<T> Transformer<T>::init(const ModelConfig& config, std::uint64_t seed) {
  Transformer model(config);
  Rng rng(seed);
  const auto& lay = model.layout_;
  auto fill_normal = [&](std::size_t index, double stddev) {
    auto t = model.tensor(index);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(rng.normal() * stddev);
  };
  auto fill_ones = [&](std::size_t index) { model.tensor(index).setOnes(); };
  const double d = config.d_model;
  const double ff = config.d_ff;
  auto fill_attention = [&](const ParamLayout::Attention& a) {
    for (auto idx : {a.wq, a.wk, a.wv, a.wo}) fill_normal(idx, 1.0 / std::sqrt(d));
  };
  fill_normal(lay.tok_emb, 1.0);
  fill_normal(lay.enc_pos, 1.0);
  fill_normal(lay.dec_pos, 1.0);
  for (const auto& l : lay.encoder) {
    fill_ones(l.norm_attn);
    fill_attention(l.attn);
    fill_ones(l.norm_ff);
    fill_normal(l.ff_in, 1.0 / std::sqrt(d));
    fill_normal(l.ff_out, 1.0 / std::sqrt(ff));
  }
  fill_ones(lay.enc_norm);
  for (const auto& l : lay.decoder) {
    fill_ones(l.norm_self);
    fill_attention(l.self);
    fill_ones(l.norm_cross);
    fill_attention(l.cross);
    fill_ones(l.norm_ff);
    fill_normal(l.ff_in, 1.0 / std::sqrt(d));
    fill_normal(l.ff_out, 1.0 / std::sqrt(ff));
  }
  fill_ones(lay.dec_norm);
  fill_normal(lay.lm_head, 1.0 / std::sqrt(d));
  return model;
}

template <typename T>
Eigen::Map<Mat<T>> Transformer<T>::tensor(std::size_t index) {
  const auto& t = layout_.tensors[index];
  return Eigen::Map<Mat<T>>(params_.data() + t.offset, static_cast<Eigen::Index>(t.rows),
                            static_cast<Eigen::Index>(t.cols));
}

template <typename T>
Eigen::Map<const Mat<T>> Transformer<T>::tensor(std::size_t index) const {
  const auto& t = layout_.tensors[index];
  return Eigen::Map<const Mat<T>>(params_.data() + t.offset, static_cast<Eigen::Index>(t.rows),
                                  static_cast<Eigen::Index>(t.cols));
}

template <typename T>
Eigen::Matrix<T, 1, Eigen::Dynamic> Transformer<T>::embedding(TokenId id) const {
  if (id < 0 || id >= config_.vocab_size) throw Error("id out of range");
  return tensor(layout_.tok_emb).row(id);
}

template <typename T>
std::vector<double> Transformer<T>::mask_distribution(const Mat<T>* prompt,
                                                      std::span<const TokenId> input_ids,
                                                      std::size_t mask_position) const {
  check_inputs(*this, prompt, input_ids, mask_position);
  ForwardState<T> s;
  const TokenId start[1] = {Vocabulary::kMask};
  forward(*this, prompt, input_ids, start, s);
  return softmax_row(s.logits, 0);
}

template <typename T>
double Transformer<T>::example_loss(const Mat<T>* prompt, const Seq2SeqExample& ex, T scale,
                                    std::vector<T>* backbone_grad, Mat<T>* prompt_grad) const {
  check_inputs(*this, prompt, ex.input_ids, ex.mask_position);
  if (ex.targets.empty()) throw Error("example has no targets");
  if (ex.targets.size() > static_cast<std::size_t>(config_.max_target_len)) {
    throw Error("target sequence too long");
  }
  for (TokenId t : ex.targets) {
    if (t < 0 || t >= config_.vocab_size) throw Error("target id out of vocabulary");
  }

  std::vector<TokenId> dec_in{Vocabulary::kMask};
  dec_in.insert(dec_in.end(), ex.targets.begin(), ex.targets.end() - 1);
  ForwardState<T> s;
  forward(*this, prompt, ex.input_ids, dec_in, s);

  const auto m = static_cast<Eigen::Index>(ex.targets.size());
  double loss = 0.0;
  Mat<T> dlogits(m, s.logits.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto p = softmax_row(s.logits, i);
    const auto target = static_cast<std::size_t>(ex.targets[static_cast<std::size_t>(i)]);
    loss -= std::log(std::max(p[target], std::numeric_limits<double>::min()));
    for (Eigen::Index j = 0; j < dlogits.cols(); ++j) dlogits(i, j) = static_cast<T>(p[static_cast<std::size_t>(j)]);
    dlogits(i, static_cast<Eigen::Index>(target)) -= T(1);
  }
  loss /= static_cast<double>(m);

  const bool want_prompt = prompt_grad != nullptr && s.prompt_len > 0;
  if (backbone_grad == nullptr && !want_prompt) return loss;

  dlogits *= scale / static_cast<T>(m);
  const GradSink<T> g{backbone_grad, &layout_};
  const auto& lay = layout_;

  // Output head and decoder.
  if (g) g[lay.lm_head].noalias() += s.dec_out.transpose() * dlogits;
  Mat<T> dy = dlogits * tensor(lay.lm_head).transpose();
  {
    auto dg = g ? std::optional(g[lay.dec_norm]) : std::nullopt;
    dy = rms_backward(dy, s.dec_out_raw, s.dec_rstd, tensor(lay.dec_norm), dg ? &*dg : nullptr);
  }
  Mat<T> denc = Mat<T>::Zero(s.enc_out.rows(), s.enc_out.cols());
  for (std::size_t li = lay.decoder.size(); li-- > 0;) {
    const auto& w = lay.decoder[li];
    const auto& c = s.dec[li];
    auto sink = [&](std::size_t idx) { return g ? std::optional(g[idx]) : std::nullopt; };

    Mat<T> dn = ff_backward(*this, w.ff_in, w.ff_out, c.normed_ff, c.ff, dy, g);
    auto dgf = sink(w.norm_ff);
    dy += rms_backward(dn, c.y_cross, c.rstd_ff, tensor(w.norm_ff), dgf ? &*dgf : nullptr);

    dn = attention_backward(*this, w.cross, c.normed_cross, s.enc_out, c.cross, dy, denc, g);
    auto dgc = sink(w.norm_cross);
    dy += rms_backward(dn, c.y_self, c.rstd_cross, tensor(w.norm_cross), dgc ? &*dgc : nullptr);

    if (!g && li == 0) continue;  // below the first layer only backbone weights remain
    Mat<T> dself = Mat<T>::Zero(c.normed_self.rows(), c.normed_self.cols());
    dn = attention_backward(*this, w.self, c.normed_self, c.normed_self, c.self, dy, dself, g);
    dn += dself;
    auto dgs = sink(w.norm_self);
    dy += rms_backward(dn, c.y_in, c.rstd_self, tensor(w.norm_self), dgs ? &*dgs : nullptr);
  }
  if (g) {
    auto emb = g[lay.tok_emb];
    auto pos = g[lay.dec_pos];
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
      emb.row(s.dec_input[static_cast<std::size_t>(i)]) += dy.row(i);
      pos.row(i) += dy.row(i);
    }
  }

  // Encoder.
  Mat<T> dx;
  {
    auto dg = g ? std::optional(g[lay.enc_norm]) : std::nullopt;
    dx = rms_backward(denc, s.enc_out_raw, s.enc_rstd, tensor(lay.enc_norm), dg ? &*dg : nullptr);
  }
  for (std::size_t li = lay.encoder.size(); li-- > 0;) {
    const auto& w = lay.encoder[li];
    const auto& c = s.enc[li];
    auto sink = [&](std::size_t idx) { return g ? std::optional(g[idx]) : std::nullopt; };

    Mat<T> dn = ff_backward(*this, w.ff_in, w.ff_out, c.normed_ff, c.ff, dx, g);
    auto dgf = sink(w.norm_ff);
    dx += rms_backward(dn, c.x_mid, c.rstd_ff, tensor(w.norm_ff), dgf ? &*dgf : nullptr);

    Mat<T> dkv = Mat<T>::Zero(c.normed_attn.rows(), c.normed_attn.cols());
    dn = attention_backward(*this, w.attn, c.normed_attn, c.normed_attn, c.attn, dx, dkv, g);
    dn += dkv;
    auto dga = sink(w.norm_attn);
    dx += rms_backward(dn, c.x_in, c.rstd_attn, tensor(w.norm_attn), dga ? &*dga : nullptr);
  }

  const auto k = static_cast<Eigen::Index>(s.prompt_len);
  if (want_prompt) {
    if (prompt_grad->rows() != k || prompt_grad->cols() != dx.cols()) prompt_grad->setZero(k, dx.cols());
    *prompt_grad += dx.topRows(k);
  }
  if (g) {
    auto emb = g[lay.tok_emb];
    for (std::size_t i = 0; i < ex.input_ids.size(); ++i) {
      emb.row(ex.input_ids[i]) += dx.row(k + static_cast<Eigen::Index>(i));
    }
    const auto n = static_cast<Eigen::Index>(ex.input_ids.size());
    g[lay.enc_pos].topRows(n) += dx.bottomRows(n);
  }
  return loss;
}

template <typename T>
std::uint64_t Transformer<T>::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(params_.data());
  for (std::size_t i = 0; i < params_.size() * sizeof(T); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
LossAndGrad<T> loss_and_grad(const Transformer<T>& model, const Mat<T>* prompt,
                             std::span<const Seq2SeqExample> batch, TuneMode mode,
                             std::uint64_t lm_seed) {
  if (batch.empty()) throw Error("empty batch");
  LossAndGrad<T> out;
  const bool backbone = mode != TuneMode::PT;
  const bool has_prompt = prompt != nullptr && prompt->rows() > 0;
  if (backbone) out.grads.backbone.assign(model.num_params(), T(0));
  if (has_prompt && mode != TuneMode::LM) out.grads.prompt = Mat<T>::Zero(prompt->rows(), prompt->cols());

  std::size_t total_targets = 0;
  std::vector<Seq2SeqExample> corrupted;
  if (mode == TuneMode::LM) {
    corrupted.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      corrupted.push_back(make_span_corruption(batch[i].input_ids, lm_seed, i));
    }
    batch = corrupted;
  }
  for (const auto& ex : batch) total_targets += ex.targets.size();

  double loss = 0.0;
  for (const auto& ex : batch) {
    const T weight = static_cast<T>(static_cast<double>(ex.targets.size()) / static_cast<double>(total_targets));
    const Mat<T>* p = mode == TuneMode::LM ? nullptr : prompt;
    loss += static_cast<double>(weight) *
            model.example_loss(p, ex, weight, backbone ? &out.grads.backbone : nullptr,
                               has_prompt && mode != TuneMode::LM ? &out.grads.prompt : nullptr);
  }
  out.loss = loss;
  return out;
}

// -------------------------------------------------------- snapshots

namespace {

constexpr char kModelMagic[4] = {'P', 'P', 'T', 'B'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw Error("truncated model snapshot");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

float get_f32(const std::string& in, std::size_t& pos) {
  const std::uint32_t bits = get_u32(in, pos);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void save_model(const std::filesystem::path& path, const Transformer<float>& model,
                const Vocabulary& vocab) {
  const auto& c = model.config();
  if (static_cast<std::size_t>(c.vocab_size) != vocab.size()) throw Error("model and vocabulary sizes differ");
  std::string out(kModelMagic, 4);
  put_u32(out, 1);
  for (int v : {c.d_model, c.n_layers_enc, c.n_layers_dec, c.n_heads, c.d_ff, c.max_len, c.max_target_len,
                c.vocab_size}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_u32(out, static_cast<std::uint32_t>(model.num_params()));
  for (float f : model.params()) put_f32(out, f);
  for (const auto& tok : vocab.tokens()) {
    put_u32(out, static_cast<std::uint32_t>(tok.size()));
    out += tok;
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write model snapshot " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
  }
  std::filesystem::rename(tmp, path);
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open model snapshot " + path.string());
  std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < 8 || in.compare(0, 4, kModelMagic, 4) != 0) throw Error("not a model snapshot: " + path.string());
  std::size_t pos = 4;
  if (get_u32(in, pos) != 1) throw Error("unsupported model snapshot version");
  ModelConfig c;
  for (int* v : {&c.d_model, &c.n_layers_enc, &c.n_layers_dec, &c.n_heads, &c.d_ff, &c.max_len,
                 &c.max_target_len, &c.vocab_size}) {
    *v = static_cast<int>(get_u32(in, pos));
  }
  Transformer<float> model(c);
  if (get_u32(in, pos) != model.num_params()) throw Error("model snapshot parameter count mismatch");
  for (auto& p : model.params()) p = get_f32(in, pos);
  std::vector<std::string> tokens;
  for (int i = 0; i < c.vocab_size; ++i) {
    const auto n = get_u32(in, pos);
    if (pos + n > in.size()) throw Error("truncated model snapshot");
    tokens.push_back(in.substr(pos, n));
    pos += n;
  }
  return {std::move(model), Vocabulary::from_tokens(std::move(tokens))};
}

template class Transformer<float>;
template class Transformer<double>;
template LossAndGrad<float> loss_and_grad(const Transformer<float>&, const Mat<float>*,
                                          std::span<const Seq2SeqExample>, TuneMode, std::uint64_t);
template LossAndGrad<double> loss_and_grad(const Transformer<double>&, const Mat<double>*,
                                           std::span<const Seq2SeqExample>, TuneMode, std::uint64_t);

}  // namespace pptlab
