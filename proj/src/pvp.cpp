#include "pptlab/pvp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pptlab/error.hpp"

namespace pptlab {
namespace {

const std::vector<std::string> kSentimentWords = {"terrible", "bad", "maybe", "good", "great"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string options_block(int n_options) {
  std::string out;
  for (int i = 0; i < n_options; ++i) {
    out += " " + option_letter(static_cast<std::size_t>(i)) + " . {s" + std::to_string(i + 1) + "}";
  }
  return out;
}

void check_option_count(std::optional<int> n_options) {
  if (!n_options || *n_options < 2 || *n_options > kMaxOptions) {
    throw Error("unsupported label count for format");
  }
}

}  // namespace

std::string_view to_string(Format format) {
  switch (format) {
    case Format::SPC: return "SPC";
    case Format::MCC: return "MCC";
    case Format::SSC: return "SSC";
    case Format::UNIFIED_MC: return "UNIFIED_MC";
  }
  return "?";
}

Format parse_format(std::string_view name) {
  const auto u = upper(name);
  if (u == "SPC") return Format::SPC;
  if (u == "MCC") return Format::MCC;
  if (u == "SSC") return Format::SSC;
  if (u == "UNIFIED_MC" || u == "UNIFIED") return Format::UNIFIED_MC;
  throw Error("unknown format '" + std::string(name) + "'");
}

PatternTemplate::PatternTemplate(Format format, std::vector<Segment> segments)
    : format_(format), segments_(std::move(segments)) {
  std::size_t masks = 0;
  std::set<std::string> names;
  for (const auto& seg : segments_) {
    if (seg.kind == Segment::Kind::Mask) ++masks;
    if (seg.kind == Segment::Kind::Slot) {
      if (seg.text.empty()) throw Error("pattern: empty slot name");
      if (!names.insert(seg.text).second) throw Error("pattern: duplicate slot '" + seg.text + "'");
    }
  }
  if (masks != 1) throw Error("pattern: expected exactly one mask, found " + std::to_string(masks));
}

PatternTemplate PatternTemplate::parse(Format format, std::string_view pattern) {
  std::vector<Segment> segs;
  std::string literal;
  auto flush = [&] {
    if (!literal.empty()) segs.push_back({Segment::Kind::Literal, literal});
    literal.clear();
  };
  for (std::size_t i = 0; i < pattern.size();) {
    if (pattern.substr(i, kMaskSurface.size()) == kMaskSurface) {
      flush();
      segs.push_back({Segment::Kind::Mask, ""});
      i += kMaskSurface.size();
    } else if (pattern[i] == '{') {
      const auto close = pattern.find('}', i);
      if (close == std::string_view::npos) throw Error("pattern: unterminated slot marker");
      flush();
      segs.push_back({Segment::Kind::Slot, std::string(pattern.substr(i + 1, close - i - 1))});
      i = close + 1;
    } else {
      literal.push_back(pattern[i]);
      ++i;
    }
  }
  flush();
  return PatternTemplate(format, std::move(segs));
}

std::vector<std::string> PatternTemplate::slot_names() const {
  std::vector<std::string> out;
  for (const auto& seg : segments_) {
    if (seg.kind == Segment::Kind::Slot) out.push_back(seg.text);
  }
  return out;
}

std::string PatternTemplate::to_pattern() const {
  std::string out;
  for (const auto& seg : segments_) {
    switch (seg.kind) {
      case Segment::Kind::Literal: out += seg.text; break;
      case Segment::Kind::Slot: out += "{" + seg.text + "}"; break;
      case Segment::Kind::Mask: out += kMaskSurface; break;
    }
  }
  return out;
}

Verbalizer::Verbalizer(std::vector<std::string> words) {
  if (words.size() < 2) throw Error("verbalizer needs at least two labels");
  for (const auto& w : words) {
    auto toks = tokenize(w);
    if (toks.size() != 1 || toks[0] == kMaskSurface) {
      throw Error("verbalizer word '" + w + "' is not a single token");
    }
    if (std::find(words_.begin(), words_.end(), toks[0]) != words_.end()) {
      throw Error("verbalizer is not injective: '" + toks[0] + "' repeated");
    }
    words_.push_back(std::move(toks[0]));
  }
}

const std::string& Verbalizer::word(std::size_t label) const {
  if (label >= words_.size()) throw Error("label out of range for verbalizer");
  return words_[label];
}

std::vector<TokenId> Verbalizer::bind(const Vocabulary& vocab) const {
  std::vector<TokenId> ids;
  ids.reserve(words_.size());
  for (const auto& w : words_) {
    auto id = vocab.find(w);
    if (!id) throw Error("verbalizer word '" + w + "' is not in the vocabulary");
    ids.push_back(*id);
  }
  return ids;
}

std::string option_letter(std::size_t index) {
  if (index >= static_cast<std::size_t>(kMaxOptions)) throw Error("option index out of range");
  return std::string(1, static_cast<char>('A' + index));
}

std::vector<std::string> sentiment_subset(int n_labels) {
  switch (n_labels) {
    case 2: return {"terrible", "great"};
    case 3: return {"terrible", "maybe", "great"};
    case 4: return {"terrible", "bad", "good", "great"};
    case 5: return kSentimentWords;
    default: throw Error("unsupported label count for format");
  }
}

Pvp make_builtin_pvp(Format format, int n_labels, std::optional<int> n_options) {
  switch (format) {
    case Format::SPC: {
      if (n_labels != 2 && n_labels != 3) throw Error("unsupported label count for format");
      auto words = n_labels == 3 ? std::vector<std::string>{"no", "maybe", "yes"}
                                 : std::vector<std::string>{"no", "yes"};
      return {PatternTemplate::parse(format, "{s1} <X> . {s2}"), Verbalizer(std::move(words))};
    }
    case Format::SSC:
      return {PatternTemplate::parse(format, "{s} . <X> ."), Verbalizer(sentiment_subset(n_labels))};
    case Format::MCC:
    case Format::UNIFIED_MC: {
      check_option_count(n_options);
      std::vector<std::string> letters;
      for (int i = 0; i < *n_options; ++i) letters.push_back(option_letter(static_cast<std::size_t>(i)));
      const auto text = "{sq} ?" + options_block(*n_options) + " . Answer is <X> .";
      return {PatternTemplate::parse(format, text), Verbalizer(std::move(letters))};
    }
  }
  throw Error("unsupported label count for format");
}

HardPromptSpec builtin_hard_prompt(Format format, int n_options) {
  switch (format) {
    case Format::SPC: return {format, "Question : {s1} ? <X> . {s2}"};
    case Format::SSC: return {format, "{s} . It was <X> ."};
    case Format::MCC:
      check_option_count(n_options);
      return {format, "We ask {sq} ?" + options_block(n_options) + " . The answer is <X> ."};
    case Format::UNIFIED_MC: break;
  }
  throw Error("no builtin hard prompt for format " + std::string(to_string(format)));
}

PatternTemplate attach_hard_prompt(const PatternTemplate& pattern, const HardPromptSpec& hard) {
  if (hard.format != pattern.format()) throw Error("hard prompt format mismatch");
  auto result = PatternTemplate::parse(hard.format, hard.text);
  auto want = pattern.slot_names();
  auto got = result.slot_names();
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  if (want != got) throw Error("hard prompt slot mismatch");
  return result;
}

RenderedTokens render_tokens(const PatternTemplate& pattern, const TaskInstance& instance) {
  const auto names = pattern.slot_names();
  for (const auto& [name, value] : instance.slots) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error("unexpected slot '" + name + "'");
    }
  }
  RenderedTokens out;
  std::size_t masks = 0;
  auto append = [&](std::vector<std::string> toks) {
    for (auto& t : toks) {
      if (t == kMaskSurface) {
        ++masks;
        out.mask_position = out.tokens.size();
      }
      out.tokens.push_back(std::move(t));
    }
  };
  for (const auto& seg : pattern.segments()) {
    switch (seg.kind) {
      case Segment::Kind::Literal: append(tokenize(seg.text)); break;
      case Segment::Kind::Mask: append({std::string(kMaskSurface)}); break;
      case Segment::Kind::Slot: {
        auto it = instance.slots.find(seg.text);
        if (it == instance.slots.end()) throw Error("unbound slot '" + seg.text + "'");
        append(tokenize(it->second));
        break;
      }
    }
  }
  if (masks != 1) throw Error("mask collision");
  return out;
}

std::string render_text(const PatternTemplate& pattern, const TaskInstance& instance) {
  const auto r = render_tokens(pattern, instance);
  std::string out;
  for (const auto& t : r.tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

Rendered render(const PatternTemplate& pattern, const TaskInstance& instance,
                const Vocabulary& vocab) {
  auto toks = render_tokens(pattern, instance);
  return {vocab.encode_tokens(toks.tokens), toks.mask_position};
}

std::vector<double> score_labels(std::span<const double> dist, std::span<const TokenId> ids) {
  double total = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw Error("invalid distribution: negative or NaN mass");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) throw Error("invalid distribution: mass does not sum to 1");
  std::vector<double> out;
  out.reserve(ids.size());
  double mass = 0.0;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= dist.size()) throw Error("id out of range");
    out.push_back(dist[static_cast<std::size_t>(id)]);
    mass += out.back();
  }
  if (mass <= 0.0) throw Error("degenerate verbalizer mass");
  for (auto& p : out) p /= mass;
  return out;
}

std::size_t predict_label(std::span<const double> probs) {
  if (probs.empty()) throw Error("predict_label: empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

std::vector<std::string> reserved_words() {
  std::vector<std::string> words = {"no", "maybe", "yes"};
  for (const auto& w : kSentimentWords) words.push_back(w);
  for (int i = 0; i < kMaxOptions; ++i) words.push_back(option_letter(static_cast<std::size_t>(i)));
  for (const auto& text : {builtin_hard_prompt(Format::SPC).text, builtin_hard_prompt(Format::SSC).text,
                           builtin_hard_prompt(Format::MCC, kMaxOptions).text,
                           make_builtin_pvp(Format::MCC, 0, kMaxOptions).pattern.to_pattern()}) {
    const auto pattern = PatternTemplate::parse(Format::MCC, text);
    for (const auto& seg : pattern.segments()) {
      if (seg.kind == Segment::Kind::Literal) {
        for (auto& t : tokenize(seg.text)) words.push_back(std::move(t));
      }
    }
  }
  std::vector<std::string> out;
  for (auto& w : words) {
    auto norm = normalize(w);
    if (std::find(out.begin(), out.end(), norm) == out.end()) out.push_back(std::move(norm));
  }
  return out;
}

TaskInstance to_unified(Format source, const TaskInstance& instance, const Verbalizer& verbalizer) {
  auto slot = [&](const std::string& name) -> const std::string& {
    auto it = instance.slots.find(name);
    if (it == instance.slots.end()) throw Error("unbound slot '" + name + "'");
    return it->second;
  };
  TaskInstance out;
  out.label = instance.label;
  switch (source) {
    case Format::SPC: out.slots["sq"] = slot("s1") + " " + slot("s2"); break;
    case Format::SSC: out.slots["sq"] = slot("s"); break;
    case Format::MCC:
    case Format::UNIFIED_MC: return instance;
  }
  for (std::size_t i = 0; i < verbalizer.size(); ++i) {
    out.slots["s" + std::to_string(i + 1)] = verbalizer.word(i);
  }
  return out;
}

Pvp parse_pvp_config(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text);
  for (const char* key : {"format", "pattern", "verbalizer"}) {
    if (!j.contains(key)) throw Error(std::string("pvp config: missing key '") + key + "'");
  }
  const auto format = parse_format(j.at("format").get<std::string>());
  return {PatternTemplate::parse(format, j.at("pattern").get<std::string>()),
          Verbalizer(j.at("verbalizer").get<std::vector<std::string>>())};
}

Pvp load_pvp_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pvp config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pvp_config(ss.str());
}

}  // namespace pptlab
