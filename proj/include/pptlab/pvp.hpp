#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pptlab/tokenization.hpp"

namespace pptlab {

enum class Format { SPC, MCC, SSC, UNIFIED_MC };

std::string_view to_string(Format format);
/// Accepts "SPC", "MCC", "SSC", "UNIFIED_MC" (case-insensitive, "unified" too).
Format parse_format(std::string_view name);

struct Segment {
  enum class Kind { Literal, Slot, Mask };
  Kind kind = Kind::Literal;
  std::string text;  // literal text or slot name; empty for the mask

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Pattern f: literal text interleaved with named input slots and exactly one
/// mask slot.
class PatternTemplate {
 public:
  PatternTemplate(Format format, std::vector<Segment> segments);

  /// Parses "{slot}" markers and the literal "<X>" mask.
  static PatternTemplate parse(Format format, std::string_view pattern);

  Format format() const { return format_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::vector<std::string> slot_names() const;
  /// Inverse of parse().
  std::string to_pattern() const;

  friend bool operator==(const PatternTemplate&, const PatternTemplate&) = default;

 private:
  Format format_;
  std::vector<Segment> segments_;
};

/// Verbalizer v: label index i maps to the single token words()[i].
class Verbalizer {
 public:
  explicit Verbalizer(std::vector<std::string> words);

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(std::size_t label) const;
  /// Token ids in label order; throws if a word is missing from `vocab`.
  std::vector<TokenId> bind(const Vocabulary& vocab) const;

  friend bool operator==(const Verbalizer&, const Verbalizer&) = default;

 private:
  std::vector<std::string> words_;
};

struct TaskInstance {
  std::map<std::string, std::string> slots;
  std::optional<int> label;
};

struct Pvp {
  PatternTemplate pattern;
  Verbalizer verbalizer;
};

struct HardPromptSpec {
  Format format;
  std::string text;  // pattern syntax, see PatternTemplate::parse
};

/// Upper-case option letter for option index 0..15 ("A".."P").
std::string option_letter(std::size_t index);
inline constexpr int kMaxOptions = 16;

/// Builtin pattern-verbalizer pairs. n_labels applies to SPC (2 or 3) and
/// SSC (2..5); n_options applies to MCC and UNIFIED_MC (2..16).
Pvp make_builtin_pvp(Format format, int n_labels, std::optional<int> n_options = std::nullopt);

/// Sentiment verbalizer restricted to n labels, taking words from the two
/// ends of the 5-point scale inward.
std::vector<std::string> sentiment_subset(int n_labels);

/// The manual hard prompt for a format. MCC is generated for n_options.
HardPromptSpec builtin_hard_prompt(Format format, int n_options = 6);

/// Swap the pattern for the hard prompt; the slots must match exactly.
PatternTemplate attach_hard_prompt(const PatternTemplate& pattern, const HardPromptSpec& hard);

struct RenderedTokens {
  std::vector<std::string> tokens;
  std::size_t mask_position = 0;
};

struct Rendered {
  std::vector<TokenId> ids;
  std::size_t mask_position = 0;
};

RenderedTokens render_tokens(const PatternTemplate& pattern, const TaskInstance& instance);
/// Normalized space-joined rendering, used for golden comparisons.
std::string render_text(const PatternTemplate& pattern, const TaskInstance& instance);
Rendered render(const PatternTemplate& pattern, const TaskInstance& instance,
                const Vocabulary& vocab);

/// Restrict a vocabulary distribution to the verbalizer tokens and
/// renormalize.
std::vector<double> score_labels(std::span<const double> mask_distribution,
                                 std::span<const TokenId> verbalizer_ids);
/// Argmax; ties go to the lowest label index.
std::size_t predict_label(std::span<const double> label_probs);

/// Every word a builtin PVP or hard prompt needs, for Vocabulary::build.
std::vector<std::string> reserved_words();

/// Recast an SPC/SSC/MCC instance in the unified multiple-choice layout: the
/// query is the input text and the options are the task's label words.
TaskInstance to_unified(Format source, const TaskInstance& instance,
                        const Verbalizer& source_verbalizer);

/// JSON file with keys {format, pattern, verbalizer}.
Pvp load_pvp_config(const std::filesystem::path& path);
Pvp parse_pvp_config(std::string_view json_text);

}  // namespace pptlab
