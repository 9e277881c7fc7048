#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pptlab {

using TokenId = std::int32_t;

inline constexpr std::string_view kMaskSurface = "<X>";

/// Split text into normalized word tokens: ASCII lowercase, whitespace
/// separated, with '.', ',', '?' and '!' detached. The literal "<X>" is kept
/// verbatim wherever it appears.
std::vector<std::string> tokenize(std::string_view text);

/// Space-joined normalized form of `text`.
std::string normalize(std::string_view text);

/// Token <-> id mapping. Ids are contiguous and the four special tokens
/// always hold ids 0..3. Immutable once built.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kMask = 3;
  static constexpr std::size_t kNumSpecial = 4;

  /// Specials, then `reserved` words in the given order, then the most
  /// frequent remaining corpus tokens (count desc, then lexicographic) until
  /// `max_size` entries.
  static Vocabulary build(std::span<const std::string> corpus, std::size_t max_size,
                          std::span<const std::string> reserved = {});

  /// Validates that `tokens` starts with the specials and has no duplicates.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  /// Id of `token`, or kUnk.
  TokenId id(std::string_view token) const;

  std::vector<TokenId> encode(std::string_view text) const;
  std::vector<TokenId> encode_tokens(std::span<const std::string> tokens) const;
  std::string decode(std::span<const TokenId> ids) const;

  /// Corpus tokens (specials excluded) ordered by descending corpus
  /// frequency, as recorded at build time. Empty for vocabularies loaded
  /// from a token list.
  const std::vector<TokenId>& frequency_ranked() const { return ranked_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<TokenId> ranked_;
};

std::string_view special_surface(TokenId id);

}  // namespace pptlab
