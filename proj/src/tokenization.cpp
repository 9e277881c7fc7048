#include "pptlab/tokenization.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "pptlab/error.hpp"

namespace pptlab {
namespace {

constexpr std::string_view kSpecials[Vocabulary::kNumSpecial] = {"<pad>", "<unk>", "</s>",
                                                                 kMaskSurface};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_detached(char c) { return c == '.' || c == ',' || c == '?' || c == '!'; }

char lower_ascii(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::string_view special_surface(TokenId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= Vocabulary::kNumSpecial) {
    throw Error("special_surface: not a special id");
  }
  return kSpecials[id];
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    if (text.substr(i, kMaskSurface.size()) == kMaskSurface) {
      flush();
      out.emplace_back(kMaskSurface);
      i += kMaskSurface.size();
      continue;
    }
    const char c = text[i];
    if (is_space(c)) {
      flush();
    } else if (is_detached(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      word.push_back(lower_ascii(c));
    }
    ++i;
  }
  flush();
  return out;
}

std::string normalize(std::string_view text) {
  std::string out;
  for (const auto& tok : tokenize(text)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error("vocabulary: empty token at id " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus, std::size_t max_size,
                             std::span<const std::string> reserved) {
  if (corpus.empty()) throw Error("empty corpus");
  if (max_size < kNumSpecial) throw Error("vocabulary too small");

  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (auto& tok : tokenize(doc)) {
      if (tok == kMaskSurface) continue;
      ++counts[std::move(tok)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is lexicographic, so a stable sort on count keeps the
  // lexicographic tie order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
  auto present = [&](const std::string& t) {
    return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
  };
  for (const auto& word : reserved) {
    for (auto& tok : tokenize(word)) {
      if (!present(tok)) tokens.push_back(std::move(tok));
    }
  }
  if (tokens.size() > max_size) throw Error("vocabulary too small");
  std::unordered_map<std::string, bool> seen;
  for (const auto& t : tokens) seen.emplace(t, true);
  for (const auto& [tok, count] : ranked) {
    if (tokens.size() >= max_size) break;
    if (seen.contains(tok)) continue;
    tokens.push_back(tok);
  }

  Vocabulary vocab(std::move(tokens));
  vocab.ranked_.reserve(ranked.size());
  for (const auto& [tok, count] : ranked) {
    if (auto id = vocab.find(tok)) vocab.ranked_.push_back(*id);
  }
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumSpecial) throw Error("vocabulary too small");
  for (std::size_t i = 0; i < kNumSpecial; ++i) {
    if (tokens[i] != kSpecials[i]) {
      throw Error("vocabulary: id " + std::to_string(i) + " must be " + std::string(kSpecials[i]));
    }
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw Error("id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  const auto toks = tokenize(text);
  return encode_tokens(toks);
}

std::vector<TokenId> Vocabulary::encode_tokens(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(t == kMaskSurface ? kMask : id(t));
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    const auto& surface = token(id);
    if (id == kPad) continue;
    if (!out.empty()) out.push_back(' ');
    out += surface;
  }
  return out;
}

}  // namespace pptlab
