#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fairgate/corpus.hpp"
#include "fairgate/error.hpp"
#include "fairgate/text.hpp"

namespace fairgate {

// Lowercased word tokens. Splits on Unicode whitespace and long dashes, then
// strips leading/trailing punctuation from every token.
inline std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> tokens;
  const std::u32string cps = text::decode_utf8(raw);
  std::size_t i = 0;
  const auto is_sep = [](char32_t c) { return text::is_space(c) || text::is_dash_separator(c); };
  while (i < cps.size()) {
    while (i < cps.size() && is_sep(cps[i])) ++i;
    std::size_t begin = i;
    while (i < cps.size() && !is_sep(cps[i])) ++i;
    std::size_t end = i;
    while (begin < end && text::is_punct(cps[begin])) ++begin;
    while (end > begin && text::is_punct(cps[end - 1])) --end;
    if (begin == end) continue;
    std::string token;
    for (std::size_t k = begin; k < end; ++k) text::append_utf8(token, text::to_lower(cps[k]));
    tokens.push_back(std::move(token));
  }
  return tokens;
}

namespace detail {

inline void check_n_range(std::span<const int> n_range) {
  if (n_range.empty()) throw ValidationError("ngram range is empty");
  for (int n : n_range) {
    if (n < 1) throw ValidationError("ngram sizes must be >= 1");
  }
}

}  // namespace detail

// Contiguous word ngrams for each n in turn, joined by single spaces.
inline std::vector<std::string> word_ngrams(std::span<const std::string> tokens,
                                            std::span<const int> n_range) {
  detail::check_n_range(n_range);
  std::vector<std::string> out;
  for (int n_signed : n_range) {
    const auto n = static_cast<std::size_t>(n_signed);
    if (tokens.size() < n) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (std::size_t k = 1; k < n; ++k) {
        gram += ' ';
        gram += tokens[i + k];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

// Character ngrams (over code points) of the normalized raw text.
inline std::vector<std::string> char_ngrams(std::string_view raw, std::span<const int> n_range) {
  detail::check_n_range(n_range);
  const std::u32string norm = text::normalize_for_chars(raw);
  std::vector<std::string> out;
  for (int n_signed : n_range) {
    const auto n = static_cast<std::size_t>(n_signed);
    if (norm.size() < n) continue;
    for (std::size_t i = 0; i + n <= norm.size(); ++i) {
      out.push_back(text::encode_utf8(std::u32string_view(norm).substr(i, n)));
    }
  }
  return out;
}

enum class VocabMode { word_ngram, char_ngram, combined, sequence };

inline std::string_view to_string(VocabMode mode) {
  switch (mode) {
    case VocabMode::word_ngram: return "word-ngram";
    case VocabMode::char_ngram: return "char-ngram";
    case VocabMode::combined: return "combined";
    case VocabMode::sequence: return "sequence";
  }
  return "?";
}

inline VocabMode parse_vocab_mode(std::string_view s) {
  if (s == "word-ngram") return VocabMode::word_ngram;
  if (s == "char-ngram") return VocabMode::char_ngram;
  if (s == "combined") return VocabMode::combined;
  if (s == "sequence") return VocabMode::sequence;
  throw ParseError("unknown vocabulary mode \"" + std::string(s) + "\"");
}

struct VocabConfig {
  VocabMode mode = VocabMode::word_ngram;
  std::vector<int> word_n{1, 2};
  std::vector<int> char_n{3, 4, 5};
  std::size_t min_count = 2;
  std::size_t word_max_size = 20000;
  std::size_t char_max_size = 50000;
  std::size_t sequence_max_size = 10000;  // real tokens, reserved ids excluded
};

// Index assignment:
//   word-ngram / char-ngram: term i -> i
//   combined: word term i -> i, char term j -> word_terms.size() + j
//   sequence: 0 = padding, 1 = unknown, token i -> i + 2
class Vocabulary {
 public:
  static constexpr std::int32_t kPadId = 0;
  static constexpr std::int32_t kUnknownId = 1;

  Vocabulary() = default;

  Vocabulary(VocabMode mode, std::vector<int> word_n, std::vector<int> char_n,
             std::vector<std::string> word_terms, std::vector<std::string> char_terms)
      : mode_(mode),
        word_n_(std::move(word_n)),
        char_n_(std::move(char_n)),
        word_terms_(std::move(word_terms)),
        char_terms_(std::move(char_terms)) {
    const bool uses_words = mode_ != VocabMode::char_ngram;
    const bool uses_chars = mode_ == VocabMode::char_ngram || mode_ == VocabMode::combined;
    if (!uses_words && !word_terms_.empty()) throw ShapeError("char-ngram vocabulary has word terms");
    if (!uses_chars && !char_terms_.empty()) throw ShapeError("vocabulary mode has no char terms");
    if (uses_words && mode_ != VocabMode::sequence) detail::check_n_range(word_n_);
    if (uses_chars) detail::check_n_range(char_n_);
    index_terms(word_terms_, word_index_);
    index_terms(char_terms_, char_index_);
  }

  VocabMode mode() const { return mode_; }
  const std::vector<int>& word_n() const { return word_n_; }
  const std::vector<int>& char_n() const { return char_n_; }
  const std::vector<std::string>& word_terms() const { return word_terms_; }
  const std::vector<std::string>& char_terms() const { return char_terms_; }

  std::size_t size() const {
    switch (mode_) {
      case VocabMode::word_ngram: return word_terms_.size();
      case VocabMode::char_ngram: return char_terms_.size();
      case VocabMode::combined: return word_terms_.size() + char_terms_.size();
      case VocabMode::sequence: return word_terms_.size() + 2;
    }
    return 0;
  }

  std::optional<std::uint32_t> word_index(const std::string& term) const {
    const auto it = word_index_.find(term);
    if (it == word_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::uint32_t> char_index(const std::string& term) const {
    const auto it = char_index_.find(term);
    if (it == char_index_.end()) return std::nullopt;
    const auto offset = mode_ == VocabMode::combined ? word_terms_.size() : 0;
    return static_cast<std::uint32_t>(it->second + offset);
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.mode_ == b.mode_ && a.word_n_ == b.word_n_ && a.char_n_ == b.char_n_ &&
           a.word_terms_ == b.word_terms_ && a.char_terms_ == b.char_terms_;
  }

 private:
  static void index_terms(const std::vector<std::string>& terms,
                          std::unordered_map<std::string, std::uint32_t>& index) {
    index.reserve(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (!index.emplace(terms[i], static_cast<std::uint32_t>(i)).second) {
        throw ShapeError("duplicate vocabulary term \"" + terms[i] + "\"");
      }
    }
  }

  VocabMode mode_ = VocabMode::word_ngram;
  std::vector<int> word_n_;
  std::vector<int> char_n_;
  std::vector<std::string> word_terms_;
  std::vector<std::string> char_terms_;
  std::unordered_map<std::string, std::uint32_t> word_index_;
  std::unordered_map<std::string, std::uint32_t> char_index_;
};

namespace detail {

// Terms with count >= min_count, by (count desc, term asc), at most max_size.
inline std::vector<std::string> rank_terms(const std::unordered_map<std::string, std::size_t>& counts,
                                           std::size_t min_count, std::size_t max_size) {
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [term, n] : counts) {
    if (n >= min_count) kept.emplace_back(term, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (kept.size() > max_size) kept.resize(max_size);
  std::vector<std::string> terms;
  terms.reserve(kept.size());
  for (auto& [term, n] : kept) terms.push_back(std::move(term));
  return terms;
}

inline std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace detail

inline Vocabulary build_vocabulary(std::span<const LabeledReview> corpus, const VocabConfig& config) {
  if (corpus.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");

  const auto word_n = detail::sorted_unique(config.word_n);
  const auto char_n = detail::sorted_unique(config.char_n);
  const bool words = config.mode != VocabMode::char_ngram;
  const bool chars = config.mode == VocabMode::char_ngram || config.mode == VocabMode::combined;
  const bool sequence = config.mode == VocabMode::sequence;
  if (words && !sequence) detail::check_n_range(word_n);
  if (chars) detail::check_n_range(char_n);

  std::unordered_map<std::string, std::size_t> word_counts, char_counts;
  for (const auto& review : corpus) {
    if (words) {
      const auto tokens = tokenize(review.text);
      if (sequence) {
        for (const auto& t : tokens) ++word_counts[t];
      } else {
        for (auto& g : word_ngrams(tokens, word_n)) ++word_counts[std::move(g)];
      }
    }
    if (chars) {
      for (auto& g : char_ngrams(review.text, char_n)) ++char_counts[std::move(g)];
    }
  }

  std::vector<std::string> word_terms, char_terms;
  if (words) {
    word_terms = detail::rank_terms(word_counts, config.min_count,
                                    sequence ? config.sequence_max_size : config.word_max_size);
  }
  if (chars) char_terms = detail::rank_terms(char_counts, config.min_count, config.char_max_size);
  return Vocabulary(config.mode, sequence ? std::vector<int>{} : word_n,
                    chars ? char_n : std::vector<int>{}, std::move(word_terms),
                    std::move(char_terms));
}

struct SparseVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

// L2-normalized counts of the in-vocabulary ngrams of `raw`.
inline SparseVector vectorize(std::string_view raw, const Vocabulary& vocab) {
  if (vocab.mode() == VocabMode::sequence) {
    throw ValidationError("vectorize needs an ngram vocabulary, got a sequence vocabulary");
  }
  std::map<std::uint32_t, double> counts;
  if (vocab.mode() != VocabMode::char_ngram) {
    for (const auto& g : word_ngrams(tokenize(raw), vocab.word_n())) {
      if (auto idx = vocab.word_index(g)) counts[*idx] += 1.0;
    }
  }
  if (vocab.mode() != VocabMode::word_ngram) {
    for (const auto& g : char_ngrams(raw, vocab.char_n())) {
      if (auto idx = vocab.char_index(g)) counts[*idx] += 1.0;
    }
  }

  SparseVector v;
  double sq = 0.0;
  for (const auto& [idx, c] : counts) sq += c * c;
  const double norm = std::sqrt(sq);
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  for (const auto& [idx, c] : counts) {
    v.indices.push_back(idx);
    v.values.push_back(c / norm);
  }
  return v;
}

// Token ids of the first `max_len` tokens; unknown tokens map to 1. No padding.
inline std::vector<std::int32_t> encode_sequence(std::string_view raw, const Vocabulary& vocab,
                                                 std::size_t max_len) {
  if (vocab.mode() != VocabMode::sequence) {
    throw ValidationError("encode_sequence needs a sequence vocabulary");
  }
  if (max_len < 1) throw ValidationError("max_len must be >= 1");
  std::vector<std::int32_t> ids;
  for (const auto& token : tokenize(raw)) {
    if (ids.size() == max_len) break;
    const auto idx = vocab.word_index(token);
    ids.push_back(idx ? static_cast<std::int32_t>(*idx) + 2 : Vocabulary::kUnknownId);
  }
  return ids;
}

}  // namespace fairgate
