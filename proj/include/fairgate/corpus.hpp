#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "fairgate/error.hpp"
#include "fairgate/label.hpp"
#include "fairgate/random.hpp"
#include "json.hpp"

namespace fairgate {

struct LabeledReview {
  std::string id;
  std::string market;
  std::string text;
  std::vector<Label> coders;   // 0, 2 or 3 entries
  std::optional<Label> label;  // resolved label

  friend bool operator==(const LabeledReview&, const LabeledReview&) = default;
};

namespace detail {

inline std::string required_string(const nlohmann::json& obj, const char* field,
                                   std::size_t line) {
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw ParseError("line " + std::to_string(line) + ": missing required field \"" +
                     field + "\"");
  }
  if (!it->is_string()) {
    throw ParseError("line " + std::to_string(line) + ": field \"" + field +
                     "\" must be a string");
  }
  return it->get<std::string>();
}

inline Label label_field(const nlohmann::json& value, const char* field, std::size_t line) {
  if (value.is_string()) {
    if (auto label = parse_label(value.get<std::string>())) return *label;
  }
  throw ParseError("line " + std::to_string(line) + ": field \"" + field +
                   "\" must be \"fair\" or \"unfair\"");
}

}  // namespace detail

// Parses one corpus line. `line` is only used for diagnostics.
inline LabeledReview parse_review(std::string_view json_line, std::size_t line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(json_line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("line " + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  if (!obj.is_object()) {
    throw ParseError("line " + std::to_string(line) + ": expected a JSON object");
  }

  LabeledReview review;
  review.id = detail::required_string(obj, "id", line);
  review.market = detail::required_string(obj, "market", line);
  review.text = detail::required_string(obj, "text", line);
  if (review.id.empty()) {
    throw ParseError("line " + std::to_string(line) + ": field \"id\" is empty");
  }
  if (review.text.empty()) {
    throw ParseError("line " + std::to_string(line) + ": field \"text\" is empty");
  }

  if (const auto it = obj.find("coders"); it != obj.end()) {
    if (!it->is_array()) {
      throw ParseError("line " + std::to_string(line) + ": field \"coders\" must be an array");
    }
    for (const auto& c : *it) review.coders.push_back(detail::label_field(c, "coders", line));
  }
  if (const auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
    review.label = detail::label_field(*it, "label", line);
  }

  const auto n = review.coders.size();
  if (n == 1 || n > 3) {
    throw ParseError("line " + std::to_string(line) + ": \"coders\" must hold 2 or 3 labels, got " +
                     std::to_string(n));
  }
  if (n == 0 && !review.label) {
    throw ParseError("line " + std::to_string(line) +
                     ": missing required field \"label\" (no coders given)");
  }
  return review;
}

inline std::vector<LabeledReview> parse_corpus(std::istream& in) {
  std::vector<LabeledReview> reviews;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto review = parse_review(line, line_no);
    if (!seen.insert(review.id).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate id \"" + review.id + "\"");
    }
    reviews.push_back(std::move(review));
  }
  return reviews;
}

inline std::vector<LabeledReview> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus file: " + path);
  try {
    return parse_corpus(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline nlohmann::ordered_json review_to_json(const LabeledReview& review) {
  nlohmann::ordered_json obj;
  obj["id"] = review.id;
  obj["market"] = review.market;
  obj["text"] = review.text;
  if (!review.coders.empty()) {
    auto coders = nlohmann::ordered_json::array();
    for (auto c : review.coders) coders.push_back(std::string(to_string(c)));
    obj["coders"] = std::move(coders);
  }
  if (review.label) obj["label"] = std::string(to_string(*review.label));
  return obj;
}

inline void write_corpus(std::ostream& out, std::span<const LabeledReview> reviews) {
  for (const auto& r : reviews) out << review_to_json(r).dump() << '\n';
}

inline void save_corpus(const std::string& path, std::span<const LabeledReview> reviews) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus file: " + path);
  write_corpus(out, reviews);
  if (!out) throw IoError("failed writing corpus file: " + path);
}

// ---------------------------------------------------------------------------
// Adjudication

struct Adjudication {
  std::vector<LabeledReview> resolved;
  std::vector<LabeledReview> needs_tiebreak;  // two coders disagree, no third
};

// Coders 1 and 2 decide when they agree; otherwise coder 3 breaks the tie.
// A review with no coders keeps its pre-assigned label. A pre-assigned label
// also settles a 2-way disagreement, but never overrides what the coders
// decided.
inline Adjudication resolve_labels(std::span<const LabeledReview> reviews) {
  Adjudication out;
  for (const auto& review : reviews) {
    const auto& c = review.coders;
    std::optional<Label> decided;
    if (c.empty()) {
      if (!review.label) {
        throw ValidationError("review \"" + review.id + "\" has no coder labels");
      }
      decided = review.label;
    } else if (c.size() == 1 || c.size() > 3) {
      throw ValidationError("review \"" + review.id + "\" has " + std::to_string(c.size()) +
                            " coder labels; need 2 or 3");
    } else if (c[0] == c[1]) {
      decided = c[0];
    } else if (c.size() == 3) {
      decided = c[2];
    }

    if (decided && review.label && *review.label != *decided) {
      throw ValidationError("review \"" + review.id + "\": label \"" +
                            std::string(to_string(*review.label)) +
                            "\" contradicts the coders");
    }
    if (!decided) decided = review.label;

    LabeledReview copy = review;
    copy.label = decided;
    if (decided) {
      out.resolved.push_back(std::move(copy));
    } else {
      out.needs_tiebreak.push_back(std::move(copy));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inter-rater agreement

struct AgreementStats {
  double observed_agreement = 0.0;
  double expected_agreement = 0.0;
  double kappa = 0.0;
};

inline AgreementStats cohen_kappa(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) {
    throw ValidationError("kappa: label lists differ in length (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw ValidationError("kappa: empty label lists");

  // Integer counts keep the statistic exactly symmetric in (a, b).
  std::int64_t agree = 0;
  std::array<std::int64_t, 2> ma{}, mb{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    ++ma[static_cast<int>(a[i])];
    ++mb[static_cast<int>(b[i])];
  }
  const auto n = static_cast<std::int64_t>(a.size());
  const std::int64_t chance = ma[0] * mb[0] + ma[1] * mb[1];  // p_e * n^2

  AgreementStats stats;
  stats.observed_agreement = static_cast<double>(agree) / static_cast<double>(n);
  stats.expected_agreement = static_cast<double>(chance) / static_cast<double>(n * n);
  if (chance == n * n) {
    stats.kappa = 1.0;  // both coders constant and equal: 0/0, defined as 1
  } else {
    stats.kappa = static_cast<double>(agree * n - chance) / static_cast<double>(n * n - chance);
  }
  return stats;
}

// Agreement between the first two coders over every review that has them.
inline AgreementStats corpus_agreement(std::span<const LabeledReview> reviews) {
  std::vector<Label> a, b;
  for (const auto& r : reviews) {
    if (r.coders.size() >= 2) {
      a.push_back(r.coders[0]);
      b.push_back(r.coders[1]);
    }
  }
  return cohen_kappa(a, b);
}

// ---------------------------------------------------------------------------
// Stratified split

struct SplitRatios {
  double train = 0.8;
  double test = 0.1;
  double validation = 0.1;
};

struct SplitCorpus {
  std::vector<LabeledReview> train;
  std::vector<LabeledReview> test;
  std::vector<LabeledReview> validation;
};

namespace detail {

struct ClassQuota {
  std::size_t total = 0;
  double test = 0.0;
  double validation = 0.0;
};

// Chooses integer test/validation counts per class. Each count is the floor
// or the ceiling of its quota; among those choices the one with the smallest
// worst per-class deviation (train included) wins, then the one whose
// partition totals are closest to N * ratio. Exhaustive over the four
// extra-item placements of each of the two classes.
inline std::array<std::array<std::size_t, 2>, 2> allocate_split(
    const std::array<ClassQuota, 2>& quota, std::size_t n_total, const SplitRatios& ratios) {
  constexpr double kSlack = 1e-9;
  const auto floor_count = [](double x) {
    return static_cast<std::size_t>(std::floor(x + kSlack));
  };
  const double test_target = static_cast<double>(n_total) * ratios.test;
  const double val_target = static_cast<double>(n_total) * ratios.validation;

  std::array<std::array<std::size_t, 2>, 2> best{};  // [class][0=test,1=val]
  double best_worst = std::numeric_limits<double>::infinity();
  double best_total_dev = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 16; ++mask) {
    std::array<std::array<std::size_t, 2>, 2> counts{};
    double test_sum = 0.0, val_sum = 0.0, worst = 0.0;
    bool ok = true;
    for (int c = 0; c < 2 && ok; ++c) {
      const auto& q = quota[c];
      counts[c][0] = floor_count(q.test) + ((mask >> (2 * c)) & 1);
      counts[c][1] = floor_count(q.validation) + ((mask >> (2 * c + 1)) & 1);
      if (counts[c][0] + counts[c][1] > q.total) {
        ok = false;
        break;
      }
      const double train_quota = static_cast<double>(q.total) - q.test - q.validation;
      const double train_count = static_cast<double>(q.total - counts[c][0] - counts[c][1]);
      worst = std::max({worst, std::abs(static_cast<double>(counts[c][0]) - q.test),
                        std::abs(static_cast<double>(counts[c][1]) - q.validation),
                        std::abs(train_count - train_quota)});
      test_sum += static_cast<double>(counts[c][0]);
      val_sum += static_cast<double>(counts[c][1]);
    }
    if (!ok) continue;
    const double total_dev = std::abs(test_sum - test_target) + std::abs(val_sum - val_target);
    if (worst < best_worst - kSlack ||
        (worst < best_worst + kSlack && total_dev < best_total_dev - kSlack)) {
      best_worst = worst;
      best_total_dev = total_dev;
      best = counts;
    }
  }
  return best;
}

}  // namespace detail

// Splits resolved reviews into train/test/validation preserving the class
// ratio in every partition. Partitions keep the input order.
inline SplitCorpus stratified_split(std::span<const LabeledReview> reviews,
                                    const SplitRatios& ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.test + ratios.validation;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.test < 0 ||
      ratios.validation < 0) {
    throw ValidationError("split ratios must be nonnegative and sum to 1");
  }

  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    if (!reviews[i].label) {
      throw ValidationError("review \"" + reviews[i].id + "\" has no resolved label");
    }
    members[static_cast<int>(*reviews[i].label)].push_back(i);
  }
  if (members[0].empty() || members[1].empty()) {
    throw ValidationError("stratified split needs at least one review of each class");
  }

  std::array<detail::ClassQuota, 2> quota;
  for (int c = 0; c < 2; ++c) {
    const auto n = static_cast<double>(members[c].size());
    quota[c] = {members[c].size(), n * ratios.test, n * ratios.validation};
  }
  const auto counts = detail::allocate_split(quota, reviews.size(), ratios);

  // 0 = train, 1 = test, 2 = validation
  std::vector<int> assignment(reviews.size(), 0);
  Rng rng(seed);
  for (int c = 0; c < 2; ++c) {
    auto& idx = members[c];
    rng.shuffle(std::span(idx));
    for (std::size_t k = 0; k < counts[c][0]; ++k) assignment[idx[k]] = 1;
    for (std::size_t k = counts[c][0]; k < counts[c][0] + counts[c][1]; ++k) {
      assignment[idx[k]] = 2;
    }
  }

  SplitCorpus split;
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    switch (assignment[i]) {
      case 1: split.test.push_back(reviews[i]); break;
      case 2: split.validation.push_back(reviews[i]); break;
      default: split.train.push_back(reviews[i]); break;
    }
  }
  return split;
}

inline std::vector<LabeledReview> filter_market(std::span<const LabeledReview> reviews,
                                                std::string_view market) {
  std::vector<LabeledReview> out;
  for (const auto& r : reviews) {
    if (r.market == market) out.push_back(r);
  }
  return out;
}

}  // namespace fairgate
