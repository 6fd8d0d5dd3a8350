#include "fairgate/corpus.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fairgate/random.hpp"
#include "test_support.hpp"

namespace fairgate {
namespace {

constexpr Label U = Label::unfair;
constexpr Label F = Label::fair;

std::vector<LabeledReview> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

TEST(LoadCorpus, ParsesOneLine) {
  const auto reviews = parse(
      R"({"id":"r1","market":"uber","text":"late due to traffic","coders":["unfair","unfair"]})"
      "\n");
  ASSERT_EQ(reviews.size(), 1u);
  EXPECT_EQ(reviews[0].id, "r1");
  EXPECT_EQ(reviews[0].market, "uber");
  EXPECT_EQ(reviews[0].coders, (std::vector<Label>{U, U}));
  EXPECT_FALSE(reviews[0].label.has_value());
  const auto adjudicated = resolve_labels(reviews);
  ASSERT_EQ(adjudicated.resolved.size(), 1u);
  EXPECT_EQ(adjudicated.resolved[0].label, U);
}

TEST(LoadCorpus, EmptyFileGivesEmptyList) {
  testing::TempDir dir;
  testing::write_text(dir.file("empty.jsonl"), "");
  EXPECT_TRUE(load_corpus(dir.file("empty.jsonl")).empty());
}

TEST(LoadCorpus, MissingFieldNamesFieldAndLine) {
  try {
    parse(R"({"id":"r1","market":"uber","coders":["fair","fair"]})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("\"text\""), std::string::npos) << msg;
  }
}

TEST(LoadCorpus, MalformedLineReportsLineNumber) {
  try {
    parse("{\"id\":\"a\",\"market\":\"uber\",\"text\":\"x\",\"label\":\"fair\"}\n{oops\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadCorpus, RejectsDuplicateIds) {
  EXPECT_THROW(parse("{\"id\":\"a\",\"market\":\"m\",\"text\":\"x\",\"label\":\"fair\"}\n"
                     "{\"id\":\"a\",\"market\":\"m\",\"text\":\"y\",\"label\":\"fair\"}\n"),
               ParseError);
}

TEST(LoadCorpus, RejectsBadLabelsAndCoderCounts) {
  EXPECT_THROW(parse(R"({"id":"a","market":"m","text":"x","label":"meh"})"), ParseError);
  EXPECT_THROW(parse(R"({"id":"a","market":"m","text":"x","coders":["fair"]})"), ParseError);
  EXPECT_THROW(parse(R"({"id":"a","market":"m","text":"x"})"), ParseError);
  EXPECT_THROW(parse(R"({"id":"","market":"m","text":"x","label":"fair"})"), ParseError);
  EXPECT_THROW(parse(R"({"id":"a","market":"m","text":"","label":"fair"})"), ParseError);
}

TEST(LoadCorpus, UnreadableFile) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), IoError);
}

TEST(LoadCorpus, WriteThenReadIsIdentity) {
  std::vector<LabeledReview> reviews = {
      {"a", "uber", "slow \"driver\"\nnewline", {U, F, F}, F},
      {"b", "grubhub", "état—mauvais", {}, U},
  };
  std::ostringstream out;
  write_corpus(out, reviews);
  EXPECT_EQ(parse(out.str()), reviews);
}

TEST(ResolveLabels, UnanimousPair) {
  std::vector<LabeledReview> r = {{"a", "m", "t", {U, U}, {}}};
  EXPECT_EQ(resolve_labels(r).resolved.at(0).label, U);
}

TEST(ResolveLabels, ThirdCoderBreaksTie) {
  std::vector<LabeledReview> r = {{"a", "m", "t", {U, F, F}, {}}};
  EXPECT_EQ(resolve_labels(r).resolved.at(0).label, F);
}

TEST(ResolveLabels, DisagreementWithoutThirdNeedsTiebreak) {
  std::vector<LabeledReview> r = {{"a", "m", "t", {U, F}, {}}};
  const auto out = resolve_labels(r);
  EXPECT_TRUE(out.resolved.empty());
  ASSERT_EQ(out.needs_tiebreak.size(), 1u);
  EXPECT_EQ(out.needs_tiebreak[0].id, "a");
}

TEST(ResolveLabels, RejectsSingleCoder) {
  std::vector<LabeledReview> r = {{"a", "m", "t", {U}, {}}};
  EXPECT_THROW(resolve_labels(r), ValidationError);
  std::vector<LabeledReview> none = {{"b", "m", "t", {}, {}}};
  EXPECT_THROW(resolve_labels(none), ValidationError);
}

TEST(ResolveLabels, NeverContradictsUnanimousPair) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    LabeledReview r{"id", "m", "t", {}, {}};
    const std::size_t n = 2 + rng.below(2);
    for (std::size_t k = 0; k < n; ++k) r.coders.push_back(rng.below(2) ? U : F);
    std::vector<LabeledReview> one = {r};
    const auto out = resolve_labels(one);
    if (r.coders[0] == r.coders[1]) {
      ASSERT_EQ(out.resolved.size(), 1u);
      EXPECT_EQ(out.resolved[0].label, r.coders[0]);
    }
  }
}

TEST(ResolveLabels, PreassignedLabelMustAgreeWithCoders) {
  std::vector<LabeledReview> tie = {{"a", "m", "t", {U, F}, F}};
  EXPECT_EQ(resolve_labels(tie).resolved.at(0).label, F);
  std::vector<LabeledReview> clash = {{"a", "m", "t", {U, U}, F}};
  EXPECT_THROW(resolve_labels(clash), ValidationError);
}

// Independent count of the kappa ingredients.
AgreementStats kappa_oracle(const std::vector<Label>& a, const std::vector<Label>& b) {
  const double n = static_cast<double>(a.size());
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i];
  double pe = 0;
  for (Label c : {F, U}) {
    const double ca = static_cast<double>(std::count(a.begin(), a.end(), c));
    const double cb = static_cast<double>(std::count(b.begin(), b.end(), c));
    pe += (ca / n) * (cb / n);
  }
  const double po = agree / n;
  return {po, pe, pe >= 1.0 ? 1.0 : (po - pe) / (1.0 - pe)};
}

TEST(CohenKappa, HandWorkedExample) {
  const std::vector<Label> a = {U, U, F, F, U};
  const std::vector<Label> b = {U, F, F, F, U};
  const auto oracle = kappa_oracle(a, b);
  EXPECT_NEAR(oracle.observed_agreement, 0.8, 1e-12);
  EXPECT_NEAR(oracle.expected_agreement, 0.48, 1e-12);
  const auto s = cohen_kappa(a, b);
  EXPECT_NEAR(s.observed_agreement, 0.8, 1e-12);
  EXPECT_NEAR(s.expected_agreement, 0.48, 1e-12);
  EXPECT_NEAR(s.kappa, 0.6154, 1e-4);
  EXPECT_NEAR(s.kappa, oracle.kappa, 1e-12);
}

TEST(CohenKappa, PerfectAgreementAndDegenerateCase) {
  const std::vector<Label> a = {U, F, F, U};
  EXPECT_DOUBLE_EQ(cohen_kappa(a, a).kappa, 1.0);
  const std::vector<Label> all_u(6, U);
  const auto s = cohen_kappa(all_u, all_u);
  EXPECT_DOUBLE_EQ(s.observed_agreement, 1.0);
  EXPECT_DOUBLE_EQ(s.expected_agreement, 1.0);
  EXPECT_DOUBLE_EQ(s.kappa, 1.0);
}

TEST(CohenKappa, Errors) {
  const std::vector<Label> a = {U, F};
  const std::vector<Label> b = {U};
  EXPECT_THROW(cohen_kappa(a, b), ValidationError);
  EXPECT_THROW(cohen_kappa(std::vector<Label>{}, std::vector<Label>{}), ValidationError);
}

TEST(CohenKappa, PropertiesAgainstOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<Label> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.below(2) ? U : F;
      b[i] = rng.below(3) == 0 ? (rng.below(2) ? U : F) : a[i];
    }
    const auto ab = cohen_kappa(a, b);
    const auto ba = cohen_kappa(b, a);
    const auto oracle = kappa_oracle(a, b);
    EXPECT_EQ(ab.kappa, ba.kappa);
    EXPECT_LE(ab.kappa, 1.0);
    EXPECT_NEAR(ab.kappa, oracle.kappa, 1e-12);
    EXPECT_EQ(ab.kappa == 1.0, ab.observed_agreement == 1.0);
  }
}

std::vector<LabeledReview> labeled_corpus(std::size_t n_fair, std::size_t n_unfair) {
  std::vector<LabeledReview> out;
  for (std::size_t i = 0; i < n_fair + n_unfair; ++i) {
    const Label l = i < n_fair ? F : U;
    out.push_back({"r" + std::to_string(i), "m", "text", {l, l}, l});
  }
  return out;
}

std::size_t count_label(const std::vector<LabeledReview>& rs, Label l) {
  return static_cast<std::size_t>(
      std::count_if(rs.begin(), rs.end(), [&](const auto& r) { return r.label == l; }));
}

TEST(StratifiedSplit, TenBalancedReviews) {
  const auto split = stratified_split(labeled_corpus(5, 5), {}, 3);
  EXPECT_EQ(split.train.size(), 8u);
  EXPECT_EQ(count_label(split.train, F), 4u);
  EXPECT_EQ(count_label(split.train, U), 4u);
  EXPECT_EQ(split.test.size(), 1u);
  EXPECT_EQ(split.validation.size(), 1u);
}

TEST(StratifiedSplit, ThousandReviews) {
  const auto split = stratified_split(labeled_corpus(500, 500), {}, 3);
  EXPECT_EQ(split.train.size(), 800u);
  EXPECT_EQ(split.test.size(), 100u);
  EXPECT_EQ(split.validation.size(), 100u);
  for (Label l : {F, U}) {
    EXPECT_NEAR(static_cast<double>(count_label(split.train, l)), 400.0, 1.0);
    EXPECT_NEAR(static_cast<double>(count_label(split.test, l)), 50.0, 1.0);
    EXPECT_NEAR(static_cast<double>(count_label(split.validation, l)), 50.0, 1.0);
  }
}

std::set<std::string> ids(const std::vector<LabeledReview>& rs) {
  std::set<std::string> out;
  for (const auto& r : rs) out.insert(r.id);
  return out;
}

TEST(StratifiedSplit, DeterministicPerSeed) {
  const auto corpus = labeled_corpus(37, 63);
  const auto a = stratified_split(corpus, {}, 99);
  const auto b = stratified_split(corpus, {}, 99);
  EXPECT_EQ(ids(a.train), ids(b.train));
  EXPECT_EQ(ids(a.test), ids(b.test));
  EXPECT_EQ(ids(a.validation), ids(b.validation));
  const auto c = stratified_split(corpus, {}, 100);
  EXPECT_NE(ids(a.test), ids(c.test));
}

TEST(StratifiedSplit, Errors) {
  auto corpus = labeled_corpus(5, 5);
  EXPECT_THROW(stratified_split(corpus, {0.5, 0.2, 0.2}, 1), ValidationError);
  EXPECT_THROW(stratified_split(labeled_corpus(5, 0), {}, 1), ValidationError);
  corpus[3].label.reset();
  EXPECT_THROW(stratified_split(corpus, {}, 1), ValidationError);
}

// Disjoint, exhaustive and within one item of 80/10/10 for every class, over
// random sizes and class ratios.
TEST(StratifiedSplit, FidelityProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 10 + rng.below(991);
    const double unfair_ratio = 0.1 + 0.8 * rng.unit();
    auto n_unfair = static_cast<std::size_t>(static_cast<double>(n) * unfair_ratio);
    n_unfair = std::clamp<std::size_t>(n_unfair, 1, n - 1);
    const auto corpus = labeled_corpus(n - n_unfair, n_unfair);
    const auto split = stratified_split(corpus, {}, rng.next());

    const auto tr = ids(split.train), te = ids(split.test), va = ids(split.validation);
    ASSERT_EQ(tr.size() + te.size() + va.size(), n);
    std::set<std::string> all;
    all.insert(tr.begin(), tr.end());
    all.insert(te.begin(), te.end());
    all.insert(va.begin(), va.end());
    ASSERT_EQ(all.size(), n) << "partitions overlap";

    for (Label l : {F, U}) {
      const double nc = static_cast<double>(l == U ? n_unfair : n - n_unfair);
      EXPECT_LE(std::abs(static_cast<double>(count_label(split.train, l)) - 0.8 * nc), 1.0 + 1e-9)
          << "n=" << n << " unfair=" << n_unfair;
      EXPECT_LE(std::abs(static_cast<double>(count_label(split.test, l)) - 0.1 * nc), 1.0 + 1e-9)
          << "n=" << n << " unfair=" << n_unfair;
      EXPECT_LE(std::abs(static_cast<double>(count_label(split.validation, l)) - 0.1 * nc),
                1.0 + 1e-9)
          << "n=" << n << " unfair=" << n_unfair;
    }
  }
}

}  // namespace
}  // namespace fairgate
