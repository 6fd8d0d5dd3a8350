#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fairgate/corpus.hpp"
#include "fairgate/error.hpp"
#include "fairgate/random.hpp"

namespace fairgate {

// Generated review corpora where unfair reviews always contain a
// market-specific trigger phrase (traffic, restaurant, glitch...) and fair
// reviews never do. Separable by construction; used for smoke training,
// benchmarks and demos.
namespace synthetic {

struct MarketPhrases {
  std::string_view market;
  std::vector<std::string_view> worker;   // about the worker's own performance
  std::vector<std::string_view> outside;  // blames factors outside their control
};

inline const std::vector<MarketPhrases>& phrase_book() {
  static const std::vector<MarketPhrases> book = {
      {"uber",
       {"the driver was rude to us", "the driver took a poor route",
        "the driver was friendly and careful", "the car smelled of smoke",
        "the driver ignored my directions", "the driver drove way too fast",
        "the driver helped with my luggage", "the driver was on his phone the whole ride",
        "the driver picked me up at the wrong door", "the car was clean and quiet"},
       {"we were stuck in traffic for an hour", "the traffic downtown was terrible",
        "surge pricing made the ride expensive", "the surge fare was ridiculous",
        "road construction blocked the highway", "the app glitch charged me twice",
        "heavy traffic made me miss my flight", "the gps outage sent us the long way"}},
      {"grubhub",
       {"the courier dropped the bag on the floor", "the courier was polite at the door",
        "the delivery person ignored my drop off notes", "the courier left the food at the wrong house",
        "the delivery person never answered my texts", "the courier kept the drinks upright",
        "the delivery person was rude to my client", "the courier arrived on time",
        "the courier handed the order over carefully", "the delivery person spilled the soup"},
       {"the restaurant put peanuts in the meal", "the restaurant forgot the side dishes",
        "the kitchen got my order wrong", "the restaurant prices are too high",
        "the kitchen burned the pizza", "the menu was missing my favorite dish",
        "the restaurant used the wrong ingredients", "the kitchen took forever to cook"}},
      {"upwork",
       {"the freelancer missed the deadline", "the freelancer wrote clean code",
        "the freelancer ignored my feedback", "the freelancer communicated every day",
        "the freelancer delivered sloppy designs", "the freelancer asked good questions",
        "the freelancer copied work from elsewhere", "the freelancer fixed every bug quickly",
        "the freelancer never replied to messages", "the freelancer followed the brief closely"},
       {"a platform glitch deleted our messages", "the glitch in the time tracker lost hours",
        "the platform fee was far too high", "the payment system held my money for weeks",
        "my own budget was too small for the job", "the website glitch broke the contract page",
        "the platform fee ate half my budget", "the payment system rejected my card"}},
  };
  return book;
}

inline constexpr std::array<std::string_view, 10> kNeutral = {
    "i ordered this on a tuesday",     "it was a cold and rainy day",
    "this was my second time using the service", "i needed it for an important meeting",
    "my client was with me",           "overall i expected better",
    "i will think twice next time",    "honestly this happens sometimes",
    "i am writing this review late",   "the whole thing took most of the afternoon"};

inline const MarketPhrases& phrases_for(std::string_view market) {
  for (const auto& m : phrase_book()) {
    if (m.market == market) return m;
  }
  throw ValidationError("no synthetic phrases for market \"" + std::string(market) + "\"");
}

inline std::vector<std::string> markets() {
  std::vector<std::string> out;
  for (const auto& m : phrase_book()) out.emplace_back(m.market);
  return out;
}

// `count` reviews for `market`, ceil(count * unfair_fraction) of them unfair,
// with agreeing coder pairs.
inline std::vector<LabeledReview> generate(std::string_view market, std::size_t count,
                                           std::uint64_t seed, double unfair_fraction = 0.5) {
  const auto& book = phrases_for(market);
  Rng rng(mix_seed(seed, market));
  const auto pick = [&](const auto& pool) { return pool[rng.below(pool.size())]; };
  const auto unfair_count =
      static_cast<std::size_t>(static_cast<double>(count) * unfair_fraction + 0.5);

  std::vector<LabeledReview> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const bool unfair = i < unfair_count;
    std::vector<std::string_view> sentences;
    const std::size_t n_sentences = 2 + rng.below(3);
    for (std::size_t k = 0; k < n_sentences; ++k) {
      sentences.push_back(rng.below(3) == 0 ? pick(kNeutral) : pick(book.worker));
    }
    if (unfair) sentences[rng.below(sentences.size())] = pick(book.outside);

    std::string body;
    for (const auto s : sentences) {
      if (!body.empty()) body += ". ";
      const auto start = body.size();
      body += s;
      if (body[start] >= 'a' && body[start] <= 'z') body[start] = static_cast<char>(body[start] - 32);
    }
    body += '.';

    LabeledReview r;
    r.id = std::string(market) + "-" + std::to_string(i + 1);
    r.market = std::string(market);
    r.text = std::move(body);
    const Label label = unfair ? Label::unfair : Label::fair;
    r.coders = {label, label};
    r.label = label;
    out.push_back(std::move(r));
  }
  Rng order(mix_seed(seed, "order"));
  order.shuffle(std::span(out));
  return out;
}

}  // namespace synthetic
}  // namespace fairgate
