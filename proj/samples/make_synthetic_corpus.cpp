// Writes a generated corpus (uber, grubhub, upwork) as JSONL so the CLI has
// something to chew on:
//
//   make_synthetic_corpus corpus.jsonl [reviews-per-market] [seed]

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "fairgate/corpus.hpp"
#include "fairgate/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_synthetic_corpus OUT.jsonl [per-market=600] [seed=1]\n";
    return 2;
  }
  const std::size_t per_market = argc > 2 ? std::stoul(argv[2]) : 600;
  const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 1;

  std::vector<fairgate::LabeledReview> all;
  for (const auto& market : fairgate::synthetic::markets()) {
    auto reviews = fairgate::synthetic::generate(market, per_market, seed);
    all.insert(all.end(), reviews.begin(), reviews.end());
  }
  try {
    fairgate::save_corpus(argv[1], all);
  } catch (const fairgate::Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  std::cerr << "wrote " << all.size() << " reviews to " << argv[1] << '\n';
  return 0;
}
