// End-to-end in one process: generate a corpus, split it, train the word
// ngram model for one market and score two drafts.

#include <iostream>

#include "fairgate.hpp"
#include "fairgate/synthetic.hpp"

int main() {
  using namespace fairgate;

  const auto reviews = synthetic::generate("uber", 600, 1);
  const auto split = stratified_split(reviews, {}, 7);

  TrainConfig config;
  config.model_kind = ModelKind::word_lr;
  const auto result = train(split, config);

  const auto& best = result.history.epochs[result.history.best_epoch - 1];
  std::cout << "best epoch " << result.history.best_epoch << ", validation accuracy "
            << best.val_accuracy << '\n';

  const auto m = metrics(confusion(result.model, split.test));
  std::cout << "test accuracy " << m.accuracy << ", f1 " << m.f1 << '\n';

  for (const char* draft : {"The driver was rude and took a poor route.",
                            "We were stuck in traffic for an hour and I missed my flight."}) {
    std::cout << result.model.predict(draft) << "  " << draft << '\n';
  }
}
