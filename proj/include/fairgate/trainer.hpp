#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairgate/adam.hpp"
#include "fairgate/classifier.hpp"
#include "fairgate/config.hpp"
#include "fairgate/corpus.hpp"
#include "fairgate/error.hpp"
#include "fairgate/random.hpp"

namespace fairgate {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

inline std::string history_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,val_loss,val_acc\n";
  char line[128];
  for (const auto& e : history.epochs) {
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f,%.6f\n", e.epoch, e.train_loss, e.val_loss,
                  e.val_accuracy);
    out += line;
  }
  return out;
}

// Patience counter over validation loss. An epoch improves only when its loss
// is strictly below the best seen so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {
    if (patience < 1) throw ValidationError("patience must be >= 1");
  }

  // Returns true when `loss` is a new best.
  bool observe(std::size_t epoch, double loss) {
    if (loss < best_loss_) {
      best_loss_ = loss;
      best_epoch_ = epoch;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
};

struct EvalResult {
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

// Mean BCE and thresholded accuracy (p >= threshold means unfair).
inline EvalResult evaluate(const TextClassifier& model, std::span<const LabeledReview> dataset,
                           double threshold = 0.5) {
  if (dataset.empty()) throw ValidationError("cannot evaluate on an empty dataset");
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& r : dataset) {
    if (!r.label) throw ValidationError("review \"" + r.id + "\" has no resolved label");
    const double p = model.predict(r.text);
    const double y = label_target(*r.label);
    loss += bce_loss(p, y);
    correct += ((p >= threshold) ? 1.0 : 0.0) == y;
  }
  const auto n = static_cast<double>(dataset.size());
  return {loss / n, static_cast<double>(correct) / n};
}

struct TrainResult {
  TextClassifier model;
  TrainHistory history;
};

namespace detail {

struct SequenceExample {
  std::vector<std::int32_t> ids;
  double y = 0.0;
};

template <typename Example, typename Predict>
EvalResult evaluate_examples(const std::vector<Example>& examples, double threshold,
                             Predict&& predict) {
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    const double p = predict(ex);
    loss += bce_loss(p, ex.y);
    correct += ((p >= threshold) ? 1.0 : 0.0) == ex.y;
  }
  const auto n = static_cast<double>(examples.size());
  return {loss / n, static_cast<double>(correct) / n};
}

inline void clip_global_norm(std::span<const std::span<double>> blocks, double max_norm) {
  double sq = 0.0;
  for (auto b : blocks) {
    for (double g : b) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (auto b : blocks) {
    for (double& g : b) g *= scale;
  }
}

inline std::vector<std::span<double>> gru_blocks(BiGru& m) {
  std::vector<std::span<double>> blocks;
  visit_blocks(m, [&](std::string_view, std::span<double> data, std::size_t, std::size_t) {
    blocks.push_back(data);
  });
  return blocks;
}

inline std::vector<std::span<const double>> const_blocks(const std::vector<std::span<double>>& blocks) {
  return {blocks.begin(), blocks.end()};
}

// Shared epoch loop. `Model` is LogisticRegression or BiGru; `gradient`
// fills a zeroed gradient model from a batch of examples.
template <typename Model, typename Example, typename Gradient, typename Predict, typename Blocks>
TrainHistory fit(Model& model, const std::vector<Example>& train,
                 const std::vector<Example>& validation, const TrainConfig& config,
                 Gradient&& gradient, Predict&& predict, Blocks&& blocks, bool clip) {
  Rng rng(config.seed);
  AdamState adam;
  EarlyStopping stopper(config.patience);
  TrainHistory history;
  Model best = model;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train[order[k]]);
      Model grad = gradient(model, batch);
      auto grad_blocks = blocks(grad);
      if (clip) clip_global_norm(grad_blocks, config.clip_norm);
      auto param_blocks = blocks(model);
      adam_step(adam, param_blocks, const_blocks(grad_blocks), config.adam);
    }

    const auto train_eval = evaluate_examples(train, config.threshold,
                                              [&](const Example& ex) { return predict(model, ex); });
    const auto val_eval = evaluate_examples(validation, config.threshold,
                                            [&](const Example& ex) { return predict(model, ex); });
    history.epochs.push_back({epoch, train_eval.mean_loss, val_eval.mean_loss, val_eval.accuracy});
    if (stopper.observe(epoch, val_eval.mean_loss)) best = model;
    history.stopped_epoch = epoch;
    if (stopper.should_stop()) break;
  }
  history.best_epoch = stopper.best_epoch();
  model = std::move(best);
  return history;
}

inline void check_trainable(const SplitCorpus& split) {
  if (split.train.empty()) throw ValidationError("training partition is empty");
  if (split.validation.empty()) throw ValidationError("validation partition is empty");
  bool has[2] = {false, false};
  for (const auto* part : {&split.train, &split.validation}) {
    for (const auto& r : *part) {
      if (!r.label) throw ValidationError("review \"" + r.id + "\" has no resolved label");
    }
  }
  for (const auto& r : split.train) has[static_cast<int>(*r.label)] = true;
  if (!has[0] || !has[1]) throw ValidationError("training partition holds a single class");
}

}  // namespace detail

// ADAM over shuffled mini-batches with early stopping on validation loss;
// the returned model carries the best epoch's parameters.
inline TrainResult train(const SplitCorpus& split, const TrainConfig& config) {
  config.validate();
  detail::check_trainable(split);
  Vocabulary vocab = build_vocabulary(split.train, config.vocab_config());

  if (config.model_kind == ModelKind::bigru) {
    const auto prepare = [&](const std::vector<LabeledReview>& part) {
      std::vector<detail::SequenceExample> out;
      out.reserve(part.size());
      for (const auto& r : part) {
        out.push_back({sequence_input(r.text, vocab, config.max_len), label_target(*r.label)});
      }
      return out;
    };
    const auto train_set = prepare(split.train);
    const auto val_set = prepare(split.validation);

    auto model = BiGru::zeros(static_cast<Eigen::Index>(vocab.size()),
                              static_cast<Eigen::Index>(config.d_emb),
                              static_cast<Eigen::Index>(config.d_hid));
    Rng init_rng(mix_seed(config.seed, "init"));
    init_uniform(model, init_rng, config.init_scale);

    const auto gradient = [](const BiGru& m, const std::vector<detail::SequenceExample>& batch) {
      auto grad = BiGru::zeros(m.vocab_size(), m.d_emb(), m.d_hid());
      const double weight = 1.0 / static_cast<double>(batch.size());
      for (const auto& ex : batch) {
        gru_accumulate_gradients(m, gru_forward(m, ex.ids), ex.y, grad, weight);
      }
      return grad;
    };
    const auto predict = [](const BiGru& m, const detail::SequenceExample& ex) {
      return gru_predict(m, ex.ids);
    };
    auto history = detail::fit(model, train_set, val_set, config, gradient, predict,
                               detail::gru_blocks, true);
    return {TextClassifier(config.model_kind, std::move(vocab), std::move(model), config.max_len),
            std::move(history)};
  }

  const auto prepare = [&](const std::vector<LabeledReview>& part) {
    std::vector<SparseExample> out;
    out.reserve(part.size());
    for (const auto& r : part) out.push_back({vectorize(r.text, vocab), label_target(*r.label)});
    return out;
  };
  const auto train_set = prepare(split.train);
  const auto val_set = prepare(split.validation);
  auto model = LogisticRegression::zeros(vocab.size());
  const auto gradient = [](const LogisticRegression& m, const std::vector<SparseExample>& batch) {
    return lr_gradients(m, batch);
  };
  const auto predict = [](const LogisticRegression& m, const SparseExample& ex) {
    return lr_predict(m, ex.x);
  };
  const auto blocks = [](LogisticRegression& m) {
    return std::vector<std::span<double>>{std::span(m.weights), std::span(&m.bias, 1)};
  };
  auto history = detail::fit(model, train_set, val_set, config, gradient, predict, blocks, false);
  return {TextClassifier(config.model_kind, std::move(vocab), std::move(model), config.max_len),
          std::move(history)};
}

}  // namespace fairgate
