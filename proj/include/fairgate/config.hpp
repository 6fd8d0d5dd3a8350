#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "fairgate/adam.hpp"
#include "fairgate/error.hpp"
#include "fairgate/features.hpp"
#include "fairgate/random.hpp"
#include "json.hpp"

namespace fairgate {

enum class ModelKind { word_lr, char_lr, combined_lr, bigru };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::word_lr, ModelKind::char_lr,
                                               ModelKind::combined_lr, ModelKind::bigru};

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::word_lr: return "word-lr";
    case ModelKind::char_lr: return "char-lr";
    case ModelKind::combined_lr: return "combined-lr";
    case ModelKind::bigru: return "bigru";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (auto kind : kAllModelKinds) {
    if (to_string(kind) == s) return kind;
  }
  throw ValidationError("unknown model kind \"" + std::string(s) +
                        "\" (expected word-lr, char-lr, combined-lr or bigru)");
}

inline VocabMode vocab_mode_for(ModelKind kind) {
  switch (kind) {
    case ModelKind::word_lr: return VocabMode::word_ngram;
    case ModelKind::char_lr: return VocabMode::char_ngram;
    case ModelKind::combined_lr: return VocabMode::combined;
    case ModelKind::bigru: return VocabMode::sequence;
  }
  return VocabMode::word_ngram;
}

struct TrainConfig {
  ModelKind model_kind = ModelKind::word_lr;
  AdamConfig adam;  // learning_rate 0.001, beta1 0.9, beta2 0.999, epsilon 1e-8
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 42;
  double threshold = 0.5;  // verdict threshold for validation accuracy

  // features
  std::vector<int> word_n{1, 2};
  std::vector<int> char_n{3, 4, 5};
  std::size_t min_count = 2;
  std::size_t word_max_size = 20000;
  std::size_t char_max_size = 50000;
  std::size_t sequence_max_size = 10000;
  std::size_t max_len = 200;

  // recurrent model
  std::size_t d_emb = 32;
  std::size_t d_hid = 32;
  double init_scale = 0.1;
  double clip_norm = 5.0;

  VocabConfig vocab_config() const {
    VocabConfig v;
    v.mode = vocab_mode_for(model_kind);
    v.word_n = word_n;
    v.char_n = char_n;
    v.min_count = min_count;
    v.word_max_size = word_max_size;
    v.char_max_size = char_max_size;
    v.sequence_max_size = sequence_max_size;
    return v;
  }

  void validate() const {
    if (!(adam.learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
    if (!(adam.beta1 >= 0 && adam.beta1 < 1)) throw ValidationError("beta1 must be in [0, 1)");
    if (!(adam.beta2 >= 0 && adam.beta2 < 1)) throw ValidationError("beta2 must be in [0, 1)");
    if (!(adam.epsilon > 0)) throw ValidationError("epsilon must be > 0");
    if (patience < 1) throw ValidationError("patience must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
    if (!(threshold > 0 && threshold < 1)) throw ValidationError("threshold must be in (0, 1)");
    if (max_len < 1) throw ValidationError("max_len must be >= 1");
    if (d_emb < 1 || d_hid < 1) throw ValidationError("d_emb and d_hid must be >= 1");
    if (!(clip_norm > 0)) throw ValidationError("clip_norm must be > 0");
  }
};

inline nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["model_kind"] = std::string(to_string(c.model_kind));
  j["learning_rate"] = c.adam.learning_rate;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["epsilon"] = c.adam.epsilon;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["threshold"] = c.threshold;
  j["word_n"] = c.word_n;
  j["char_n"] = c.char_n;
  j["min_count"] = c.min_count;
  j["word_max_size"] = c.word_max_size;
  j["char_max_size"] = c.char_max_size;
  j["sequence_max_size"] = c.sequence_max_size;
  j["max_len"] = c.max_len;
  j["d_emb"] = c.d_emb;
  j["d_hid"] = c.d_hid;
  j["init_scale"] = c.init_scale;
  j["clip_norm"] = c.clip_norm;
  return j;
}

// Every key is optional; unknown keys are rejected.
template <typename Json>
TrainConfig train_config_from_json(const Json& j, TrainConfig c = {}) {
  if (!j.is_object()) throw ParseError("training config must be a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const auto& v = it.value();
      if (key == "model_kind") c.model_kind = parse_model_kind(v.template get<std::string>());
      else if (key == "learning_rate") c.adam.learning_rate = v.template get<double>();
      else if (key == "beta1") c.adam.beta1 = v.template get<double>();
      else if (key == "beta2") c.adam.beta2 = v.template get<double>();
      else if (key == "epsilon") c.adam.epsilon = v.template get<double>();
      else if (key == "batch_size") c.batch_size = v.template get<std::size_t>();
      else if (key == "max_epochs") c.max_epochs = v.template get<std::size_t>();
      else if (key == "patience") c.patience = v.template get<std::size_t>();
      else if (key == "seed") c.seed = v.template get<std::uint64_t>();
      else if (key == "threshold") c.threshold = v.template get<double>();
      else if (key == "word_n") c.word_n = v.template get<std::vector<int>>();
      else if (key == "char_n") c.char_n = v.template get<std::vector<int>>();
      else if (key == "min_count") c.min_count = v.template get<std::size_t>();
      else if (key == "word_max_size") c.word_max_size = v.template get<std::size_t>();
      else if (key == "char_max_size") c.char_max_size = v.template get<std::size_t>();
      else if (key == "sequence_max_size") c.sequence_max_size = v.template get<std::size_t>();
      else if (key == "max_len") c.max_len = v.template get<std::size_t>();
      else if (key == "d_emb") c.d_emb = v.template get<std::size_t>();
      else if (key == "d_hid") c.d_hid = v.template get<std::size_t>();
      else if (key == "init_scale") c.init_scale = v.template get<double>();
      else if (key == "clip_norm") c.clip_norm = v.template get<double>();
      else throw ParseError("unknown training config key \"" + key + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read training config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return train_config_from_json(j);
}

inline std::uint64_t config_digest(const TrainConfig& c) { return fnv1a(to_json(c).dump()); }

}  // namespace fairgate
