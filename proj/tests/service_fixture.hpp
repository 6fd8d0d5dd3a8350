#pragma once

#include <atomic>
#include <cstdio>
#include <memory>
#include <string>

#include "fairgate/model_io.hpp"
#include "fairgate/service.hpp"
#include "model_fixtures.hpp"
#include "test_support.hpp"

namespace fairgate::testing {

inline constexpr const char* kPromptMessage = "Please focus on the worker's own conduct.";

// Unigram word model: "rude" scores unfair, "polite" scores fair.
inline TextClassifier keyword_classifier() {
  std::vector<LabeledReview> docs;
  for (const char* w : {"rude", "polite", "late"}) docs.push_back({w, "upwork", w, {}, Label::fair});
  VocabConfig vc;
  vc.mode = VocabMode::word_ngram;
  vc.word_n = {1};
  vc.min_count = 1;
  auto vocab = build_vocabulary(docs, vc);
  auto lr = LogisticRegression::zeros(vocab.size());
  lr.weights[*vocab.word_index("rude")] = 5.0;
  lr.weights[*vocab.word_index("polite")] = -5.0;
  return TextClassifier(ModelKind::word_lr, std::move(vocab), std::move(lr));
}

// Three markets written to disk behind a runtime config file:
//   uber     zero-parameter word model (p = 0.5 everywhere)
//   grubhub  random bigru
//   upwork   keyword_classifier()
struct ServiceFixture {
  TempDir dir;
  std::string config_path;
  std::map<std::string, TextClassifier> models;

  ServiceFixture() {
    const auto uber_src = random_classifier(ModelKind::word_lr, 1);
    models.emplace("uber", TextClassifier(ModelKind::word_lr, uber_src.vocab(),
                                          LogisticRegression::zeros(uber_src.vocab().size())));
    models.emplace("grubhub", random_classifier(ModelKind::bigru, 2, "grubhub"));
    models.emplace("upwork", keyword_classifier());

    nlohmann::json markets = nlohmann::json::object();
    for (const auto& [name, model] : models) {
      TrainConfig c;
      c.model_kind = model.kind();
      save_model(dir.file(name + ".json"), model, name, c);
      markets[name] = {{"model", name + ".json"},
                       {"threshold", 0.5},
                       {"messages", {kPromptMessage}},
                       {"display_name", "Market " + name}};
    }
    nlohmann::json doc = {{"attempt_log", "log/attempts.jsonl"}, {"markets", markets}};
    std::filesystem::create_directories(dir.path() / "log");
    config_path = dir.file("runtime.json");
    write_text(config_path, doc.dump(2));
  }

  std::string log_path() const { return dir.file("log/attempts.jsonl"); }

  // Timestamps that increase by one second per call.
  static ValidatorService::Clock ticking_clock() {
    auto n = std::make_shared<std::atomic<int>>(0);
    return [n] {
      const int s = (*n)++;
      char buf[40];
      std::snprintf(buf, sizeof buf, "2024-01-01T%02d:%02d:%02d.000Z", s / 3600, s / 60 % 60,
                    s % 60);
      return std::string(buf);
    };
  }

  std::unique_ptr<ValidatorService> service() const {
    return std::make_unique<ValidatorService>(load_runtime_config(config_path), ticking_clock());
  }
};

}  // namespace fairgate::testing
