#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairgate/corpus.hpp"
#include "fairgate/evalbench.hpp"
#include "fairgate/http_server.hpp"
#include "fairgate/model_io.hpp"
#include "fairgate/service.hpp"
#include "fairgate/trainer.hpp"
#include "json.hpp"

namespace fairgate::cli {

enum ExitCode : int { kOk = 0, kDomainError = 1, kUsageError = 2 };

namespace detail {

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << bytes;
  if (!out) throw IoError("failed writing " + path);
}

inline std::string history_path_for(const std::string& model_path) {
  std::filesystem::path p(model_path);
  p.replace_extension();
  return p.string() + ".history.csv";
}

inline nlohmann::ordered_json class_counts(std::span<const LabeledReview> reviews) {
  std::size_t fair = 0, unfair = 0;
  for (const auto& r : reviews) {
    if (!r.label) continue;
    (*r.label == Label::unfair ? unfair : fair)++;
  }
  nlohmann::ordered_json j;
  j["fair"] = fair;
  j["unfair"] = unfair;
  return j;
}

// Loads and adjudicates a corpus, optionally for one market. Reviews still
// waiting for a tiebreak are reported and left out.
inline std::vector<LabeledReview> resolved_corpus(const std::string& path,
                                                  const std::string& market, std::ostream& err) {
  auto reviews = load_corpus(path);
  if (!market.empty()) reviews = filter_market(reviews, market);
  auto adjudicated = resolve_labels(reviews);
  if (!adjudicated.needs_tiebreak.empty()) {
    err << "warning: " << adjudicated.needs_tiebreak.size()
        << " review(s) need a tiebreak and were skipped\n";
  }
  return std::move(adjudicated.resolved);
}

}  // namespace detail

// Runs one `fairgate` invocation. `args` excludes the program name.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fairgate: unfair-review detection toolkit", "fairgate"};
  app.require_subcommand(1);

  std::string corpus, market, config_path, out_path, format = "table", log_path;
  std::vector<std::string> models;
  std::uint64_t seed = 42;
  int port = -1;

  auto* ingest = app.add_subcommand("ingest", "Validate and adjudicate a corpus");
  ingest->add_option("--corpus", corpus, "Corpus JSONL file")->required();
  ingest->add_option("--market", market, "Restrict to one market");
  ingest->add_option("--out", out_path, "Write the adjudicated corpus here");

  auto* kappa = app.add_subcommand("kappa", "Inter-coder agreement of the first two coders");
  kappa->add_option("--corpus", corpus, "Corpus JSONL file")->required();
  kappa->add_option("--market", market, "Restrict to one market");

  auto* split = app.add_subcommand("split", "Stratified 80/10/10 split into three JSONL files");
  split->add_option("--corpus", corpus, "Corpus JSONL file")->required();
  split->add_option("--market", market, "Restrict to one market");
  split->add_option("--out", out_path, "Output directory")->required();
  split->add_option("--seed", seed, "Shuffle seed");

  auto* train_cmd = app.add_subcommand("train", "Train one model for one market");
  train_cmd->add_option("--corpus", corpus, "Corpus JSONL file")->required();
  train_cmd->add_option("--market", market, "Market to train on")->required();
  train_cmd->add_option("--model", models, "Model kind")->expected(1);
  train_cmd->add_option("--config", config_path, "Training config JSON")->envname("FAIRGATE_CONFIG");
  train_cmd->add_option("--out", out_path, "Model file to write")->required();
  auto* train_seed = train_cmd->add_option("--seed", seed, "Override the config seed");

  auto* bench = app.add_subcommand("benchmark", "Train and test every model on every market");
  bench->add_option("--corpus", corpus, "Corpus JSONL file")->required();
  bench->add_option("--model", models, "Model kinds (default: all)");
  bench->add_option("--config", config_path, "Training config JSON")->envname("FAIRGATE_CONFIG");
  bench->add_option("--seed", seed, "Benchmark seed");
  bench->add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}));
  bench->add_option("--out", out_path, "Write the report here instead of stdout");

  auto* serve = app.add_subcommand("serve", "Run the HTTP validation service");
  serve->add_option("--config", config_path, "Runtime config JSON")
      ->envname("FAIRGATE_CONFIG")
      ->required();
  serve->add_option("--port", port, "Override the configured port");
  serve->add_option("--log", log_path, "Override the attempt log path");

  auto* stats = app.add_subcommand("stats", "Correction rate and moderation flags of a log");
  stats->add_option("--log", log_path, "Attempt log JSONL")->required();
  stats->add_option("--market", market, "Restrict to one market");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*ingest) {
      auto reviews = load_corpus(corpus);
      if (!market.empty()) reviews = filter_market(reviews, market);
      const auto adjudicated = resolve_labels(reviews);
      nlohmann::ordered_json summary;
      summary["reviews"] = reviews.size();
      summary["resolved"] = adjudicated.resolved.size();
      summary["class_counts"] = detail::class_counts(adjudicated.resolved);
      auto by_market = nlohmann::ordered_json::object();
      for (const auto& [m, rs] : group_by_market(adjudicated.resolved)) {
        by_market[m] = detail::class_counts(rs);
      }
      summary["markets"] = std::move(by_market);
      auto pending = nlohmann::ordered_json::array();
      for (const auto& r : adjudicated.needs_tiebreak) pending.push_back(r.id);
      summary["needs_tiebreak"] = std::move(pending);
      if (!out_path.empty()) save_corpus(out_path, adjudicated.resolved);
      out << summary.dump(2) << '\n';
    } else if (*kappa) {
      auto reviews = load_corpus(corpus);
      if (!market.empty()) reviews = filter_market(reviews, market);
      const auto s = corpus_agreement(reviews);
      nlohmann::ordered_json j;
      j["observed_agreement"] = s.observed_agreement;
      j["expected_agreement"] = s.expected_agreement;
      j["kappa"] = s.kappa;
      out << j.dump(2) << '\n';
    } else if (*split) {
      const auto reviews = detail::resolved_corpus(corpus, market, err);
      const auto parts = stratified_split(reviews, {}, seed);
      std::filesystem::create_directories(out_path);
      const std::filesystem::path dir(out_path);
      save_corpus((dir / "train.jsonl").string(), parts.train);
      save_corpus((dir / "test.jsonl").string(), parts.test);
      save_corpus((dir / "validation.jsonl").string(), parts.validation);
      nlohmann::ordered_json j;
      j["train"] = detail::class_counts(parts.train);
      j["test"] = detail::class_counts(parts.test);
      j["validation"] = detail::class_counts(parts.validation);
      out << j.dump(2) << '\n';
    } else if (*train_cmd) {
      TrainConfig config = config_path.empty() ? TrainConfig{} : load_train_config(config_path);
      if (!models.empty()) config.model_kind = parse_model_kind(models.front());
      if (train_seed->count() > 0) config.seed = seed;
      const auto reviews = detail::resolved_corpus(corpus, market, err);
      if (reviews.empty()) throw ValidationError("no labeled reviews for market \"" + market + "\"");
      const auto parts = stratified_split(reviews, {}, config.seed);
      const auto result = train(parts, config);
      save_model(out_path, result.model, market, config);
      detail::write_file(detail::history_path_for(out_path), history_csv(result.history));

      nlohmann::ordered_json j;
      j["model"] = out_path;
      j["kind"] = std::string(to_string(config.model_kind));
      j["market"] = market;
      j["best_epoch"] = result.history.best_epoch;
      j["stopped_epoch"] = result.history.stopped_epoch;
      const auto& best = result.history.epochs.at(result.history.best_epoch - 1);
      j["val_loss"] = best.val_loss;
      j["val_accuracy"] = best.val_accuracy;
      if (!parts.test.empty()) {
        const auto m = metrics(confusion(result.model, parts.test, config.threshold));
        j["test_accuracy"] = m.accuracy;
        j["test_f1"] = m.f1;
      }
      out << j.dump(2) << '\n';
    } else if (*bench) {
      const TrainConfig config = config_path.empty() ? TrainConfig{} : load_train_config(config_path);
      std::vector<ModelKind> kinds;
      for (const auto& m : models) kinds.push_back(parse_model_kind(m));
      if (kinds.empty()) kinds.assign(std::begin(kAllModelKinds), std::end(kAllModelKinds));
      const auto reviews = detail::resolved_corpus(corpus, "", err);
      const auto report = run_benchmark(group_by_market(reviews), kinds, config, seed);
      const auto text = render_report(report, parse_report_format(format));
      if (out_path.empty()) {
        out << text;
      } else {
        detail::write_file(out_path, text);
      }
    } else if (*serve) {
      RuntimeConfig config = load_runtime_config(config_path);
      if (port >= 0) config.port = port;
      if (!log_path.empty()) config.attempt_log = log_path;
      ValidatorService service(std::move(config));
      HttpService http(service);
      const int bound = http.bind(service.config().host, service.config().port);
      err << "fairgate: serving " << service.config().markets.size() << " market(s) on "
          << service.config().host << ':' << bound << '\n';
      if (!http.serve()) throw IoError("server stopped unexpectedly");
    } else if (*stats) {
      const auto records = read_attempt_log(log_path);
      const std::optional<std::string> filter =
          market.empty() ? std::nullopt : std::optional<std::string>(market);
      const auto flags = moderation_flags(records, filter);
      nlohmann::ordered_json j;
      j["corrections"] = to_json(correction_stats(records, filter));
      j["moderation_flags"] = to_json(std::span<const ModerationFlag>(flags));
      out << j.dump(2) << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  }
  return kOk;
}

}  // namespace fairgate::cli
