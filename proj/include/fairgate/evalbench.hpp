#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fairgate/classifier.hpp"
#include "fairgate/config.hpp"
#include "fairgate/corpus.hpp"
#include "fairgate/error.hpp"
#include "fairgate/random.hpp"
#include "fairgate/trainer.hpp"

namespace fairgate {

// Positive class is "unfair".
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero denominators give 0 rather than an error.
inline Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("metrics of an empty confusion matrix");
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0
                                       : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

inline ConfusionMatrix confusion(const TextClassifier& model, std::span<const LabeledReview> data,
                                 double threshold = 0.5) {
  ConfusionMatrix cm;
  for (const auto& r : data) {
    if (!r.label) throw ValidationError("review \"" + r.id + "\" has no resolved label");
    const bool predicted_unfair = model.predict(r.text) >= threshold;
    const bool unfair = *r.label == Label::unfair;
    if (predicted_unfair && unfair) ++cm.tp;
    else if (predicted_unfair) ++cm.fp;
    else if (unfair) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

struct BenchmarkRow {
  std::string market;
  ModelKind kind = ModelKind::word_lr;
  Metrics metrics;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::uint64_t config_digest = 0;
  std::uint64_t seed = 0;
};

struct BenchmarkCell {
  BenchmarkRow row;
  SplitCorpus split;
  TrainHistory history;
};

// Seeds for one (market, kind) cell. The split depends on the market only, so
// every model kind in a market sees the same partitions.
inline std::uint64_t split_seed_for(std::uint64_t seed, const std::string& market) {
  return mix_seed(seed, "split/" + market);
}

inline std::uint64_t train_seed_for(std::uint64_t seed, const std::string& market, ModelKind kind) {
  return mix_seed(seed, "train/" + market + "/" + std::string(to_string(kind)));
}

inline BenchmarkCell benchmark_cell(const std::string& market,
                                    std::span<const LabeledReview> reviews, ModelKind kind,
                                    const TrainConfig& base_config, std::uint64_t seed,
                                    const SplitRatios& ratios = {}) {
  try {
    BenchmarkCell cell;
    cell.split = stratified_split(reviews, ratios, split_seed_for(seed, market));
    if (cell.split.test.empty()) throw ValidationError("test partition is empty");
    TrainConfig config = base_config;
    config.model_kind = kind;
    config.seed = train_seed_for(seed, market, kind);
    auto result = train(cell.split, config);
    cell.row = {market, kind,
                metrics(confusion(result.model, cell.split.test, config.threshold))};
    cell.history = std::move(result.history);
    return cell;
  } catch (const Error& e) {
    throw Error("benchmark cell (" + market + ", " + std::string(to_string(kind)) +
                "): " + e.what());
  }
}

// Trains and tests every (market, kind) pair; markets in key order, kinds in
// the given order.
inline BenchmarkReport run_benchmark(const std::map<std::string, std::vector<LabeledReview>>& corpora,
                                     std::span<const ModelKind> kinds,
                                     const TrainConfig& base_config, std::uint64_t seed,
                                     const SplitRatios& ratios = {}) {
  BenchmarkReport report;
  report.seed = seed;
  report.config_digest = config_digest(base_config);
  for (const auto& [market, reviews] : corpora) {
    for (auto kind : kinds) {
      report.rows.push_back(benchmark_cell(market, reviews, kind, base_config, seed, ratios).row);
    }
  }
  return report;
}

enum class ReportFormat { table, csv };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "table") return ReportFormat::table;
  if (s == "csv") return ReportFormat::csv;
  throw ValidationError("unknown report format \"" + std::string(s) + "\"");
}

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string render_report(const BenchmarkReport& report, ReportFormat format) {
  static const char* kHeader[] = {"market", "model", "accuracy", "precision", "recall", "f1"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : report.rows) {
    cells.push_back({r.market, std::string(to_string(r.kind)), format_metric(r.metrics.accuracy),
                     format_metric(r.metrics.precision), format_metric(r.metrics.recall),
                     format_metric(r.metrics.f1)});
  }

  std::string out;
  if (format == ReportFormat::csv) {
    out = "market,model,accuracy,precision,recall,f1\n";
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += row[c];
      }
      out += '\n';
    }
    return out;
  }

  std::size_t width[6];
  for (std::size_t c = 0; c < 6; ++c) {
    width[c] = std::char_traits<char>::length(kHeader[c]);
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  const auto emit = [&](const auto& row) {
    std::string line;
    for (std::size_t c = 0; c < 6; ++c) {
      const std::string cell = row[c];
      const std::string pad(width[c] - cell.size(), ' ');
      if (c) line += "  ";
      line += c < 2 ? cell + pad : pad + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  };
  emit(std::vector<std::string>(std::begin(kHeader), std::end(kHeader)));
  for (const auto& row : cells) emit(row);
  return out;
}

// Parses the CSV rendering back into rows (metric values at 4 decimals).
inline std::vector<BenchmarkRow> parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "market,model,accuracy,precision,recall,f1") {
    throw ParseError("benchmark csv: unexpected header");
  }
  std::vector<BenchmarkRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw ParseError("benchmark csv: expected 6 fields in \"" + line + "\"");
    BenchmarkRow row;
    row.market = f[0];
    row.kind = parse_model_kind(f[1]);
    try {
      row.metrics = {std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5])};
    } catch (const std::exception&) {
      throw ParseError("benchmark csv: bad number in \"" + line + "\"");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::map<std::string, std::vector<LabeledReview>> group_by_market(
    std::span<const LabeledReview> reviews) {
  std::map<std::string, std::vector<LabeledReview>> out;
  for (const auto& r : reviews) out[r.market].push_back(r);
  return out;
}

}  // namespace fairgate
