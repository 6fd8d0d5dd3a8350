#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "fairgate/classifier.hpp"
#include "fairgate/config.hpp"
#include "fairgate/error.hpp"
#include "fairgate/random.hpp"
#include "json.hpp"

namespace fairgate {

inline constexpr int kModelFormatVersion = 1;

struct SavedModel {
  TextClassifier classifier;
  std::string market;
  TrainConfig config;
  std::string model_version;  // filled in by load_model
};

namespace detail {

inline nlohmann::ordered_json block_json(std::span<const double> data, std::size_t rows,
                                         std::size_t cols, bool vector_shape) {
  nlohmann::ordered_json b;
  b["shape"] = vector_shape ? nlohmann::ordered_json::array({rows})
                            : nlohmann::ordered_json::array({rows, cols});
  b["data"] = std::vector<double>(data.begin(), data.end());
  return b;
}

inline void read_block(const nlohmann::json& params, const std::string& name,
                       std::span<double> out, std::size_t rows, std::size_t cols) {
  const auto it = params.find(name);
  if (it == params.end()) throw ParseError("model file: missing parameter block \"" + name + "\"");
  const auto& block = *it;
  if (!block.contains("shape") || !block.contains("data") || !block["data"].is_array()) {
    throw ParseError("model file: malformed parameter block \"" + name + "\"");
  }
  const auto shape = block["shape"].get<std::vector<std::size_t>>();
  std::size_t expect_rows = shape.empty() ? 0 : shape[0];
  std::size_t expect_cols = shape.size() > 1 ? shape[1] : 1;
  if (shape.empty() || shape.size() > 2 || expect_rows != rows || expect_cols != cols) {
    throw ShapeError("model file: block \"" + name + "\" has an unexpected shape");
  }
  const auto& data = block["data"];
  if (data.size() != out.size()) {
    throw ShapeError("model file: block \"" + name + "\" holds " + std::to_string(data.size()) +
                     " values, shape says " + std::to_string(out.size()));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!data[i].is_number()) throw ParseError("model file: non-numeric value in \"" + name + "\"");
    out[i] = data[i].get<double>();
    if (!std::isfinite(out[i])) throw ParseError("model file: non-finite value in \"" + name + "\"");
  }
}

inline std::size_t shape_dim(const nlohmann::json& params, const std::string& name, int axis) {
  const auto it = params.find(name);
  if (it == params.end() || !it->contains("shape")) {
    throw ParseError("model file: missing parameter block \"" + name + "\"");
  }
  const auto shape = (*it)["shape"].get<std::vector<std::size_t>>();
  if (static_cast<std::size_t>(axis) >= shape.size()) {
    throw ShapeError("model file: block \"" + name + "\" has too few dimensions");
  }
  return shape[axis];
}

}  // namespace detail

inline std::string serialize_model(const TextClassifier& model, const std::string& market,
                                   const TrainConfig& config) {
  nlohmann::ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = std::string(to_string(model.kind()));
  doc["market"] = market;
  doc["config"] = to_json(config);

  const auto& v = model.vocab();
  nlohmann::ordered_json vocab;
  vocab["mode"] = std::string(to_string(v.mode()));
  vocab["word_n"] = v.word_n();
  vocab["char_n"] = v.char_n();
  vocab["size"] = v.size();
  vocab["word_terms"] = v.word_terms();
  vocab["char_terms"] = v.char_terms();
  doc["vocabulary"] = std::move(vocab);

  nlohmann::ordered_json params;
  if (model.kind() == ModelKind::bigru) {
    const auto& g = model.gru();
    params["d_emb"] = g.d_emb();
    params["d_hid"] = g.d_hid();
    params["max_len"] = model.max_len();
    visit_blocks(g, [&](std::string_view name, std::span<const double> data, std::size_t rows,
                        std::size_t cols) {
      const bool is_vector = name.find(".b_") != std::string_view::npos || name == "w_out" ||
                             name == "b_out";
      params[std::string(name)] = detail::block_json(data, rows, cols, is_vector);
    });
  } else {
    const auto& lr = model.logistic();
    params["weights"] = detail::block_json(lr.weights, lr.weights.size(), 1, true);
    params["bias"] = detail::block_json(std::span(&lr.bias, 1), 1, 1, true);
  }
  doc["parameters"] = std::move(params);
  return doc.dump();
}

inline void save_model(const std::string& path, const TextClassifier& model,
                       const std::string& market, const TrainConfig& config) {
  const std::string bytes = serialize_model(model, market, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file: " + path);
  out << bytes;
  out.flush();
  if (!out) throw IoError("failed writing model file: " + path);
}

inline SavedModel parse_model(const std::string& bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file is truncated or corrupt: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("format_version")) {
      throw ParseError("model file: missing format_version");
    }
    const auto version = doc["format_version"];
    if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
      throw VersionError("model file: unsupported format_version " + version.dump() +
                         " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    for (const char* field : {"kind", "market", "config", "vocabulary", "parameters"}) {
      if (!doc.contains(field)) throw ParseError(std::string("model file: missing \"") + field + "\"");
    }
    const ModelKind kind = parse_model_kind(doc["kind"].get<std::string>());
    const TrainConfig config = train_config_from_json(doc["config"]);

    const auto& vj = doc["vocabulary"];
    Vocabulary vocab(parse_vocab_mode(vj.at("mode").get<std::string>()),
                     vj.at("word_n").get<std::vector<int>>(),
                     vj.at("char_n").get<std::vector<int>>(),
                     vj.at("word_terms").get<std::vector<std::string>>(),
                     vj.at("char_terms").get<std::vector<std::string>>());
    if (vj.contains("size") && vj["size"].get<std::size_t>() != vocab.size()) {
      throw ShapeError("model file: vocabulary size field disagrees with its terms");
    }

    const auto& pj = doc["parameters"];
    TextClassifier::Parameters params;
    std::size_t max_len = config.max_len;
    if (kind == ModelKind::bigru) {
      const auto d_emb = pj.at("d_emb").get<std::size_t>();
      const auto d_hid = pj.at("d_hid").get<std::size_t>();
      max_len = pj.at("max_len").get<std::size_t>();
      const auto rows = detail::shape_dim(pj, "embedding", 0);
      auto g = BiGru::zeros(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d_emb),
                            static_cast<Eigen::Index>(d_hid));
      visit_blocks(g, [&](std::string_view name, std::span<double> data, std::size_t r,
                          std::size_t c) { detail::read_block(pj, std::string(name), data, r, c); });
      params = std::move(g);
    } else {
      const auto n = detail::shape_dim(pj, "weights", 0);
      auto lr = LogisticRegression::zeros(n);
      detail::read_block(pj, "weights", lr.weights, n, 1);
      detail::read_block(pj, "bias", std::span(&lr.bias, 1), 1, 1);
      params = std::move(lr);
    }

    SavedModel saved{TextClassifier(kind, std::move(vocab), std::move(params), max_len),
                     doc["market"].get<std::string>(), config, {}};
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes)));
    saved.model_version = std::string(to_string(kind)) + "-v" +
                          std::to_string(kModelFormatVersion) + "-" + std::string(digest, 12);
    return saved;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file is truncated or corrupt: ") + e.what());
  } catch (const ValidationError& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

inline SavedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_model(ss.str());
  } catch (const VersionError& e) {
    throw VersionError(path + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(path + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace fairgate
