#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairgate/attempt_log.hpp"
#include "fairgate/error.hpp"
#include "fairgate/model_io.hpp"
#include "fairgate/text.hpp"
#include "json.hpp"

namespace fairgate {

inline constexpr std::size_t kMaxReviewLength = 20000;  // code points

struct MarketConfig {
  std::string name;
  std::string model_path;  // absolute, or relative to the working directory
  double threshold = 0.5;
  std::vector<std::string> messages;
  std::string display_name;
};

struct RuntimeConfig {
  std::map<std::string, MarketConfig> markets;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string attempt_log = "attempts.jsonl";
};

// Parses a runtime config document. Relative paths resolve against `base_dir`.
inline RuntimeConfig runtime_config_from_json(const nlohmann::json& j,
                                              const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ParseError("runtime config must be a JSON object");
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() ? path : base_dir / path).lexically_normal().string();
  };

  RuntimeConfig config;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& key = it.key();
      if (key == "host") config.host = it->get<std::string>();
      else if (key == "port") config.port = it->get<int>();
      else if (key == "attempt_log") config.attempt_log = resolve(it->get<std::string>());
      else if (key != "markets") throw ParseError("unknown runtime config key \"" + key + "\"");
    }
    if (!j.contains("attempt_log")) config.attempt_log = resolve(config.attempt_log);

    const auto markets = j.find("markets");
    if (markets == j.end() || !markets->is_object() || markets->empty()) {
      throw ValidationError("runtime config needs a non-empty \"markets\" object");
    }
    for (auto it = markets->begin(); it != markets->end(); ++it) {
      MarketConfig m;
      m.name = it.key();
      m.display_name = m.name;
      const auto& mj = it.value();
      if (!mj.is_object()) throw ParseError("market \"" + m.name + "\" must be an object");
      for (auto f = mj.begin(); f != mj.end(); ++f) {
        const auto& key = f.key();
        if (key == "model") m.model_path = resolve(f->get<std::string>());
        else if (key == "threshold") m.threshold = f->get<double>();
        else if (key == "messages") m.messages = f->get<std::vector<std::string>>();
        else if (key == "display_name") m.display_name = f->get<std::string>();
        else throw ParseError("market \"" + m.name + "\": unknown key \"" + key + "\"");
      }
      if (m.model_path.empty()) throw ValidationError("market \"" + m.name + "\": no model file");
      if (!(m.threshold > 0.0 && m.threshold < 1.0)) {
        throw ValidationError("market \"" + m.name + "\": threshold must be in (0, 1)");
      }
      if (m.messages.empty()) {
        throw ValidationError("market \"" + m.name + "\": needs at least one prompt message");
      }
      for (const auto& msg : m.messages) {
        if (msg.empty()) throw ValidationError("market \"" + m.name + "\": empty prompt message");
      }
      if (!std::filesystem::is_regular_file(m.model_path)) {
        throw ValidationError("market \"" + m.name + "\": model file not found: " + m.model_path);
      }
      config.markets.emplace(m.name, std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("runtime config: ") + e.what());
  }
  if (config.port < 0 || config.port > 65535) throw ValidationError("port out of range");
  return config;
}

inline RuntimeConfig load_runtime_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read runtime config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return runtime_config_from_json(j, std::filesystem::path(path).parent_path());
}

struct ValidationResponse {
  double p_unfair = 0.0;
  Label verdict = Label::fair;
  double threshold = 0.5;
  std::vector<std::string> messages;  // empty for fair verdicts
  std::string model_version;
};

inline nlohmann::ordered_json to_json(const ValidationResponse& r) {
  nlohmann::ordered_json j;
  j["p_unfair"] = r.p_unfair;
  j["verdict"] = std::string(to_string(r.verdict));
  j["threshold"] = r.threshold;
  j["messages"] = r.messages;
  j["model_version"] = r.model_version;
  return j;
}

struct MarketInfo {
  std::string market;
  std::string display_name;
  double threshold = 0.5;
  std::string model_version;
};

// Scoring, attempt logging and analytics behind the HTTP API. Models and
// config are immutable after construction; only the attempt log mutates.
class ValidatorService {
 public:
  using Clock = std::function<std::string()>;

  // Loads every market's model up front; any failure aborts construction.
  explicit ValidatorService(RuntimeConfig config, Clock clock = [] { return utc_timestamp(); })
      : config_(std::move(config)), clock_(std::move(clock)) {
    for (const auto& [name, market] : config_.markets) {
      try {
        models_.emplace(name, load_model(market.model_path));
      } catch (const Error& e) {
        throw Error("market \"" + name + "\": " + e.what());
      }
    }
    log_ = std::make_unique<AttemptLog>(config_.attempt_log);
  }

  const RuntimeConfig& config() const { return config_; }

  std::vector<MarketInfo> markets() const {
    std::vector<MarketInfo> out;
    for (const auto& [name, m] : config_.markets) {
      out.push_back({name, m.display_name, m.threshold, models_.at(name).model_version});
    }
    return out;
  }

  // Stateless scoring: p >= threshold means unfair, and only unfair verdicts
  // carry the market's prompt messages.
  ValidationResponse validate_review(const std::string& market, const std::string& text) const {
    const auto& [cfg, model] = lookup(market);
    check_text(text);
    ValidationResponse r;
    r.p_unfair = model.classifier.predict(text);
    r.threshold = cfg.threshold;
    r.verdict = r.p_unfair >= cfg.threshold ? Label::unfair : Label::fair;
    if (r.verdict == Label::unfair) r.messages = cfg.messages;
    r.model_version = model.model_version;
    return r;
  }

  AttemptRecord record_attempt(const std::string& session_id, const std::string& market,
                               const std::string& text, bool submitted) {
    if (session_id.empty()) throw ValidationError("session_id is empty");
    const auto scored = validate_review(market, text);
    AttemptRecord record;
    record.session_id = session_id;
    record.market = market;
    record.text = text;
    record.p_unfair = scored.p_unfair;
    record.verdict = scored.verdict;
    record.submitted = submitted;
    record.timestamp = clock_();
    return log_->append(std::move(record));
  }

  std::vector<AttemptRecord> attempts() const { return log_->records(); }

  CorrectionStats corrections(const std::optional<std::string>& market = std::nullopt) const {
    const auto records = log_->records();
    return correction_stats(records, market);
  }

  std::vector<ModerationFlag> flags(const std::optional<std::string>& market = std::nullopt) const {
    const auto records = log_->records();
    return moderation_flags(records, market);
  }

 private:
  std::pair<const MarketConfig&, const SavedModel&> lookup(const std::string& market) const {
    const auto it = config_.markets.find(market);
    if (it == config_.markets.end()) throw NotFoundError("unknown market \"" + market + "\"");
    return {it->second, models_.at(market)};
  }

  static void check_text(const std::string& text) {
    const std::u32string cps = text::decode_utf8(text);
    if (std::all_of(cps.begin(), cps.end(), text::is_space)) {
      throw ValidationError("review text is empty");
    }
    if (cps.size() > kMaxReviewLength) {
      throw ValidationError("review text exceeds " + std::to_string(kMaxReviewLength) +
                            " characters");
    }
  }

  RuntimeConfig config_;
  Clock clock_;
  std::map<std::string, SavedModel> models_;
  std::unique_ptr<AttemptLog> log_;
};

}  // namespace fairgate
