#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairgate/error.hpp"
#include "fairgate/label.hpp"
#include "json.hpp"

namespace fairgate {

struct AttemptRecord {
  std::string session_id;
  std::string market;
  std::uint64_t sequence_no = 0;  // 1-based, per session
  std::string text;
  double p_unfair = 0.0;
  Label verdict = Label::fair;
  bool submitted = false;
  std::string timestamp;  // UTC, ISO 8601 with milliseconds

  friend bool operator==(const AttemptRecord&, const AttemptRecord&) = default;
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp =
                                     std::chrono::system_clock::now()) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch());
  const std::time_t secs = static_cast<std::time_t>(ms.count() / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms.count() % 1000));
  return buf;
}

inline nlohmann::ordered_json to_json(const AttemptRecord& r) {
  nlohmann::ordered_json j;
  j["session_id"] = r.session_id;
  j["market"] = r.market;
  j["sequence_no"] = r.sequence_no;
  j["text"] = r.text;
  j["p_unfair"] = r.p_unfair;
  j["verdict"] = std::string(to_string(r.verdict));
  j["submitted"] = r.submitted;
  j["timestamp"] = r.timestamp;
  return j;
}

inline AttemptRecord attempt_from_json(const nlohmann::json& j) {
  try {
    AttemptRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.market = j.at("market").get<std::string>();
    r.sequence_no = j.at("sequence_no").get<std::uint64_t>();
    r.text = j.at("text").get<std::string>();
    r.p_unfair = j.at("p_unfair").get<double>();
    const auto verdict = parse_label(j.at("verdict").get<std::string>());
    if (!verdict) throw ParseError("attempt record: bad verdict");
    r.verdict = *verdict;
    r.submitted = j.at("submitted").get<bool>();
    r.timestamp = j.at("timestamp").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("attempt record: ") + e.what());
  }
}

// Reads a JSONL attempt log. A missing file is an empty log.
inline std::vector<AttemptRecord> read_attempt_log(const std::string& path) {
  std::vector<AttemptRecord> records;
  std::ifstream in(path);
  if (!in) return records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(attempt_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

// Append-only, fsync'd JSONL store. All appends go through one mutex, which
// makes sequence numbers per session gap-free and collision-free.
class AttemptLog {
 public:
  explicit AttemptLog(std::string path) : path_(std::move(path)) {
    for (auto& r : read_attempt_log(path_)) {
      auto& s = sessions_[r.session_id];
      s.last_seq = std::max(s.last_seq, r.sequence_no);
      s.submitted = s.submitted || r.submitted;
      records_.push_back(std::move(r));
    }
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw IoError("cannot open attempt log " + path_ + ": " + std::strerror(errno));
    }
  }

  AttemptLog(const AttemptLog&) = delete;
  AttemptLog& operator=(const AttemptLog&) = delete;

  ~AttemptLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  const std::string& path() const { return path_; }

  // Assigns the next sequence number, writes the record and syncs it to disk
  // before returning it.
  AttemptRecord append(AttemptRecord record) {
    std::lock_guard lock(mutex_);
    auto& s = sessions_[record.session_id];
    if (record.submitted && s.submitted) {
      throw ConflictError("session \"" + record.session_id + "\" already has a final submission");
    }
    record.sequence_no = s.last_seq + 1;
    const std::string line = to_json(record).dump() + "\n";
    write_all(line);
    if (::fsync(fd_) != 0) {
      throw IoError("fsync failed on attempt log " + path_ + ": " + std::strerror(errno));
    }
    s.last_seq = record.sequence_no;
    s.submitted = s.submitted || record.submitted;
    records_.push_back(record);
    return record;
  }

  std::vector<AttemptRecord> records() const {
    std::lock_guard lock(mutex_);
    return records_;
  }

 private:
  struct SessionState {
    std::uint64_t last_seq = 0;
    bool submitted = false;
  };

  void write_all(const std::string& bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const auto n = ::write(fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError("write failed on attempt log " + path_ + ": " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::string path_;
  int fd_ = -1;
  mutable std::mutex mutex_;
  std::vector<AttemptRecord> records_;
  std::unordered_map<std::string, SessionState> sessions_;
};

// ---------------------------------------------------------------------------
// Analytics over a log

struct CorrectionStats {
  std::size_t sessions_total = 0;
  std::size_t sessions_initially_unfair = 0;
  std::size_t sessions_corrected = 0;
  double correction_rate = 0.0;
};

struct ModerationFlag {
  std::string session_id;
  std::string market;
  std::string final_text;
  double p_unfair = 0.0;
  std::string reason = "kept-unfair-after-prompt";
  std::string timestamp;
};

namespace detail {

struct SessionView {
  std::string market;
  const AttemptRecord* first = nullptr;
  const AttemptRecord* final = nullptr;
};

// Sessions in order of first appearance, optionally restricted to a market.
inline std::vector<SessionView> sessions_of(std::span<const AttemptRecord> log,
                                            const std::optional<std::string>& market) {
  std::vector<SessionView> sessions;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : log) {
    auto [it, fresh] = index.emplace(r.session_id, sessions.size());
    if (fresh) sessions.push_back({r.market, nullptr, nullptr});
    auto& s = sessions[it->second];
    if (!s.first || r.sequence_no < s.first->sequence_no) s.first = &r;
    if (r.submitted && !s.final) s.final = &r;
  }
  if (market) {
    std::erase_if(sessions, [&](const SessionView& s) { return s.market != *market; });
  }
  return sessions;
}

}  // namespace detail

// A session is initially unfair when its first attempt scored unfair, and
// corrected when its final submission then scored fair.
inline CorrectionStats correction_stats(std::span<const AttemptRecord> log,
                                        const std::optional<std::string>& market = std::nullopt) {
  CorrectionStats stats;
  for (const auto& s : detail::sessions_of(log, market)) {
    ++stats.sessions_total;
    if (s.first->verdict != Label::unfair) continue;
    ++stats.sessions_initially_unfair;
    if (s.final && s.final->verdict == Label::fair) ++stats.sessions_corrected;
  }
  if (stats.sessions_initially_unfair > 0) {
    stats.correction_rate = static_cast<double>(stats.sessions_corrected) /
                            static_cast<double>(stats.sessions_initially_unfair);
  }
  return stats;
}

// Sessions that were prompted and still submitted an unfair review, ordered
// by submission time.
inline std::vector<ModerationFlag> moderation_flags(
    std::span<const AttemptRecord> log, const std::optional<std::string>& market = std::nullopt) {
  std::vector<ModerationFlag> flags;
  for (const auto& s : detail::sessions_of(log, market)) {
    if (s.first->verdict != Label::unfair || !s.final || s.final->verdict != Label::unfair) continue;
    ModerationFlag f;
    f.session_id = s.final->session_id;
    f.market = s.market;
    f.final_text = s.final->text;
    f.p_unfair = s.final->p_unfair;
    f.timestamp = s.final->timestamp;
    flags.push_back(std::move(f));
  }
  std::stable_sort(flags.begin(), flags.end(), [](const auto& a, const auto& b) {
    return a.timestamp < b.timestamp;
  });
  return flags;
}

inline nlohmann::ordered_json to_json(const CorrectionStats& s) {
  nlohmann::ordered_json j;
  j["sessions_total"] = s.sessions_total;
  j["sessions_initially_unfair"] = s.sessions_initially_unfair;
  j["sessions_corrected"] = s.sessions_corrected;
  j["correction_rate"] = s.correction_rate;
  return j;
}

inline nlohmann::ordered_json to_json(const ModerationFlag& f) {
  nlohmann::ordered_json j;
  j["session_id"] = f.session_id;
  j["market"] = f.market;
  j["final_text"] = f.final_text;
  j["p_unfair"] = f.p_unfair;
  j["reason"] = f.reason;
  j["timestamp"] = f.timestamp;
  return j;
}

inline nlohmann::ordered_json to_json(std::span<const ModerationFlag> flags) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : flags) arr.push_back(to_json(f));
  return arr;
}

}  // namespace fairgate
