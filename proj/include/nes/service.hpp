#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nes/backend.hpp"
#include "nes/prompt.hpp"
#include "nes/suggestion.hpp"
#include "nes/trajectory.hpp"

namespace nes {

struct ServiceConfig {
  int history_window = 3;
  int editable_window_radius = 16;
  std::chrono::milliseconds session_ttl = std::chrono::minutes(30);
  std::size_t max_sessions = 1024;
  // Reported per suggestion; exceeding it is flagged, never enforced.
  double latency_budget_ms = 450.0;
  std::size_t prompt_byte_budget = 24 * 1024;
  OverlapPolicy overlap;

  // Throws std::invalid_argument.
  void validate() const;
};

struct SessionOptions {
  std::optional<int> history_window;
  std::optional<double> latency_budget_ms;
  std::optional<std::size_t> prompt_byte_budget;
  // Starting file; without it the first event's pre-text is adopted.
  std::optional<std::string> initial_text;
  std::string language;
};

struct HistorySummary {
  std::size_t history_len = 0;
  bool active_present = false;
  std::string text_sha256;
};

struct AcceptResult {
  std::string suggestion_id;
  SuggestionKind kind = SuggestionKind::edit;
  bool text_changed = false;
  std::optional<int> jump_line;
  HistorySummary summary;
};

struct SessionView {
  std::string session_id;
  int history_window = 3;
  double latency_budget_ms = 0.0;
  std::string language;
  std::string current_text;
  std::string text_sha256;
  std::optional<int> cursor_line;
  std::vector<std::string> history;
  std::optional<std::string> active;
  std::optional<Suggestion> pending;
  std::vector<int> jumps;
  std::size_t rejections = 0;
};

// The interactive loop: sessions ingest edits, request location and edit
// suggestions, and accept or reject them. Accepted edits are ingested like
// manual edits. Thread-safe; operations on one session are serialized.
class SuggestionService {
public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  SuggestionService(ServiceConfig cfg, std::shared_ptr<ModelBackend> location_backend,
                    std::shared_ptr<ModelBackend> edit_backend, Clock clock = {});
  ~SuggestionService();

  SuggestionService(const SuggestionService &) = delete;
  SuggestionService &operator=(const SuggestionService &) = delete;

  std::string create_session(const SessionOptions &options = {});
  HistorySummary push_event(const std::string &session_id, const EditEvent &event);
  Suggestion suggest_location(const std::string &session_id);
  Suggestion suggest_edit(const std::string &session_id, int line);
  AcceptResult accept(const std::string &session_id, const std::string &suggestion_id);
  void reject(const std::string &session_id, const std::string &suggestion_id);
  [[nodiscard]] SessionView state(const std::string &session_id);

  [[nodiscard]] std::size_t session_count();
  // Drops sessions idle for longer than the TTL; returns how many.
  std::size_t evict_expired();
  [[nodiscard]] const ServiceConfig &config() const { return cfg_; }

private:
  struct Session;

  std::shared_ptr<Session> find(const std::string &session_id);
  std::string next_suggestion_id();

  ServiceConfig cfg_;
  std::shared_ptr<ModelBackend> location_backend_;
  std::shared_ptr<ModelBackend> edit_backend_;
  Clock clock_;
  std::mutex store_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_ = 0;
};

} // namespace nes
