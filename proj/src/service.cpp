#include "nes/service.hpp"

#include <algorithm>
#include <iostream>
#include <random>
#include <stdexcept>

#include "nes/error.hpp"
#include "nes/hash.hpp"
#include "nes/text.hpp"

namespace nes {

std::string to_string(SuggestionKind kind) { return kind == SuggestionKind::location ? "location" : "edit"; }

void ServiceConfig::validate() const {
  if (history_window < 1) {
    throw std::invalid_argument("history window must be at least 1");
  }
  if (editable_window_radius < 1) {
    throw std::invalid_argument("editable window radius must be at least 1");
  }
  if (session_ttl.count() <= 0) {
    throw std::invalid_argument("session TTL must be positive");
  }
  if (max_sessions == 0) {
    throw std::invalid_argument("max sessions must be positive");
  }
  if (!(latency_budget_ms > 0.0) || prompt_byte_budget == 0) {
    throw std::invalid_argument("budgets must be positive");
  }
}

struct SuggestionService::Session {
  std::mutex mutex;
  std::string id;
  TrajectoryState state;
  int history_window = 3;
  double latency_budget_ms = 450.0;
  std::size_t prompt_byte_budget = 24 * 1024;
  std::string language;
  std::optional<int> cursor_line;
  std::optional<Suggestion> pending;
  // The pending suggestion's region was touched by a later event.
  bool pending_stale = false;
  std::string pending_window_hash;
  std::vector<int> jumps;
  std::size_t rejections = 0;
  std::chrono::steady_clock::time_point created_at;
  std::chrono::steady_clock::time_point last_seen;

  [[nodiscard]] HistorySummary summary() const {
    return HistorySummary{state.history.size(), state.active.has_value(), sha256_hex(state.current_text)};
  }

  [[nodiscard]] PromptConfig prompt_config() const { return PromptConfig{history_window, prompt_byte_budget}; }

  [[nodiscard]] std::vector<std::string> rendered_history() const {
    std::vector<std::string> out;
    for (const auto &d : windowed_history(history_with_active(state), HistoryWindow{history_window})) {
      out.push_back(render_nes_diff(d));
    }
    return out;
  }
};

namespace {

using ms = std::chrono::duration<double, std::milli>;

std::string window_text(const std::vector<std::string> &lines, int start, int end) {
  std::vector<std::string> slice;
  for (int l = start; l <= end; ++l) {
    slice.push_back(lines[l - 1]);
  }
  return join_lines(slice);
}

bool touches(const LineRange &changed, int lo, int hi) {
  const int a = changed.empty() ? changed.start - 1 : changed.start;
  const int b = changed.empty() ? changed.start : changed.end;
  return a <= hi && b >= lo;
}

} // namespace

SuggestionService::SuggestionService(ServiceConfig cfg, std::shared_ptr<ModelBackend> location_backend,
                                     std::shared_ptr<ModelBackend> edit_backend, Clock clock)
    : cfg_(std::move(cfg)), location_backend_(std::move(location_backend)), edit_backend_(std::move(edit_backend)),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::steady_clock::now(); })) {
  cfg_.validate();
  if (!location_backend_ || !edit_backend_) {
    throw std::invalid_argument("both location and edit backends are required");
  }
  std::random_device rd;
  id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

SuggestionService::~SuggestionService() = default;

std::size_t SuggestionService::evict_expired() {
  std::lock_guard lock(store_mutex_);
  const auto now = clock_();
  return std::erase_if(sessions_, [&](const auto &kv) { return now - kv.second->last_seen > cfg_.session_ttl; });
}

std::size_t SuggestionService::session_count() {
  std::lock_guard lock(store_mutex_);
  return sessions_.size();
}

std::string SuggestionService::create_session(const SessionOptions &options) {
  if (options.history_window && *options.history_window < 1) {
    throw std::invalid_argument("history window must be at least 1");
  }
  if ((options.latency_budget_ms && !(*options.latency_budget_ms > 0.0)) ||
      (options.prompt_byte_budget && *options.prompt_byte_budget == 0)) {
    throw std::invalid_argument("budgets must be positive");
  }
  evict_expired();
  auto session = std::make_shared<Session>();
  session->history_window = options.history_window.value_or(cfg_.history_window);
  session->latency_budget_ms = options.latency_budget_ms.value_or(cfg_.latency_budget_ms);
  session->prompt_byte_budget = options.prompt_byte_budget.value_or(cfg_.prompt_byte_budget);
  session->language = options.language;
  if (options.initial_text) {
    session->state = start_trajectory(*options.initial_text);
  }
  std::lock_guard lock(store_mutex_);
  if (sessions_.size() >= cfg_.max_sessions) {
    throw CapacityExceeded("session limit of " + std::to_string(cfg_.max_sessions) + " reached");
  }
  session->id = sha256_hex(std::to_string(id_salt_) + ":" + std::to_string(++id_counter_)).substr(0, 24);
  session->created_at = session->last_seen = clock_();
  sessions_.emplace(session->id, session);
  return session->id;
}

std::shared_ptr<SuggestionService::Session> SuggestionService::find(const std::string &session_id) {
  std::lock_guard lock(store_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw UnknownSession("no session " + session_id);
  }
  const auto now = clock_();
  if (now - it->second->last_seen > cfg_.session_ttl) {
    sessions_.erase(it);
    throw UnknownSession("session " + session_id + " expired");
  }
  it->second->last_seen = std::max(it->second->last_seen, now);
  return it->second;
}

std::string SuggestionService::next_suggestion_id() {
  std::lock_guard lock(store_mutex_);
  return "sug-" + std::to_string(++id_counter_);
}

HistorySummary SuggestionService::push_event(const std::string &session_id, const EditEvent &event) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const bool fresh = !s->state.started;
  ingest(s->state, event, cfg_.overlap);
  if (event.post.cursor_line) {
    s->cursor_line = event.post.cursor_line;
  }
  if (s->language.empty() && !event.post.language_tag.empty()) {
    s->language = event.post.language_tag;
  }
  if (s->pending && !fresh && event.pre.text != event.post.text) {
    const DeltaScript change = compute_diff(event.pre.text, event.post.text);
    const Suggestion &p = *s->pending;
    if (p.kind == SuggestionKind::edit) {
      if (touches(change.pre_range, p.window_start, std::max(p.window_end, p.window_start))) {
        s->pending_stale = true;
      }
    } else if (p.location && !p.location->is_keep() &&
               touches(change.pre_range, p.location->line(), p.location->line())) {
      s->pending_stale = true;
    }
  }
  return s->summary();
}

Suggestion SuggestionService::suggest_location(const std::string &session_id) {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const CodeSnapshot snapshot{s->state.current_text, s->cursor_line, s->language};
  const PromptBundle prompt = build_location_prompt(snapshot, s->rendered_history(), s->prompt_config());

  const auto b0 = std::chrono::steady_clock::now();
  std::string raw = location_backend_->send(prompt);
  const auto b1 = std::chrono::steady_clock::now();

  Suggestion sug;
  sug.kind = SuggestionKind::location;
  try {
    sug.location = parse_location_output(raw);
  } catch (const UnparseableOutput &) {
    std::clog << "warning: unparseable location output, falling back to keep\n";
    sug.location = Location::keep();
    sug.degraded = true;
  }
  sug.raw = std::move(raw);
  sug.suggestion_id = next_suggestion_id();
  s->pending = sug;
  s->pending_stale = false;
  s->pending_window_hash.clear();

  const auto t1 = std::chrono::steady_clock::now();
  s->pending->backend_ms = sug.backend_ms = ms(b1 - b0).count();
  s->pending->latency_ms = sug.latency_ms = ms(t1 - t0).count();
  s->pending->local_ms = sug.local_ms = sug.latency_ms - sug.backend_ms;
  return sug;
}

Suggestion SuggestionService::suggest_edit(const std::string &session_id, int line) {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const auto lines = split_lines(s->state.current_text);
  const int n = static_cast<int>(lines.size());
  const int max_line = std::max(n, 1);
  if (line < 1 || line > max_line) {
    throw LineOutOfRange("line " + std::to_string(line) + " outside [1, " + std::to_string(max_line) + "]");
  }
  const int radius = cfg_.editable_window_radius;
  const int ws = std::max(1, line - radius);
  const int we = std::min(n, line + radius);
  const std::string window_pre = window_text(lines, ws, we);
  const CodeSnapshot snapshot{s->state.current_text, line, s->language};
  const PromptBundle prompt = build_edit_prompt(snapshot, s->rendered_history(), ws, window_pre, s->prompt_config());

  const auto b0 = std::chrono::steady_clock::now();
  std::string raw = edit_backend_->send(prompt);
  const auto b1 = std::chrono::steady_clock::now();

  Suggestion sug;
  sug.kind = SuggestionKind::edit;
  sug.edit_window = parse_edit_output(raw, window_pre);
  sug.window_start = ws;
  sug.window_end = we;
  sug.window_pre = window_pre;
  std::vector<std::string> pre_lines(lines.begin() + (ws - 1), lines.begin() + std::max(we, ws - 1));
  const auto post_lines = split_region(
      *sug.edit_window, static_cast<std::size_t>(std::count(sug.edit_window->begin(), sug.edit_window->end(), '\n')) + 1);
  sug.delta = diff_lines(pre_lines, post_lines, ws - 1, ws - 1);
  sug.nes_diff = render_nes_diff(sug.delta);
  sug.raw = std::move(raw);
  sug.suggestion_id = next_suggestion_id();

  const auto t1 = std::chrono::steady_clock::now();
  sug.backend_ms = ms(b1 - b0).count();
  sug.latency_ms = ms(t1 - t0).count();
  sug.local_ms = sug.latency_ms - sug.backend_ms;
  s->pending = sug;
  s->pending_stale = false;
  s->pending_window_hash = sha256_hex(window_pre);
  return sug;
}

AcceptResult SuggestionService::accept(const std::string &session_id, const std::string &suggestion_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (!s->pending || s->pending->suggestion_id != suggestion_id) {
    throw NoPending("no pending suggestion " + suggestion_id);
  }
  Suggestion sug = std::move(*s->pending);
  s->pending.reset();
  if (s->pending_stale) {
    throw StaleSuggestion("the file changed inside the suggestion's region since it was issued");
  }

  AcceptResult result;
  result.suggestion_id = sug.suggestion_id;
  result.kind = sug.kind;
  if (sug.kind == SuggestionKind::location) {
    if (sug.location && !sug.location->is_keep()) {
      const int max_line = static_cast<int>(cursor_line_count(s->state.current_text));
      result.jump_line = std::min(sug.location->line(), max_line);
      s->cursor_line = result.jump_line;
      s->jumps.push_back(*result.jump_line);
    }
    result.summary = s->summary();
    return result;
  }

  const auto lines = split_lines(s->state.current_text);
  const int n = static_cast<int>(lines.size());
  if (sug.window_end > n || sha256_hex(window_text(lines, sug.window_start, sug.window_end)) != s->pending_window_hash) {
    throw StaleSuggestion("the suggestion's window no longer matches the file");
  }
  if (!sug.delta.empty()) {
    EditEvent event;
    event.pre = CodeSnapshot{s->state.current_text, s->cursor_line, s->language};
    event.post = CodeSnapshot{apply_diff(s->state.current_text, sug.delta), s->cursor_line, s->language};
    ingest(s->state, event, cfg_.overlap);
    result.text_changed = true;
  }
  result.summary = s->summary();
  return result;
}

void SuggestionService::reject(const std::string &session_id, const std::string &suggestion_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (!s->pending || s->pending->suggestion_id != suggestion_id) {
    throw NoPending("no pending suggestion " + suggestion_id);
  }
  s->pending.reset();
  s->pending_stale = false;
  ++s->rejections;
  std::clog << "info: session " << session_id << " rejected " << suggestion_id << "\n";
}

SessionView SuggestionService::state(const std::string &session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  SessionView v;
  v.session_id = s->id;
  v.history_window = s->history_window;
  v.latency_budget_ms = s->latency_budget_ms;
  v.language = s->language;
  v.current_text = s->state.current_text;
  v.text_sha256 = sha256_hex(s->state.current_text);
  v.cursor_line = s->cursor_line;
  for (const auto &d : s->state.history) {
    v.history.push_back(render_nes_diff(d));
  }
  if (s->state.active) {
    v.active = render_nes_diff(*s->state.active);
  }
  v.pending = s->pending;
  v.jumps = s->jumps;
  v.rejections = s->rejections;
  return v;
}

} // namespace nes
