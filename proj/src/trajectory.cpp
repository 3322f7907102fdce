#include "nes/trajectory.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nes/error.hpp"
#include "nes/text.hpp"

namespace nes {

namespace {

// An empty range sits between two lines; for overlap purposes it touches both.
LineRange touch_span(const LineRange &r) {
  if (r.empty()) {
    return LineRange{r.start - 1, r.start};
  }
  return r;
}

} // namespace

TrajectoryState start_trajectory(std::string initial_text) {
  TrajectoryState s;
  s.initial_text = initial_text;
  s.base_text = initial_text;
  s.current_text = std::move(initial_text);
  s.started = true;
  return s;
}

bool overlap(const DeltaScript &a, const DeltaScript &b, const OverlapPolicy &policy) {
  const LineRange x = touch_span(a.post_range);
  const LineRange y = touch_span(b.pre_range);
  const int separation = std::max(y.start - x.end, x.start - y.end);
  return separation <= policy.gap;
}

DeltaScript merge_deltas(const DeltaScript &a, const DeltaScript &b, std::string_view base_text,
                         const OverlapPolicy &policy) {
  if (!overlap(a, b, policy)) {
    throw NotOverlapping("post range of the first delta does not touch the pre range of the second");
  }
  const std::string mid = apply_diff(base_text, a);
  const std::string final_text = apply_diff(mid, b);
  const auto base_lines = split_lines(base_text);
  const auto final_lines = split_lines(final_text);

  // Union window in the intermediate file; lines before it are shared by all
  // three files and lines after it only shift.
  const int lo = std::min(a.post_range.start, b.pre_range.start);
  const int hi_mid = std::max(a.post_range.end, b.pre_range.end);
  const int hi_base = hi_mid + (a.pre_range.size() - a.post_range.size());
  const int hi_final = hi_mid + (b.post_range.size() - b.pre_range.size());

  auto slice = [](const std::vector<std::string> &lines, int from, int to) {
    from = std::max(from, 1);
    to = std::min(to, static_cast<int>(lines.size()));
    if (to < from) {
      return std::span<const std::string>{};
    }
    return std::span<const std::string>(lines).subspan(from - 1, to - from + 1);
  };
  const int offset = std::max(lo, 1) - 1;
  return diff_lines(slice(base_lines, lo, hi_base), slice(final_lines, lo, hi_final), offset, offset);
}

void ingest(TrajectoryState &state, const EditEvent &event, const OverlapPolicy &policy) {
  if (!state.started) {
    state = start_trajectory(event.pre.text);
  }
  if (event.pre.text != state.current_text) {
    throw StreamDiscontinuity("event pre-text does not match the current file text");
  }
  if (event.pre.text == event.post.text) {
    return;
  }
  DeltaScript delta = compute_diff(event.pre.text, event.post.text);
  if (delta.empty()) {
    // Only the trailing newline changed.
    state.current_text = event.post.text;
    if (!state.active) {
      state.base_text = state.current_text;
    }
    return;
  }
  if (!state.active) {
    state.active = std::move(delta);
    state.base_text = event.pre.text;
  } else if (overlap(*state.active, delta, policy)) {
    DeltaScript merged = merge_deltas(*state.active, delta, state.base_text, policy);
    if (merged.empty()) {
      // The edits cancelled out.
      state.active.reset();
      state.base_text = event.post.text;
    } else {
      state.active = std::move(merged);
    }
  } else {
    state.history.push_back(std::move(*state.active));
    state.active = std::move(delta);
    state.base_text = event.pre.text;
  }
  state.current_text = event.post.text;
}

EditTrajectory finalize(TrajectoryState &state) {
  if (state.active && !state.active->empty()) {
    state.history.push_back(std::move(*state.active));
  }
  state.active.reset();
  state.base_text = state.current_text;
  return EditTrajectory{state.history};
}

std::vector<DeltaScript> history_with_active(const TrajectoryState &state) {
  std::vector<DeltaScript> out = state.history;
  if (state.active && !state.active->empty()) {
    out.push_back(*state.active);
  }
  return out;
}

std::vector<DeltaScript> windowed_history(const std::vector<DeltaScript> &deltas, const HistoryWindow &window) {
  const std::size_t k = static_cast<std::size_t>(std::max(window.max_edits, 1));
  const std::size_t skip = deltas.size() > k ? deltas.size() - k : 0;
  return {deltas.begin() + static_cast<std::ptrdiff_t>(skip), deltas.end()};
}

std::vector<DeltaScript> windowed_history(const EditTrajectory &trajectory, const HistoryWindow &window) {
  return windowed_history(trajectory.deltas, window);
}

std::string replay(std::string_view initial_text, const EditTrajectory &trajectory) {
  std::string text(initial_text);
  for (const auto &d : trajectory.deltas) {
    text = apply_diff(text, d);
  }
  return text;
}

std::vector<std::string> replay_states(std::string_view initial_text, const EditTrajectory &trajectory) {
  std::vector<std::string> out;
  out.reserve(trajectory.deltas.size() + 1);
  out.emplace_back(initial_text);
  for (const auto &d : trajectory.deltas) {
    out.push_back(apply_diff(out.back(), d));
  }
  return out;
}

std::vector<EditEvent> parse_event_log(std::string_view jsonl) {
  std::vector<EditEvent> events;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= jsonl.size()) {
    std::size_t nl = jsonl.find('\n', begin);
    if (nl == std::string_view::npos) {
      nl = jsonl.size();
    }
    const std::string_view row = jsonl.substr(begin, nl - begin);
    ++line_no;
    begin = nl + 1;
    if (row.find_first_not_of(" \t\r") == std::string_view::npos) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(row);
    } catch (const nlohmann::json::parse_error &e) {
      throw SchemaError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("pre") || !j.contains("post") || !j["pre"].is_string() ||
        !j["post"].is_string()) {
      throw SchemaError(line_no, "event needs string fields \"pre\" and \"post\"");
    }
    EditEvent e;
    e.pre.text = j["pre"].get<std::string>();
    e.post.text = j["post"].get<std::string>();
    if (j.contains("ts")) {
      if (!j["ts"].is_number_integer()) {
        throw SchemaError(line_no, "\"ts\" must be an integer");
      }
      e.timestamp_ms = j["ts"].get<std::int64_t>();
    }
    if (j.contains("cursor_line") && !j["cursor_line"].is_null()) {
      if (!j["cursor_line"].is_number_integer()) {
        throw SchemaError(line_no, "\"cursor_line\" must be an integer or null");
      }
      e.post.cursor_line = j["cursor_line"].get<int>();
    }
    if (j.contains("language") && j["language"].is_string()) {
      e.pre.language_tag = e.post.language_tag = j["language"].get<std::string>();
    }
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<EditEvent> read_event_log(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open event log " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_event_log(buf.str());
}

std::string format_event(const EditEvent &event) {
  nlohmann::json j;
  j["ts"] = event.timestamp_ms;
  j["pre"] = event.pre.text;
  j["post"] = event.post.text;
  j["cursor_line"] = event.post.cursor_line ? nlohmann::json(*event.post.cursor_line) : nlohmann::json(nullptr);
  if (!event.post.language_tag.empty()) {
    j["language"] = event.post.language_tag;
  }
  return j.dump();
}

} // namespace nes
