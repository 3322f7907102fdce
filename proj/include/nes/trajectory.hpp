#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nes/diff.hpp"

namespace nes {

struct EditEvent {
  CodeSnapshot pre;
  CodeSnapshot post;
  std::int64_t timestamp_ms = 0;
};

// Finalized deltas, oldest first. Each delta is expressed in the coordinates
// of the file as it was when that delta began, so applying them in order to
// the initial text replays the session.
struct EditTrajectory {
  std::vector<DeltaScript> deltas;

  bool operator==(const EditTrajectory &) const = default;
};

struct HistoryWindow {
  int max_edits = 3;
};

struct OverlapPolicy {
  // Ranges separated by at most this many line boundaries count as touching.
  // 0 means the ranges must share a line.
  int gap = 0;
};

struct TrajectoryState {
  std::optional<DeltaScript> active;
  std::vector<DeltaScript> history;
  std::string initial_text;
  // File text at the start of the active delta (equals current_text when
  // there is no active delta).
  std::string base_text;
  std::string current_text;
  bool started = false;

  bool operator==(const TrajectoryState &) const = default;
};

// A state whose file starts out as `initial_text`. A default-constructed
// state instead adopts the pre-text of the first event it sees.
TrajectoryState start_trajectory(std::string initial_text);

// Whether b (computed against the file produced by a) touches a's region.
bool overlap(const DeltaScript &a, const DeltaScript &b, const OverlapPolicy &policy = {});

// Composes a then b into one delta against base_text by re-diffing the union
// of both regions.
DeltaScript merge_deltas(const DeltaScript &a, const DeltaScript &b, std::string_view base_text,
                         const OverlapPolicy &policy = {});

// One step of the incremental detector: adopt, merge, or finalize-and-adopt.
void ingest(TrajectoryState &state, const EditEvent &event, const OverlapPolicy &policy = {});

inline TrajectoryState ingest_event(TrajectoryState state, const EditEvent &event,
                                    const OverlapPolicy &policy = {}) {
  ingest(state, event, policy);
  return state;
}

// Flushes the active delta (if non-empty) into history and returns the
// history. The state stays usable.
EditTrajectory finalize(TrajectoryState &state);

// History plus the active delta as the most recent entry, without flushing.
std::vector<DeltaScript> history_with_active(const TrajectoryState &state);

// The last min(K, n) entries, oldest first.
std::vector<DeltaScript> windowed_history(const EditTrajectory &trajectory, const HistoryWindow &window);
std::vector<DeltaScript> windowed_history(const std::vector<DeltaScript> &deltas, const HistoryWindow &window);

// Applies every delta in order. Throws RegionMismatch on misaligned input.
std::string replay(std::string_view initial_text, const EditTrajectory &trajectory);

// File texts before the first delta, after each delta: n + 1 entries.
std::vector<std::string> replay_states(std::string_view initial_text, const EditTrajectory &trajectory);

// Event log: one JSON object per line, {"ts", "pre", "post", "cursor_line"}.
// "language" is accepted as an optional extra. Throws SchemaError / IoError.
std::vector<EditEvent> parse_event_log(std::string_view jsonl);
std::vector<EditEvent> read_event_log(const std::string &path);
std::string format_event(const EditEvent &event);

} // namespace nes
