#pragma once

#include <optional>
#include <string>

#include "nes/diff.hpp"
#include "nes/location.hpp"

namespace nes {

enum class SuggestionKind { location, edit };

std::string to_string(SuggestionKind kind);

// A model proposal: a location (jump target or keep) or a rewritten window.
struct Suggestion {
  SuggestionKind kind = SuggestionKind::location;
  std::string suggestion_id;
  std::optional<Location> location;
  std::optional<std::string> edit_window;
  // Edit suggestions: the window the model rewrote and the resulting change
  // in file coordinates.
  int window_start = 1;
  int window_end = 0;
  std::string window_pre;
  DeltaScript delta;
  std::string nes_diff;
  std::string raw;
  // Set when the model output could not be parsed and the suggestion fell
  // back to keep.
  bool degraded = false;
  double latency_ms = 0.0;
  double backend_ms = 0.0;
  double local_ms = 0.0;
};

} // namespace nes
