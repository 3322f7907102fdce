#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "nes/location.hpp"

namespace nes {

// Edit Similarity is the character-level normalized Levenshtein similarity
//   ES(a, b) = 1 - lev(a, b) / max(|a|, |b|)
// over Unicode code points (invalid UTF-8 bytes count as one character each).
// Two empty strings score 1.0. Reported ES values in tables are ES * 100.
std::size_t levenshtein(std::string_view a, std::string_view b);
double edit_similarity(std::string_view generated, std::string_view ground_truth);

struct EditScore {
  double es = 0.0;
  bool exact = false;
  double reward = -1.0;
};

struct LocationScore {
  bool correct = false;
  double reward = -1.0;
};

// 1.0 on exact match, 0.5 * ES when ES > 0.5, otherwise -1.0.
EditScore reward_edit(std::string_view generated, std::string_view ground_truth);

// 1.0 when the locations are identical (keep matches keep), otherwise -1.0.
LocationScore reward_location(const Location &generated, const Location &ground_truth);

enum class Split { do_edit, keep };

std::string to_string(Split split);

// Per-split aggregate. For do samples of the edit task es/emr are set; keep
// samples and location-task samples carry acc. Values are percentages
// (es on the 0..100 scale) and unrounded.
struct Summary {
  std::size_t n = 0;
  std::optional<double> es;
  std::optional<double> emr;
  std::optional<double> acc;
};

// Edit task. `keep` counts a sample as correct when it was reproduced exactly.
Summary aggregate(std::span<const EditScore> scores, Split split);
// Location task, either split.
Summary aggregate(std::span<const LocationScore> scores);

// Round-half-up presentation helpers: "66.7", "90.00".
std::string format_fixed(double value, int decimals);

} // namespace nes
