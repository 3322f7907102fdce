#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nes {

enum class HunkKind { insert, remove, context };

// One row of a line diff. Delete and context rows are numbered in the
// pre-edit file, insert and context rows in the post-edit file.
struct LineHunk {
  HunkKind kind = HunkKind::context;
  std::optional<int> pre_line;
  std::optional<int> post_line;
  std::string content;

  static LineHunk inserted(int post_line, std::string content);
  static LineHunk removed(int pre_line, std::string content);
  static LineHunk unchanged(int pre_line, int post_line, std::string content);

  bool operator==(const LineHunk &) const = default;
};

// Inclusive 1-based line range. An empty range (end == start - 1) still
// carries a position: the line before which content would be inserted.
struct LineRange {
  int start = 1;
  int end = 0;

  [[nodiscard]] bool empty() const noexcept { return end < start; }
  [[nodiscard]] int size() const noexcept { return empty() ? 0 : end - start + 1; }

  bool operator==(const LineRange &) const = default;
};

// A single contiguous edit region: the hunks plus the pre/post line ranges
// they cover and the text of those ranges.
struct DeltaScript {
  std::vector<LineHunk> hunks;
  LineRange pre_range;
  LineRange post_range;
  std::string pre_region;
  std::string post_region;

  // True when the script changes nothing.
  [[nodiscard]] bool empty() const noexcept;
  [[nodiscard]] std::size_t change_count() const noexcept;

  bool operator==(const DeltaScript &) const = default;
};

struct CodeSnapshot {
  std::string text;
  std::optional<int> cursor_line;
  std::string language_tag;

  // Throws LineOutOfRange when the cursor lies outside the file.
  void validate() const;

  bool operator==(const CodeSnapshot &) const = default;
};

// Minimal line-level edit script between two texts. Only the region between
// the first and last changed line is covered; unchanged lines inside it are
// emitted as context rows, none outside it.
DeltaScript compute_diff(std::string_view pre, std::string_view post);

// Same, over already-split lines. The offsets are the number of file lines
// preceding each slice and shift every emitted line number.
DeltaScript diff_lines(std::span<const std::string> pre, std::span<const std::string> post,
                       int pre_offset = 0, int post_offset = 0);

// Applies a delta at its recorded position. The pre-text at pre_range must
// equal pre_region exactly, otherwise RegionMismatch is thrown. The result
// keeps the trailing-newline convention of `pre`.
std::string apply_diff(std::string_view pre, const DeltaScript &delta);

// Rebuilds ranges and region texts from a hunk list. Throws NumberingError
// when line numbers are not consecutive within their own numbering.
DeltaScript delta_from_hunks(std::vector<LineHunk> hunks);

// `{n}{-|+| }| {content}` per hunk, joined by '\n', no trailing newline.
std::string render_nes_diff(const DeltaScript &delta);

// Inverse of render_nes_diff. Blank lines are skipped.
DeltaScript parse_nes_diff(std::string_view text);

} // namespace nes
