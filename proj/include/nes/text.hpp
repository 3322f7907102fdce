#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nes {

// A file split on '\n'. A single trailing newline does not produce an extra
// empty line, so "a\n" and "a" have the same lines; the flag remembers which
// form the file had so that it can be written back unchanged.
struct SplitText {
  std::vector<std::string> lines;
  bool trailing_newline = false;
};

SplitText split_text(std::string_view text);
std::string join_text(const std::vector<std::string> &lines, bool trailing_newline);

inline std::vector<std::string> split_lines(std::string_view text) { return split_text(text).lines; }

// Joins with '\n' and no trailing newline.
std::string join_lines(const std::vector<std::string> &lines);

// Inverse of join_lines when the line count is known: splits on every '\n'
// (no trailing-newline folding). count == 0 always yields no lines.
std::vector<std::string> split_region(std::string_view region, std::size_t count);

// Line count as seen by a cursor: an empty file still has line 1.
std::size_t cursor_line_count(std::string_view text);

} // namespace nes
