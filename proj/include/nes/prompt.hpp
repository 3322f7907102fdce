#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nes/diff.hpp"
#include "nes/location.hpp"

namespace nes {

// Version tag of the prompt layout below. Datasets record it so that serving
// and offline evaluation agree on the template.
inline constexpr std::string_view kPromptTemplateVersion = "nes-prompt-v1";
inline constexpr std::string_view kJudgeRubricVersion = "nes-judge-v1";

inline constexpr std::string_view kRegionStart = "<|region_start|>";
inline constexpr std::string_view kRegionEnd = "<|region_end|>";

enum class PromptRole { location, edit, judge };

std::string to_string(PromptRole role);

struct PromptBundle {
  std::string system;
  std::string user;
  PromptRole role = PromptRole::location;
  // Bytes of system + user that stay identical while only the file, cursor
  // or region change: the system text plus the edit-history block.
  std::size_t stable_prefix_len = 0;

  // system + user, the byte stream the stable prefix refers to.
  [[nodiscard]] std::string concatenated() const { return system + user; }
  // Key used by scripted mock tables: SHA-256 of system, a NUL byte, user.
  [[nodiscard]] std::string sha256() const;

  bool operator==(const PromptBundle &) const = default;
};

struct PromptConfig {
  int history_window = 3;
  std::size_t byte_budget = 24 * 1024;
};

// History entries are NES diff strings, oldest first. Layout:
//   instructions (system) -> EDIT HISTORY -> CURRENT FILE (numbered) -> CURSOR
// When the prompt exceeds the byte budget the oldest history entries are
// dropped; ContextOverflow is thrown if the file alone does not fit.
PromptBundle build_location_prompt(const CodeSnapshot &current, const std::vector<std::string> &history,
                                   const PromptConfig &cfg = {});

// As above plus an editable-region section between kRegionStart/kRegionEnd.
// window_pre must equal the file lines starting at window_start (WindowMismatch).
PromptBundle build_edit_prompt(const CodeSnapshot &current, const std::vector<std::string> &history,
                               int window_start, std::string_view window_pre, const PromptConfig &cfg = {});

// Relevance rubric: does the candidate edit follow from the history?
PromptBundle build_judge_prompt(const std::vector<std::string> &history, std::string_view candidate_diff,
                                const PromptConfig &cfg = {});

// First line of the form "LINE <n>" or "KEEP" (case-insensitive, surrounding
// whitespace ignored). Throws UnparseableOutput.
Location parse_location_output(std::string_view raw);

// Contents of the first ``` fenced block, or the whole output with leading and
// trailing blank lines removed when there is no fence. Throws EmptyOutput
// when the output is blank.
std::string parse_edit_output(std::string_view raw, std::string_view window_pre = {});

struct JudgeReply {
  bool relevant = false;
  std::string rationale;
};

// First non-blank line must start with RELEVANT or IRRELEVANT
// (case-insensitive). Throws UnparseableVerdict.
JudgeReply parse_judge_output(std::string_view raw);

} // namespace nes
