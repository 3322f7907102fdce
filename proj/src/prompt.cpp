#include "nes/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "nes/error.hpp"
#include "nes/hash.hpp"
#include "nes/text.hpp"

namespace nes {

namespace {

constexpr std::string_view kDiffFormatNote =
    "Edit history entries use the NES diff format. Every row is \"{line}{marker}| {content}\": "
    "marker \"-\" is a deleted line numbered in the file before that edit, \"+\" is an inserted "
    "line numbered in the file after it, and \" \" is an unchanged line.\n";

constexpr std::string_view kLocationInstructions =
    "You predict where a developer will edit next in the file they are working on.\n"
    "Use only the recent edit history and the current file; the developer gives no instruction.\n";

constexpr std::string_view kLocationAnswer =
    "Answer with exactly one line: \"LINE <n>\" to move to line n of the current file, or "
    "\"KEEP\" when the next edit cannot be inferred from the history.\n";

constexpr std::string_view kEditInstructions =
    "You write the next edit a developer is about to make in the file they are working on.\n"
    "Use only the recent edit history and the current file; the developer gives no instruction.\n";

constexpr std::string_view kEditAnswer =
    "Rewrite the editable region so that it contains the developer's next edit. Reply with only the "
    "rewritten region inside a single ``` fenced block. If no edit follows from the history, return "
    "the region unchanged.\n";

constexpr std::string_view kJudgeInstructions =
    "You audit code-edit trajectories.\n"
    "Decide whether the candidate edit is a logical, predictable continuation of the edit history "
    "(same task, same refactoring, or a direct consequence of the earlier edits), or an unrelated "
    "change that could not be inferred from the history.\n";

constexpr std::string_view kJudgeAnswer =
    "Answer on the first line with exactly one word, RELEVANT or IRRELEVANT, then give a one-line "
    "rationale.\n";

std::string system_text(PromptRole role) {
  std::string s;
  switch (role) {
  case PromptRole::location:
    s.append(kLocationInstructions).append(kDiffFormatNote).append(kLocationAnswer);
    break;
  case PromptRole::edit:
    s.append(kEditInstructions).append(kDiffFormatNote).append(kEditAnswer);
    break;
  case PromptRole::judge:
    s.append(kJudgeInstructions).append(kDiffFormatNote).append(kJudgeAnswer);
    break;
  }
  return s;
}

std::string history_block(const std::vector<std::string> &history, std::size_t first) {
  if (first >= history.size()) {
    return "EDIT HISTORY: (none)\n\n";
  }
  std::string out = "EDIT HISTORY:\n";
  for (std::size_t i = first; i < history.size(); ++i) {
    out += "<edit>\n";
    out += history[i];
    out += "\n</edit>\n";
  }
  out += "\n";
  return out;
}

std::string file_block(const CodeSnapshot &current) {
  std::string out = "CURRENT FILE";
  if (!current.language_tag.empty()) {
    out += " (" + current.language_tag + ")";
  }
  out += ":\n";
  const auto lines = split_lines(current.text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += std::to_string(i + 1);
    out += "| ";
    out += lines[i];
    out += "\n";
  }
  out += "\nCURSOR: ";
  out += current.cursor_line ? "line " + std::to_string(*current.cursor_line) : std::string("none");
  out += "\n";
  return out;
}

// Drops the oldest history entries until the prompt fits.
PromptBundle assemble(PromptRole role, const std::vector<std::string> &history, const PromptConfig &cfg,
                      const std::string &tail) {
  const std::size_t k = static_cast<std::size_t>(std::max(cfg.history_window, 1));
  std::size_t first = history.size() > k ? history.size() - k : 0;
  PromptBundle b;
  b.role = role;
  b.system = system_text(role);
  while (true) {
    const std::string head = history_block(history, first);
    if (b.system.size() + head.size() + tail.size() <= cfg.byte_budget) {
      b.user = head + tail;
      b.stable_prefix_len = b.system.size() + head.size();
      return b;
    }
    if (first >= history.size()) {
      throw ContextOverflow("prompt needs " + std::to_string(b.system.size() + head.size() + tail.size()) +
                            " bytes without history; budget is " + std::to_string(cfg.byte_budget));
    }
    ++first;
  }
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool iequals_prefix(std::string_view s, std::string_view word) {
  if (s.size() < word.size()) {
    return false;
  }
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(s[i])) != word[i]) {
      return false;
    }
  }
  return true;
}

std::vector<std::string_view> raw_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  while (b <= s.size()) {
    std::size_t nl = s.find('\n', b);
    if (nl == std::string_view::npos) {
      nl = s.size();
    }
    out.push_back(s.substr(b, nl - b));
    b = nl + 1;
  }
  return out;
}

bool is_fence(std::string_view line) {
  const auto t = line.substr(std::min(line.find_first_not_of(" \t"), line.size()));
  return t.substr(0, 3) == "```";
}

} // namespace

std::string to_string(PromptRole role) {
  switch (role) {
  case PromptRole::location:
    return "location";
  case PromptRole::edit:
    return "edit";
  case PromptRole::judge:
    return "judge";
  }
  return "unknown";
}

std::string PromptBundle::sha256() const {
  std::string key = system;
  key.push_back('\0');
  key += user;
  return sha256_hex(key);
}

PromptBundle build_location_prompt(const CodeSnapshot &current, const std::vector<std::string> &history,
                                   const PromptConfig &cfg) {
  return assemble(PromptRole::location, history, cfg, file_block(current));
}

PromptBundle build_edit_prompt(const CodeSnapshot &current, const std::vector<std::string> &history,
                               int window_start, std::string_view window_pre, const PromptConfig &cfg) {
  const auto lines = split_lines(current.text);
  const std::size_t count = static_cast<std::size_t>(std::count(window_pre.begin(), window_pre.end(), '\n')) + 1;
  const auto region = split_region(window_pre, count);
  if (window_start < 1 || static_cast<std::size_t>(window_start) - 1 + count > std::max<std::size_t>(lines.size(), 1)) {
    throw WindowMismatch("window [" + std::to_string(window_start) + ", +" + std::to_string(count) +
                         ") lies outside the file");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = static_cast<std::size_t>(window_start) - 1 + i;
    const std::string_view actual = idx < lines.size() ? std::string_view(lines[idx]) : std::string_view();
    if (actual != region[i]) {
      throw WindowMismatch("window line " + std::to_string(idx + 1) + " does not match the file");
    }
  }
  std::string tail = file_block(current);
  tail += "\nEDITABLE REGION (lines " + std::to_string(window_start) + "-" +
          std::to_string(window_start + static_cast<int>(count) - 1) + "):\n";
  tail.append(kRegionStart).append("\n");
  tail.append(window_pre).append("\n");
  tail.append(kRegionEnd).append("\n");
  return assemble(PromptRole::edit, history, cfg, tail);
}

PromptBundle build_judge_prompt(const std::vector<std::string> &history, std::string_view candidate_diff,
                                const PromptConfig &cfg) {
  std::string tail = "CANDIDATE EDIT:\n<edit>\n";
  tail.append(candidate_diff).append("\n</edit>\n");
  return assemble(PromptRole::judge, history, cfg, tail);
}

Location parse_location_output(std::string_view raw) {
  for (const auto line : raw_lines(raw)) {
    const auto t = trim(line);
    if (t.size() == 4 && iequals_prefix(t, "KEEP")) {
      return Location::keep();
    }
    if (t.size() > 4 && iequals_prefix(t, "LINE") && (t[4] == ' ' || t[4] == '\t')) {
      const auto num = trim(t.substr(4));
      int n = 0;
      const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
      if (ec == std::errc() && ptr == num.data() + num.size() && n >= 1) {
        return Location::at(n);
      }
    }
  }
  throw UnparseableOutput("no \"LINE <n>\" or \"KEEP\" line in model output");
}

std::string parse_edit_output(std::string_view raw, std::string_view /*window_pre*/) {
  if (trim(raw).empty()) {
    throw EmptyOutput("model returned no text");
  }
  const auto lines = raw_lines(raw);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_fence(lines[i])) {
      continue;
    }
    std::string body;
    bool first = true;
    for (std::size_t j = i + 1; j < lines.size() && !is_fence(lines[j]); ++j) {
      if (!first) {
        body.push_back('\n');
      }
      body.append(lines[j]);
      first = false;
    }
    return body;
  }
  std::size_t b = 0;
  std::size_t e = lines.size();
  while (b < e && trim(lines[b]).empty()) {
    ++b;
  }
  while (e > b && trim(lines[e - 1]).empty()) {
    --e;
  }
  std::string body;
  for (std::size_t i = b; i < e; ++i) {
    if (i != b) {
      body.push_back('\n');
    }
    body.append(lines[i]);
  }
  return body;
}

JudgeReply parse_judge_output(std::string_view raw) {
  for (const auto line : raw_lines(raw)) {
    const auto t = trim(line);
    if (t.empty()) {
      continue;
    }
    JudgeReply reply;
    std::size_t word = 0;
    if (iequals_prefix(t, "IRRELEVANT")) {
      reply.relevant = false;
      word = 10;
    } else if (iequals_prefix(t, "RELEVANT")) {
      reply.relevant = true;
      word = 8;
    } else {
      break;
    }
    if (word < t.size() && std::isalnum(static_cast<unsigned char>(t[word]))) {
      break;
    }
    reply.rationale = std::string(trim(raw.substr(static_cast<std::size_t>(t.data() - raw.data()) + word)));
    return reply;
  }
  throw UnparseableVerdict("judge reply does not start with RELEVANT or IRRELEVANT");
}

} // namespace nes
