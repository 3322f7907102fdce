#pragma once

// Shared helpers for the test binaries: independent reference
// implementations (oracles) and seeded generators.

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nes/backend.hpp"
#include "nes/dataset.hpp"
#include "nes/diff.hpp"
#include "nes/eval.hpp"
#include "nes/prompt.hpp"
#include "nes/text.hpp"
#include "nes/trajectory.hpp"

namespace nes::testing {

// Full-table LCS length over lines.
inline std::size_t lcs_oracle(const std::vector<std::string> &a, const std::vector<std::string> &b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

// Decodes UTF-8 loosely: a byte that does not start a valid sequence is its
// own character.
inline std::vector<std::uint32_t> code_points(std::string_view s) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xC2 && c <= 0xDF) {
      len = 2;
    } else if (c >= 0xE0 && c <= 0xEF) {
      len = 3;
    } else if (c >= 0xF0 && c <= 0xF4) {
      len = 4;
    }
    bool ok = len > 1 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      ok = (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    }
    if (!ok) {
      len = 1;
    }
    std::uint32_t cp = len == 1 ? c : c & (0xFF >> (len + 1));
    for (std::size_t k = 1; k < len; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

// Textbook (n+1)x(m+1) Levenshtein matrix.
inline std::size_t levenshtein_oracle(std::string_view a, std::string_view b) {
  const auto x = code_points(a);
  const auto y = code_points(b);
  std::vector<std::vector<std::size_t>> d(x.size() + 1, std::vector<std::size_t>(y.size() + 1));
  for (std::size_t i = 0; i <= x.size(); ++i) {
    d[i][0] = i;
  }
  for (std::size_t j = 0; j <= y.size(); ++j) {
    d[0][j] = j;
  }
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[x.size()][y.size()];
}

inline double es_oracle(std::string_view a, std::string_view b) {
  const std::size_t n = std::max(code_points(a).size(), code_points(b).size());
  if (n == 0) {
    return 1.0;
  }
  return 1.0 - static_cast<double>(levenshtein_oracle(a, b)) / static_cast<double>(n);
}

// Round-trip oracle for apply_diff. Lines must match. Bytes must match too
// whenever pre and post share a final-newline convention; the line model
// deliberately ignores a change that only adds or drops the final '\n'.
inline bool round_trips(std::string_view pre, std::string_view post, std::string_view got) {
  const auto p = split_text(pre);
  const auto q = split_text(post);
  const auto g = split_text(got);
  if (g.lines != q.lines) {
    return false;
  }
  const bool same_convention = p.trailing_newline == q.trailing_newline && !p.lines.empty();
  return !same_convention || got == post;
}

// Small vocabulary so that random files share many lines.
inline std::string random_line(std::mt19937_64 &rng) {
  static const std::vector<std::string> vocab = {
      "",       "}",           "{",           "  return x;", "int a = 1;", "  print(\"Say\")",
      "def f()", "# comment",  "x += 1",      "  y = x * 2", "end",        "  if (ok) {",
      "  }",    "import os",   "const b = 2;", "\tindent",   "naïve = 1",  "emoji = \"\xF0\x9F\x98\x80\""};
  return vocab[rng() % vocab.size()];
}

inline std::vector<std::string> random_lines(std::mt19937_64 &rng, std::size_t max_lines) {
  std::vector<std::string> out(rng() % (max_lines + 1));
  for (auto &l : out) {
    l = random_line(rng);
  }
  return out;
}

// Applies a few random line edits (replace, insert, delete) to `lines`.
inline std::vector<std::string> mutate(std::mt19937_64 &rng, std::vector<std::string> lines, int edits,
                                       std::size_t max_lines) {
  for (int e = 0; e < edits; ++e) {
    const auto op = rng() % 3;
    if (op == 0 && !lines.empty()) {
      lines[rng() % lines.size()] = random_line(rng);
    } else if (op == 1 && lines.size() < max_lines) {
      lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(rng() % (lines.size() + 1)), random_line(rng));
    } else if (!lines.empty()) {
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(rng() % lines.size()));
    }
  }
  return lines;
}

// Edits a small contiguous block near `anchor` (local edits give the
// detector something to merge).
inline std::vector<std::string> local_edit(std::mt19937_64 &rng, std::vector<std::string> lines, std::size_t anchor) {
  const std::size_t at = lines.empty() ? 0 : std::min(anchor, lines.size() - 1);
  switch (rng() % 4) {
  case 0:
    if (!lines.empty()) {
      lines[at] = random_line(rng) + std::to_string(rng() % 100);
    }
    break;
  case 1:
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), random_line(rng));
    break;
  case 2:
    if (!lines.empty()) {
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(at));
    }
    break;
  default:
    break; // no-op event
  }
  return lines;
}

struct Stream {
  std::string initial;
  std::vector<EditEvent> events;
  std::string final_text;
  std::size_t nonempty = 0;
};

// A random session: up to max_events events on a file of up to max_lines
// lines. Anchors drift locally and occasionally jump, so streams mix merges
// and finalizations.
inline Stream random_stream(std::mt19937_64 &rng, std::size_t max_events, std::size_t max_lines) {
  Stream s;
  auto lines = random_lines(rng, max_lines);
  const bool trailing = rng() % 2 == 0;
  s.initial = join_text(lines, trailing);
  std::string text = s.initial;
  std::size_t anchor = lines.empty() ? 0 : rng() % lines.size();
  const std::size_t n_events = 1 + rng() % max_events;
  for (std::size_t i = 0; i < n_events; ++i) {
    if (rng() % 4 == 0) {
      anchor = lines.empty() ? 0 : rng() % (lines.size() + 1);
    } else if (rng() % 2 == 0) {
      anchor += 1;
    }
    auto next = local_edit(rng, lines, anchor);
    if (next.size() > max_lines) {
      next = lines;
    }
    const std::string post = join_text(next, trailing);
    s.nonempty += split_lines(post) != split_lines(text) ? 1 : 0;
    s.events.push_back(EditEvent{CodeSnapshot{text, std::nullopt, "text"}, CodeSnapshot{post, std::nullopt, "text"},
                                 static_cast<std::int64_t>(i) * 100});
    text = post;
    lines = std::move(next);
  }
  s.final_text = text;
  return s;
}

inline std::string lines_of(std::initializer_list<std::string_view> lines) {
  std::string out;
  for (auto l : lines) {
    out.append(l);
    out.push_back('\n');
  }
  return out;
}

// A recorded session of single-line edits scattered over a numbered file.
// Edits whose text contains "unrelated" are what the stub judge below calls
// irrelevant; `unrelated_share` is the probability of such an edit.
inline SessionRecording synthetic_session(std::mt19937_64 &rng, std::size_t n_edits, double unrelated_share,
                                          const std::string &language) {
  std::vector<std::string> lines;
  for (int i = 1; i <= 80; ++i) {
    lines.push_back("value_" + std::to_string(i) + " = " + std::to_string(i));
  }
  TrajectoryState state = start_trajectory(join_text(lines, true));
  std::size_t line = rng() % lines.size();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t k = 0; k < n_edits; ++k) {
    line = (line + 3 + rng() % 20) % lines.size();
    const bool unrelated = coin(rng) < unrelated_share;
    auto next = lines;
    next[line] = (unrelated ? "unrelated_" : "renamed_") + std::to_string(k) + " = " + std::to_string(rng() % 1000);
    const std::string pre = join_text(lines, true);
    const std::string post = join_text(next, true);
    ingest(state, EditEvent{CodeSnapshot{pre, static_cast<int>(line) + 1, language},
                            CodeSnapshot{post, static_cast<int>(line) + 1, language}, static_cast<std::int64_t>(k)});
    lines = std::move(next);
  }
  SessionRecording rec;
  rec.initial_text = state.initial_text;
  rec.language = language;
  rec.trajectory = finalize(state);
  return rec;
}

// Judge that calls a candidate irrelevant iff it introduces "unrelated".
inline FunctionBackend stub_judge() {
  return FunctionBackend(
      [](const PromptBundle &p) {
        const auto at = p.user.find("CANDIDATE EDIT:");
        const bool unrelated = p.user.find("+| unrelated", at) != std::string::npos;
        return std::string(unrelated ? "IRRELEVANT\nunrelated change" : "RELEVANT\ncontinues the rename");
      },
      "stub-judge");
}

// Exactly n labeled samples (keep share about 20%) across three languages.
inline std::vector<EditInstance> synthetic_dataset(std::size_t n, TaskKind task, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  static const std::vector<std::string> langs = {"Java", "Python", "TypeScript"};
  auto judge = stub_judge();
  DatasetConfig cfg;
  cfg.task = task;
  cfg.seed = seed;
  cfg.history_window = 9;
  std::vector<EditInstance> out;
  for (std::size_t round = 0; out.size() < n; ++round) {
    std::vector<SessionRecording> sessions;
    for (std::size_t i = 0; i < 6; ++i) {
      sessions.push_back(synthetic_session(rng, 12, 0.35, langs[(round * 6 + i) % langs.size()]));
    }
    for (auto &s : build_dataset(sessions, cfg, &judge).samples) {
      out.push_back(std::move(s));
    }
  }
  out.resize(n);
  return out;
}

// The ground-truth answer a perfect model would give for a sample.
inline std::string oracle_answer(const EditInstance &s, TaskKind task) {
  if (task == TaskKind::location) {
    return s.gt_location.is_keep() ? "KEEP" : "LINE " + std::to_string(s.gt_location.line());
  }
  return "```\n" + s.gt_edit + "\n```";
}

// A scripted table answering every sample's prompt (for each history
// window in `windows`) with the ground truth.
inline std::vector<ScriptedResponse> oracle_table(const std::vector<EditInstance> &samples, TaskKind task,
                                                  const std::vector<std::optional<int>> &windows) {
  std::vector<ScriptedResponse> table;
  for (const auto &k : windows) {
    EvalOptions opts;
    opts.task = task;
    opts.history_window = k;
    for (const auto &s : samples) {
      table.push_back(ScriptedResponse{eval_prompt(s, opts).sha256(), oracle_answer(s, task), 0});
    }
  }
  return table;
}

// A model that never edits: KEEP for locations, the region echoed verbatim
// for edits.
inline FunctionBackend never_edit() {
  return FunctionBackend(
      [](const PromptBundle &p) {
        if (p.role == PromptRole::location) {
          return std::string("KEEP");
        }
        const std::string open = std::string(kRegionStart) + "\n";
        const auto a = p.user.find(open) + open.size();
        const auto b = p.user.find("\n" + std::string(kRegionEnd), a);
        return "```\n" + p.user.substr(a, b - a) + "\n```";
      },
      "never-edit");
}

// The three-button refactor session: an accessibility prop is added to a
// shared interface and then threaded through both button components and
// their call sites.
namespace scenario {

inline std::vector<std::string> before_seed() {
  return {
      "import React from 'react';",
      "",
      "interface ButtonProps {",
      "  label: string;",
      "}",
      "",
      "export const PrimaryButton = ({ label }: ButtonProps) =>",
      "  <button className=\"btn-primary\">{label}</button>;",
      "",
      "export const SecondaryButton = ({ label }: ButtonProps) =>",
      "  <button className=\"btn-secondary\">{label}</button>;",
      "",
      "export const UserProfile = () => {",
      "  const name = useUserName();",
      "  const save = useSave();",
      "  return (",
      "    <section className=\"profile\">",
      "      <h2>{name}</h2>",
      "      <form onSubmit={save}>",
      "        <input name=\"email\" />",
      "        <PrimaryButton label=\"Save\" />",
      "      </form>",
      "      <SecondaryButton label=\"Cancel\" />",
      "    </section>",
      "  );",
      "};",
  };
}

// After the developer's own edit: line 5 declares the new prop.
inline std::vector<std::string> after_seed() {
  auto l = before_seed();
  l.insert(l.begin() + 4, "  'aria-label': string;");
  return l;
}

inline std::vector<std::string> after_primary() {
  auto l = after_seed();
  l[7] = "export const PrimaryButton = ({ label, 'aria-label': ariaLabel }: ButtonProps) =>";
  l[8] = "  <button className=\"btn-primary\" aria-label={ariaLabel}>{label}</button>;";
  return l;
}

inline std::vector<std::string> after_secondary() {
  auto l = after_primary();
  l[10] = "export const SecondaryButton = ({ label, 'aria-label': ariaLabel }: ButtonProps) =>";
  l[11] = "  <button className=\"btn-secondary\" aria-label={ariaLabel}>{label}</button>;";
  return l;
}

inline std::vector<std::string> after_call_sites() {
  auto l = after_secondary();
  l[21] = "        <PrimaryButton label=\"Save\" aria-label=\"Save profile\" />";
  l[23] = "      <SecondaryButton label=\"Cancel\" aria-label=\"Discard changes\" />";
  return l;
}

inline std::string text(const std::vector<std::string> &lines) { return join_text(lines, true); }

// Lines [line - radius, line + radius] clipped to the file, joined.
inline std::string window(const std::vector<std::string> &lines, int line, int radius) {
  const int n = static_cast<int>(lines.size());
  const int a = std::max(1, line - radius);
  const int b = std::min(n, line + radius);
  std::vector<std::string> w(lines.begin() + (a - 1), lines.begin() + b);
  return join_lines(w);
}

} // namespace scenario

} // namespace nes::testing

namespace nes {

inline void PrintTo(const DeltaScript &d, std::ostream *os) {
  *os << "pre[" << d.pre_range.start << "," << d.pre_range.end << "] post[" << d.post_range.start << ","
      << d.post_range.end << "]\n"
      << render_nes_diff(d);
}

} // namespace nes
