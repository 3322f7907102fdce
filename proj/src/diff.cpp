#include "nes/diff.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>

#include "nes/error.hpp"
#include "nes/text.hpp"

namespace nes {

LineHunk LineHunk::inserted(int post_line, std::string content) {
  return LineHunk{HunkKind::insert, std::nullopt, post_line, std::move(content)};
}

LineHunk LineHunk::removed(int pre_line, std::string content) {
  return LineHunk{HunkKind::remove, pre_line, std::nullopt, std::move(content)};
}

LineHunk LineHunk::unchanged(int pre_line, int post_line, std::string content) {
  return LineHunk{HunkKind::context, pre_line, post_line, std::move(content)};
}

bool DeltaScript::empty() const noexcept { return change_count() == 0; }

std::size_t DeltaScript::change_count() const noexcept {
  std::size_t n = 0;
  for (const auto &h : hunks) {
    if (h.kind != HunkKind::context) {
      ++n;
    }
  }
  return n;
}

void CodeSnapshot::validate() const {
  if (!cursor_line) {
    return;
  }
  const auto count = static_cast<int>(cursor_line_count(text));
  if (*cursor_line < 1 || *cursor_line > count) {
    throw LineOutOfRange("cursor line " + std::to_string(*cursor_line) + " outside [1, " +
                         std::to_string(count) + "]");
  }
}

namespace {

// Linear-space Myers bisection over interned line ids. Marks every line of
// `a` that is deleted and every line of `b` that is inserted.
class LineMatcher {
public:
  LineMatcher(const std::vector<int> &a, const std::vector<int> &b)
      : a_(a), b_(b), removed_(a.size(), false), added_(b.size(), false) {}

  void run() { compare(0, static_cast<int>(a_.size()), 0, static_cast<int>(b_.size())); }

  [[nodiscard]] const std::vector<bool> &removed() const { return removed_; }
  [[nodiscard]] const std::vector<bool> &added() const { return added_; }

private:
  void compare(int xoff, int xlim, int yoff, int ylim) {
    while (xoff < xlim && yoff < ylim && a_[xoff] == b_[yoff]) {
      ++xoff;
      ++yoff;
    }
    while (xlim > xoff && ylim > yoff && a_[xlim - 1] == b_[ylim - 1]) {
      --xlim;
      --ylim;
    }
    if (xoff == xlim) {
      for (int y = yoff; y < ylim; ++y) {
        added_[y] = true;
      }
      return;
    }
    if (yoff == ylim) {
      for (int x = xoff; x < xlim; ++x) {
        removed_[x] = true;
      }
      return;
    }
    int xmid = 0;
    int ymid = 0;
    if (!bisect(xoff, xlim, yoff, ylim, xmid, ymid)) {
      for (int x = xoff; x < xlim; ++x) {
        removed_[x] = true;
      }
      for (int y = yoff; y < ylim; ++y) {
        added_[y] = true;
      }
      return;
    }
    compare(xoff, xoff + xmid, yoff, yoff + ymid);
    compare(xoff + xmid, xlim, yoff + ymid, ylim);
  }

  // Finds a point on some shortest edit path, relative to (xoff, yoff).
  bool bisect(int xoff, int xlim, int yoff, int ylim, int &xmid, int &ymid) const {
    const int n = xlim - xoff;
    const int m = ylim - yoff;
    const int max_d = (n + m + 1) / 2;
    const int v_offset = max_d;
    const int v_length = 2 * max_d + 2;
    std::vector<int> v1(v_length, -1);
    std::vector<int> v2(v_length, -1);
    v1[v_offset + 1] = 0;
    v2[v_offset + 1] = 0;
    const int delta = n - m;
    const bool front = (delta % 2) != 0;
    int k1start = 0;
    int k1end = 0;
    int k2start = 0;
    int k2end = 0;
    auto a_at = [&](int x) { return a_[xoff + x]; };
    auto b_at = [&](int y) { return b_[yoff + y]; };

    for (int d = 0; d < max_d; ++d) {
      for (int k1 = -d + k1start; k1 <= d - k1end; k1 += 2) {
        const int k1_offset = v_offset + k1;
        int x1 = (k1 == -d || (k1 != d && v1[k1_offset - 1] < v1[k1_offset + 1]))
                     ? v1[k1_offset + 1]
                     : v1[k1_offset - 1] + 1;
        int y1 = x1 - k1;
        while (x1 < n && y1 < m && a_at(x1) == b_at(y1)) {
          ++x1;
          ++y1;
        }
        v1[k1_offset] = x1;
        if (x1 > n) {
          k1end += 2;
        } else if (y1 > m) {
          k1start += 2;
        } else if (front) {
          const int k2_offset = v_offset + delta - k1;
          if (k2_offset >= 0 && k2_offset < v_length && v2[k2_offset] != -1) {
            const int x2 = n - v2[k2_offset];
            if (x1 >= x2) {
              xmid = x1;
              ymid = y1;
              return true;
            }
          }
        }
      }

      for (int k2 = -d + k2start; k2 <= d - k2end; k2 += 2) {
        const int k2_offset = v_offset + k2;
        int x2 = (k2 == -d || (k2 != d && v2[k2_offset - 1] < v2[k2_offset + 1]))
                     ? v2[k2_offset + 1]
                     : v2[k2_offset - 1] + 1;
        int y2 = x2 - k2;
        while (x2 < n && y2 < m && a_at(n - x2 - 1) == b_at(m - y2 - 1)) {
          ++x2;
          ++y2;
        }
        v2[k2_offset] = x2;
        if (x2 > n) {
          k2end += 2;
        } else if (y2 > m) {
          k2start += 2;
        } else if (!front) {
          const int k1_offset = v_offset + delta - k2;
          if (k1_offset >= 0 && k1_offset < v_length && v1[k1_offset] != -1) {
            const int x1 = v1[k1_offset];
            const int y1 = v_offset + x1 - k1_offset;
            if (x1 >= n - x2) {
              xmid = x1;
              ymid = y1;
              return true;
            }
          }
        }
      }
    }
    return false;
  }

  const std::vector<int> &a_;
  const std::vector<int> &b_;
  std::vector<bool> removed_;
  std::vector<bool> added_;
};

std::string region_text(const std::vector<LineHunk> &hunks, bool pre_side) {
  std::vector<std::string> lines;
  for (const auto &h : hunks) {
    const bool keep = pre_side ? h.kind != HunkKind::insert : h.kind != HunkKind::remove;
    if (keep) {
      lines.push_back(h.content);
    }
  }
  return join_lines(lines);
}

} // namespace

DeltaScript diff_lines(std::span<const std::string> pre, std::span<const std::string> post,
                       int pre_offset, int post_offset) {
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](std::span<const std::string> lines) {
    std::vector<int> out;
    out.reserve(lines.size());
    for (const auto &l : lines) {
      out.push_back(ids.try_emplace(l, static_cast<int>(ids.size())).first->second);
    }
    return out;
  };
  const std::vector<int> a = intern(pre);
  const std::vector<int> b = intern(post);

  LineMatcher matcher(a, b);
  matcher.run();
  const auto &removed = matcher.removed();
  const auto &added = matcher.added();

  // Walk the alignment; within every change run deletions precede insertions.
  std::vector<LineHunk> hunks;
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t last_change_end = 0;
  bool seen_change = false;
  while (i < n || j < m) {
    if (i < n && j < m && !removed[i] && !added[j]) {
      if (seen_change) {
        hunks.push_back(LineHunk::unchanged(pre_offset + static_cast<int>(i) + 1,
                                            post_offset + static_cast<int>(j) + 1, pre[i]));
      }
      ++i;
      ++j;
      continue;
    }
    while (i < n && removed[i]) {
      hunks.push_back(LineHunk::removed(pre_offset + static_cast<int>(i) + 1, pre[i]));
      ++i;
    }
    while (j < m && added[j]) {
      hunks.push_back(LineHunk::inserted(post_offset + static_cast<int>(j) + 1, post[j]));
      ++j;
    }
    seen_change = true;
    last_change_end = hunks.size();
  }
  hunks.resize(last_change_end);
  return delta_from_hunks(std::move(hunks));
}

DeltaScript compute_diff(std::string_view pre, std::string_view post) {
  const auto a = split_lines(pre);
  const auto b = split_lines(post);
  return diff_lines(a, b);
}

DeltaScript delta_from_hunks(std::vector<LineHunk> hunks) {
  DeltaScript d;
  if (hunks.empty()) {
    return d;
  }
  std::optional<int> pre_start;
  std::optional<int> post_start;
  int pre_count = 0;
  int post_count = 0;
  for (std::size_t idx = 0; idx < hunks.size(); ++idx) {
    const auto &h = hunks[idx];
    const bool has_pre = h.kind != HunkKind::insert;
    const bool has_post = h.kind != HunkKind::remove;
    if (has_pre != h.pre_line.has_value() || has_post != h.post_line.has_value()) {
      throw NumberingError("hunk " + std::to_string(idx + 1) + " has line numbers inconsistent with its kind");
    }
    if (has_pre) {
      if (!pre_start) {
        pre_start = *h.pre_line;
      }
      if (*h.pre_line != *pre_start + pre_count) {
        throw NumberingError("hunk " + std::to_string(idx + 1) + ": expected pre-edit line " +
                             std::to_string(*pre_start + pre_count) + ", got " +
                             std::to_string(*h.pre_line));
      }
      ++pre_count;
    }
    if (has_post) {
      if (!post_start) {
        post_start = *h.post_line;
      }
      if (*h.post_line != *post_start + post_count) {
        throw NumberingError("hunk " + std::to_string(idx + 1) + ": expected post-edit line " +
                             std::to_string(*post_start + post_count) + ", got " +
                             std::to_string(*h.post_line));
      }
      ++post_count;
    }
  }
  // A side without rows sits at the same position as the other side: lines
  // before a single-region delta are identical in both files.
  const int ps = pre_start.value_or(post_start.value_or(1));
  const int qs = post_start.value_or(ps);
  if (ps < 1 || qs < 1) {
    throw NumberingError("line numbers must be positive");
  }
  if (ps != qs) {
    throw NumberingError("pre-edit region starts at line " + std::to_string(ps) +
                         " but post-edit region starts at line " + std::to_string(qs));
  }
  d.pre_range = LineRange{ps, ps + pre_count - 1};
  d.post_range = LineRange{qs, qs + post_count - 1};
  d.pre_region = region_text(hunks, true);
  d.post_region = region_text(hunks, false);
  d.hunks = std::move(hunks);
  return d;
}

std::string apply_diff(std::string_view pre, const DeltaScript &delta) {
  if (delta.hunks.empty()) {
    return std::string(pre);
  }
  SplitText file = split_text(pre);
  const auto &lines = file.lines;
  const int start = delta.pre_range.start;
  const int count = delta.pre_range.size();
  if (start < 1 || static_cast<std::size_t>(start - 1 + count) > lines.size()) {
    throw RegionMismatch("pre range [" + std::to_string(start) + ", " + std::to_string(delta.pre_range.end) +
                         "] outside file of " + std::to_string(lines.size()) + " lines");
  }
  const auto expected = split_region(delta.pre_region, static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    if (lines[start - 1 + k] != expected[k]) {
      throw RegionMismatch("line " + std::to_string(start + k) + " does not match the delta's pre-region");
    }
  }
  const auto replacement = split_region(delta.post_region, static_cast<std::size_t>(delta.post_range.size()));
  std::vector<std::string> out;
  out.reserve(lines.size() - count + replacement.size());
  out.insert(out.end(), lines.begin(), lines.begin() + (start - 1));
  out.insert(out.end(), replacement.begin(), replacement.end());
  out.insert(out.end(), lines.begin() + (start - 1 + count), lines.end());
  // Without a final newline an empty last line would vanish on re-split.
  const bool trailing = file.trailing_newline || (!out.empty() && out.back().empty());
  return join_text(out, trailing);
}

std::string render_nes_diff(const DeltaScript &delta) {
  std::string out;
  for (std::size_t i = 0; i < delta.hunks.size(); ++i) {
    const auto &h = delta.hunks[i];
    if (i != 0) {
      out.push_back('\n');
    }
    switch (h.kind) {
    case HunkKind::remove:
      out += std::to_string(*h.pre_line);
      out.push_back('-');
      break;
    case HunkKind::insert:
      out += std::to_string(*h.post_line);
      out.push_back('+');
      break;
    case HunkKind::context:
      out += std::to_string(*h.pre_line);
      out.push_back(' ');
      break;
    }
    out += "| ";
    out += h.content;
  }
  return out;
}

DeltaScript parse_nes_diff(std::string_view text) {
  std::vector<LineHunk> hunks;
  // Context rows carry the pre-edit number; the post-edit number follows from
  // the rows already seen.
  std::optional<int> pre_next;
  std::optional<int> post_next;
  const auto rows = split_region(text, text.empty() ? 0 : 1 + static_cast<std::size_t>(std::count(
                                                                  text.begin(), text.end(), '\n')));
  for (std::size_t idx = 0; idx < rows.size(); ++idx) {
    const std::string_view row = rows[idx];
    if (row.empty()) {
      continue;
    }
    const std::size_t line_no = idx + 1;
    std::size_t p = 0;
    while (p < row.size() && row[p] >= '0' && row[p] <= '9') {
      ++p;
    }
    if (p == 0) {
      throw FormatError(line_no, "expected a line number");
    }
    int number = 0;
    const auto [ptr, ec] = std::from_chars(row.data(), row.data() + p, number);
    if (ec != std::errc() || ptr != row.data() + p || number < 1) {
      throw FormatError(line_no, "line number out of range");
    }
    if (p >= row.size() || (row[p] != '-' && row[p] != '+' && row[p] != ' ')) {
      throw FormatError(line_no, "expected one of '-', '+', ' ' after the line number");
    }
    const char marker = row[p];
    if (p + 1 >= row.size() || row[p + 1] != '|') {
      throw FormatError(line_no, "expected '|' after the marker");
    }
    std::string content;
    if (p + 2 < row.size()) {
      if (row[p + 2] != ' ') {
        throw FormatError(line_no, "expected a space after '|'");
      }
      content = std::string(row.substr(p + 3));
    }

    if (!pre_next) {
      pre_next = number;
      post_next = number;
    }
    LineHunk h;
    h.content = std::move(content);
    if (marker == '-') {
      h.kind = HunkKind::remove;
      h.pre_line = number;
      pre_next = number + 1;
    } else if (marker == '+') {
      h.kind = HunkKind::insert;
      h.post_line = number;
      post_next = number + 1;
    } else {
      h.kind = HunkKind::context;
      h.pre_line = number;
      h.post_line = *post_next;
      pre_next = number + 1;
      post_next = *post_next + 1;
    }
    hunks.push_back(std::move(h));
  }
  return delta_from_hunks(std::move(hunks));
}

} // namespace nes
