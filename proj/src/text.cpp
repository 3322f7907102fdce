#include "nes/text.hpp"

namespace nes {

SplitText split_text(std::string_view text) {
  SplitText out;
  if (text.empty()) {
    return out;
  }
  std::size_t begin = 0;
  while (true) {
    const std::size_t nl = text.find('\n', begin);
    if (nl == std::string_view::npos) {
      out.lines.emplace_back(text.substr(begin));
      break;
    }
    out.lines.emplace_back(text.substr(begin, nl - begin));
    begin = nl + 1;
    if (begin == text.size()) {
      out.trailing_newline = true;
      break;
    }
  }
  return out;
}

std::string join_lines(const std::vector<std::string> &lines) {
  std::string out;
  std::size_t total = lines.size();
  for (const auto &l : lines) {
    total += l.size();
  }
  out.reserve(total);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i != 0) {
      out.push_back('\n');
    }
    out += lines[i];
  }
  return out;
}

std::string join_text(const std::vector<std::string> &lines, bool trailing_newline) {
  std::string out = join_lines(lines);
  if (trailing_newline && !lines.empty()) {
    out.push_back('\n');
  }
  return out;
}

std::vector<std::string> split_region(std::string_view region, std::size_t count) {
  std::vector<std::string> out;
  if (count == 0) {
    return out;
  }
  out.reserve(count);
  std::size_t begin = 0;
  while (true) {
    const std::size_t nl = region.find('\n', begin);
    if (nl == std::string_view::npos) {
      out.emplace_back(region.substr(begin));
      break;
    }
    out.emplace_back(region.substr(begin, nl - begin));
    begin = nl + 1;
  }
  return out;
}

std::size_t cursor_line_count(std::string_view text) {
  const std::size_t n = split_text(text).lines.size();
  return n == 0 ? 1 : n;
}

} // namespace nes
