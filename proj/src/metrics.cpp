#include "nes/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <vector>

#include "nes/error.hpp"

namespace nes {

namespace {

std::vector<std::uint32_t> code_points(std::string_view s) {
  std::vector<std::uint32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    std::uint32_t cp = b0;
    if (b0 >= 0xC0 && b0 < 0xE0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if (b0 >= 0xE0 && b0 < 0xF0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if (b0 >= 0xF0 && b0 < 0xF8) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool valid = len == 1 || i + len <= s.size();
    for (std::size_t k = 1; valid && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        valid = false;
      } else {
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (!valid) {
      // Stray byte: count it on its own, tagged so it never equals a valid code point.
      out.push_back(0x110000u + b0);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

} // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) {
  auto x = code_points(a);
  auto y = code_points(b);
  std::size_t lo = 0;
  while (lo < x.size() && lo < y.size() && x[lo] == y[lo]) {
    ++lo;
  }
  std::size_t xe = x.size();
  std::size_t ye = y.size();
  while (xe > lo && ye > lo && x[xe - 1] == y[ye - 1]) {
    --xe;
    --ye;
  }
  const std::size_t n = xe - lo;
  const std::size_t m = ye - lo;
  if (n == 0) {
    return m;
  }
  if (m == 0) {
    return n;
  }
  // Single-row DP over the shorter string.
  const std::uint32_t *s = x.data() + lo;
  const std::uint32_t *t = y.data() + lo;
  std::size_t sn = n;
  std::size_t tn = m;
  if (tn > sn) {
    std::swap(s, t);
    std::swap(sn, tn);
  }
  std::vector<std::size_t> row(tn + 1);
  for (std::size_t j = 0; j <= tn; ++j) {
    row[j] = j;
  }
  for (std::size_t i = 1; i <= sn; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= tn; ++j) {
      const std::size_t up = row[j];
      const std::size_t cost = s[i - 1] == t[j - 1] ? 0 : 1;
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[tn];
}

double edit_similarity(std::string_view generated, std::string_view ground_truth) {
  const std::size_t len = std::max(code_points(generated).size(), code_points(ground_truth).size());
  if (len == 0) {
    return 1.0;
  }
  return 1.0 - static_cast<double>(levenshtein(generated, ground_truth)) / static_cast<double>(len);
}

EditScore reward_edit(std::string_view generated, std::string_view ground_truth) {
  EditScore s;
  if (generated == ground_truth) {
    s.es = 1.0;
    s.exact = true;
    s.reward = 1.0;
    return s;
  }
  s.es = edit_similarity(generated, ground_truth);
  s.reward = s.es > 0.5 ? 0.5 * s.es : -1.0;
  return s;
}

LocationScore reward_location(const Location &generated, const Location &ground_truth) {
  const bool correct = generated == ground_truth;
  return LocationScore{correct, correct ? 1.0 : -1.0};
}

std::string to_string(Split split) { return split == Split::do_edit ? "do" : "keep"; }

Summary aggregate(std::span<const EditScore> scores, Split split) {
  if (scores.empty()) {
    throw EmptyInput("cannot aggregate an empty score list");
  }
  Summary out;
  out.n = scores.size();
  double es_sum = 0.0;
  std::size_t exact = 0;
  for (const auto &s : scores) {
    es_sum += s.es;
    exact += s.exact ? 1 : 0;
  }
  const double n = static_cast<double>(scores.size());
  if (split == Split::do_edit) {
    out.es = 100.0 * es_sum / n;
    out.emr = 100.0 * static_cast<double>(exact) / n;
  } else {
    out.acc = 100.0 * static_cast<double>(exact) / n;
  }
  return out;
}

Summary aggregate(std::span<const LocationScore> scores) {
  if (scores.empty()) {
    throw EmptyInput("cannot aggregate an empty score list");
  }
  Summary out;
  out.n = scores.size();
  const auto correct = std::count_if(scores.begin(), scores.end(), [](const auto &s) { return s.correct; });
  out.acc = 100.0 * static_cast<double>(correct) / static_cast<double>(scores.size());
  return out;
}

std::string format_fixed(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double rounded = std::floor(value * scale + 0.5 + 1e-9) / scale;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, rounded);
  return buf;
}

} // namespace nes
