#pragma once

#include <optional>
#include <string>

namespace nes {

// A predicted or ground-truth edit location: a 1-based line, or the keep
// token meaning "no jump, no edit".
class Location {
public:
  static Location keep() { return Location{}; }
  static Location at(int line) { return Location{line}; }

  [[nodiscard]] bool is_keep() const noexcept { return !line_; }
  [[nodiscard]] int line() const { return line_.value(); }

  // "keep" or the decimal line number.
  [[nodiscard]] std::string to_string() const { return line_ ? std::to_string(*line_) : "keep"; }

  bool operator==(const Location &) const = default;

private:
  Location() = default;
  explicit Location(int line) : line_(line) {}

  std::optional<int> line_;
};

} // namespace nes
