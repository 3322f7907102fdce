#pragma once

#include <stdexcept>
#include <string>

namespace nes {

// Every failure raised by the library carries a stable machine-readable code
// (e.g. "RegionMismatch") that the HTTP layer and CLI surface verbatim.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string &message)
      : std::runtime_error(message), code_(std::move(code)) {}

  [[nodiscard]] const std::string &code() const noexcept { return code_; }

private:
  std::string code_;
};

#define NES_DEFINE_ERROR(Name)                                                 \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &message) : Error(#Name, message) {}       \
  }

// diff_core
NES_DEFINE_ERROR(RegionMismatch);
NES_DEFINE_ERROR(NumberingError);

class FormatError : public Error {
public:
  FormatError(std::size_t line, const std::string &message)
      : Error("FormatError", "line " + std::to_string(line) + ": " + message), line_(line) {}

  // 1-based index of the offending input line.
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// trajectory
NES_DEFINE_ERROR(NotOverlapping);
NES_DEFINE_ERROR(StreamDiscontinuity);

// dataset_builder
NES_DEFINE_ERROR(AlignmentError);
NES_DEFINE_ERROR(JudgeUnavailable);
NES_DEFINE_ERROR(UnparseableVerdict);
NES_DEFINE_ERROR(BalanceImpossible);
NES_DEFINE_ERROR(IoError);

class SchemaError : public Error {
public:
  SchemaError(std::size_t line, const std::string &message)
      : Error("SchemaError", "line " + std::to_string(line) + ": " + message), line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// metrics
NES_DEFINE_ERROR(EmptyInput);

// model_io
NES_DEFINE_ERROR(ContextOverflow);
NES_DEFINE_ERROR(WindowMismatch);
NES_DEFINE_ERROR(UnparseableOutput);
NES_DEFINE_ERROR(EmptyOutput);
NES_DEFINE_ERROR(BackendTimeout);

class BackendError : public Error {
public:
  BackendError(int status, const std::string &body_excerpt)
      : Error("BackendError", "backend returned HTTP " + std::to_string(status) + ": " + body_excerpt),
        status_(status) {}

  [[nodiscard]] int status() const noexcept { return status_; }

private:
  int status_;
};

// suggestion_service
NES_DEFINE_ERROR(CapacityExceeded);
NES_DEFINE_ERROR(UnknownSession);
NES_DEFINE_ERROR(LineOutOfRange);
NES_DEFINE_ERROR(StaleSuggestion);
NES_DEFINE_ERROR(NoPending);

// eval_harness
NES_DEFINE_ERROR(DatasetError);

#undef NES_DEFINE_ERROR

} // namespace nes
