#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nes/backend.hpp"
#include "nes/dataset.hpp"
#include "nes/metrics.hpp"

namespace nes {

struct EvalOptions {
  TaskKind task = TaskKind::edit;
  // Re-window every sample's history to this many entries (never more than
  // the sample stores). Unset: the dataset's own window.
  std::optional<int> history_window;
  int concurrency = 4;
  std::size_t prompt_byte_budget = 24 * 1024;
};

struct EvalCell {
  std::string language;
  Split split = Split::do_edit;
  Summary summary;
};

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
};

struct SampleError {
  std::size_t index = 0;
  std::string code;
  std::string message;
};

struct EvalReport {
  TaskKind task = TaskKind::edit;
  std::optional<int> history_window;
  LabelingMode labeling_mode = LabelingMode::relevance_judge;
  std::string backend_id;
  // Sorted by language, do before keep.
  std::vector<EvalCell> cells;
  std::size_t n_dataset = 0;
  std::size_t n_scored = 0;
  std::vector<SampleError> errors;
  LatencyStats latency;

  // Unweighted mean over languages that have the split; nullopt if none do.
  [[nodiscard]] std::optional<Summary> average(Split split) const;
  [[nodiscard]] const EvalCell *cell(const std::string &language, Split split) const;
  [[nodiscard]] std::vector<std::string> languages() const;
};

// Scores every sample against the backend. Per-sample backend or parse
// failures are recorded in `errors` and the run continues. Throws
// DatasetError when a sample's task differs from options.task.
EvalReport run_eval(const std::vector<EditInstance> &samples, ModelBackend &backend, const EvalOptions &options);
EvalReport run_eval(const std::string &dataset_path, ModelBackend &backend, const EvalOptions &options);

// The prompt run_eval sends for a sample.
PromptBundle eval_prompt(const EditInstance &sample, const EvalOptions &options);

enum class ReportFormat { markdown, csv, json };

ReportFormat parse_report_format(std::string_view s);

// Deterministic rendering; timing is included only on request since it
// varies between runs.
std::string emit_report(const EvalReport &report, ReportFormat format, bool include_timing = false);

} // namespace nes
