#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nes/backend.hpp"
#include "nes/diff.hpp"
#include "nes/location.hpp"
#include "nes/prompt.hpp"
#include "nes/trajectory.hpp"

namespace nes {

enum class TaskKind { location, edit };
enum class LabelKind { do_edit, keep };
enum class LabelingMode { relevance_judge, location_change };

std::string to_string(TaskKind kind);
std::string to_string(LabelKind kind);
std::string to_string(LabelingMode mode);
TaskKind parse_task_kind(std::string_view s);
LabelingMode parse_labeling_mode(std::string_view s);

struct DatasetMeta {
  LabelingMode labeling_mode = LabelingMode::relevance_judge;
  int history_window = 3;
  std::uint64_t seed = 0;
  std::string template_version{kPromptTemplateVersion};

  bool operator==(const DatasetMeta &) const = default;
};

// One (C_T, H_T, L_gt, E_gt) tuple. The editable window is lines
// [window_start, window_start + lines(window_pre) - 1] of `current`; gt_edit
// is that window after the ground-truth edit.
struct EditInstance {
  TaskKind task = TaskKind::edit;
  std::string language;
  std::string current;
  int cursor_line = 1;
  std::vector<std::string> history;
  LabelKind label_kind = LabelKind::do_edit;
  Location gt_location = Location::keep();
  int window_start = 1;
  std::string window_pre;
  std::string gt_edit;
  DatasetMeta meta;

  [[nodiscard]] CodeSnapshot snapshot() const { return CodeSnapshot{current, cursor_line, language}; }

  bool operator==(const EditInstance &) const = default;
};

struct DatasetConfig {
  int history_window = 3;
  double keep_ratio = 0.20;
  LabelingMode labeling_mode = LabelingMode::relevance_judge;
  int editable_window_radius = 16;
  std::uint64_t seed = 0;
  TaskKind task = TaskKind::edit;
  int judge_concurrency = 4;

  // Throws std::invalid_argument.
  void validate() const;
  [[nodiscard]] DatasetMeta meta() const { return DatasetMeta{labeling_mode, history_window, seed}; }
};

struct RelevanceVerdict {
  bool relevant = false;
  std::string rationale;
};

// One unlabeled (do-candidate) instance per adjacent pair of deltas.
// snapshots[i] is the file before deltas[i]; a trailing snapshot after the
// last delta is optional. Throws AlignmentError.
std::vector<EditInstance> formulate_instances(const EditTrajectory &trajectory,
                                              const std::vector<CodeSnapshot> &snapshots,
                                              const DatasetConfig &cfg);

// The instance's ground-truth edit rendered as an NES diff in file coordinates.
std::string candidate_diff(const EditInstance &instance);

// Throws JudgeUnavailable (transport/backend failure) or UnparseableVerdict.
RelevanceVerdict judge_relevance(const EditInstance &instance, ModelBackend &judge, const PromptConfig &cfg = {});

// relevance_judge: relevant -> do (unchanged), irrelevant -> keep.
// location_change: keep when the next edit starts inside the editable window
// around the previous edit, do otherwise; the verdict is ignored.
EditInstance label_instance(EditInstance instance, const std::optional<RelevanceVerdict> &verdict,
                            const DatasetConfig &cfg);

// Converts an instance to a keep sample: no jump, window unchanged.
EditInstance as_keep(EditInstance instance);

// Seeded downsampling of keep samples so that |keeps - ratio * total| <= 1.
// Do samples are never dropped or fabricated. Relative order is preserved.
std::vector<EditInstance> balance_keep_ratio(const std::vector<EditInstance> &samples, const DatasetConfig &cfg);

struct QuarantinedInstance {
  EditInstance instance;
  std::string reason;
};

struct BuildResult {
  std::vector<EditInstance> samples;
  std::vector<QuarantinedInstance> quarantined;
  std::size_t candidates = 0;
};

struct SessionRecording {
  std::string initial_text;
  std::string language;
  EditTrajectory trajectory;
};

// Formulation, labeling and ratio balancing for a set of recorded sessions.
// `judge` is required in relevance_judge mode.
BuildResult build_dataset(const std::vector<SessionRecording> &sessions, const DatasetConfig &cfg,
                          ModelBackend *judge);

std::string format_instance(const EditInstance &instance);
// Throws SchemaError with the given line number.
EditInstance parse_instance(std::string_view json_line, std::size_t line_no = 1);

// Line-delimited JSON. Throws IoError / SchemaError.
std::size_t write_dataset(const std::vector<EditInstance> &samples, const std::string &path);
std::vector<EditInstance> read_dataset(const std::string &path);

} // namespace nes
