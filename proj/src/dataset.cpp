#include "nes/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "nes/error.hpp"
#include "nes/text.hpp"

namespace nes {

std::string to_string(TaskKind kind) { return kind == TaskKind::location ? "location" : "edit"; }
std::string to_string(LabelKind kind) { return kind == LabelKind::do_edit ? "do" : "keep"; }
std::string to_string(LabelingMode mode) {
  return mode == LabelingMode::relevance_judge ? "relevance_judge" : "location_change";
}

TaskKind parse_task_kind(std::string_view s) {
  if (s == "location") {
    return TaskKind::location;
  }
  if (s == "edit") {
    return TaskKind::edit;
  }
  throw std::invalid_argument("unknown task \"" + std::string(s) + "\" (expected location or edit)");
}

LabelingMode parse_labeling_mode(std::string_view s) {
  if (s == "relevance_judge") {
    return LabelingMode::relevance_judge;
  }
  if (s == "location_change") {
    return LabelingMode::location_change;
  }
  throw std::invalid_argument("unknown labeling mode \"" + std::string(s) +
                              "\" (expected relevance_judge or location_change)");
}

void DatasetConfig::validate() const {
  if (!(keep_ratio >= 0.0 && keep_ratio <= 1.0)) {
    throw std::invalid_argument("keep_ratio must lie in [0, 1]");
  }
  if (editable_window_radius < 1) {
    throw std::invalid_argument("editable window radius must be at least 1");
  }
  if (history_window < 1) {
    throw std::invalid_argument("history window must be at least 1");
  }
}

namespace {

struct Window {
  int start = 1;
  int end = 0;
};

// gt line +- radius, widened to cover the delta and clipped to the file.
Window editable_window(int gt_line, const DeltaScript &delta, int line_count, int radius) {
  Window w;
  w.start = std::max(1, std::min(gt_line - radius, delta.pre_range.start));
  w.end = std::min(line_count, std::max(gt_line + radius, delta.pre_range.end));
  return w;
}

int clip_line(int line, int line_count) { return std::clamp(line, 1, std::max(line_count, 1)); }

} // namespace

std::vector<EditInstance> formulate_instances(const EditTrajectory &trajectory,
                                              const std::vector<CodeSnapshot> &snapshots,
                                              const DatasetConfig &cfg) {
  cfg.validate();
  const auto &deltas = trajectory.deltas;
  if (snapshots.size() < deltas.size() || snapshots.size() > deltas.size() + 1) {
    throw AlignmentError("expected " + std::to_string(deltas.size()) + " or " + std::to_string(deltas.size() + 1) +
                         " snapshots, got " + std::to_string(snapshots.size()));
  }
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    std::string after;
    try {
      after = apply_diff(snapshots[i].text, deltas[i]);
    } catch (const RegionMismatch &e) {
      throw AlignmentError("delta " + std::to_string(i + 1) + " does not apply to snapshot " + std::to_string(i) +
                           ": " + e.what());
    }
    if (i + 1 < snapshots.size() && split_lines(after) != split_lines(snapshots[i + 1].text)) {
      throw AlignmentError("snapshot " + std::to_string(i + 1) + " is not the result of delta " +
                           std::to_string(i + 1));
    }
  }

  std::vector<std::string> rendered;
  rendered.reserve(deltas.size());
  for (const auto &d : deltas) {
    rendered.push_back(render_nes_diff(d));
  }

  std::vector<EditInstance> out;
  for (std::size_t t = 1; t < deltas.size(); ++t) {
    const CodeSnapshot &snap = snapshots[t];
    const DeltaScript &next = deltas[t];
    const auto lines = split_lines(snap.text);
    const int n = static_cast<int>(lines.size());

    EditInstance inst;
    inst.task = cfg.task;
    inst.language = snap.language_tag;
    inst.current = snap.text;
    inst.cursor_line = clip_line(snap.cursor_line.value_or(deltas[t - 1].post_range.start), n);
    const std::size_t k = static_cast<std::size_t>(cfg.history_window);
    inst.history.assign(rendered.begin() + static_cast<std::ptrdiff_t>(t > k ? t - k : 0),
                        rendered.begin() + static_cast<std::ptrdiff_t>(t));
    const int gt_line = clip_line(next.pre_range.start, n);
    inst.gt_location = Location::at(gt_line);
    inst.label_kind = LabelKind::do_edit;
    inst.meta = cfg.meta();

    const Window w = editable_window(gt_line, next, n, cfg.editable_window_radius);
    inst.window_start = w.start;
    std::vector<std::string> pre_window;
    std::vector<std::string> post_window;
    for (int line = w.start; line <= w.end; ++line) {
      pre_window.push_back(lines[line - 1]);
    }
    const int rel_start = next.pre_range.start - w.start;
    const int rel_end = rel_start + next.pre_range.size();
    post_window.insert(post_window.end(), pre_window.begin(), pre_window.begin() + rel_start);
    const auto replacement = split_region(next.post_region, static_cast<std::size_t>(next.post_range.size()));
    post_window.insert(post_window.end(), replacement.begin(), replacement.end());
    post_window.insert(post_window.end(), pre_window.begin() + rel_end, pre_window.end());
    inst.window_pre = join_lines(pre_window);
    inst.gt_edit = join_lines(post_window);
    out.push_back(std::move(inst));
  }
  return out;
}

std::string candidate_diff(const EditInstance &instance) {
  const int count = instance.window_pre.empty() && instance.current.empty()
                        ? 0
                        : static_cast<int>(std::count(instance.window_pre.begin(), instance.window_pre.end(), '\n')) + 1;
  const auto pre = split_region(instance.window_pre, static_cast<std::size_t>(count));
  const auto post = split_region(instance.gt_edit,
                                 static_cast<std::size_t>(std::count(instance.gt_edit.begin(), instance.gt_edit.end(), '\n')) + 1);
  return render_nes_diff(diff_lines(pre, post, instance.window_start - 1, instance.window_start - 1));
}

RelevanceVerdict judge_relevance(const EditInstance &instance, ModelBackend &judge, const PromptConfig &cfg) {
  const PromptBundle prompt = build_judge_prompt(instance.history, candidate_diff(instance), cfg);
  std::string raw;
  try {
    raw = judge.send(prompt);
  } catch (const Error &e) {
    throw JudgeUnavailable(std::string("relevance judge failed: ") + e.what());
  }
  const JudgeReply reply = parse_judge_output(raw);
  return RelevanceVerdict{reply.relevant, reply.rationale};
}

EditInstance as_keep(EditInstance instance) {
  instance.label_kind = LabelKind::keep;
  instance.gt_location = Location::keep();
  instance.gt_edit = instance.window_pre;
  return instance;
}

EditInstance label_instance(EditInstance instance, const std::optional<RelevanceVerdict> &verdict,
                            const DatasetConfig &cfg) {
  if (cfg.labeling_mode == LabelingMode::relevance_judge) {
    if (!verdict) {
      throw std::invalid_argument("relevance_judge labeling needs a verdict");
    }
    return verdict->relevant ? instance : as_keep(std::move(instance));
  }
  if (instance.history.empty() || instance.gt_location.is_keep()) {
    return instance;
  }
  const DeltaScript previous = parse_nes_diff(instance.history.back());
  const int gt = instance.gt_location.line();
  const int lo = previous.post_range.start - cfg.editable_window_radius;
  const int hi = std::max(previous.post_range.end, previous.post_range.start) + cfg.editable_window_radius;
  if (gt >= lo && gt <= hi) {
    return as_keep(std::move(instance));
  }
  return instance;
}

std::vector<EditInstance> balance_keep_ratio(const std::vector<EditInstance> &samples, const DatasetConfig &cfg) {
  cfg.validate();
  const double r = cfg.keep_ratio;
  std::vector<std::size_t> keep_idx;
  std::size_t n_do = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label_kind == LabelKind::keep) {
      keep_idx.push_back(i);
    } else {
      ++n_do;
    }
  }
  const std::size_t n_keep = keep_idx.size();
  if ((n_do == 0 || n_keep == 0) && r != 0.0 && r != 1.0) {
    throw BalanceImpossible("need both do and keep samples to balance to ratio " + std::to_string(r));
  }

  std::size_t target = n_keep;
  if (r < 1.0) {
    const double ideal = r * static_cast<double>(n_do) / (1.0 - r);
    target = std::min(n_keep, static_cast<std::size_t>(std::llround(ideal)));
  }
  const double miss = std::abs((1.0 - r) * static_cast<double>(target) - r * static_cast<double>(n_do));
  if (miss > 1.0 + 1e-9) {
    throw BalanceImpossible("cannot reach keep ratio " + std::to_string(r) + " from " + std::to_string(n_do) +
                            " do and " + std::to_string(n_keep) + " keep samples by downsampling");
  }

  // Seeded Fisher-Yates over the keep indices; mt19937_64 output is fully
  // specified, so the selection is identical on every platform.
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t i = n_keep; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(keep_idx[i - 1], keep_idx[j]);
  }
  std::vector<bool> chosen(samples.size(), false);
  for (std::size_t i = 0; i < target; ++i) {
    chosen[keep_idx[i]] = true;
  }
  std::vector<EditInstance> out;
  out.reserve(n_do + target);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label_kind == LabelKind::do_edit || chosen[i]) {
      out.push_back(samples[i]);
    }
  }
  return out;
}

BuildResult build_dataset(const std::vector<SessionRecording> &sessions, const DatasetConfig &cfg,
                          ModelBackend *judge) {
  cfg.validate();
  if (cfg.labeling_mode == LabelingMode::relevance_judge && judge == nullptr) {
    throw std::invalid_argument("relevance_judge labeling needs a judge backend");
  }
  std::vector<EditInstance> candidates;
  for (const auto &session : sessions) {
    const auto texts = replay_states(session.initial_text, session.trajectory);
    std::vector<CodeSnapshot> snaps;
    snaps.reserve(texts.size());
    for (const auto &t : texts) {
      snaps.push_back(CodeSnapshot{t, std::nullopt, session.language});
    }
    auto inst = formulate_instances(session.trajectory, snaps, cfg);
    candidates.insert(candidates.end(), std::make_move_iterator(inst.begin()), std::make_move_iterator(inst.end()));
  }

  BuildResult result;
  result.candidates = candidates.size();
  std::vector<std::optional<RelevanceVerdict>> verdicts(candidates.size());
  std::vector<std::string> failures(candidates.size());
  if (cfg.labeling_mode == LabelingMode::relevance_judge) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < candidates.size(); i = next++) {
        try {
          verdicts[i] = judge_relevance(candidates[i], *judge);
        } catch (const Error &e) {
          failures[i] = e.code() + ": " + e.what();
        }
      }
    };
    const int threads = std::max(1, std::min<int>(cfg.judge_concurrency, static_cast<int>(candidates.size())));
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
  }

  std::vector<EditInstance> labeled;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!failures[i].empty()) {
      result.quarantined.push_back(QuarantinedInstance{std::move(candidates[i]), failures[i]});
      continue;
    }
    labeled.push_back(label_instance(std::move(candidates[i]), verdicts[i], cfg));
  }
  result.samples = balance_keep_ratio(labeled, cfg);
  return result;
}

std::string format_instance(const EditInstance &instance) {
  nlohmann::json j;
  j["task"] = to_string(instance.task);
  j["language"] = instance.language;
  j["current"] = instance.current;
  j["cursor_line"] = instance.cursor_line;
  j["history"] = instance.history;
  j["label_kind"] = to_string(instance.label_kind);
  j["gt_location"] = instance.gt_location.is_keep() ? nlohmann::json("keep") : nlohmann::json(instance.gt_location.line());
  j["window_start"] = instance.window_start;
  j["window_pre"] = instance.window_pre;
  j["gt_edit"] = instance.gt_edit;
  j["meta"] = {{"labeling_mode", to_string(instance.meta.labeling_mode)},
               {"history_window", instance.meta.history_window},
               {"seed", instance.meta.seed},
               {"template_version", instance.meta.template_version}};
  return j.dump();
}

EditInstance parse_instance(std::string_view json_line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_line);
  } catch (const nlohmann::json::parse_error &e) {
    throw SchemaError(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw SchemaError(line_no, "expected a JSON object");
  }
  auto need = [&](const char *key) -> const nlohmann::json & {
    if (!j.contains(key)) {
      throw SchemaError(line_no, std::string("missing field \"") + key + "\"");
    }
    return j[key];
  };
  auto need_string = [&](const char *key) {
    const auto &v = need(key);
    if (!v.is_string()) {
      throw SchemaError(line_no, std::string("field \"") + key + "\" must be a string");
    }
    return v.get<std::string>();
  };
  auto need_int = [&](const char *key) {
    const auto &v = need(key);
    if (!v.is_number_integer()) {
      throw SchemaError(line_no, std::string("field \"") + key + "\" must be an integer");
    }
    return v.get<int>();
  };

  EditInstance inst;
  try {
    inst.task = parse_task_kind(need_string("task"));
    inst.language = need_string("language");
    inst.current = need_string("current");
    inst.cursor_line = need_int("cursor_line");
    const auto &hist = need("history");
    if (!hist.is_array()) {
      throw SchemaError(line_no, "field \"history\" must be an array of strings");
    }
    for (const auto &h : hist) {
      if (!h.is_string()) {
        throw SchemaError(line_no, "field \"history\" must be an array of strings");
      }
      inst.history.push_back(h.get<std::string>());
    }
    const std::string kind = need_string("label_kind");
    if (kind == "do") {
      inst.label_kind = LabelKind::do_edit;
    } else if (kind == "keep") {
      inst.label_kind = LabelKind::keep;
    } else {
      throw SchemaError(line_no, "label_kind must be \"do\" or \"keep\"");
    }
    const auto &loc = need("gt_location");
    if (loc.is_string() && loc.get<std::string>() == "keep") {
      inst.gt_location = Location::keep();
    } else if (loc.is_number_integer() && loc.get<int>() >= 1) {
      inst.gt_location = Location::at(loc.get<int>());
    } else {
      throw SchemaError(line_no, "gt_location must be a positive line number or \"keep\"");
    }
    inst.window_start = need_int("window_start");
    inst.window_pre = need_string("window_pre");
    inst.gt_edit = need_string("gt_edit");
    const auto &meta = need("meta");
    if (!meta.is_object()) {
      throw SchemaError(line_no, "field \"meta\" must be an object");
    }
    inst.meta.labeling_mode = parse_labeling_mode(meta.at("labeling_mode").get<std::string>());
    inst.meta.history_window = meta.at("history_window").get<int>();
    inst.meta.seed = meta.at("seed").get<std::uint64_t>();
    inst.meta.template_version = meta.value("template_version", std::string(kPromptTemplateVersion));
  } catch (const SchemaError &) {
    throw;
  } catch (const std::exception &e) {
    throw SchemaError(line_no, e.what());
  }
  return inst;
}

std::size_t write_dataset(const std::vector<EditInstance> &samples, const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write dataset " + path);
  }
  for (const auto &s : samples) {
    out << format_instance(s) << '\n';
  }
  out.flush();
  if (!out) {
    throw IoError("write failed for " + path);
  }
  return samples.size();
}

std::vector<EditInstance> read_dataset(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read dataset " + path);
  }
  std::vector<EditInstance> out;
  std::string row;
  std::size_t line_no = 0;
  while (std::getline(in, row)) {
    ++line_no;
    if (row.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    out.push_back(parse_instance(row, line_no));
  }
  return out;
}

} // namespace nes
