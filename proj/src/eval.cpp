#include "nes/eval.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "nes/error.hpp"

namespace nes {

namespace {

struct Outcome {
  bool ok = false;
  double latency_ms = 0.0;
  EditScore edit;
  LocationScore location;
  SampleError error;
};

std::vector<std::string> windowed(const std::vector<std::string> &history, int k) {
  const std::size_t keep = static_cast<std::size_t>(std::max(k, 1));
  const std::size_t skip = history.size() > keep ? history.size() - keep : 0;
  return {history.begin() + static_cast<std::ptrdiff_t>(skip), history.end()};
}

int effective_window(const EditInstance &sample, const EvalOptions &options) {
  return options.history_window.value_or(sample.meta.history_window);
}

Outcome score_sample(const EditInstance &sample, std::size_t index, ModelBackend &backend,
                     const EvalOptions &options) {
  Outcome out;
  try {
    const PromptBundle prompt = eval_prompt(sample, options);
    const Completion c = complete(backend, prompt);
    out.latency_ms = c.latency_ms;
    if (options.task == TaskKind::location) {
      Location generated = Location::keep();
      try {
        generated = parse_location_output(c.text);
      } catch (const UnparseableOutput &) {
        // Same fallback as serving: an unreadable answer means no jump.
      }
      out.location = reward_location(generated, sample.gt_location);
    } else {
      out.edit = reward_edit(parse_edit_output(c.text, sample.window_pre), sample.gt_edit);
    }
    out.ok = true;
  } catch (const Error &e) {
    out.error = SampleError{index, e.code(), e.what()};
  }
  return out;
}

std::string percent(const std::optional<double> &v) { return v ? format_fixed(*v, 1) + "%" : "-"; }

std::string do_cell(TaskKind task, const std::optional<Summary> &s) {
  if (!s) {
    return "-";
  }
  if (task == TaskKind::location) {
    return percent(s->acc);
  }
  return format_fixed(*s->es, 2) + "/" + percent(s->emr);
}

std::optional<double> rounded(const std::optional<double> &v, int decimals) {
  if (!v) {
    return std::nullopt;
  }
  return std::stod(format_fixed(*v, decimals));
}

} // namespace

PromptBundle eval_prompt(const EditInstance &sample, const EvalOptions &options) {
  const int k = effective_window(sample, options);
  const PromptConfig cfg{k, options.prompt_byte_budget};
  const auto history = windowed(sample.history, k);
  if (options.task == TaskKind::location) {
    return build_location_prompt(sample.snapshot(), history, cfg);
  }
  return build_edit_prompt(sample.snapshot(), history, sample.window_start, sample.window_pre, cfg);
}

EvalReport run_eval(const std::vector<EditInstance> &samples, ModelBackend &backend, const EvalOptions &options) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].task != options.task) {
      throw DatasetError("sample " + std::to_string(i + 1) + " is a " + to_string(samples[i].task) +
                         " sample; expected " + to_string(options.task));
    }
  }
  std::vector<Outcome> outcomes(samples.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      outcomes[i] = score_sample(samples[i], i, backend, options);
    }
  };
  {
    const int threads = std::max(1, std::min<int>(options.concurrency, static_cast<int>(samples.size())));
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
  }

  EvalReport report;
  report.task = options.task;
  report.history_window = options.history_window;
  report.labeling_mode = samples.empty() ? LabelingMode::relevance_judge : samples.front().meta.labeling_mode;
  report.backend_id = backend.id();
  report.n_dataset = samples.size();

  std::map<std::pair<std::string, int>, std::vector<EditScore>> edit_scores;
  std::map<std::pair<std::string, int>, std::vector<LocationScore>> location_scores;
  std::vector<double> latencies;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Outcome &o = outcomes[i];
    if (!o.ok) {
      report.errors.push_back(o.error);
      continue;
    }
    ++report.n_scored;
    latencies.push_back(o.latency_ms);
    const auto key = std::make_pair(samples[i].language, samples[i].label_kind == LabelKind::keep ? 1 : 0);
    if (options.task == TaskKind::location) {
      location_scores[key].push_back(o.location);
    } else {
      edit_scores[key].push_back(o.edit);
    }
  }
  for (const auto &[key, scores] : edit_scores) {
    const Split split = key.second == 1 ? Split::keep : Split::do_edit;
    report.cells.push_back(EvalCell{key.first, split, aggregate(scores, split)});
  }
  for (const auto &[key, scores] : location_scores) {
    report.cells.push_back(EvalCell{key.first, key.second == 1 ? Split::keep : Split::do_edit, aggregate(scores)});
  }
  if (!latencies.empty()) {
    std::sort(latencies.begin(), latencies.end());
    double sum = 0.0;
    for (double l : latencies) {
      sum += l;
    }
    auto pct = [&](double q) {
      return latencies[std::min(latencies.size() - 1, static_cast<std::size_t>(q * static_cast<double>(latencies.size())))];
    };
    report.latency = LatencyStats{sum / static_cast<double>(latencies.size()), pct(0.5), pct(0.95), latencies.back()};
  }
  return report;
}

EvalReport run_eval(const std::string &dataset_path, ModelBackend &backend, const EvalOptions &options) {
  std::vector<EditInstance> samples;
  try {
    samples = read_dataset(dataset_path);
  } catch (const Error &e) {
    throw DatasetError(e.code() + ": " + e.what());
  }
  return run_eval(samples, backend, options);
}

const EvalCell *EvalReport::cell(const std::string &language, Split split) const {
  for (const auto &c : cells) {
    if (c.language == language && c.split == split) {
      return &c;
    }
  }
  return nullptr;
}

std::vector<std::string> EvalReport::languages() const {
  std::vector<std::string> out;
  for (const auto &c : cells) {
    if (std::find(out.begin(), out.end(), c.language) == out.end()) {
      out.push_back(c.language);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Summary> EvalReport::average(Split split) const {
  Summary avg;
  std::size_t langs = 0;
  double es = 0.0;
  double emr = 0.0;
  double acc = 0.0;
  bool has_es = false;
  bool has_acc = false;
  for (const auto &c : cells) {
    if (c.split != split) {
      continue;
    }
    ++langs;
    avg.n += c.summary.n;
    if (c.summary.es) {
      es += *c.summary.es;
      emr += c.summary.emr.value_or(0.0);
      has_es = true;
    }
    if (c.summary.acc) {
      acc += *c.summary.acc;
      has_acc = true;
    }
  }
  if (langs == 0) {
    return std::nullopt;
  }
  const double n = static_cast<double>(langs);
  if (has_es) {
    avg.es = es / n;
    avg.emr = emr / n;
  }
  if (has_acc) {
    avg.acc = acc / n;
  }
  return avg;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "markdown" || s == "md") {
    return ReportFormat::markdown;
  }
  if (s == "csv") {
    return ReportFormat::csv;
  }
  if (s == "json") {
    return ReportFormat::json;
  }
  throw std::invalid_argument("unknown report format \"" + std::string(s) + "\"");
}

std::string emit_report(const EvalReport &report, ReportFormat format, bool include_timing) {
  const auto languages = report.languages();
  const std::string window = report.history_window ? std::to_string(*report.history_window) : "dataset";
  std::ostringstream out;

  auto summary_of = [&](const std::string &lang, Split split) -> std::optional<Summary> {
    if (lang == "Average") {
      return report.average(split);
    }
    const EvalCell *c = report.cell(lang, split);
    return c ? std::optional<Summary>(c->summary) : std::nullopt;
  };
  std::vector<std::string> columns = languages;
  columns.emplace_back("Average");

  if (format == ReportFormat::markdown) {
    const std::string do_header = report.task == TaskKind::location ? "do (Acc)" : "do (ES / EMR)";
    out << "| Backend | Task | Max Edit History |";
    for (const auto &c : columns) {
      out << ' ' << c << ' ' << do_header << " | " << c << " keep (Acc) |";
    }
    out << "\n|---|---|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      out << "---|---|";
    }
    out << "\n| " << report.backend_id << " | " << to_string(report.task) << " | " << window << " |";
    for (const auto &c : columns) {
      const auto d = summary_of(c, Split::do_edit);
      const auto k = summary_of(c, Split::keep);
      out << ' ' << do_cell(report.task, d) << " | " << (k ? percent(k->acc) : "-") << " |";
    }
    out << "\n\nsamples: " << report.n_dataset << ", scored: " << report.n_scored
        << ", errors: " << report.errors.size() << "\n";
    if (include_timing) {
      out << "latency ms: mean " << format_fixed(report.latency.mean_ms, 2) << ", p50 "
          << format_fixed(report.latency.p50_ms, 2) << ", p95 " << format_fixed(report.latency.p95_ms, 2)
          << ", max " << format_fixed(report.latency.max_ms, 2) << "\n";
    }
    return out.str();
  }

  if (format == ReportFormat::csv) {
    out << "language,split,n,acc,es,emr\n";
    for (const auto &c : columns) {
      for (const Split split : {Split::do_edit, Split::keep}) {
        const auto s = summary_of(c, split);
        if (!s) {
          continue;
        }
        auto field = [](const std::optional<double> &v, int decimals) {
          return v ? format_fixed(*v, decimals) : std::string();
        };
        out << c << ',' << to_string(split) << ',' << s->n << ',' << field(s->acc, 1) << ',' << field(s->es, 2)
            << ',' << field(s->emr, 1) << "\n";
      }
    }
    return out.str();
  }

  nlohmann::json j;
  j["task"] = to_string(report.task);
  j["history_window"] = report.history_window ? nlohmann::json(*report.history_window) : nlohmann::json("dataset");
  j["labeling_mode"] = to_string(report.labeling_mode);
  j["backend"] = report.backend_id;
  j["n_dataset"] = report.n_dataset;
  j["n_scored"] = report.n_scored;
  j["n_errors"] = report.errors.size();
  j["cells"] = nlohmann::json::array();
  for (const auto &c : columns) {
    for (const Split split : {Split::do_edit, Split::keep}) {
      const auto s = summary_of(c, split);
      if (!s) {
        continue;
      }
      nlohmann::json cell{{"language", c}, {"split", to_string(split)}, {"n", s->n}};
      auto put = [&](const char *key, const std::optional<double> &v, int decimals) {
        cell[key] = v ? nlohmann::json(*rounded(v, decimals)) : nlohmann::json(nullptr);
      };
      put("acc", s->acc, 1);
      put("es", s->es, 2);
      put("emr", s->emr, 1);
      j["cells"].push_back(cell);
    }
  }
  j["errors"] = nlohmann::json::array();
  for (const auto &e : report.errors) {
    j["errors"].push_back({{"index", e.index}, {"code", e.code}, {"message", e.message}});
  }
  if (include_timing) {
    j["latency_ms"] = {{"mean", report.latency.mean_ms},
                       {"p50", report.latency.p50_ms},
                       {"p95", report.latency.p95_ms},
                       {"max", report.latency.max_ms}};
  }
  return j.dump(2) + "\n";
}

} // namespace nes
