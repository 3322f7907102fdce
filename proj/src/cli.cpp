#include "nes/cli.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "nes/dataset.hpp"
#include "nes/error.hpp"
#include "nes/eval.hpp"
#include "nes/http_api.hpp"
#include "nes/service.hpp"
#include "nes/trajectory.hpp"

namespace nes::cli {

namespace {

// Operational failure that should exit with status 1.
struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Failure("cannot read " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string &path, const std::string &text, std::ostream &out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw Failure("cannot write " + path);
  }
  f << text;
}

struct BackendFlags {
  std::string url;
  std::string mock_table;
  std::string base_path = "/v1";
  std::string model = "nes";
  int timeout_ms = 10000;
  int max_in_flight = 8;

  void add_to(CLI::App &app) {
    app.add_option("--backend-url", url, "Chat-completion endpoint, e.g. http://127.0.0.1:8000")
        ->envname("NES_BACKEND_URL");
    app.add_option("--mock-table", mock_table, "Scripted mock response table (JSONL)")->envname("NES_MOCK_TABLE");
    app.add_option("--base-path", base_path, "API base path of the endpoint")
        ->envname("NES_BASE_PATH")
        ->capture_default_str();
    app.add_option("--model", model, "Model name sent to the endpoint")->envname("NES_MODEL")->capture_default_str();
    app.add_option("--timeout-ms", timeout_ms, "Per-request timeout")
        ->envname("NES_TIMEOUT_MS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  [[nodiscard]] std::shared_ptr<ModelBackend> make(const std::string &url_override = {}) const {
    const std::string endpoint = url_override.empty() ? url : url_override;
    if (!mock_table.empty() && url_override.empty()) {
      return ScriptedMockBackend::from_file(mock_table);
    }
    if (endpoint.empty()) {
      return nullptr;
    }
    HttpBackendConfig cfg;
    cfg.endpoint = endpoint;
    cfg.base_path = base_path;
    cfg.model_name = model;
    cfg.timeout = std::chrono::milliseconds(timeout_ms);
    cfg.max_in_flight = max_in_flight;
    if (const char *key = std::getenv("NES_API_KEY"); key != nullptr && *key != '\0') {
      cfg.bearer_token = key;
    }
    return std::make_shared<HttpBackend>(cfg);
  }
};

SessionRecording record_session(const std::vector<EditEvent> &events, const std::string &language, int gap) {
  SessionRecording rec;
  TrajectoryState state;
  for (const auto &e : events) {
    ingest(state, e, OverlapPolicy{gap});
  }
  rec.initial_text = state.initial_text;
  rec.trajectory = finalize(state);
  rec.language = language;
  for (const auto &e : events) {
    if (!e.post.language_tag.empty()) {
      rec.language = e.post.language_tag;
      break;
    }
  }
  return rec;
}

std::vector<int> parse_int_list(const std::string &csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(std::stoi(item));
  }
  return out;
}

// Drops file entries whose environment variable is set, so the environment wins over the file.
class EnvAwareConfig : public CLI::ConfigTOML {
public:
  std::vector<CLI::ConfigItem> from_config(std::istream &input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    std::erase_if(items, [](const CLI::ConfigItem &item) {
      std::string env = "NES_";
      for (char c : item.name) {
        env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      }
      return std::getenv(env.c_str()) != nullptr;
    });
    return items;
  }
};

} // namespace

int dispatch(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Next-edit suggestion toolkit: diffs, edit trajectories, datasets, evaluation and serving", "nes"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Configuration file (TOML/INI); flags override environment, environment overrides file");
  app.config_formatter(std::make_shared<EnvAwareConfig>());
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "Print the effective configuration and exit");

  // diff
  auto *diff_cmd = app.add_subcommand("diff", "Print the NES diff between two files");
  std::string diff_a;
  std::string diff_b;
  diff_cmd->add_option("a", diff_a, "Pre-edit file")->required()->check(CLI::ExistingFile);
  diff_cmd->add_option("b", diff_b, "Post-edit file")->required()->check(CLI::ExistingFile);

  // replay
  auto *replay_cmd = app.add_subcommand("replay", "Replay an event log and print the finalized edit history");
  std::string replay_path;
  std::string replay_format = "text";
  int replay_gap = 0;
  replay_cmd->add_option("events", replay_path, "Event log (JSONL)")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--format", replay_format, "text or json")
      ->envname("NES_FORMAT")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  replay_cmd->add_option("--overlap-gap", replay_gap, "Merge edits separated by up to this many lines")
      ->envname("NES_OVERLAP_GAP")
      ->check(CLI::NonNegativeNumber);

  // dataset build
  auto *dataset_cmd = app.add_subcommand("dataset", "Dataset construction");
  dataset_cmd->require_subcommand(1);
  auto *build_cmd = dataset_cmd->add_subcommand("build", "Build a do/keep dataset from event logs");
  std::vector<std::string> build_events;
  std::string build_out;
  std::string build_quarantine;
  std::string build_task = "edit";
  std::string build_language;
  std::string build_mode = "relevance_judge";
  DatasetConfig dcfg;
  int build_gap = 0;
  BackendFlags judge_flags;
  build_cmd->add_option("--events", build_events, "Event logs, one recorded session each")
      ->required()
      ->check(CLI::ExistingFile);
  build_cmd->add_option("--out", build_out, "Output dataset (JSONL)")->required();
  build_cmd->add_option("--quarantine", build_quarantine, "Where to write instances the judge could not label");
  build_cmd->add_option("--task", build_task, "location or edit")
      ->envname("NES_TASK")
      ->check(CLI::IsMember({"location", "edit"}))
      ->capture_default_str();
  build_cmd->add_option("--language", build_language, "Language tag when the event log has none")
      ->envname("NES_LANGUAGE");
  build_cmd->add_option("--labeling-mode", build_mode, "relevance_judge or location_change")
      ->envname("NES_LABELING_MODE")
      ->check(CLI::IsMember({"relevance_judge", "location_change"}))
      ->capture_default_str();
  build_cmd->add_option("--keep-ratio", dcfg.keep_ratio, "Fraction of keep samples")
      ->envname("NES_KEEP_RATIO")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  build_cmd->add_option("--history-window", dcfg.history_window, "Max edit history (K)")
      ->envname("NES_HISTORY_WINDOW")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build_cmd->add_option("--radius", dcfg.editable_window_radius, "Editable window radius in lines")
      ->envname("NES_RADIUS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build_cmd->add_option("--seed", dcfg.seed, "Sampling seed")->envname("NES_SEED")->capture_default_str();
  build_cmd->add_option("--judge-concurrency", dcfg.judge_concurrency, "Concurrent judge requests")
      ->envname("NES_JUDGE_CONCURRENCY")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build_cmd->add_option("--overlap-gap", build_gap, "Merge edits separated by up to this many lines")
      ->envname("NES_OVERLAP_GAP")
      ->check(CLI::NonNegativeNumber);
  judge_flags.add_to(*build_cmd);

  // eval run
  auto *eval_cmd = app.add_subcommand("eval", "Evaluation harness");
  eval_cmd->require_subcommand(1);
  auto *run_cmd = eval_cmd->add_subcommand("run", "Score a dataset against a backend");
  std::string eval_dataset;
  std::string eval_task = "edit";
  std::string eval_format = "markdown";
  std::string eval_out;
  std::string eval_sweep;
  int eval_window = 0;
  int eval_concurrency = 4;
  double max_error_rate = 0.5;
  bool eval_timing = false;
  BackendFlags eval_flags;
  run_cmd->add_option("--dataset", eval_dataset, "Dataset (JSONL)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--task", eval_task, "location or edit")
      ->envname("NES_TASK")
      ->check(CLI::IsMember({"location", "edit"}))
      ->capture_default_str();
  run_cmd->add_option("--format", eval_format, "markdown, csv or json")
      ->envname("NES_FORMAT")
      ->check(CLI::IsMember({"markdown", "md", "csv", "json"}))
      ->capture_default_str();
  run_cmd->add_option("--out", eval_out, "Report file (default: standard output)");
  run_cmd->add_option("--history-window", eval_window, "Re-window histories to K entries")
      ->envname("NES_HISTORY_WINDOW")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--sweep", eval_sweep, "Comma-separated K values, one report each (e.g. 1,3,5,7,9)");
  run_cmd->add_option("--concurrency", eval_concurrency, "In-flight requests")
      ->envname("NES_CONCURRENCY")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--max-error-rate", max_error_rate, "Exit 1 when the per-sample error rate exceeds this")
      ->envname("NES_MAX_ERROR_RATE")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  run_cmd->add_flag("--timing", eval_timing, "Include wall-clock latency statistics");
  eval_flags.add_to(*run_cmd);

  // serve
  auto *serve_cmd = app.add_subcommand("serve", "Run the suggestion HTTP service");
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::string location_url;
  std::string edit_url;
  ServiceConfig scfg;
  int ttl_seconds = 1800;
  BackendFlags serve_flags;
  serve_cmd->add_option("--host", serve_host, "Bind address")->envname("NES_HOST")->capture_default_str();
  serve_cmd->add_option("--port", serve_port, "Port")->envname("NES_PORT")->capture_default_str();
  serve_cmd->add_option("--location-url", location_url, "Endpoint of the location model (default: --backend-url)")
      ->envname("NES_LOCATION_URL");
  serve_cmd->add_option("--edit-url", edit_url, "Endpoint of the edit model (default: --backend-url)")
      ->envname("NES_EDIT_URL");
  serve_cmd->add_option("--history-window", scfg.history_window, "Max edit history (K)")
      ->envname("NES_HISTORY_WINDOW")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_option("--radius", scfg.editable_window_radius, "Editable window radius in lines")
      ->envname("NES_RADIUS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_option("--ttl-seconds", ttl_seconds, "Idle session lifetime")
      ->envname("NES_TTL_SECONDS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_option("--max-sessions", scfg.max_sessions, "Session capacity")
      ->envname("NES_MAX_SESSIONS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_option("--latency-budget-ms", scfg.latency_budget_ms, "Reported latency budget")
      ->envname("NES_LATENCY_BUDGET_MS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_flags.add_to(*serve_cmd);

  // mock-backend
  auto *mock_cmd = app.add_subcommand("mock-backend", "Serve a scripted chat-completion backend");
  std::string mock_table;
  std::string mock_host = "127.0.0.1";
  int mock_port = 8090;
  std::string mock_base = "/v1";
  mock_cmd->add_option("table", mock_table, "Response table (JSONL)")->required()->check(CLI::ExistingFile);
  mock_cmd->add_option("--host", mock_host, "Bind address")->envname("NES_HOST")->capture_default_str();
  mock_cmd->add_option("--port", mock_port, "Port")->envname("NES_PORT")->capture_default_str();
  mock_cmd->add_option("--base-path", mock_base, "API base path")->envname("NES_BASE_PATH")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return 2;
  }

  if (dump_config) {
    std::istringstream cfg(app.config_to_str(true, true));
    std::string line;
    std::string pending_comment;
    while (std::getline(cfg, line)) {
      if (line.rfind("dump-config", 0) == 0) {
        pending_comment.clear();
        continue;
      }
      if (line.rfind('#', 0) == 0) {
        pending_comment = line;
        continue;
      }
      if (!pending_comment.empty()) {
        out << pending_comment << '\n';
        pending_comment.clear();
      }
      out << line << '\n';
    }
    return 0;
  }

  try {
    if (*diff_cmd) {
      const std::string rendered = render_nes_diff(compute_diff(read_file(diff_a), read_file(diff_b)));
      out << rendered;
      if (!rendered.empty()) {
        out << '\n';
      }
      return 0;
    }

    if (*replay_cmd) {
      TrajectoryState state;
      for (const auto &e : read_event_log(replay_path)) {
        ingest(state, e, OverlapPolicy{replay_gap});
      }
      const EditTrajectory traj = finalize(state);
      if (replay_format == "json") {
        nlohmann::json j = nlohmann::json::array();
        for (const auto &d : traj.deltas) {
          j.push_back(render_nes_diff(d));
        }
        out << j.dump(2) << '\n';
      } else {
        for (std::size_t i = 0; i < traj.deltas.size(); ++i) {
          out << "# edit " << (i + 1) << '\n' << render_nes_diff(traj.deltas[i]) << "\n\n";
        }
      }
      return 0;
    }

    if (*build_cmd) {
      dcfg.task = parse_task_kind(build_task);
      dcfg.labeling_mode = parse_labeling_mode(build_mode);
      std::vector<SessionRecording> sessions;
      for (const auto &path : build_events) {
        sessions.push_back(record_session(read_event_log(path), build_language, build_gap));
      }
      std::shared_ptr<ModelBackend> judge;
      if (dcfg.labeling_mode == LabelingMode::relevance_judge) {
        judge = judge_flags.make();
        if (!judge) {
          err << "nes: relevance_judge labeling needs --backend-url or --mock-table\n";
          return 2;
        }
      }
      const BuildResult result = build_dataset(sessions, dcfg, judge.get());
      const std::size_t written = write_dataset(result.samples, build_out);
      if (!build_quarantine.empty()) {
        std::ofstream q(build_quarantine, std::ios::binary | std::ios::trunc);
        for (const auto &item : result.quarantined) {
          auto j = nlohmann::json::parse(format_instance(item.instance));
          j["quarantine_reason"] = item.reason;
          q << j.dump() << '\n';
        }
      }
      std::size_t keeps = 0;
      for (const auto &s : result.samples) {
        keeps += s.label_kind == LabelKind::keep ? 1 : 0;
      }
      err << "candidates: " << result.candidates << ", written: " << written << " (" << (written - keeps)
          << " do, " << keeps << " keep), quarantined: " << result.quarantined.size() << '\n';
      return 0;
    }

    if (*run_cmd) {
      auto backend = eval_flags.make();
      if (!backend) {
        err << "nes: eval run needs --backend-url or --mock-table\n";
        return 2;
      }
      EvalOptions opts;
      opts.task = parse_task_kind(eval_task);
      opts.concurrency = eval_concurrency;
      std::vector<std::optional<int>> windows;
      if (!eval_sweep.empty()) {
        for (int k : parse_int_list(eval_sweep)) {
          if (k < 1) {
            err << "nes: --sweep values must be positive\n";
            return 2;
          }
          windows.emplace_back(k);
        }
      } else if (eval_window > 0) {
        windows.emplace_back(eval_window);
      } else {
        windows.emplace_back(std::nullopt);
      }
      const auto format = parse_report_format(eval_format);
      std::string text;
      nlohmann::json json_reports = nlohmann::json::array();
      bool too_many_errors = false;
      for (const auto &k : windows) {
        opts.history_window = k;
        const EvalReport report = run_eval(eval_dataset, *backend, opts);
        if (format == ReportFormat::json && windows.size() > 1) {
          json_reports.push_back(nlohmann::json::parse(emit_report(report, format, eval_timing)));
        } else {
          text += emit_report(report, format, eval_timing);
        }
        if (windows.size() > 1 && format == ReportFormat::markdown) {
          text += "\n";
        }
        if (report.n_dataset > 0 &&
            static_cast<double>(report.errors.size()) / static_cast<double>(report.n_dataset) > max_error_rate) {
          too_many_errors = true;
        }
      }
      if (!json_reports.empty()) {
        text = json_reports.dump(2) + "\n";
      }
      write_output(eval_out, text, out);
      if (too_many_errors) {
        err << "nes: error rate above --max-error-rate\n";
        return 1;
      }
      return 0;
    }

    if (*serve_cmd) {
      scfg.session_ttl = std::chrono::seconds(ttl_seconds);
      auto location = serve_flags.make(location_url);
      auto edit = serve_flags.make(edit_url);
      if (!location || !edit) {
        err << "nes: serve needs --backend-url, --mock-table, or both --location-url and --edit-url\n";
        return 2;
      }
      SuggestionService service(scfg, location, edit);
      httplib::Server server;
      register_service_routes(server, service);
      err << "nes: serving on http://" << serve_host << ':' << serve_port << '\n';
      if (!server.listen(serve_host, serve_port)) {
        throw Failure("cannot listen on " + serve_host + ":" + std::to_string(serve_port));
      }
      return 0;
    }

    if (*mock_cmd) {
      auto backend = ScriptedMockBackend::from_file(mock_table);
      httplib::Server server;
      register_mock_chat_routes(server, *backend, mock_base);
      err << "nes: scripted backend on http://" << mock_host << ':' << mock_port << mock_base << '\n';
      if (!server.listen(mock_host, mock_port)) {
        throw Failure("cannot listen on " + mock_host + ":" + std::to_string(mock_port));
      }
      return 0;
    }
  } catch (const Error &e) {
    err << "nes: " << e.code() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument &e) {
    err << "nes: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    err << "nes: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

} // namespace nes::cli
