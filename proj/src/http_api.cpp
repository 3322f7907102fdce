#include "nes/http_api.hpp"

#include <thread>

#include <httplib.h>

#include "nes/error.hpp"

namespace nes {

using nlohmann::json;

namespace {

int status_for(const std::string &code) {
  if (code == "UnknownSession") {
    return 404;
  }
  if (code == "StreamDiscontinuity" || code == "StaleSuggestion" || code == "NoPending") {
    return 409;
  }
  if (code == "CapacityExceeded") {
    return 503;
  }
  if (code == "BackendTimeout") {
    return 504;
  }
  if (code == "BackendError" || code == "EmptyOutput") {
    return 502;
  }
  if (code == "ContextOverflow") {
    return 413;
  }
  return 400;
}

void send_json(httplib::Response &res, int status, const json &body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response &res, const std::string &code, const std::string &message) {
  send_json(res, status_for(code), json{{"code", code}, {"message", message}});
}

json parse_body(const httplib::Request &req) {
  if (req.body.empty()) {
    return json::object();
  }
  json j = json::parse(req.body);
  if (!j.is_object()) {
    throw std::invalid_argument("request body must be a JSON object");
  }
  return j;
}

// Runs a handler and maps library errors onto {code, message} responses.
template <typename Fn> auto guarded(Fn fn) {
  return [fn](const httplib::Request &req, httplib::Response &res) {
    try {
      fn(req, res);
    } catch (const Error &e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception &e) {
      send_error(res, "BadRequest", e.what());
    } catch (const std::invalid_argument &e) {
      send_error(res, "BadRequest", e.what());
    } catch (const std::exception &e) {
      send_error(res, "Internal", e.what());
      res.status = 500;
    }
  };
}

json summary_to_json(const HistorySummary &s) {
  return json{{"history_len", s.history_len}, {"active_present", s.active_present}, {"text_sha256", s.text_sha256}};
}

std::string required_string(const json &body, const char *key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw std::invalid_argument(std::string("field \"") + key + "\" must be a string");
  }
  return body[key].get<std::string>();
}

} // namespace

json suggestion_to_json(const Suggestion &s) {
  json j;
  j["suggestion_id"] = s.suggestion_id;
  j["kind"] = to_string(s.kind);
  if (s.location) {
    j["location"] = s.location->is_keep() ? json("keep") : json(s.location->line());
  } else {
    j["location"] = nullptr;
  }
  j["edit_window"] = s.edit_window ? json(*s.edit_window) : json(nullptr);
  if (s.kind == SuggestionKind::edit) {
    j["window_start"] = s.window_start;
    j["window_end"] = s.window_end;
  }
  j["nes_diff"] = s.nes_diff;
  j["raw"] = s.raw;
  j["degraded"] = s.degraded;
  j["latency_ms"] = s.latency_ms;
  j["backend_ms"] = s.backend_ms;
  j["local_ms"] = s.local_ms;
  return j;
}

void register_service_routes(httplib::Server &server, SuggestionService &service) {
  server.Get("/healthz", guarded([&service](const httplib::Request &, httplib::Response &res) {
               send_json(res, 200, json{{"status", "ok"}, {"sessions", service.session_count()}});
             }));

  server.Post("/v1/sessions", guarded([&service](const httplib::Request &req, httplib::Response &res) {
                const json body = parse_body(req);
                SessionOptions opts;
                if (body.contains("history_window")) {
                  opts.history_window = body["history_window"].get<int>();
                }
                if (body.contains("latency_budget_ms")) {
                  opts.latency_budget_ms = body["latency_budget_ms"].get<double>();
                }
                if (body.contains("prompt_byte_budget")) {
                  opts.prompt_byte_budget = body["prompt_byte_budget"].get<std::size_t>();
                }
                if (body.contains("text")) {
                  opts.initial_text = body["text"].get<std::string>();
                }
                opts.language = body.value("language", std::string());
                const std::string id = service.create_session(opts);
                const SessionView v = service.state(id);
                send_json(res, 201, json{{"session_id", id},
                                         {"history_window", v.history_window},
                                         {"latency_budget_ms", v.latency_budget_ms}});
              }));

  server.Post(R"(/v1/sessions/([^/]+)/events)",
              guarded([&service](const httplib::Request &req, httplib::Response &res) {
                const json body = parse_body(req);
                EditEvent e;
                e.pre.text = required_string(body, "pre");
                e.post.text = required_string(body, "post");
                e.timestamp_ms = body.value("ts", std::int64_t{0});
                if (body.contains("cursor_line") && !body["cursor_line"].is_null()) {
                  e.post.cursor_line = body["cursor_line"].get<int>();
                }
                e.post.language_tag = body.value("language", std::string());
                send_json(res, 200, summary_to_json(service.push_event(req.matches[1], e)));
              }));

  server.Post(R"(/v1/sessions/([^/]+)/suggest/location)",
              guarded([&service](const httplib::Request &req, httplib::Response &res) {
                send_json(res, 200, suggestion_to_json(service.suggest_location(req.matches[1])));
              }));

  server.Post(R"(/v1/sessions/([^/]+)/suggest/edit)",
              guarded([&service](const httplib::Request &req, httplib::Response &res) {
                const json body = parse_body(req);
                if (!body.contains("line") || !body["line"].is_number_integer()) {
                  throw std::invalid_argument("field \"line\" must be an integer");
                }
                send_json(res, 200, suggestion_to_json(service.suggest_edit(req.matches[1], body["line"].get<int>())));
              }));

  server.Post(R"(/v1/sessions/([^/]+)/accept)",
              guarded([&service](const httplib::Request &req, httplib::Response &res) {
                const json body = parse_body(req);
                const AcceptResult r = service.accept(req.matches[1], required_string(body, "suggestion_id"));
                json j = summary_to_json(r.summary);
                j["suggestion_id"] = r.suggestion_id;
                j["kind"] = to_string(r.kind);
                j["text_changed"] = r.text_changed;
                j["jump_line"] = r.jump_line ? json(*r.jump_line) : json(nullptr);
                send_json(res, 200, j);
              }));

  server.Post(R"(/v1/sessions/([^/]+)/reject)",
              guarded([&service](const httplib::Request &req, httplib::Response &res) {
                const json body = parse_body(req);
                service.reject(req.matches[1], required_string(body, "suggestion_id"));
                send_json(res, 200, json{{"ok", true}});
              }));

  server.Get(R"(/v1/sessions/([^/]+)/state)",
             guarded([&service](const httplib::Request &req, httplib::Response &res) {
               const SessionView v = service.state(req.matches[1]);
               json j;
               j["session_id"] = v.session_id;
               j["history_window"] = v.history_window;
               j["latency_budget_ms"] = v.latency_budget_ms;
               j["language"] = v.language;
               j["current_text"] = v.current_text;
               j["text_sha256"] = v.text_sha256;
               j["cursor_line"] = v.cursor_line ? json(*v.cursor_line) : json(nullptr);
               j["history"] = v.history;
               j["active"] = v.active ? json(*v.active) : json(nullptr);
               j["pending"] = v.pending ? suggestion_to_json(*v.pending) : json(nullptr);
               j["jumps"] = v.jumps;
               j["rejections"] = v.rejections;
               send_json(res, 200, j);
             }));
}

void register_mock_chat_routes(httplib::Server &server, ScriptedMockBackend &backend, const std::string &base_path) {
  server.Post(base_path + "/chat/completions", [&backend](const httplib::Request &req, httplib::Response &res) {
    PromptBundle prompt;
    std::string model = "scripted-mock";
    try {
      const json body = json::parse(req.body);
      for (const auto &m : body.at("messages")) {
        const auto role = m.at("role").get<std::string>();
        const auto content = m.at("content").get<std::string>();
        if (role == "system") {
          prompt.system += content;
        } else if (role == "user") {
          prompt.user += content;
        }
      }
      model = body.value("model", model);
    } catch (const json::exception &e) {
      send_json(res, 400, json{{"error", {{"message", e.what()}, {"type", "invalid_request_error"}}}});
      return;
    }
    try {
      const ScriptedResponse hit = backend.lookup(prompt.sha256());
      json out;
      out["id"] = "chatcmpl-mock";
      out["object"] = "chat.completion";
      out["model"] = model;
      out["choices"] = json::array(
          {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", hit.response}}}, {"finish_reason", "stop"}}});
      send_json(res, 200, out);
    } catch (const BackendError &e) {
      send_json(res, e.status(), json{{"error", {{"message", e.what()}, {"type", "not_found"}}}});
    }
  });
}

struct BackgroundServer::Thread {
  std::thread thread;
};

BackgroundServer::BackgroundServer() : server_(std::make_unique<httplib::Server>()) {}

BackgroundServer::~BackgroundServer() { stop(); }

int BackgroundServer::start(const std::string &host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::make_unique<Thread>();
  thread_->thread = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void BackgroundServer::stop() {
  if (thread_) {
    server_->stop();
    if (thread_->thread.joinable()) {
      thread_->thread.join();
    }
    thread_.reset();
  }
}

std::string BackgroundServer::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

} // namespace nes
