#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "nes/backend.hpp"
#include "nes/service.hpp"

namespace httplib {
class Server;
}

namespace nes {

nlohmann::json suggestion_to_json(const Suggestion &suggestion);

// Registers the JSON API on `server`:
//   POST /v1/sessions                          create
//   POST /v1/sessions/{id}/events              push an edit event
//   POST /v1/sessions/{id}/suggest/location
//   POST /v1/sessions/{id}/suggest/edit        {"line": n}
//   POST /v1/sessions/{id}/accept              {"suggestion_id": ...}
//   POST /v1/sessions/{id}/reject              {"suggestion_id": ...}
//   GET  /v1/sessions/{id}/state
//   GET  /healthz
// Errors are answered as {"code", "message"}.
void register_service_routes(httplib::Server &server, SuggestionService &service);

// Serves POST {base_path}/chat/completions from a scripted table, keyed by
// the SHA-256 of the system and user messages (see PromptBundle::sha256).
void register_mock_chat_routes(httplib::Server &server, ScriptedMockBackend &backend,
                               const std::string &base_path = "/v1");

// An httplib server running on a background thread; stops on destruction.
class BackgroundServer {
public:
  BackgroundServer();
  ~BackgroundServer();

  BackgroundServer(const BackgroundServer &) = delete;
  BackgroundServer &operator=(const BackgroundServer &) = delete;

  httplib::Server &server() { return *server_; }
  // Binds (port 0 picks a free port), starts listening and returns the port.
  int start(const std::string &host = "127.0.0.1", int port = 0);
  void stop();
  [[nodiscard]] std::string url() const;

private:
  std::unique_ptr<httplib::Server> server_;
  std::string host_;
  int port_ = 0;
  struct Thread;
  std::unique_ptr<Thread> thread_;
};

} // namespace nes
