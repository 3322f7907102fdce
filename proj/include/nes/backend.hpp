#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include "nes/prompt.hpp"

namespace nes {

struct Completion {
  std::string text;
  double latency_ms = 0.0;
};

// A chat-completion endpoint. Implementations must be safe to call from
// several threads at once.
class ModelBackend {
public:
  virtual ~ModelBackend() = default;

  // Raw completion text. Throws BackendTimeout or BackendError.
  virtual std::string send(const PromptBundle &prompt) = 0;
  [[nodiscard]] virtual std::string id() const = 0;
};

// One non-streaming completion with wall-clock latency around the call.
Completion complete(ModelBackend &backend, const PromptBundle &prompt);

struct HttpBackendConfig {
  // Scheme, host and port, e.g. "http://127.0.0.1:8000".
  std::string endpoint;
  std::string base_path = "/v1";
  std::string model_name = "nes";
  std::chrono::milliseconds timeout{10000};
  std::optional<std::string> bearer_token;
  int max_tokens = 1024;
  int max_in_flight = 8;
};

// OpenAI-style POST {base_path}/chat/completions with temperature 0. A
// transport failure is retried once; HTTP error statuses are not retried.
class HttpBackend final : public ModelBackend {
public:
  explicit HttpBackend(HttpBackendConfig cfg);

  std::string send(const PromptBundle &prompt) override;
  [[nodiscard]] std::string id() const override;

  // Request body for a prompt; exposed for tests.
  [[nodiscard]] std::string request_body(const PromptBundle &prompt) const;

private:
  HttpBackendConfig cfg_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

struct ScriptedResponse {
  // Hex SHA-256 of the prompt (see PromptBundle::sha256), or "*".
  std::string prompt_sha256;
  std::string response;
  int delay_ms = 0;
};

// Replays a response table. Exact hash matches win; otherwise "*" entries
// are served in table order, the last one repeating. A prompt with neither
// raises BackendError(404).
class ScriptedMockBackend final : public ModelBackend {
public:
  explicit ScriptedMockBackend(std::vector<ScriptedResponse> table, std::string name = "scripted-mock");

  static std::unique_ptr<ScriptedMockBackend> from_file(const std::string &path);

  std::string send(const PromptBundle &prompt) override;
  [[nodiscard]] std::string id() const override { return name_; }

  // Lookup by hash without a PromptBundle (used by the mock HTTP server).
  ScriptedResponse lookup(const std::string &sha256);
  [[nodiscard]] std::size_t served() const;

private:
  std::string name_;
  std::unordered_map<std::string, ScriptedResponse> exact_;
  std::vector<ScriptedResponse> wildcard_;
  std::size_t next_wildcard_ = 0;
  std::size_t served_ = 0;
  mutable std::mutex mutex_;
};

// Table file: JSONL of {"prompt_sha256", "response", "delay_ms"}.
std::vector<ScriptedResponse> parse_mock_table(std::string_view jsonl);
std::string format_mock_entry(const ScriptedResponse &entry);

// Calls a function; handy for tests and in-process oracles.
class FunctionBackend final : public ModelBackend {
public:
  using Fn = std::function<std::string(const PromptBundle &)>;

  FunctionBackend(Fn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}

  std::string send(const PromptBundle &prompt) override { return fn_(prompt); }
  [[nodiscard]] std::string id() const override { return name_; }

private:
  Fn fn_;
  std::string name_;
};

} // namespace nes
