#include "nes/backend.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "nes/error.hpp"

namespace nes {

Completion complete(ModelBackend &backend, const PromptBundle &prompt) {
  const auto t0 = std::chrono::steady_clock::now();
  Completion c;
  c.text = backend.send(prompt);
  c.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

HttpBackend::HttpBackend(HttpBackendConfig cfg)
    : cfg_(std::move(cfg)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(std::max(cfg_.max_in_flight, 1))) {
  if (cfg_.timeout.count() <= 0) {
    throw std::invalid_argument("backend timeout must be positive");
  }
}

std::string HttpBackend::id() const { return cfg_.endpoint + cfg_.base_path + " (" + cfg_.model_name + ")"; }

std::string HttpBackend::request_body(const PromptBundle &prompt) const {
  nlohmann::json body;
  body["model"] = cfg_.model_name;
  body["messages"] = nlohmann::json::array({
      {{"role", "system"}, {"content", prompt.system}},
      {{"role", "user"}, {"content", prompt.user}},
  });
  body["temperature"] = 0;
  body["stream"] = false;
  body["max_tokens"] = cfg_.max_tokens;
  return body.dump();
}

std::string HttpBackend::send(const PromptBundle &prompt) {
  in_flight_->acquire();
  struct Release {
    std::counting_semaphore<> &s;
    ~Release() { s.release(); }
  } release{*in_flight_};

  const std::string body = request_body(prompt);
  const std::string path = cfg_.base_path + "/chat/completions";
  httplib::Headers headers;
  if (cfg_.bearer_token) {
    headers.emplace("Authorization", "Bearer " + *cfg_.bearer_token);
  }

  httplib::Result res;
  for (int attempt = 0; attempt < 2; ++attempt) {
    httplib::Client client(cfg_.endpoint);
    client.set_connection_timeout(cfg_.timeout);
    client.set_read_timeout(cfg_.timeout);
    client.set_write_timeout(cfg_.timeout);
    res = client.Post(path, headers, body, "application/json");
    if (res) {
      break;
    }
  }
  if (!res) {
    throw BackendTimeout("no response from " + cfg_.endpoint + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError(res->status, res->body.substr(0, 200));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw BackendError(res->status, std::string("malformed completion payload: ") + e.what());
  }
}

ScriptedMockBackend::ScriptedMockBackend(std::vector<ScriptedResponse> table, std::string name)
    : name_(std::move(name)) {
  for (auto &entry : table) {
    if (entry.prompt_sha256 == "*") {
      wildcard_.push_back(std::move(entry));
    } else {
      exact_.insert_or_assign(entry.prompt_sha256, std::move(entry));
    }
  }
}

std::unique_ptr<ScriptedMockBackend> ScriptedMockBackend::from_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open mock table " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::make_unique<ScriptedMockBackend>(parse_mock_table(buf.str()), "scripted-mock:" + path);
}

ScriptedResponse ScriptedMockBackend::lookup(const std::string &sha256) {
  ScriptedResponse hit;
  {
    std::lock_guard lock(mutex_);
    if (auto it = exact_.find(sha256); it != exact_.end()) {
      hit = it->second;
    } else if (!wildcard_.empty()) {
      hit = wildcard_[std::min(next_wildcard_, wildcard_.size() - 1)];
      if (next_wildcard_ < wildcard_.size()) {
        ++next_wildcard_;
      }
    } else {
      throw BackendError(404, "no scripted response for prompt " + sha256);
    }
    ++served_;
  }
  if (hit.delay_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(hit.delay_ms));
  }
  return hit;
}

std::string ScriptedMockBackend::send(const PromptBundle &prompt) { return lookup(prompt.sha256()).response; }

std::size_t ScriptedMockBackend::served() const {
  std::lock_guard lock(mutex_);
  return served_;
}

std::vector<ScriptedResponse> parse_mock_table(std::string_view jsonl) {
  std::vector<ScriptedResponse> out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(jsonl)};
  std::string row;
  while (std::getline(in, row)) {
    ++line_no;
    if (row.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(row);
      ScriptedResponse r;
      r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
      r.response = j.at("response").get<std::string>();
      r.delay_ms = j.value("delay_ms", 0);
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception &e) {
      throw SchemaError(line_no, std::string("mock table entry: ") + e.what());
    }
  }
  return out;
}

std::string format_mock_entry(const ScriptedResponse &entry) {
  nlohmann::json j;
  j["prompt_sha256"] = entry.prompt_sha256;
  j["response"] = entry.response;
  j["delay_ms"] = entry.delay_ms;
  return j.dump();
}

} // namespace nes
