#pragma once

// Chat-completion client (OpenAI-compatible wire format) and a scripted stub
// server speaking the same format.
//
// Request:  {"model": ..., "messages": [{"role": "system", ...}, {"role": "user", ...}], "temperature": ...}
// Response: {"choices": [{"message": {"role": "assistant", "content": ...}}]}

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "tunesmith/error.hpp"

namespace tunesmith {

struct ClientConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string api_key_env = "TUNESMITH_API_KEY";
  std::string model_name = "llama-2-7b-chat";
  int max_retries = 3;
  double timeout_seconds = 60.0;
  double temperature = 0.7;
  int backoff_initial_ms = 500;
  int backoff_max_ms = 8000;

  void validate() const {
    if (base_url.empty()) throw ValidationError("client base_url is empty");
    if (max_retries < 0 || max_retries > 20) throw ValidationError("client max_retries must be in [0, 20]");
    if (!(timeout_seconds > 0)) throw ValidationError("client timeout_seconds must be positive");
    if (temperature < 0 || temperature > 2) throw ValidationError("client temperature must be in [0, 2]");
  }
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Content of the first choice. `temperature` overrides the configured one.
  virtual std::string complete(std::string_view system, std::string_view user,
                               std::optional<double> temperature = std::nullopt) = 0;
};

inline nlohmann::ordered_json chat_request_body(const std::string& model, std::string_view system,
                                                std::string_view user, double temperature) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array({
      {{"role", "system"}, {"content", std::string(system)}},
      {{"role", "user"}, {"content", std::string(user)}},
  });
  body["temperature"] = temperature;
  return body;
}

inline std::string first_choice_content(std::string_view response_body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(response_body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw ProtocolError("response has no choices");
  }
  const auto& choice = j["choices"][0];
  if (choice.contains("message") && choice["message"].contains("content") && choice["message"]["content"].is_string()) {
    return choice["message"]["content"].get<std::string>();
  }
  if (choice.contains("text") && choice["text"].is_string()) return choice["text"].get<std::string>();
  throw ProtocolError("first choice has no message content");
}

namespace detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint split_url(const std::string& url) {
  auto scheme = url.find("://");
  auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (prefix.ends_with("/chat/completions")) e.path = prefix;
  else if (prefix.empty()) e.path = "/v1/chat/completions";
  else e.path = prefix + "/chat/completions";
  return e;
}

inline std::string excerpt(std::string_view body, std::size_t limit = 200) {
  return std::string(body.substr(0, limit));
}

}  // namespace detail

// Retries transport failures, 429 and 5xx with exponential backoff; other
// 4xx responses are terminal. The API key is read from the environment on
// every call and only ever sent in the Authorization header.
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(ClientConfig cfg) : cfg_(std::move(cfg)), endpoint_(detail::split_url(cfg_.base_url)) {
    cfg_.validate();
  }

  const ClientConfig& config() const noexcept { return cfg_; }

  std::string complete(std::string_view system, std::string_view user,
                       std::optional<double> temperature = std::nullopt) override {
    const std::string payload =
        chat_request_body(cfg_.model_name, system, user, temperature.value_or(cfg_.temperature)).dump();
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    int last_status = 0;
    std::string last_body;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        long delay = static_cast<long>(cfg_.backoff_initial_ms) << std::min(attempt - 1, 20);
        std::this_thread::sleep_for(std::chrono::milliseconds(std::min<long>(delay, cfg_.backoff_max_ms)));
      }
      httplib::Client cli(endpoint_.origin);
      auto secs = static_cast<time_t>(cfg_.timeout_seconds);
      auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      auto res = cli.Post(endpoint_.path, headers, payload, "application/json");
      if (!res) {
        last_status = 0;
        last_body = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 200 && res->status < 300) return first_choice_content(res->body);
      last_status = res->status;
      last_body = detail::excerpt(res->body);
      if (res->status != 429 && res->status < 500) break;
    }
    throw RequestError(last_status, last_body);
  }

 private:
  ClientConfig cfg_;
  detail::Endpoint endpoint_;
};

// Scripted chat-completion server for tests. Each script line is one JSON
// object, consumed in arrival order:
//   {"content": "..."}             200 with that assistant message
//   {"echo": true}                 200 echoing the user message
//   {"status": 500, "body": ...}   that status with the given body
//   {"choices": [...]}             served verbatim with 200
// A line with "repeat": true is never consumed. A line with "when": "text"
// is a standing rule for requests whose user message contains that text; rules
// are checked first, so replies stay deterministic under concurrent requests.
// Once the script runs out every request gets 500.
class StubServer {
 public:
  struct Received {
    std::string body;
    std::string authorization;
  };

  explicit StubServer(std::vector<nlohmann::json> script) {
    for (auto& step : script) {
      if (step.contains("when")) rules_.push_back(std::move(step));
      else script_.push_back(std::move(step));
    }
    server_.Post(R"(.*)", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
  }

  static std::vector<nlohmann::json> load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stub script " + path);
    std::vector<nlohmann::json> lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        lines.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception& e) {
        throw LoadError("stub script line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return lines;
  }

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;
  ~StubServer() { stop(); }

  // Binds to an ephemeral port (or `port` when non-zero) and serves on a
  // background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ <= 0) throw IoError("stub server cannot bind " + host);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Serves on the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw IoError("stub server cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::vector<Received> received() const {
    std::lock_guard lock(mu_);
    return received_;
  }

 private:
  static nlohmann::ordered_json completion(const std::string& content) {
    nlohmann::ordered_json j;
    j["id"] = "stub";
    j["object"] = "chat.completion";
    j["choices"] = nlohmann::ordered_json::array(
        {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}, {"finish_reason", "stop"}}});
    return j;
  }

  void handle(const httplib::Request& req, httplib::Response& res) {
    std::string user;
    bool parsed = true;
    try {
      auto j = nlohmann::json::parse(req.body);
      for (const auto& m : j.at("messages")) {
        if (m.value("role", "") == "user") user = m.value("content", "");
      }
    } catch (const nlohmann::json::exception&) {
      parsed = false;
    }
    nlohmann::json step;
    {
      std::lock_guard lock(mu_);
      received_.push_back({req.body, req.get_header_value("Authorization")});
      auto rule = std::find_if(rules_.begin(), rules_.end(), [&](const nlohmann::json& r) {
        return user.find(r["when"].get<std::string>()) != std::string::npos;
      });
      if (rule != rules_.end()) {
        step = *rule;
      } else if (script_.empty()) {
        res.status = 500;
        res.set_content(R"({"error":"stub script exhausted"})", "application/json");
        return;
      } else {
        step = script_.front();
        if (!step.value("repeat", false)) script_.pop_front();
      }
    }
    if (step.contains("status")) {
      res.status = step["status"].get<int>();
      const auto& body = step.contains("body") ? step["body"] : nlohmann::json::object();
      res.set_content(body.is_string() ? body.get<std::string>() : body.dump(), "application/json");
    } else if (step.value("echo", false)) {
      if (!parsed) {
        res.status = 400;
        return;
      }
      res.set_content(completion(user).dump(), "application/json");
    } else if (step.contains("content")) {
      res.set_content(completion(step["content"].get<std::string>()).dump(), "application/json");
    } else {
      nlohmann::json verbatim = step;
      verbatim.erase("repeat");
      verbatim.erase("when");
      res.set_content(verbatim.dump(), "application/json");
    }
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::deque<nlohmann::json> script_;
  std::vector<nlohmann::json> rules_;
  std::vector<Received> received_;
};

}  // namespace tunesmith
