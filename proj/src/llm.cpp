#include "drivecot/llm.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace drivecot::llm {

namespace {

constexpr const char* kChatPath = "/v1/chat/completions";

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

const char* to_string(ProviderErrorKind kind) {
  switch (kind) {
    case ProviderErrorKind::Transport: return "transport error";
    case ProviderErrorKind::Status: return "status error";
    case ProviderErrorKind::Parse: return "parse error";
    case ProviderErrorKind::Exhausted: return "retries exhausted";
  }
  return "provider error";
}

void EndpointConfig::validate() const {
  if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
  if (model_name.empty()) throw ConfigError("endpoint model_name is empty");
  if (!(timeout_s > 0.0)) throw ConfigError("endpoint timeout must be positive");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (backoff_base_s < 0.0) throw ConfigError("backoff_base_s must be >= 0");
  if (max_concurrent < 1) throw ConfigError("max_concurrent must be >= 1");
}

nlohmann::json build_chat_payload(const EndpointConfig& cfg, const ChatRequest& req) {
  if (req.user_text.empty()) throw Error("chat request user text is empty");

  nlohmann::json messages = nlohmann::json::array();
  if (!req.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", req.system_text}});
  }
  if (req.image_refs.empty()) {
    messages.push_back({{"role", "user"}, {"content", req.user_text}});
  } else {
    nlohmann::json parts = nlohmann::json::array();
    parts.push_back({{"type", "text"}, {"text", req.user_text}});
    for (const auto& ref : req.image_refs) {
      parts.push_back({{"type", "image_url"}, {"image_url", {{"url", ref}}}});
    }
    messages.push_back({{"role", "user"}, {"content", parts}});
  }

  return nlohmann::json{{"model", cfg.model_name},
                        {"messages", messages},
                        {"temperature", req.temperature},
                        {"top_p", req.top_p}};
}

std::string parse_chat_body(const nlohmann::json& body, TokenUsage& usage) {
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty())
    throw ProviderError(ProviderErrorKind::Parse, "response has no choices");
  const auto& first = body["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string())
    throw ProviderError(ProviderErrorKind::Parse, "choice has no message content");
  if (body.contains("usage")) {
    usage.prompt_tokens = body["usage"].value("prompt_tokens", 0);
    usage.completion_tokens = body["usage"].value("completion_tokens", 0);
  }
  return first["message"]["content"].get<std::string>();
}

double backoff_cap_s(const EndpointConfig& cfg, int attempt) {
  return cfg.backoff_base_s * std::pow(2.0, attempt);
}

HttpChatClient::HttpChatClient(EndpointConfig cfg, std::uint64_t jitter_seed)
    : cfg_(std::move(cfg)), available_slots_(cfg_.max_concurrent), rng_(jitter_seed) {
  cfg_.validate();
}

double HttpChatClient::next_jitter() {
  std::lock_guard<std::mutex> lock(rng_mutex_);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
}

ChatResponse HttpChatClient::complete(const ChatRequest& req) {
  std::string api_key;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw ConfigError("api key environment variable " + cfg_.api_key_env + " is not set");
    api_key = key;
  }

  const std::string payload = build_chat_payload(cfg_, req).dump();

  // Admission gate: at most max_concurrent requests in flight.
  {
    std::unique_lock<std::mutex> lock(gate_mutex_);
    gate_cv_.wait(lock, [this] { return available_slots_ > 0; });
    --available_slots_;
  }
  struct SlotRelease {
    HttpChatClient* self;
    ~SlotRelease() {
      std::lock_guard<std::mutex> lock(self->gate_mutex_);
      ++self->available_slots_;
      self->gate_cv_.notify_one();
    }
  } release{this};

  const int total_attempts = cfg_.max_retries + 1;
  std::string last_failure = "no attempt made";
  for (int attempt = 0; attempt < total_attempts; ++attempt) {
    if (attempt > 0) {
      const double delay_s = backoff_cap_s(cfg_, attempt - 1) * next_jitter();
      std::this_thread::sleep_for(std::chrono::duration<double>(delay_s));
    }

    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_write_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    auto result = client.Post(kChatPath, headers, payload, "application/json");
    if (!result) {
      last_failure = "transport failure: " + httplib::to_string(result.error());
      continue;  // retriable
    }
    const int status = result->status;
    if (status == 429 || status >= 500) {
      last_failure = "retriable status " + std::to_string(status);
      continue;
    }
    if (status != 200) {
      throw ProviderError(ProviderErrorKind::Status,
                          "endpoint returned status " + std::to_string(status), attempt + 1,
                          status);
    }

    nlohmann::json body = nlohmann::json::parse(result->body, nullptr, false);
    if (body.is_discarded())
      throw ProviderError(ProviderErrorKind::Parse, "response body is not JSON",
                          attempt + 1, status);
    ChatResponse response;
    response.text = parse_chat_body(body, response.usage);
    response.attempts = attempt + 1;
    return response;
  }

  throw ProviderError(ProviderErrorKind::Exhausted, last_failure, total_attempts);
}

std::string render_prompt(const std::string& tmpl,
                          const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const char c = tmpl[i];
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tmpl.size() && is_ident_char(tmpl[j])) ++j;
    if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
      const std::string name = tmpl.substr(i + 1, j - i - 1);
      const auto it = vars.find(name);
      if (it == vars.end())
        throw MissingPlaceholder("template placeholder {" + name + "} has no value");
      out += it->second;
      i = j + 1;
    } else {
      out.push_back(c);  // literal brace
      ++i;
    }
  }
  return out;
}

}  // namespace drivecot::llm
