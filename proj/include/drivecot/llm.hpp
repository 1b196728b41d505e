#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "drivecot/errors.hpp"

namespace drivecot::llm {

enum class ProviderErrorKind { Transport, Status, Parse, Exhausted };

const char* to_string(ProviderErrorKind kind);

class ProviderError : public Error {
 public:
  ProviderError(ProviderErrorKind kind, const std::string& message, int attempts = 1,
                int http_status = 0)
      : Error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        attempts_(attempts),
        http_status_(http_status) {}

  ProviderErrorKind kind() const { return kind_; }
  int attempts() const { return attempts_; }
  int http_status() const { return http_status_; }

 private:
  ProviderErrorKind kind_;
  int attempts_;
  int http_status_;
};

struct EndpointConfig {
  std::string base_url;     // http://host:port
  std::string model_name;
  std::string api_key_env;  // env var holding the bearer token; empty = no auth
  double timeout_s{30.0};
  int max_retries{3};
  double backoff_base_s{0.5};
  int max_concurrent{4};

  void validate() const;
};

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::vector<std::string> image_refs;  // URLs or data: URIs, sent as content parts
  double temperature{0.7};
  double top_p{1.0};
};

struct TokenUsage {
  int prompt_tokens{0};
  int completion_tokens{0};
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  int attempts{1};
};

// Anything that can answer a chat request: the HTTP client below, or a
// scripted stand-in inside tests.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

// Chat-completions JSON payload for the request (messages array of
// role/content; image refs become image_url content parts).
nlohmann::json build_chat_payload(const EndpointConfig& cfg, const ChatRequest& req);

// Extracts choices[0].message.content and the usage counters. Throws
// ProviderError{Parse} when the body does not follow the wire format.
std::string parse_chat_body(const nlohmann::json& body, TokenUsage& usage);

// Upper bound of the jittered delay before retry `attempt` (0-based):
// backoff_base * 2^attempt. The actual sleep is uniform in [0, bound].
double backoff_cap_s(const EndpointConfig& cfg, int attempt);

// Blocking HTTP client with exponential-backoff retries on 429/5xx/timeouts
// and an admission gate capping in-flight requests at max_concurrent.
// Thread-safe; one instance per endpoint.
class HttpChatClient : public ChatProvider {
 public:
  explicit HttpChatClient(EndpointConfig cfg, std::uint64_t jitter_seed = 0x5eedf00d);

  ChatResponse complete(const ChatRequest& req) override;

  const EndpointConfig& config() const { return cfg_; }

 private:
  double next_jitter();

  EndpointConfig cfg_;
  std::mutex gate_mutex_;
  std::condition_variable gate_cv_;
  int available_slots_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

// Pure `{name}` substitution. A brace group is a placeholder only when it
// wraps a bare identifier; other braces pass through (JSON examples in
// templates stay intact). Unknown placeholders raise MissingPlaceholder.
std::string render_prompt(const std::string& tmpl,
                          const std::map<std::string, std::string>& vars);

}  // namespace drivecot::llm
