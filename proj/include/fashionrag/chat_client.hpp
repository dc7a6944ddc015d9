#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fashionrag/genkit.hpp"
#include "fashionrag/log.hpp"

namespace fashionrag::genkit {

struct Endpoint {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path;

  // Throws config_error for anything that is not an absolute http(s) URL.
  static Endpoint parse(std::string_view url);
  std::string origin() const;
};

struct GenParams {
  double temperature = 0.7;
  int max_tokens = 250;
  std::string endpoint;
  std::string api_key;
  std::string model = "llama3-70b-8192";
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds backoff_base{250};
  int max_concurrency = 4;

  // Overlays GENAI_ENDPOINT, GENAI_API_KEY and GENAI_MODEL when set.
  GenParams with_env() const;
  bool configured() const noexcept { return !endpoint.empty() && !api_key.empty(); }
  // Throws config_error on out-of-range values or a malformed endpoint URL.
  void validate() const;
};

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.7;
  int max_tokens = 250;
};

// OpenAI-style chat-completion body.
nlohmann::json to_request_body(const ChatRequest& request);
// choices[0].message.content, or nullopt when the body does not have it.
std::optional<std::string> parse_completion(std::string_view body);

struct HttpResult {
  int status = 0;           // 0: no HTTP response (connect/read failure or timeout)
  std::string body;
  std::string error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResult post_json(const std::string& body) = 0;
};

// cpp-httplib transport; one connection per call so it is safe to share.
class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(Endpoint endpoint, std::string api_key, std::chrono::milliseconds timeout);
  HttpResult post_json(const std::string& body) override;

 private:
  Endpoint endpoint_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Caption + hashtag generation against a chat-completion endpoint with the
// rule-based fallback behind it. Safe to call concurrently; at most
// max_concurrency requests are in flight at once.
class Generator {
 public:
  // Throws config_error for a malformed endpoint. Without endpoint or key every
  // call falls back. A custom transport replaces the HTTP one (tests).
  Generator(GenParams params, PromptTemplate tpl,
            std::shared_ptr<ChatTransport> transport = nullptr, Sleeper sleeper = nullptr);

  PostBundle generate(const EvidencePack& pack, RunLog& log) const;

  const GenParams& params() const noexcept { return params_; }
  bool llm_enabled() const noexcept { return transport_ != nullptr; }

 private:
  std::optional<std::string> complete(const std::string& prompt, std::string_view stage,
                                      RunLog& log) const;

  GenParams params_;
  PromptTemplate template_;
  std::shared_ptr<ChatTransport> transport_;
  Sleeper sleeper_;
  std::unique_ptr<std::counting_semaphore<256>> slots_;
};

PostBundle generate(const EvidencePack& pack, const GenParams& params, const PromptTemplate& tpl,
                    RunLog& log);

}  // namespace fashionrag::genkit
