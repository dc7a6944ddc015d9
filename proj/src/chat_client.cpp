#include "fashionrag/chat_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "fashionrag/error.hpp"
#include "fashionrag/text.hpp"

namespace fashionrag::genkit {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

// RAII slot on the request semaphore.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<256>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<256>& sem_;
};

}  // namespace

Endpoint Endpoint::parse(std::string_view url) {
  const auto fail = [&](const std::string& why) {
    return Error(ErrorCode::config_error, "malformed endpoint URL '" + std::string(url) + "': " + why);
  };
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw fail("missing scheme");
  Endpoint ep;
  ep.scheme = text::to_lower(url.substr(0, scheme_end));
  if (ep.scheme != "http" && ep.scheme != "https") throw fail("scheme must be http or https");

  std::string_view rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  ep.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (authority.empty()) throw fail("missing host");
  if (authority.find('@') != std::string_view::npos) throw fail("credentials in URL are not supported");

  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
    const auto port_text = authority.substr(colon + 1);
    const auto port = text::parse_double(port_text);
    if (port_text.empty() || !port || *port != static_cast<int>(*port) || *port < 1 || *port > 65535 ||
        port_text.find_first_not_of("0123456789") != std::string_view::npos) {
      throw fail("invalid port");
    }
    ep.port = static_cast<int>(*port);
    authority = authority.substr(0, colon);
  } else {
    ep.port = ep.scheme == "https" ? 443 : 80;
  }
  if (authority.empty()) throw fail("missing host");
  for (char c : authority) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '/' || c == '?' || c == '#') {
      throw fail("invalid host");
    }
  }
  ep.host = std::string(authority);
  return ep;
}

std::string Endpoint::origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

GenParams GenParams::with_env() const {
  GenParams p = *this;
  p.endpoint = env_or("GENAI_ENDPOINT", p.endpoint);
  p.api_key = env_or("GENAI_API_KEY", p.api_key);
  p.model = env_or("GENAI_MODEL", p.model);
  return p;
}

void GenParams::validate() const {
  if (!(temperature >= 0.0)) throw Error(ErrorCode::config_error, "temperature must be >= 0");
  if (max_tokens < 1) throw Error(ErrorCode::config_error, "max_tokens must be >= 1");
  if (retries < 0) throw Error(ErrorCode::config_error, "retries must be >= 0");
  if (timeout.count() <= 0) throw Error(ErrorCode::config_error, "timeout must be positive");
  if (max_concurrency < 1 || max_concurrency > 256) {
    throw Error(ErrorCode::config_error, "max_concurrency must be in [1, 256]");
  }
  if (!endpoint.empty()) Endpoint::parse(endpoint);
}

nlohmann::json to_request_body(const ChatRequest& request) {
  return nlohmann::json{
      {"model", request.model},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", request.system}},
                              {{"role", "user"}, {"content", request.user}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens}};
}

std::optional<std::string> parse_completion(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) return std::nullopt;
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

HttpChatTransport::HttpChatTransport(Endpoint endpoint, std::string api_key,
                                     std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_(timeout) {}

HttpResult HttpChatTransport::post_json(const std::string& body) {
  httplib::Client client(endpoint_.origin());
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  HttpResult result;
  const auto response = client.Post(endpoint_.path, headers, body, "application/json");
  if (!response) {
    result.error = httplib::to_string(response.error());
    return result;
  }
  result.status = response->status;
  result.body = response->body;
  return result;
}

Generator::Generator(GenParams params, PromptTemplate tpl, std::shared_ptr<ChatTransport> transport,
                     Sleeper sleeper)
    : params_(std::move(params)), template_(std::move(tpl)), sleeper_(std::move(sleeper)) {
  params_.validate();
  template_.validate();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  slots_ = std::make_unique<std::counting_semaphore<256>>(params_.max_concurrency);
  if (params_.configured()) {
    transport_ = transport ? std::move(transport)
                           : std::make_shared<HttpChatTransport>(Endpoint::parse(params_.endpoint),
                                                                 params_.api_key, params_.timeout);
  }
}

std::optional<std::string> Generator::complete(const std::string& prompt, std::string_view stage,
                                               RunLog& log) const {
  const ChatRequest request{params_.model, template_.instructions, prompt, params_.temperature,
                            params_.max_tokens};
  const std::string body = to_request_body(request).dump();
  const int attempts = 1 + params_.retries;

  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) sleeper_(params_.backoff_base * (1 << (attempt - 2)));
    HttpResult result;
    {
      SlotGuard slot(*slots_);
      result = transport_->post_json(body);
    }
    const nlohmann::json where{{"stage", stage}, {"attempt", attempt}, {"of", attempts}};
    if (result.status == 0) {
      auto data = where;
      data["error"] = result.error;
      log.warn("llm_transport_error", std::move(data));
      continue;
    }
    if (result.status >= 500) {
      auto data = where;
      data["status"] = result.status;
      log.warn("llm_server_error", std::move(data));
      continue;
    }
    if (result.status < 200 || result.status >= 300) {
      auto data = where;
      data["status"] = result.status;
      log.warn("llm_request_rejected", std::move(data));
      return std::nullopt;
    }
    auto content = parse_completion(result.body);
    if (!content) {
      log.warn("llm_bad_response", where);
      return std::nullopt;
    }
    return content;
  }
  log.warn("llm_retries_exhausted", {{"stage", stage}, {"attempts", attempts}});
  return std::nullopt;
}

PostBundle Generator::generate(const EvidencePack& pack, RunLog& log) const {
  if (!transport_) {
    log.info("generation_fallback", {{"reason", "endpoint_not_configured"}});
    return fallback_generate(pack);
  }
  if (pack.detections.empty()) {
    log.warn("generation_fallback", {{"reason", "no_detections"}});
    return fallback_generate(pack);
  }

  const auto raw_caption = complete(render_caption_prompt(pack, template_), "caption", log);
  std::string caption = raw_caption ? finalize_caption(*raw_caption) : std::string{};
  if (caption.empty()) {
    log.warn("generation_fallback", {{"reason", raw_caption ? "empty_caption" : "caption_failed"}});
    return fallback_generate(pack);
  }

  const auto raw_tags = complete(render_hashtag_prompt(pack, caption, template_), "hashtags", log);
  if (!raw_tags) {
    log.warn("generation_fallback", {{"reason", "hashtags_failed"}});
    return fallback_generate(pack);
  }

  PostBundle bundle;
  bundle.provenance = Provenance::llm;
  bundle.evidence = pack;
  bundle.caption = std::move(caption);
  bundle.hashtags = parse_hashtags(*raw_tags);
  const std::size_t returned = bundle.hashtags.size();
  const std::size_t padded = finalize_hashtags(bundle.hashtags, pack);
  if (padded > 0) {
    log.warn("hashtags_padded", {{"returned", returned}, {"padded", padded}});
  } else if (returned > kMaxHashtags) {
    log.info("hashtags_truncated", {{"returned", returned}, {"kept", bundle.hashtags.size()}});
  }
  return bundle;
}

PostBundle generate(const EvidencePack& pack, const GenParams& params, const PromptTemplate& tpl,
                    RunLog& log) {
  return Generator(params, tpl).generate(pack, log);
}

}  // namespace fashionrag::genkit
