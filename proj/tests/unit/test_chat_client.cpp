#include <catch_amalgamated.hpp>

#include <httplib.h>

#include <atomic>
#include <deque>
#include <mutex>
#include <thread>

#include "fashionrag/chat_client.hpp"
#include "fashionrag/error.hpp"

using namespace fashionrag;
using namespace fashionrag::genkit;
using namespace std::chrono_literals;
using Strings = std::vector<std::string>;

namespace {

std::string completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

// Replays scripted responses and records every request body.
class ScriptedTransport final : public ChatTransport {
 public:
  explicit ScriptedTransport(std::deque<HttpResult> script) : script_(std::move(script)) {}

  HttpResult post_json(const std::string& body) override {
    std::lock_guard lock(mutex_);
    bodies.push_back(body);
    if (script_.empty()) return HttpResult{0, "", "script exhausted"};
    auto r = script_.front();
    script_.pop_front();
    return r;
  }

  Strings bodies;

 private:
  std::mutex mutex_;
  std::deque<HttpResult> script_;
};

HttpResult ok(const std::string& content) { return HttpResult{200, completion(content), ""}; }
HttpResult timeout() { return HttpResult{0, "", "Read timeout"}; }

GenParams configured() {
  GenParams p;
  p.endpoint = "https://llm.example.com/v1/chat/completions";
  p.api_key = "test-key";
  return p;
}

EvidencePack navy_pack() {
  EvidencePack p;
  p.detections.push_back(GarmentEvidence{"shirt", "navy", std::nullopt, 0.9});
  p.fabric.facet = retrieval::Facet::fabric;
  p.fabric.label = "cotton";
  p.fabric.confidence = 0.7;
  p.gender.facet = retrieval::Facet::gender;
  p.gender.label = "women";
  p.gender.confidence = 0.7;
  return p;
}

std::string tags(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += "#Tag" + std::to_string(i) + " ";
  return s;
}

struct Recorder {
  std::vector<std::chrono::milliseconds> sleeps;
  Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
  }
};

}  // namespace

TEST_CASE("endpoint URL parsing") {
  const auto e = Endpoint::parse("https://api.groq.com/openai/v1/chat/completions");
  CHECK(e.scheme == "https");
  CHECK(e.host == "api.groq.com");
  CHECK(e.port == 443);
  CHECK(e.path == "/openai/v1/chat/completions");
  const auto l = Endpoint::parse("http://127.0.0.1:8080");
  CHECK(l.port == 8080);
  CHECK(l.path == "/");
  for (const char* bad : {"", "llm.example.com/v1", "ftp://x/y", "https://", "https://:80/x", "http://h:0/",
                          "http://h:99999/", "http://h:80a/", "http://user:pw@h/", "https://bad host/x"}) {
    INFO(bad);
    CHECK_THROWS_AS(Endpoint::parse(bad), Error);
  }
}

TEST_CASE("malformed endpoint is a configuration error, not a fallback") {
  GenParams p = configured();
  p.endpoint = "not a url";
  RunLog log;
  try {
    generate(navy_pack(), p, PromptTemplate::defaults(), log);
    FAIL("expected config_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
  }
  GenParams q;
  q.temperature = -0.1;
  CHECK_THROWS_AS(q.validate(), Error);
  q = GenParams{};
  q.max_tokens = 0;
  CHECK_THROWS_AS(q.validate(), Error);
}

TEST_CASE("request body and completion parsing") {
  const auto body = to_request_body(ChatRequest{"m", "sys", "user text", 0.7, 250});
  CHECK(body.at("model") == "m");
  CHECK(body.at("messages").size() == 2);
  CHECK(body.at("messages").at(0).at("role") == "system");
  CHECK(body.at("messages").at(1).at("content") == "user text");
  CHECK(body.at("temperature") == 0.7);
  CHECK(body.at("max_tokens") == 250);
  CHECK(parse_completion(completion("hi")) == std::optional<std::string>("hi"));
  CHECK_FALSE(parse_completion("{}").has_value());
  CHECK_FALSE(parse_completion("garbage").has_value());
  CHECK_FALSE(parse_completion(R"({"choices":[{"message":{"content":null}}]})").has_value());
}

TEST_CASE("endpoint unset gives the fallback bundle") {
  RunLog log;
  const auto b = generate(navy_pack(), GenParams{}, PromptTemplate::defaults(), log);
  CHECK(b.provenance == Provenance::fallback);
  CHECK(to_json(b).dump() == to_json(fallback_generate(navy_pack())).dump());
  CHECK(log.has_event("generation_fallback"));
  CHECK(log.warnings().empty());

  GenParams key_only;
  key_only.api_key = "k";
  CHECK_FALSE(Generator(key_only, PromptTemplate::defaults()).llm_enabled());
}

TEST_CASE("two calls: caption then hashtags seeded with the caption") {
  auto t = std::make_shared<ScriptedTransport>(
      std::deque<HttpResult>{ok("A crisp navy cotton shirt. Made for her."), ok(tags(16))});
  Recorder rec;
  Generator g(configured(), PromptTemplate::defaults(), t, rec.sleeper());
  RunLog log;
  const auto b = g.generate(navy_pack(), log);
  CHECK(b.provenance == Provenance::llm);
  CHECK(b.caption == "A crisp navy cotton shirt. Made for her.");
  CHECK(b.hashtags.size() == 16);
  REQUIRE(t->bodies.size() == 2);
  const auto second = nlohmann::json::parse(t->bodies[1]);
  const std::string user = second.at("messages").at(1).at("content");
  CHECK(user.find("A crisp navy cotton shirt.") != std::string::npos);
  CHECK(rec.sleeps.empty());
  CHECK(log.warnings().empty());
}

TEST_CASE("19 returned tags are truncated to 18 in order") {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{ok("Caption."), ok(tags(19))});
  Generator g(configured(), PromptTemplate::defaults(), t, Recorder{}.sleeper());
  RunLog log;
  const auto b = g.generate(navy_pack(), log);
  CHECK(b.provenance == Provenance::llm);
  REQUIRE(b.hashtags.size() == 18);
  for (int i = 0; i < 18; ++i) CHECK(b.hashtags[static_cast<std::size_t>(i)] == "#Tag" + std::to_string(i));
  CHECK(log.has_event("hashtags_truncated"));
}

TEST_CASE("too few tags are padded with fallback tags") {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{ok("Caption."), ok("#Summer #Linen")});
  Generator g(configured(), PromptTemplate::defaults(), t, Recorder{}.sleeper());
  RunLog log;
  const auto b = g.generate(navy_pack(), log);
  CHECK(b.provenance == Provenance::llm);
  CHECK(b.hashtags.size() == 15);
  CHECK(b.hashtags[0] == "#Summer");
  CHECK(b.hashtags[2] == "#NavyShirt");
  CHECK(log.has_event("hashtags_padded"));
}

TEST_CASE("timeouts exhaust retries with exponential backoff, then fall back") {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{timeout(), timeout(), timeout()});
  Recorder rec;
  Generator g(configured(), PromptTemplate::defaults(), t, rec.sleeper());
  RunLog log;
  const auto b = g.generate(navy_pack(), log);
  CHECK(b.provenance == Provenance::fallback);
  CHECK(to_json(b).dump() == to_json(fallback_generate(navy_pack())).dump());
  CHECK(t->bodies.size() == 3);
  CHECK(rec.sleeps == std::vector<std::chrono::milliseconds>{250ms, 500ms});
  CHECK(log.has_event("llm_retries_exhausted"));
  CHECK(log.has_event("generation_fallback"));
  CHECK(log.warnings().size() >= 3);
}

TEST_CASE("a 5xx then success recovers on retry") {
  auto t = std::make_shared<ScriptedTransport>(
      std::deque<HttpResult>{HttpResult{503, "busy", ""}, ok("Caption."), timeout(), ok(tags(15))});
  Recorder rec;
  Generator g(configured(), PromptTemplate::defaults(), t, rec.sleeper());
  RunLog log;
  const auto b = g.generate(navy_pack(), log);
  CHECK(b.provenance == Provenance::llm);
  CHECK(t->bodies.size() == 4);
  CHECK(rec.sleeps == std::vector<std::chrono::milliseconds>{250ms, 250ms});
  CHECK(log.has_event("llm_server_error"));
}

TEST_CASE("4xx fails fast to the fallback") {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{HttpResult{401, "denied", ""}, ok("x")});
  Recorder rec;
  Generator g(configured(), PromptTemplate::defaults(), t, rec.sleeper());
  RunLog log;
  const auto b = g.generate(navy_pack(), log);
  CHECK(b.provenance == Provenance::fallback);
  CHECK(t->bodies.size() == 1);
  CHECK(rec.sleeps.empty());
  CHECK(log.has_event("llm_request_rejected"));
}

TEST_CASE("bad response body and empty caption fall back") {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{HttpResult{200, "{}", ""}});
  RunLog log;
  CHECK(Generator(configured(), PromptTemplate::defaults(), t, Recorder{}.sleeper()).generate(navy_pack(), log).provenance ==
        Provenance::fallback);
  CHECK(log.has_event("llm_bad_response"));

  auto t2 = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{ok("   ")});
  RunLog log2;
  CHECK(Generator(configured(), PromptTemplate::defaults(), t2, Recorder{}.sleeper()).generate(navy_pack(), log2).provenance ==
        Provenance::fallback);

  auto t3 = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{ok("Caption."), HttpResult{400, "", ""}});
  RunLog log3;
  CHECK(Generator(configured(), PromptTemplate::defaults(), t3, Recorder{}.sleeper()).generate(navy_pack(), log3).provenance ==
        Provenance::fallback);
}

TEST_CASE("empty detections skip the endpoint") {
  auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResult>{ok("x"), ok("y")});
  Generator g(configured(), PromptTemplate::defaults(), t, Recorder{}.sleeper());
  RunLog log;
  const auto b = g.generate(EvidencePack{}, log);
  CHECK(b.caption == "Fresh looks coming soon.");
  CHECK(t->bodies.empty());
}

TEST_CASE("concurrent generation respects the request cap") {
  class SlowTransport final : public ChatTransport {
   public:
    HttpResult post_json(const std::string& body) override {
      const int now = ++in_flight;
      int seen = peak.load();
      while (now > seen && !peak.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(5ms);
      --in_flight;
      const bool hashtag_call = body.find("hashtags") != std::string::npos;
      return ok(hashtag_call ? tags(15) : "Caption.");
    }
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
  };
  auto t = std::make_shared<SlowTransport>();
  GenParams p = configured();
  p.max_concurrency = 2;
  Generator g(p, PromptTemplate::defaults(), t, Recorder{}.sleeper());
  std::vector<std::thread> threads;
  std::atomic<int> llm{0};
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      RunLog log;
      if (g.generate(navy_pack(), log).provenance == Provenance::llm) ++llm;
    });
  }
  for (auto& th : threads) th.join();
  CHECK(llm == 8);
  CHECK(t->peak <= 2);
  CHECK(t->peak >= 1);
}

TEST_CASE("HTTP transport against a local server") {
  httplib::Server server;
  std::atomic<int> calls{0};
  std::string auth;
  std::string body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    auth = req.get_header_value("Authorization");
    body = req.body;
    res.set_content(completion("#A #B"), "application/json");
  });
  server.Post("/slow", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    std::this_thread::sleep_for(400ms);
    res.set_content(completion("late"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpChatTransport transport(Endpoint::parse("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"),
                              "secret", 2000ms);
  const auto r = transport.post_json(R"({"x":1})");
  CHECK(r.status == 200);
  CHECK(parse_completion(r.body) == std::optional<std::string>("#A #B"));
  CHECK(auth == "Bearer secret");
  CHECK(body == R"({"x":1})");

  // Read timeouts surface as status 0, are retried, then fall back.
  GenParams p;
  p.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/slow";
  p.api_key = "k";
  p.timeout = 100ms;
  p.retries = 1;
  Recorder rec;
  Generator g(p, PromptTemplate::defaults(), nullptr, rec.sleeper());
  RunLog log;
  calls = 0;
  const auto b = g.generate(navy_pack(), log);
  CHECK(b.provenance == Provenance::fallback);
  CHECK(calls == 2);
  CHECK(log.has_event("llm_transport_error"));

  server.stop();
  th.join();
}
