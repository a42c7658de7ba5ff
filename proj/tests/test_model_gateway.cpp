#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <future>
#include <thread>

#include "llmconf/errors.hpp"
#include "llmconf/model_gateway.hpp"
#include "test_support.hpp"

using namespace llmconf;
using testsupport::sc;

namespace {

RunLedger small_ledger() {
  RunLedger ledger(LedgerHeader{"sha", 11, 1.0, "m"});
  std::vector<RunRecord> runs;
  for (int i = 0; i < 11; ++i) {
    runs.push_back(make_ok_record(sc("c1", i), "  run " + std::to_string(i) + "\nDiagnosis: X \n",
                                  "X", "m", 1.0));
  }
  runs.push_back(make_failed_record(sc("c2", 0), "m", 1.0));
  ledger.append(runs);
  return ledger;
}

// Local chat-completions stand-in. `handler` decides each response.
class MockServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit MockServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) { handler_(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void reply(httplib::Response& res, const std::string& content) {
  nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
                         {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 5}}}};
  res.set_content(body.dump(), "application/json");
}

HttpProviderConfig config_for(const MockServer& server) {
  HttpProviderConfig cfg;
  cfg.base_url = server.base_url();
  cfg.api_key = "test-key";
  cfg.retry.base_delay = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(10);
  return cfg;
}

const Sleeper kNoSleep = [](std::chrono::milliseconds) {};

}  // namespace

TEST(Replay, PresentKeyReturnsTextByteExactly) {
  ReplayProvider provider(small_ledger());
  const auto c = provider.complete("ignored", SamplingParams{}, sc("c1", 3));
  EXPECT_EQ(c.text, "  run 3\nDiagnosis: X \n");
}

TEST(Replay, AbsentKeyIsMissingKeyNamingIt) {
  ReplayProvider provider(small_ledger());
  try {
    provider.complete("p", SamplingParams{}, sc("c9", 0));
    FAIL() << "expected MissingKeyError";
  } catch (const MissingKeyError& e) {
    EXPECT_NE(std::string(e.what()).find("(c9, 0, sc)"), std::string::npos) << e.what();
    EXPECT_FALSE(e.transient());
  }
}

TEST(Replay, FailedRecordReplaysAsNonTransientFailure) {
  ReplayProvider provider(small_ledger());
  try {
    provider.complete("p", SamplingParams{}, sc("c2", 0));
    FAIL();
  } catch (const ProviderUnavailable& e) {
    EXPECT_FALSE(e.transient());
  }
}

TEST(Retry, SuccessOnFirstAttempt) {
  int attempts = 0;
  const auto c = with_retry(
      [&] {
        ++attempts;
        return Completion{"ok", {}};
      },
      RetryPolicy{3}, kNoSleep);
  EXPECT_EQ(attempts, 1);
  EXPECT_EQ(c.text, "ok");
}

TEST(Retry, TwoTransientThenSuccess) {
  int attempts = 0;
  std::vector<std::chrono::milliseconds> delays;
  const auto c = with_retry(
      [&]() -> Completion {
        if (++attempts < 3) throw ProviderUnavailable("503");
        return {"ok", {}};
      },
      RetryPolicy{3}, [&](std::chrono::milliseconds d) { delays.push_back(d); });
  EXPECT_EQ(attempts, 3);
  EXPECT_EQ(c.text, "ok");
  EXPECT_EQ(delays.size(), 2u);
}

TEST(Retry, NonTransientStopsImmediately) {
  int attempts = 0;
  EXPECT_THROW(with_retry(
                   [&]() -> Completion {
                     ++attempts;
                     throw ProviderUnavailable("400 bad request", false);
                   },
                   RetryPolicy{3}, kNoSleep),
               ProviderUnavailable);
  EXPECT_EQ(attempts, 1);
}

TEST(Retry, NonProviderErrorsPropagateUntouched) {
  int attempts = 0;
  EXPECT_THROW(with_retry(
                   [&]() -> Completion {
                     ++attempts;
                     throw std::logic_error("bug");
                   },
                   RetryPolicy{3}, kNoSleep),
               std::logic_error);
  EXPECT_EQ(attempts, 1);
}

TEST(Retry, ExhaustedRateLimitKeepsClassAndCountsAttempts) {
  int attempts = 0;
  try {
    with_retry(
        [&]() -> Completion {
          ++attempts;
          throw RateLimited("429");
        },
        RetryPolicy{4}, kNoSleep);
    FAIL();
  } catch (const RateLimited& e) {
    EXPECT_EQ(e.attempts(), 4);
    EXPECT_NE(std::string(e.what()).find("4 attempts"), std::string::npos) << e.what();
  }
  EXPECT_EQ(attempts, 4);
}

TEST(Retry, ExhaustedTransportErrorIsProviderUnavailable) {
  try {
    with_retry([]() -> Completion { throw ProviderUnavailable("connection refused"); },
               RetryPolicy{2}, kNoSleep);
    FAIL();
  } catch (const ProviderUnavailable& e) {
    EXPECT_EQ(e.attempts(), 2);
  }
}

TEST(Retry, BackoffIsFullJitterUnderTheCap) {
  RetryPolicy p;
  p.base_delay = std::chrono::milliseconds(1000);
  p.max_delay = std::chrono::milliseconds(5000);
  EXPECT_EQ(backoff_delay(p, 1, 0.0).count(), 0);
  EXPECT_EQ(backoff_delay(p, 1, 1.0).count(), 1000);
  EXPECT_EQ(backoff_delay(p, 3, 1.0).count(), 4000);
  EXPECT_EQ(backoff_delay(p, 10, 1.0).count(), 5000);
  EXPECT_EQ(backoff_delay(p, 2, 0.5).count(), 1000);
}

TEST(SamplingParams, ValidationRejectsBadValues) {
  EXPECT_THROW((SamplingParams{-0.1, 10, "m"}.validate()), ArgumentError);
  EXPECT_THROW((SamplingParams{std::nan(""), 10, "m"}.validate()), ArgumentError);
  EXPECT_THROW((SamplingParams{1.0, 0, "m"}.validate()), ArgumentError);
  EXPECT_NO_THROW((SamplingParams{0.0, 1, "m"}.validate()));
}

TEST(RequestBody, CarriesParamsVerbatimWithSingleUserMessage) {
  const auto body = nlohmann::json::parse(chat_request_body("hello", SamplingParams{1.0, 4096, "gpt-4"}));
  EXPECT_EQ(body["model"], "gpt-4");
  EXPECT_EQ(body["temperature"].get<double>(), 1.0);
  EXPECT_EQ(body["max_tokens"], 4096);
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "hello");
}

TEST(HttpProvider, SendsTemperatureAndBearerAndReturnsContentUntrimmed) {
  nlohmann::json seen;
  std::string auth;
  MockServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    reply(res, "  Rationale...\nDiagnosis: X\n");
  });
  HttpProvider provider(config_for(server), kNoSleep);
  const auto c = provider.complete("prompt text", SamplingParams{1.0, 4096, "gpt-4"}, sc("c1", 0));
  EXPECT_EQ(c.text, "  Rationale...\nDiagnosis: X\n");
  EXPECT_EQ(seen["temperature"].get<double>(), 1.0);
  EXPECT_EQ(seen["messages"][0]["content"], "prompt text");
  EXPECT_EQ(auth, "Bearer test-key");
  EXPECT_EQ(c.provider_meta.at("http_status"), "200");
  EXPECT_EQ(c.provider_meta.at("usage.completion_tokens"), "5");
}

TEST(HttpProvider, RetriesRateLimitAndServerErrors) {
  std::atomic<int> hits{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    const int n = ++hits;
    if (n == 1) {
      res.status = 429;
    } else if (n == 2) {
      res.status = 503;
    } else {
      reply(res, "done");
    }
  });
  HttpProvider provider(config_for(server), kNoSleep);
  EXPECT_EQ(provider.complete("p", SamplingParams{}, sc("c1", 0)).text, "done");
  EXPECT_EQ(hits.load(), 3);
}

TEST(HttpProvider, ClientErrorIsNotRetried) {
  std::atomic<int> hits{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
    res.set_content("{\"error\":\"bad\"}", "application/json");
  });
  HttpProvider provider(config_for(server), kNoSleep);
  try {
    provider.complete("p", SamplingParams{}, sc("c1", 0));
    FAIL();
  } catch (const ProviderUnavailable& e) {
    EXPECT_FALSE(e.transient());
  }
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpProvider, PersistentRateLimitSurfacesAsRateLimited) {
  MockServer server([&](const httplib::Request&, httplib::Response& res) { res.status = 429; });
  auto cfg = config_for(server);
  cfg.retry.max_attempts = 3;
  HttpProvider provider(cfg, kNoSleep);
  EXPECT_THROW(provider.complete("p", SamplingParams{}, sc("c1", 0)), RateLimited);
  EXPECT_EQ(provider.requests_sent(), 3);
}

TEST(HttpProvider, UnreachableHostIsProviderUnavailable) {
  HttpProviderConfig cfg;
  cfg.base_url = "http://127.0.0.1:1/v1";
  cfg.retry.max_attempts = 2;
  cfg.timeout = std::chrono::seconds(2);
  HttpProvider provider(cfg, kNoSleep);
  EXPECT_THROW(provider.complete("p", SamplingParams{}, sc("c1", 0)), ProviderUnavailable);
}

TEST(HttpProvider, InFlightRequestsNeverExceedLimit) {
  std::atomic<int> active{0}, peak{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    const int now = ++active;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --active;
    reply(res, "ok");
  });
  auto cfg = config_for(server);
  cfg.max_inflight = 2;
  HttpProvider provider(cfg, kNoSleep);
  std::vector<std::future<Completion>> futures;
  for (int i = 0; i < 10; ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      return provider.complete("p", SamplingParams{}, sc("c1", i));
    }));
  }
  for (auto& f : futures) EXPECT_EQ(f.get().text, "ok");
  EXPECT_LE(peak.load(), 2);
  EXPECT_LE(provider.peak_inflight(), 2);
  EXPECT_EQ(provider.requests_sent(), 10);
}

TEST(HttpProvider, RejectsMalformedBaseUrl) {
  HttpProviderConfig cfg;
  cfg.base_url = "api.example.com";
  EXPECT_THROW(HttpProvider{cfg}, ArgumentError);
}
