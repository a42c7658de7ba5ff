#pragma once

// Provider interface over a live chat-completions endpoint and a replay
// provider backed by a run ledger.

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <semaphore>
#include <string>

#include "llmconf/case_store.hpp"

namespace llmconf {

struct SamplingParams {
  double temperature = 1.0;
  int max_output_tokens = 4096;
  std::string model_id;

  // Throws ArgumentError for a non-finite or negative temperature or a
  // non-positive token limit.
  void validate() const;
};

struct Completion {
  std::string text;  // exactly as returned, untrimmed
  std::map<std::string, std::string> provider_meta;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual Completion complete(const std::string& prompt, const SamplingParams& params,
                              const RunKey& key) = 0;
};

// Serves completions from a ledger. A record stored as failed with no text
// replays as a non-transient ProviderUnavailable.
class ReplayProvider final : public Provider {
 public:
  explicit ReplayProvider(std::shared_ptr<const RunLedger> ledger);
  explicit ReplayProvider(RunLedger ledger);

  Completion complete(const std::string& prompt, const SamplingParams& params,
                      const RunKey& key) override;

 private:
  std::shared_ptr<const RunLedger> ledger_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{60000};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Full-jitter backoff delay before retry number `retry` (1-based):
// uniform in [0, min(max_delay, base * multiplier^(retry-1))].
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, double unit);

// Calls `request` until it succeeds, throws a non-transient error, or the
// attempt budget is spent. Only ProviderError subclasses with transient()
// set are retried; anything else propagates immediately. On exhaustion the
// last error is rethrown as the same class with the attempt count attached.
Completion with_retry(const std::function<Completion()>& request, const RetryPolicy& policy,
                      const Sleeper& sleep = {});

struct HttpProviderConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  int max_inflight = 4;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
};

// OpenAI-compatible chat-completions client. Safe to call from many
// threads; at most `max_inflight` HTTP requests are outstanding at once.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config, Sleeper sleep = {});

  Completion complete(const std::string& prompt, const SamplingParams& params,
                      const RunKey& key) override;

  // Largest number of simultaneous requests observed so far.
  int peak_inflight() const { return peak_inflight_.load(); }
  int requests_sent() const { return requests_sent_.load(); }

 private:
  Completion post_once(const std::string& body);

  HttpProviderConfig config_;
  Sleeper sleep_;
  std::string origin_;     // scheme://host[:port]
  std::string path_;       // {base path}/chat/completions
  std::counting_semaphore<> slots_;
  std::atomic<int> inflight_{0};
  std::atomic<int> peak_inflight_{0};
  std::atomic<int> requests_sent_{0};
};

// Builds the JSON body of a chat-completions request.
std::string chat_request_body(const std::string& prompt, const SamplingParams& params);

}  // namespace llmconf
