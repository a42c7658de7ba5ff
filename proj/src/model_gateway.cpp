#include "llmconf/model_gateway.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>
#include <thread>

#include "llmconf/errors.hpp"

namespace llmconf {

void SamplingParams::validate() const {
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw ArgumentError("temperature must be finite and >= 0");
  }
  if (max_output_tokens < 1) throw ArgumentError("max_output_tokens must be >= 1");
}

// ---- replay --------------------------------------------------------------------

ReplayProvider::ReplayProvider(std::shared_ptr<const RunLedger> ledger)
    : ledger_(std::move(ledger)) {
  if (!ledger_) throw ArgumentError("replay provider needs a ledger");
}

ReplayProvider::ReplayProvider(RunLedger ledger)
    : ReplayProvider(std::make_shared<const RunLedger>(std::move(ledger))) {}

Completion ReplayProvider::complete(const std::string&, const SamplingParams&,
                                    const RunKey& key) {
  const RunRecord* rec = ledger_->find(key);
  if (!rec) throw MissingKeyError("replay ledger has no entry for " + key.str());
  if (!rec->ok() && rec->response_text.empty()) {
    throw ProviderUnavailable("recorded failure for " + key.str(), /*transient=*/false);
  }
  return Completion{rec->response_text, {{"provider", "replay"}}};
}

// ---- retry -----------------------------------------------------------------------

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, double unit) {
  const double cap = static_cast<double>(policy.max_delay.count());
  const double raw = static_cast<double>(policy.base_delay.count()) *
                     std::pow(policy.multiplier, std::max(0, retry - 1));
  return std::chrono::milliseconds(static_cast<long long>(std::min(cap, raw) * unit));
}

namespace {

double jitter_unit() {
  thread_local std::mt19937_64 gen{std::random_device{}()};
  return std::uniform_real_distribution<double>(0.0, 1.0)(gen);
}

}  // namespace

Completion with_retry(const std::function<Completion()>& request, const RetryPolicy& policy,
                      const Sleeper& sleep) {
  if (policy.max_attempts < 1) throw ArgumentError("max_attempts must be >= 1");
  for (int attempt = 1;; ++attempt) {
    try {
      return request();
    } catch (const RateLimited& e) {
      if (attempt >= policy.max_attempts) {
        throw RateLimited(std::string(e.what()) + " after " + std::to_string(attempt) +
                              " attempts",
                          attempt);
      }
    } catch (const ProviderError& e) {
      if (!e.transient()) throw;
      if (attempt >= policy.max_attempts) {
        throw ProviderUnavailable(std::string(e.what()) + " after " +
                                      std::to_string(attempt) + " attempts",
                                  true, attempt);
      }
    }
    const auto delay = backoff_delay(policy, attempt, jitter_unit());
    if (sleep) {
      sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
}

// ---- live HTTP -------------------------------------------------------------------

std::string chat_request_body(const std::string& prompt, const SamplingParams& params) {
  nlohmann::ordered_json body;
  body["model"] = params.model_id;
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_output_tokens;
  body["messages"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"role", "user"}, {"content", prompt}}});
  return body.dump();
}

HttpProvider::HttpProvider(HttpProviderConfig config, Sleeper sleep)
    : config_(std::move(config)),
      sleep_(std::move(sleep)),
      slots_(std::max(1, config_.max_inflight)) {
  if (config_.max_inflight < 1) throw ArgumentError("max_inflight must be >= 1");
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, kUrl)) {
    throw ArgumentError("base URL must look like http(s)://host[/path]: " + config_.base_url);
  }
  origin_ = m[1].str();
  std::string base_path = m[2].matched ? m[2].str() : std::string();
  while (!base_path.empty() && base_path.back() == '/') base_path.pop_back();
  path_ = base_path + "/chat/completions";
}

Completion HttpProvider::complete(const std::string& prompt, const SamplingParams& params,
                                  const RunKey&) {
  params.validate();
  const std::string body = chat_request_body(prompt, params);
  return with_retry([&] { return post_once(body); }, config_.retry, sleep_);
}

Completion HttpProvider::post_once(const std::string& body) {
  slots_.acquire();
  const int now = ++inflight_;
  int peak = peak_inflight_.load();
  while (now > peak && !peak_inflight_.compare_exchange_weak(peak, now)) {
  }
  ++requests_sent_;

  struct Release {
    HttpProvider* self;
    ~Release() {
      --self->inflight_;
      self->slots_.release();
    }
  } release{this};

  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    throw ProviderUnavailable("transport error: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 429) throw RateLimited("rate limited (HTTP 429)");
  if (status == 408 || status >= 500) {
    throw ProviderUnavailable("server error (HTTP " + std::to_string(status) + ")");
  }
  if (status < 200 || status >= 300) {
    throw ProviderUnavailable("request rejected (HTTP " + std::to_string(status) +
                                  "): " + res->body.substr(0, 200),
                              /*transient=*/false);
  }

  Completion out;
  try {
    const auto j = nlohmann::json::parse(res->body);
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      for (const auto& [k, v] : j["usage"].items()) {
        if (v.is_number_integer()) out.provider_meta["usage." + k] = std::to_string(v.get<long long>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProviderUnavailable(std::string("malformed completion response: ") + e.what(),
                              /*transient=*/false);
  }
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  out.provider_meta["latency_ms"] = std::to_string(elapsed.count());
  out.provider_meta["http_status"] = std::to_string(status);
  return out;
}

}  // namespace llmconf
