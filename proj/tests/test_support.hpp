#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>

#include "llmconf/case_store.hpp"
#include "llmconf/errors.hpp"
#include "llmconf/model_gateway.hpp"

namespace testsupport {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("llmconf-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Provider answering from a table; keys without a script entry fall through
// to `fallback`, which defaults to a missing-key error.
class ScriptedProvider : public llmconf::Provider {
 public:
  using Fallback = std::function<llmconf::Completion(const llmconf::RunKey&)>;

  std::map<llmconf::RunKey, std::string> script;
  Fallback fallback;
  std::atomic<int> calls{0};
  std::string last_prompt;
  llmconf::SamplingParams last_params;

  llmconf::Completion complete(const std::string& prompt, const llmconf::SamplingParams& params,
                               const llmconf::RunKey& key) override {
    ++calls;
    {
      std::lock_guard lock(mu_);
      last_prompt = prompt;
      last_params = params;
    }
    auto it = script.find(key);
    if (it != script.end()) return {it->second, {}};
    if (fallback) return fallback(key);
    throw llmconf::MissingKeyError("no script for " + key.str());
  }

 private:
  std::mutex mu_;
};

inline llmconf::RunKey sc(const std::string& id, int i) {
  return {id, llmconf::Purpose::kSelfConsistency, i};
}
inline llmconf::RunKey intrinsic(const std::string& id, int i) {
  return {id, llmconf::Purpose::kIntrinsic, i};
}

}  // namespace testsupport
