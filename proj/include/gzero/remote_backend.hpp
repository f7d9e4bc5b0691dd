#pragma once

#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "gzero/backend.hpp"

namespace gzero {

// Connection settings for an OpenAI-style completions endpoint that can
// return per-token logprobs and echo the prompt. The API key is read from
// the named environment variable at construction time and never written to
// any config file.
struct RemoteConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string model = "gzero-generator";
  std::string api_key_env = "GZERO_API_KEY";
  int connect_timeout_ms = 5000;
  int read_timeout_ms = 60000;
  // Retry budget for idempotent work: scoring calls and any request that
  // failed before the connection was established.
  int max_retries = 3;
  // Ambiguous post-send failures of sampling calls may have consumed tokens
  // server-side; they are retried at most this many times.
  int max_sample_retries = 1;
  int backoff_ms = 100;  // doubled per attempt
  std::size_t max_in_flight = 4;

  bool operator==(const RemoteConfig&) const = default;
};

// Remote sample/score client. Scoring uses two echoed completion requests:
// the bare prompt fixes the prefix token count, then prompt+response is
// echoed and the response logprobs are read off the suffix, with hard
// alignment checks on every prefix and suffix token. Token strings from the
// wire are interned to stable 31-bit ids so completions can flow through the
// token-based ModelBackend interface; scoring accepts only tokens this
// client minted (the loop always scores its own samples).
class RemoteBackend : public ModelBackend {
 public:
  explicit RemoteBackend(RemoteConfig cfg);

  Completion sample(const PromptContext& ctx, const SampleOptions& opt, Rng& rng) override;

  signals::TokenScoreSeq score(const PromptContext& ctx, std::span<const int> response) override;

  // Bounded-parallel scoring; results come back in input order and the
  // lowest-index failure wins when several items fail.
  std::vector<signals::TokenScoreSeq> score_batch(
      const std::vector<PromptContext>& ctxs,
      const std::vector<std::vector<int>>& responses) override;

  const RemoteConfig& config() const { return cfg_; }

 private:
  struct WireChoice {
    std::string text;
    std::string finish_reason;
    std::vector<std::string> tokens;
    std::vector<double> logprobs;      // valid where has_logprob is true
    std::vector<bool> has_logprob;     // endpoints send null for position 0
  };

  WireChoice request_completion(const std::string& prompt, std::size_t max_tokens,
                                double temperature, bool echo, bool idempotent);
  int intern(const std::string& token);
  std::string text_of(std::span<const int> response);

  RemoteConfig cfg_;
  std::string api_key_;
  std::mutex registry_mutex_;
  std::unordered_map<int, std::string> registry_;
};

}  // namespace gzero
