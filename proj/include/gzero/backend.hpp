#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gzero/rng.hpp"
#include "gzero/signals.hpp"

namespace gzero {

// A fully rendered conditioning context. `rendered` is the assembled prompt
// text; backends decide how to consume it (the toy policy hashes its words,
// the remote client sends it verbatim).
struct PromptContext {
  std::string query;
  std::optional<std::string> hint;
  std::string rendered;
};

// Assembles the dual-prompt template: the bare query, or query + blank line +
// "Hint: " + hint. Throws on empty query or empty-but-present hint.
PromptContext render_context(std::string_view query,
                             std::optional<std::string_view> hint = std::nullopt);

struct Completion {
  std::vector<int> tokens;              // includes the end token when not truncated
  std::string text;                     // surface form, excludes the end token
  signals::TokenScoreSeq sample_logprobs;  // under the sampling distribution
  bool truncated = false;               // hit max_tokens before the end token
};

struct SampleOptions {
  double temperature = 0.7;
  std::size_t max_tokens = 16;
  bool greedy = false;  // argmax decoding, ignores temperature
};

// Minimal contract shared by the toy policy and the remote client. Scoring is
// always teacher-forced at temperature 1.0 (the unscaled model distribution);
// sampling temperature never leaks into score().
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual Completion sample(const PromptContext& ctx, const SampleOptions& opt, Rng& rng) = 0;

  virtual signals::TokenScoreSeq score(const PromptContext& ctx,
                                       std::span<const int> response) = 0;

  // Convenience reduction used by curation; backends may override with a
  // parallel implementation but must return results in input order.
  virtual std::vector<signals::TokenScoreSeq> score_batch(
      const std::vector<PromptContext>& ctxs, const std::vector<std::vector<int>>& responses);
};

// Lowercased whitespace words of a context's rendered text.
std::vector<std::string> context_words(const PromptContext& ctx);

}  // namespace gzero
