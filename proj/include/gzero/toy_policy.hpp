#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gzero/backend.hpp"

namespace gzero {

// Tabular softmax language policy. Step-0 logits are start_logits plus the
// feature rows activated by the context; every later step uses the bigram row
// of the previous token plus the same feature rows. Context words (query and,
// when present, hint) hash into feature_logits buckets, so conditioning on a
// hint genuinely reshapes the per-token distribution and preference training
// can migrate hint-triggered behavior onto query-triggered rows.
struct ToyPolicyParams {
  int vocab_size = 0;  // token 0 is the reserved end token
  int num_features = 0;
  std::vector<double> start_logits;           // vocab_size
  std::vector<double> bigram_logits;          // vocab_size * vocab_size, row = prev token
  std::vector<double> feature_logits;         // num_features * vocab_size

  double& bigram(int prev, int next) { return bigram_logits[prev * vocab_size + next]; }
  double bigram(int prev, int next) const { return bigram_logits[prev * vocab_size + next]; }
  double& feature(int f, int tok) { return feature_logits[f * vocab_size + tok]; }
  double feature(int f, int tok) const { return feature_logits[f * vocab_size + tok]; }

  std::size_t param_count() const;
  std::vector<double> flatten() const;
  void set_flat(std::span<const double> flat);

  // Gradient containers reuse this shape, zero-filled.
  static ToyPolicyParams zeros_like(const ToyPolicyParams& p);
};

ToyPolicyParams make_uniform_toy_params(int vocab_size, int num_features);

// Feature buckets activated by a context: one per word of the rendered text
// (with multiplicity), via FNV-1a mod num_features.
std::vector<int> context_features(const PromptContext& ctx, int num_features);

// Per-step logits for the given previous token (-1 = sequence start).
std::vector<double> toy_step_logits(const ToyPolicyParams& p,
                                    std::span<const int> active_features, int prev_token);

// Teacher-forced per-token log-probabilities at temperature 1.0.
signals::TokenScoreSeq toy_score(const ToyPolicyParams& p, const PromptContext& ctx,
                                 std::span<const int> response);

// Sum of toy_score logprobs.
double toy_sequence_logprob(const ToyPolicyParams& p, const PromptContext& ctx,
                            std::span<const int> response);

// Analytical gradient of toy_sequence_logprob with respect to every parameter:
// at each step, d log softmax(j*)/d logit(j) = 1{j=j*} - p(j), accumulated
// into the start row, the bigram row of the previous token, and every active
// feature row.
ToyPolicyParams toy_logprob_gradient(const ToyPolicyParams& p, const PromptContext& ctx,
                                     std::span<const int> response);

// Surface form of a token sequence: non-end tokens joined by spaces.
std::string toy_detokenize(std::span<const int> tokens);

class ToyBackend : public ModelBackend {
 public:
  explicit ToyBackend(ToyPolicyParams params) : params_(std::move(params)) {}

  Completion sample(const PromptContext& ctx, const SampleOptions& opt, Rng& rng) override;
  signals::TokenScoreSeq score(const PromptContext& ctx,
                               std::span<const int> response) override;

  ToyPolicyParams& params() { return params_; }
  const ToyPolicyParams& params() const { return params_; }

 private:
  ToyPolicyParams params_;
};

}  // namespace gzero
