#include "gzero/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gzero {

namespace {

void check_response(const ToyPolicyParams& p, std::span<const int> response) {
  if (response.empty()) throw std::invalid_argument("toy policy: empty response");
  for (int t : response)
    if (t < 0 || t >= p.vocab_size)
      throw std::invalid_argument("toy policy: token outside vocab");
}

}  // namespace

std::size_t ToyPolicyParams::param_count() const {
  return start_logits.size() + bigram_logits.size() + feature_logits.size();
}

std::vector<double> ToyPolicyParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  flat.insert(flat.end(), start_logits.begin(), start_logits.end());
  flat.insert(flat.end(), bigram_logits.begin(), bigram_logits.end());
  flat.insert(flat.end(), feature_logits.begin(), feature_logits.end());
  return flat;
}

void ToyPolicyParams::set_flat(std::span<const double> flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("set_flat: size mismatch");
  auto it = flat.begin();
  std::copy(it, it + start_logits.size(), start_logits.begin());
  it += static_cast<std::ptrdiff_t>(start_logits.size());
  std::copy(it, it + bigram_logits.size(), bigram_logits.begin());
  it += static_cast<std::ptrdiff_t>(bigram_logits.size());
  std::copy(it, it + feature_logits.size(), feature_logits.begin());
}

ToyPolicyParams ToyPolicyParams::zeros_like(const ToyPolicyParams& p) {
  ToyPolicyParams z;
  z.vocab_size = p.vocab_size;
  z.num_features = p.num_features;
  z.start_logits.assign(p.start_logits.size(), 0.0);
  z.bigram_logits.assign(p.bigram_logits.size(), 0.0);
  z.feature_logits.assign(p.feature_logits.size(), 0.0);
  return z;
}

ToyPolicyParams make_uniform_toy_params(int vocab_size, int num_features) {
  if (vocab_size < 3) throw std::invalid_argument("toy policy: vocab_size must be >= 3");
  ToyPolicyParams p;
  p.vocab_size = vocab_size;
  p.num_features = num_features;
  p.start_logits.assign(vocab_size, 0.0);
  p.bigram_logits.assign(static_cast<std::size_t>(vocab_size) * vocab_size, 0.0);
  p.feature_logits.assign(static_cast<std::size_t>(num_features) * vocab_size, 0.0);
  return p;
}

std::vector<int> context_features(const PromptContext& ctx, int num_features) {
  std::vector<int> feats;
  for (const auto& w : context_words(ctx))
    feats.push_back(static_cast<int>(fnv1a64(w) % static_cast<std::uint64_t>(num_features)));
  return feats;
}

std::vector<double> toy_step_logits(const ToyPolicyParams& p,
                                    std::span<const int> active_features, int prev_token) {
  std::vector<double> logits(static_cast<std::size_t>(p.vocab_size));
  if (prev_token < 0) {
    std::copy(p.start_logits.begin(), p.start_logits.end(), logits.begin());
  } else {
    const auto* row = &p.bigram_logits[static_cast<std::size_t>(prev_token) * p.vocab_size];
    std::copy(row, row + p.vocab_size, logits.begin());
  }
  for (int f : active_features)
    for (int j = 0; j < p.vocab_size; ++j) logits[j] += p.feature(f, j);
  return logits;
}

signals::TokenScoreSeq toy_score(const ToyPolicyParams& p, const PromptContext& ctx,
                                 std::span<const int> response) {
  check_response(p, response);
  const auto feats = context_features(ctx, p.num_features);
  signals::TokenScoreSeq out;
  int prev = -1;
  for (int tok : response) {
    const auto lp = log_softmax(toy_step_logits(p, feats, prev));
    out.tokens.push_back(tok);
    out.logprobs.push_back(lp[tok]);
    prev = tok;
  }
  return out;
}

double toy_sequence_logprob(const ToyPolicyParams& p, const PromptContext& ctx,
                            std::span<const int> response) {
  const auto scored = toy_score(p, ctx, response);
  double sum = 0.0;
  for (double v : scored.logprobs) sum += v;
  return sum;
}

ToyPolicyParams toy_logprob_gradient(const ToyPolicyParams& p, const PromptContext& ctx,
                                     std::span<const int> response) {
  check_response(p, response);
  const auto feats = context_features(ctx, p.num_features);
  ToyPolicyParams grad = ToyPolicyParams::zeros_like(p);
  int prev = -1;
  for (int tok : response) {
    const auto lp = log_softmax(toy_step_logits(p, feats, prev));
    for (int j = 0; j < p.vocab_size; ++j) {
      const double g = (j == tok ? 1.0 : 0.0) - std::exp(lp[j]);
      if (prev < 0)
        grad.start_logits[j] += g;
      else
        grad.bigram(prev, j) += g;
      for (int f : feats) grad.feature(f, j) += g;
    }
    prev = tok;
  }
  return grad;
}

std::string toy_detokenize(std::span<const int> tokens) {
  std::string text;
  for (int t : tokens) {
    if (t == 0) continue;
    if (!text.empty()) text += ' ';
    text += "tok" + std::to_string(t);
  }
  return text;
}

Completion ToyBackend::sample(const PromptContext& ctx, const SampleOptions& opt, Rng& rng) {
  if (!opt.greedy && opt.temperature <= 0.0)
    throw std::invalid_argument("sample: temperature must be > 0");
  const auto feats = context_features(ctx, params_.num_features);
  Completion c;
  int prev = -1;
  for (std::size_t step = 0; step < opt.max_tokens; ++step) {
    const auto logits = toy_step_logits(params_, feats, prev);
    std::size_t tok;
    double lp_tok;
    if (opt.greedy) {
      tok = static_cast<std::size_t>(
          std::max_element(logits.begin(), logits.end()) - logits.begin());
      lp_tok = log_softmax(logits)[tok];
    } else {
      const auto lp = log_softmax(logits, opt.temperature);
      tok = rng.categorical_logits(logits, opt.temperature);
      lp_tok = lp[tok];
    }
    c.tokens.push_back(static_cast<int>(tok));
    c.sample_logprobs.tokens.push_back(static_cast<int>(tok));
    c.sample_logprobs.logprobs.push_back(lp_tok);
    if (tok == 0) break;
    prev = static_cast<int>(tok);
  }
  c.truncated = c.tokens.empty() || c.tokens.back() != 0;
  c.text = toy_detokenize(c.tokens);
  return c;
}

signals::TokenScoreSeq ToyBackend::score(const PromptContext& ctx,
                                         std::span<const int> response) {
  return toy_score(params_, ctx, response);
}

}  // namespace gzero
