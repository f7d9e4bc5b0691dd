#include "gzero/toy_world.hpp"

#include <stdexcept>

namespace gzero {

std::vector<int> ToyWorld::target_continuation(std::size_t m) const {
  return {templates.at(m).target_token, 0};
}

ToyPolicyParams ToyWorld::initial_generator() const {
  ToyPolicyParams p = make_uniform_toy_params(vocab_size, num_features);
  // Mildly discourage opening with the end token so unassisted samples carry
  // at least one content token most of the time.
  p.start_logits[0] = -1.0;
  // After any content token, pull hard toward the end token: responses stay
  // short and the designated (target, end) continuation is reachable.
  for (int prev = 1; prev < vocab_size; ++prev) p.bigram(prev, 0) = eos_bias;
  // The word naming token k activates a feature row boosting token k. This is
  // the entire hint mechanism: a hint that says "tok3" makes token 3 likely.
  for (int k = 1; k < vocab_size; ++k) {
    PromptContext word_ctx;
    word_ctx.rendered = "tok" + std::to_string(k);
    const auto f = context_features(word_ctx, num_features);
    p.feature(f.at(0), k) += hint_strength;
  }
  return p;
}

ToyWorld make_toy_world() {
  ToyWorld w;
  w.vocab_size = 12;   // end token + 8 targets + 3 distractors
  w.num_features = 256;

  const std::vector<std::string> queries = {
      "which token opens the morning sequence",
      "name the marker for the river passage",
      "what symbol closes the winter ledger",
      "pick the emblem for the northern gate",
      "choose the glyph that ends the census",
      "which sign labels the harvest record",
      "select the stamp for the eastern archive",
      "what mark seals the final decree",
  };
  for (std::size_t m = 0; m < queries.size(); ++m) {
    ToyTemplate t;
    t.query = queries[m];
    t.target_token = static_cast<int>(m) + 1;
    t.informative_hint = "the answer word is tok" + std::to_string(t.target_token);
    t.generic_hints = {"think slowly and carefully", "weigh the options with care"};
    w.templates.push_back(std::move(t));
  }

  // The hint mechanism needs the naming words to land in distinct feature
  // buckets that no query word shares; with 256 buckets and this fixed word
  // list that holds, and because hashing is deterministic it holds forever.
  std::vector<bool> named(static_cast<std::size_t>(w.num_features), false);
  for (int k = 1; k < w.vocab_size; ++k) {
    const auto f = fnv1a64("tok" + std::to_string(k)) %
                   static_cast<std::uint64_t>(w.num_features);
    if (named[f]) throw std::logic_error("toy world: naming-word bucket collision");
    named[f] = true;
  }
  for (const auto& t : w.templates) {
    PromptContext qctx;
    qctx.rendered = t.query + " hint: " + t.informative_hint;
    for (const auto& h : t.generic_hints) qctx.rendered += " " + h;
    for (const auto& word : context_words(qctx)) {
      if (word.rfind("tok", 0) == 0) continue;
      const auto f = fnv1a64(word) % static_cast<std::uint64_t>(w.num_features);
      if (named[f]) throw std::logic_error("toy world: query word collides with naming bucket");
    }
  }
  return w;
}

}  // namespace gzero
