#pragma once

#include <string>
#include <vector>

#include "gzero/toy_policy.hpp"

namespace gzero {

// One synthetic task: a question with a designated single-token answer, an
// informative hint that names the answer word, and distractor hints that
// carry no usable signal.
struct ToyTemplate {
  std::string query;
  int target_token = 0;
  std::string informative_hint;
  std::vector<std::string> generic_hints;
};

// The synthetic world the end-to-end loop runs on. The initial generator is
// built so that the word naming token k ("tok<k>") activates a feature row
// boosting token k: hint-assisted sampling is measurably better than
// unassisted sampling, which is what makes internalizing hints a learnable,
// checkable objective.
struct ToyWorld {
  int vocab_size = 0;
  int num_features = 0;
  double hint_strength = 3.0;  // boost the named token gets from its hint word
  // Bigram pull toward the end token. Kept above hint_strength so a boosted
  // token still yields to the end token instead of repeating itself.
  double eos_bias = 4.5;
  std::vector<ToyTemplate> templates;

  // Target continuation for template m: (target token, end token).
  std::vector<int> target_continuation(std::size_t m) const;

  ToyPolicyParams initial_generator() const;
};

ToyWorld make_toy_world();

}  // namespace gzero
