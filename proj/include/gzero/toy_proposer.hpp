#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gzero/rng.hpp"
#include "gzero/toy_world.hpp"

namespace gzero {

// The proposer's menu: one question per template, a few hint fragments each.
struct ProposerBank {
  std::vector<std::string> questions;
  std::vector<std::vector<std::string>> hints;  // hints[m][j], index 0 = informative

  std::size_t num_templates() const { return questions.size(); }
  std::size_t hints_per_template() const { return hints.empty() ? 0 : hints[0].size(); }
};

ProposerBank bank_from_world(const ToyWorld& world);

// Two-level categorical policy over (template, hint fragment). This is the
// trainable stand-in for a prompted proposer model: GRPO moves these logits.
struct ToyProposerParams {
  std::size_t num_templates = 0;
  std::size_t num_hints = 0;
  std::vector<double> template_logits;  // num_templates
  std::vector<double> fragment_logits;  // num_templates * num_hints

  double& fragment(std::size_t m, std::size_t j) {
    return fragment_logits[m * num_hints + j];
  }
  double fragment(std::size_t m, std::size_t j) const {
    return fragment_logits[m * num_hints + j];
  }

  std::size_t param_count() const;
  std::vector<double> flatten() const;
  void set_flat(std::span<const double> flat);
  static ToyProposerParams zeros_like(const ToyProposerParams& p);
};

ToyProposerParams make_uniform_proposer(const ProposerBank& bank);

struct ProposerRollout {
  std::string text;       // raw tagged output (possibly malformed on purpose)
  std::size_t template_id = 0;
  std::size_t fragment_id = 0;
  bool malformed = false;
};

// Samples (template, fragment) and emits tagged text. With probability
// malform_prob the emitted text violates the tag format (the choice of
// violation is part of the draw, so seeded runs stay reproducible).
ProposerRollout toy_proposer_sample(const ToyProposerParams& p, const ProposerBank& bank,
                                    Rng& rng, double malform_prob = 0.0);

// log p(template) + log p(fragment | template).
double toy_proposer_logprob(const ToyProposerParams& p, std::size_t template_id,
                            std::size_t fragment_id);

// Analytical gradient of toy_proposer_logprob in the same shape as the params.
ToyProposerParams toy_proposer_gradient(const ToyProposerParams& p, std::size_t template_id,
                                        std::size_t fragment_id);

}  // namespace gzero
