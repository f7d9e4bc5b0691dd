#include "gzero/toy_proposer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gzero {

ProposerBank bank_from_world(const ToyWorld& world) {
  ProposerBank bank;
  for (const auto& t : world.templates) {
    bank.questions.push_back(t.query);
    std::vector<std::string> hs = {t.informative_hint};
    hs.insert(hs.end(), t.generic_hints.begin(), t.generic_hints.end());
    bank.hints.push_back(std::move(hs));
  }
  return bank;
}

std::size_t ToyProposerParams::param_count() const {
  return template_logits.size() + fragment_logits.size();
}

std::vector<double> ToyProposerParams::flatten() const {
  std::vector<double> flat = template_logits;
  flat.insert(flat.end(), fragment_logits.begin(), fragment_logits.end());
  return flat;
}

void ToyProposerParams::set_flat(std::span<const double> flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("set_flat: size mismatch");
  std::copy(flat.begin(), flat.begin() + template_logits.size(), template_logits.begin());
  std::copy(flat.begin() + template_logits.size(), flat.end(), fragment_logits.begin());
}

ToyProposerParams ToyProposerParams::zeros_like(const ToyProposerParams& p) {
  ToyProposerParams z;
  z.num_templates = p.num_templates;
  z.num_hints = p.num_hints;
  z.template_logits.assign(p.template_logits.size(), 0.0);
  z.fragment_logits.assign(p.fragment_logits.size(), 0.0);
  return z;
}

ToyProposerParams make_uniform_proposer(const ProposerBank& bank) {
  if (bank.num_templates() == 0) throw std::invalid_argument("proposer: empty bank");
  ToyProposerParams p;
  p.num_templates = bank.num_templates();
  p.num_hints = bank.hints_per_template();
  p.template_logits.assign(p.num_templates, 0.0);
  p.fragment_logits.assign(p.num_templates * p.num_hints, 0.0);
  return p;
}

ProposerRollout toy_proposer_sample(const ToyProposerParams& p, const ProposerBank& bank,
                                    Rng& rng, double malform_prob) {
  if (bank.num_templates() != p.num_templates || bank.hints_per_template() != p.num_hints)
    throw std::invalid_argument("proposer: bank/params shape mismatch");
  ProposerRollout r;
  r.template_id = rng.categorical_logits(p.template_logits);
  const std::span<const double> frag_row{&p.fragment_logits[r.template_id * p.num_hints],
                                         p.num_hints};
  r.fragment_id = rng.categorical_logits(frag_row);
  const std::string& q = bank.questions[r.template_id];
  const std::string& h = bank.hints[r.template_id][r.fragment_id];
  // Draw the malformation coin even at probability 0 so seeded token streams
  // are identical whether or not the knob is enabled.
  const double coin = rng.uniform01();
  if (coin < malform_prob) {
    r.malformed = true;
    switch (rng.uniform_index(3)) {
      case 0: r.text = "<question>" + q + "</question>"; break;                  // hint missing
      case 1: r.text = "<question></question><hint>" + h + "</hint>"; break;    // empty field
      default: r.text = "<question>" + q + "</question><hint>" + h; break;      // unclosed
    }
  } else {
    r.text = "<question>" + q + "</question><hint>" + h + "</hint>";
  }
  return r;
}

double toy_proposer_logprob(const ToyProposerParams& p, std::size_t template_id,
                            std::size_t fragment_id) {
  if (template_id >= p.num_templates || fragment_id >= p.num_hints)
    throw std::invalid_argument("proposer: rollout index outside bank");
  const auto lt = log_softmax(p.template_logits);
  const std::span<const double> frag_row{&p.fragment_logits[template_id * p.num_hints],
                                         p.num_hints};
  const auto lf = log_softmax(frag_row);
  return lt[template_id] + lf[fragment_id];
}

ToyProposerParams toy_proposer_gradient(const ToyProposerParams& p, std::size_t template_id,
                                        std::size_t fragment_id) {
  if (template_id >= p.num_templates || fragment_id >= p.num_hints)
    throw std::invalid_argument("proposer: rollout index outside bank");
  ToyProposerParams grad = ToyProposerParams::zeros_like(p);
  const auto lt = log_softmax(p.template_logits);
  for (std::size_t m = 0; m < p.num_templates; ++m)
    grad.template_logits[m] = (m == template_id ? 1.0 : 0.0) - std::exp(lt[m]);
  const std::span<const double> frag_row{&p.fragment_logits[template_id * p.num_hints],
                                         p.num_hints};
  const auto lf = log_softmax(frag_row);
  for (std::size_t j = 0; j < p.num_hints; ++j)
    grad.fragment(template_id, j) = (j == fragment_id ? 1.0 : 0.0) - std::exp(lf[j]);
  return grad;
}

}  // namespace gzero
