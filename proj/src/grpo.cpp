#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gzero/errors.hpp"
#include "gzero/optim.hpp"

namespace gzero::optim {

std::vector<double> grpo_advantages(std::span<const double> rewards) {
  const std::size_t k = rewards.size();
  if (k < 2) throw std::invalid_argument("grpo_advantages: need K >= 2 rewards");
  for (double r : rewards)
    if (!std::isfinite(r)) throw std::invalid_argument("grpo_advantages: non-finite reward");
  const bool all_equal =
      std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
  if (all_equal) return std::vector<double>(k, 0.0);
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(k);
  if (var == 0.0) return std::vector<double>(k, 0.0);
  const double sd = std::sqrt(var);
  std::vector<double> adv(k);
  for (std::size_t i = 0; i < k; ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

namespace {

struct RatioTerm {
  double rho = 1.0;
  bool saturated = false;  // min picked the clipped constant, or the cap engaged
};

RatioTerm ratio_term(const ToyProposerParams& policy, const ProposerRolloutRecord& rec,
                     double advantage, double epsilon, double cap, std::size_t index) {
  const double new_lp =
      toy_proposer_logprob(policy, rec.rollout.template_id, rec.rollout.fragment_id);
  const double log_rho = new_lp - rec.old_logprob;
  if (!std::isfinite(log_rho))
    throw NumericalError("grpo: non-finite ratio at rollout " + std::to_string(index));
  RatioTerm t;
  t.rho = std::exp(std::clamp(log_rho, -cap, cap));
  const double unclipped = t.rho * advantage;
  const double clipped = std::clamp(t.rho, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  t.saturated = clipped < unclipped || std::abs(log_rho) > cap;
  return t;
}

}  // namespace

double grpo_surrogate(const ToyProposerParams& policy, const RolloutGroup& group,
                      std::span<const double> advantages, double epsilon,
                      double log_ratio_cap) {
  const std::size_t k = group.outputs.size();
  if (k == 0 || advantages.size() != k)
    throw std::invalid_argument("grpo_surrogate: group/advantage size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto t = ratio_term(policy, group.outputs[i], advantages[i], epsilon,
                              log_ratio_cap, i);
    const double unclipped = t.rho * advantages[i];
    const double clipped =
        std::clamp(t.rho, 1.0 - epsilon, 1.0 + epsilon) * advantages[i];
    total += std::min(unclipped, clipped);
  }
  return total / static_cast<double>(k);
}

ToyProposerParams grpo_surrogate_gradient(const ToyProposerParams& policy,
                                          const RolloutGroup& group,
                                          std::span<const double> advantages, double epsilon,
                                          double log_ratio_cap) {
  const std::size_t k = group.outputs.size();
  if (k == 0 || advantages.size() != k)
    throw std::invalid_argument("grpo_surrogate_gradient: group/advantage size mismatch");
  ToyProposerParams grad = ToyProposerParams::zeros_like(policy);
  auto flat = grad.flatten();
  for (std::size_t i = 0; i < k; ++i) {
    const auto& rec = group.outputs[i];
    const auto t = ratio_term(policy, rec, advantages[i], epsilon, log_ratio_cap, i);
    // When the clipped constant wins the min, the term has zero gradient.
    if (t.saturated) continue;
    // d/dtheta rho*A = A*rho * d/dtheta log pi(o|c)
    const double scale = advantages[i] * t.rho;
    if (scale == 0.0) continue;
    const auto g =
        toy_proposer_gradient(policy, rec.rollout.template_id, rec.rollout.fragment_id)
            .flatten();
    for (std::size_t j = 0; j < flat.size(); ++j) flat[j] += scale * g[j];
  }
  for (double& v : flat) v /= static_cast<double>(k);
  grad.set_flat(flat);
  return grad;
}

ToyProposerParams grpo_step(const ToyProposerParams& params,
                            const std::vector<RolloutGroup>& groups, const GrpoConfig& cfg) {
  if (groups.empty()) return params;
  auto accum = ToyProposerParams::zeros_like(params).flatten();
  for (const auto& group : groups) {
    std::vector<double> rewards;
    rewards.reserve(group.outputs.size());
    for (const auto& rec : group.outputs) rewards.push_back(rec.reward.total);
    const auto adv = grpo_advantages(rewards);
    const auto g =
        grpo_surrogate_gradient(params, group, adv, cfg.epsilon, cfg.log_ratio_cap).flatten();
    for (std::size_t j = 0; j < accum.size(); ++j) accum[j] += g[j];
  }
  auto flat = params.flatten();
  const double scale = cfg.lr / static_cast<double>(groups.size());
  for (std::size_t j = 0; j < flat.size(); ++j) flat[j] += scale * accum[j];
  ToyProposerParams next = params;
  next.set_flat(flat);
  return next;
}

}  // namespace gzero::optim
