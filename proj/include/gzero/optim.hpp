#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gzero/signals.hpp"
#include "gzero/toy_policy.hpp"
#include "gzero/toy_proposer.hpp"

namespace gzero::optim {

// ------------------------------------------------------------------ GRPO ---

struct ProposerRolloutRecord {
  ProposerRollout rollout;
  signals::RewardBreakdown reward;
  double old_logprob = 0.0;  // sequence logprob under the pre-update policy
};

// K rollouts sharing one proposer context, the unit advantages standardize over.
struct RolloutGroup {
  std::vector<ProposerRolloutRecord> outputs;
};

struct GrpoConfig {
  double lr = 4e-5;
  double epsilon = 0.2;
  std::size_t group_size = 16;   // K
  std::size_t batch_size = 128;  // rollouts per optimizer step
  std::size_t steps = 6;
  double log_ratio_cap = 20.0;   // |log rho| clamp guarding exp overflow

  bool operator==(const GrpoConfig&) const = default;
};

// Standardized within-group advantages: (r - mean) / population std. A group
// of identical rewards has no preference signal, so it maps to all zeros
// rather than dividing by a rounding-noise sigma.
std::vector<double> grpo_advantages(std::span<const double> rewards);

// Clipped surrogate, mean over the group of min(rho*A, clip(rho, 1-eps, 1+eps)*A)
// with rho the sequence-level probability ratio vs the recorded old policy.
// No KL term.
double grpo_surrogate(const ToyProposerParams& policy, const RolloutGroup& group,
                      std::span<const double> advantages, double epsilon,
                      double log_ratio_cap = 20.0);

// Analytical gradient of grpo_surrogate with respect to the policy logits.
ToyProposerParams grpo_surrogate_gradient(const ToyProposerParams& policy,
                                          const RolloutGroup& group,
                                          std::span<const double> advantages, double epsilon,
                                          double log_ratio_cap = 20.0);

// One gradient-ascent step on the mean surrogate over the given groups.
ToyProposerParams grpo_step(const ToyProposerParams& params,
                            const std::vector<RolloutGroup>& groups, const GrpoConfig& cfg);

// ------------------------------------------------------------------- DPO ---

struct PreferenceRecord {
  std::string x;           // bare query; never contains the hint
  std::vector<int> y_w;    // chosen (hint-assisted) tokens
  std::vector<int> y_l;    // rejected (unassisted) tokens
};

struct PreferenceBatch {
  std::vector<PreferenceRecord> records;
  double beta = 2.0;
  bool length_normalized = true;
};

// Frozen generator copy taken at round start; anchors every DPO margin.
struct ReferenceSnapshot {
  ToyPolicyParams params;
  std::size_t round = 0;
};

struct DpoConfig {
  double beta = 2.0;
  double lr = 1e-5;
  std::size_t max_steps = 50;
  std::size_t batch_size = 8;
  bool length_normalized = true;

  bool operator==(const DpoConfig&) const = default;
};

// Sequence log-ratio log pi_theta(y|x) - log pi_ref(y|x), divided by |y| when
// length_normalized.
double dpo_logratio(const ToyPolicyParams& policy, const ReferenceSnapshot& ref,
                    const std::string& x, std::span<const int> y, bool length_normalized);

// Mean over records of -log sigma(beta * (m_w - m_l)).
double dpo_loss(const ToyPolicyParams& policy, const ReferenceSnapshot& ref,
                const PreferenceBatch& batch);

ToyPolicyParams dpo_loss_gradient(const ToyPolicyParams& policy, const ReferenceSnapshot& ref,
                                  const PreferenceBatch& batch);

// One gradient-descent step on dpo_loss. An empty batch is a warned no-op.
ToyPolicyParams dpo_step(const ToyPolicyParams& params, const ReferenceSnapshot& ref,
                         const PreferenceBatch& batch, double lr);

// Minibatch descent over a dataset: sequential slices of cfg.batch_size,
// wrapping around, for cfg.max_steps steps. Appends per-step losses to
// loss_curve when provided.
ToyPolicyParams dpo_train(const ToyPolicyParams& params, const ReferenceSnapshot& ref,
                          const std::vector<PreferenceRecord>& dataset, const DpoConfig& cfg,
                          std::vector<double>* loss_curve = nullptr);

}  // namespace gzero::optim
