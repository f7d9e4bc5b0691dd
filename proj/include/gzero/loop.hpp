#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gzero/curation.hpp"
#include "gzero/optim.hpp"
#include "gzero/signals.hpp"
#include "gzero/toy_proposer.hpp"
#include "gzero/toy_world.hpp"

namespace gzero::loop {

struct LoopConfig {
  optim::GrpoConfig grpo;
  optim::DpoConfig dpo;
  curation::CurationConfig curation;
  SampleOptions gen_sample;                // generator sampling (temperature 0.7)
  signals::LengthPenaltyConfig length_penalty;
  double bleu_threshold = 0.5;             // question-clustering merge threshold
  std::size_t questions_per_round = 200;   // N query-hint draws in phase 2
  double proposer_malform_prob = 0.0;
  bool reset_proposer_each_round = false;
  std::uint64_t seed = 0;
  std::string run_dir;                     // empty = keep everything in memory
};

struct RoundMetrics {
  std::vector<double> proposer_reward_curve;  // mean total reward per GRPO step
  std::vector<double> dpo_loss_curve;
  curation::FilterReport filter_report;
  std::size_t questions_drawn = 0;
  std::size_t malformed_drawn = 0;
  double wall_phase1_s = 0.0;
  double wall_phase2_s = 0.0;
};

struct RoundState {
  std::size_t round = 0;
  ToyPolicyParams generator;
  ToyProposerParams proposer;
  optim::ReferenceSnapshot reference;
  std::string dataset_path;  // set once phase 2 persists the round's dataset
  RoundMetrics metrics;
};

// Content digests used by the phase guards: the generator must come out of
// phase 1 untouched, the proposer out of phase 2 untouched.
std::uint64_t param_hash(const ToyPolicyParams& p);
std::uint64_t param_hash(const ToyProposerParams& p);

// Exact mean per-token log-likelihood of the designated target continuations
// under bare-query contexts, cycling templates over num_prompts prompts.
double mean_target_loglik(const ToyPolicyParams& generator, const ToyWorld& world,
                          std::size_t num_prompts = 500);

class ToyLoopRunner {
 public:
  ToyLoopRunner(ToyWorld world, LoopConfig cfg);

  RoundState initial_state() const;

  // Proposer GRPO on the frozen generator. Throws BackendError and leaves the
  // state at the last completed optimizer step on backend failure.
  RoundState run_phase1(RoundState state) const;

  // Question drawing, dual sampling, curation, DPO. Throws RoundAbort (state
  // unchanged) when curation rejects everything.
  RoundState run_phase2(RoundState state) const;

  // One full round; returns the state advanced to round + 1.
  RoundState run_round(RoundState state) const;

  const ToyWorld& world() const { return world_; }
  const ProposerBank& bank() const { return bank_; }
  const LoopConfig& config() const { return cfg_; }

 private:
  ToyWorld world_;
  ProposerBank bank_;
  LoopConfig cfg_;
};

// Parameter and metrics persistence (plain JSON documents).
void save_generator_json(const std::string& path, const ToyPolicyParams& p);
ToyPolicyParams load_generator_json(const std::string& path);
void save_proposer_json(const std::string& path, const ToyProposerParams& p);
ToyProposerParams load_proposer_json(const std::string& path);
void save_metrics_json(const std::string& path, const RoundMetrics& m);

}  // namespace gzero::loop
