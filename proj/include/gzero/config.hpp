#pragma once

#include <cstdint>
#include <string>

#include "gzero/curation.hpp"
#include "gzero/loop.hpp"
#include "gzero/optim.hpp"
#include "gzero/remote_backend.hpp"
#include "gzero/signals.hpp"
#include "gzero/theory.hpp"

namespace gzero::config {

enum class Mode { toy, remote };

// One document drives every subcommand. The field defaults are the full-scale
// training recipe; `toy_preset` swaps in the settings calibrated for the
// built-in tabular policy so a laptop run finishes in seconds.
struct RunConfig {
  Mode mode = Mode::toy;
  std::uint64_t seed = 0;
  std::string run_dir;

  optim::GrpoConfig grpo;
  optim::DpoConfig dpo;
  curation::CurationConfig curation;
  signals::LengthPenaltyConfig length_penalty;
  theory::TheoryConfig theory;
  RemoteConfig remote;

  double bleu_threshold = 0.5;             // question-clustering merge threshold
  std::size_t questions_per_round = 2000;  // query-hint draws per round (N)
  double temperature = 0.7;                // generator sampling temperature
  std::size_t generator_max_tokens = 16384;
  std::size_t proposer_max_tokens = 8192;
  double proposer_malform_prob = 0.0;
  bool reset_proposer_each_round = false;

  bool operator==(const RunConfig&) const = default;
};

// Settings that make the toy policy actually move: the tabular softmax needs
// far larger steps than a transformer, and its responses are a handful of
// tokens, so the character floor drops to 1.
RunConfig toy_preset(std::uint64_t seed = 0, std::string run_dir = {});

loop::LoopConfig loop_config(const RunConfig& cfg);

// JSON round-trip. serialize() is deterministic (sorted keys, two-space
// indent); parse() starts from defaults, overlays only the keys present, and
// rejects unknown keys and type mismatches with ConfigError naming the path.
// The remote block carries the NAME of the API key environment variable,
// never the key itself.
std::string serialize(const RunConfig& cfg);
RunConfig parse(const std::string& json_text);

RunConfig load_file(const std::string& path);
void save_file(const RunConfig& cfg, const std::string& path);

}  // namespace gzero::config
