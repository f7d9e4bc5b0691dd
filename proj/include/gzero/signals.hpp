#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gzero::signals {

// Per-token log-probabilities of one response under one conditioning context.
struct TokenScoreSeq {
  std::vector<int> tokens;
  std::vector<double> logprobs;  // nats, one per token

  std::size_t size() const { return tokens.size(); }
};

enum class ParseStatus { ok, malformed };

// A proposer rollout after tag extraction.
struct QueryHintPair {
  std::string query;
  std::string hint;
  std::string rollout_id;
  ParseStatus status = ParseStatus::malformed;
  std::string malform_reason;  // empty when status == ok

  bool ok() const { return status == ParseStatus::ok; }
};

// The same response scored with and without the hint in context.
struct DualScore {
  TokenScoreSeq uncond;  // context = (q)
  TokenScoreSeq hinted;  // context = (q, h)
};

// Decomposed proposer reward for one rollout.
struct RewardBreakdown {
  std::optional<double> delta;  // absent when the rollout was malformed
  double p_length = 0.0;
  double p_bleu = 0.0;
  bool format_floor_applied = false;
  double total = 0.0;
};

struct LengthPenaltyConfig {
  double lambda = 0.03;
  double budget_chars = 200.0;
  double divisor = 100.0;

  bool operator==(const LengthPenaltyConfig&) const = default;
};

// Extracts exactly one <question> block and one <hint> block. Missing, empty
// or duplicated blocks yield a malformed pair; text outside the blocks is
// ignored. Never throws.
QueryHintPair parse_proposer_output(std::string_view text);

// Per-token mean log-likelihood drop of the unassisted response when the hint
// is added to the context. Positive when the hint reshapes the distribution
// away from the unassisted response.
double hint_delta(const DualScore& dual);

double length_penalty(std::size_t hint_chars, const LengthPenaltyConfig& cfg = {});

// Lowercased whitespace tokenization used for all BLEU computations.
std::vector<std::string> bleu_tokenize(std::string_view text);

// Symmetrized sentence BLEU: max of the two directional scores, n-gram orders
// 1-4 with uniform weights, add-one smoothing on orders >= 2 (unigram
// precision left raw so disjoint texts score exactly 0), standard brevity
// penalty.
double bleu_pairwise(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Average-linkage agglomerative clustering over a batch of questions. Merges
// the highest-linkage cluster pair while linkage > threshold; ties break on
// the lexicographically smallest (min member, min member) pair. Returns one
// cluster id per item (the smallest member index of its cluster).
std::vector<int> cluster_questions(const std::vector<std::vector<std::string>>& batch,
                                   double threshold);

// |C_i| / batch_size for item i under the given assignment.
double duplication_penalty(const std::vector<int>& assignment, std::size_t item,
                           std::size_t batch_size);

// Total reward r(q,h). Well-formed: delta - p_length - p_bleu. Malformed
// (delta absent): the -1 format floor with the duplication penalty still
// applied, -1 - p_bleu, and p_length forced to 0.
RewardBreakdown proposer_reward(std::optional<double> delta, double p_length, double p_bleu);

}  // namespace gzero::signals
