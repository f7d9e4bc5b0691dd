#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gzero/backend.hpp"
#include "gzero/optim.hpp"
#include "gzero/signals.hpp"

namespace gzero::curation {

// One proposed task after dual sampling: the same query answered without and
// with the hint, plus the freshly recomputed per-token delta.
struct CandidatePair {
  signals::QueryHintPair pair;
  Completion a_hard;
  Completion a_assisted;
  double delta = 0.0;
  std::size_t chars_w = 0;  // characters of a_assisted's text (the chosen side)
  std::size_t chars_l = 0;  // characters of a_hard's text (the rejected side)
};

enum class FilterReason {
  kept,
  out_of_window,
  degenerate_equal,
  length_ratio,
  too_short,
  too_long,
  repetitive,
  prompt_echo,
  role_marker,
};

const char* filter_reason_name(FilterReason r);

struct FilterDecision {
  bool kept = false;
  FilterReason reason = FilterReason::kept;
};

struct CurationConfig {
  double window_low = 0.0;    // percentile window over recomputed delta
  double window_high = 50.0;
  double ratio_max = 2.5;     // chars_w / chars_l ceiling
  std::size_t min_chars = 100;
  std::size_t max_chars = 10000;
  double compression_threshold = 0.15;
  std::size_t echo_prefix_chars = 30;
  std::vector<std::string> role_markers = {"Assistant:", "User:", "System:"};

  bool operator==(const CurationConfig&) const = default;
};

struct DualSampleResult {
  Completion a_hard;
  Completion a_assisted;
};

// Independent draws of the generator's response without and with the hint.
DualSampleResult dual_sample(ModelBackend& backend, const signals::QueryHintPair& pair,
                             const SampleOptions& opt, Rng& rng);

// Scores a_hard under (q) and (q,h) at temperature 1.0 and applies the
// per-token mean difference.
double recompute_delta(ModelBackend& backend, const signals::QueryHintPair& pair,
                       std::span<const int> a_hard);

// dual_sample + recompute_delta + bookkeeping; backend errors are rethrown
// with the pair's rollout id attached.
CandidatePair build_candidate(ModelBackend& backend, const signals::QueryHintPair& pair,
                              const SampleOptions& opt, Rng& rng);

// Rank-percentile window over delta, ascending, stable tie-break on arrival
// order. Keeps 1-indexed ranks r with floor(n*low/100) < r <= floor(n*high/100).
std::vector<bool> percentile_window(const std::vector<double>& deltas, double low,
                                    double high);

// Compressed size over raw size, DEFLATE at the default level with standard
// stream framing. Low values flag degenerate repetition.
double compression_ratio(const std::string& text);

// The fixed-order structural checks applied after the window; the first
// failing check names the drop reason.
FilterDecision heuristic_filters(const CandidatePair& c, const CurationConfig& cfg);

struct FilterReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> reason_counts;
  std::vector<FilterReason> decisions;  // one per candidate, input order
  double delta_min = 0.0;
  double delta_median = 0.0;
  double delta_max = 0.0;
  std::vector<std::size_t> histogram;  // 20 uniform bins over [delta_min, delta_max]
  double histogram_lo = 0.0;
  double histogram_hi = 0.0;
};

struct DatasetRecord {
  optim::PreferenceRecord pref;
  double delta = 0.0;
  std::size_t round = 0;
};

struct CurationResult {
  std::vector<DatasetRecord> dataset;
  FilterReport report;
};

// Window first, then heuristics; emits (x = bare query, y_w = assisted tokens,
// y_l = unassisted tokens) for every kept candidate. An empty result is the
// caller's round-abort signal.
CurationResult assemble_dataset(const std::vector<CandidatePair>& candidates,
                                const CurationConfig& cfg, std::size_t round);

// Line-delimited persistence. Dataset rows carry x, y_w, y_l, delta, round.
void save_dataset_jsonl(const std::string& path, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> load_dataset_jsonl(const std::string& path);

void save_candidates_jsonl(const std::string& path,
                           const std::vector<CandidatePair>& candidates);
std::vector<CandidatePair> load_candidates_jsonl(const std::string& path);

void save_report_json(const std::string& path, const FilterReport& report);

}  // namespace gzero::curation
