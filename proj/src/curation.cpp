#include "gzero/curation.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "gzero/errors.hpp"

namespace gzero::curation {

using nlohmann::json;

const char* filter_reason_name(FilterReason r) {
  switch (r) {
    case FilterReason::kept: return "kept";
    case FilterReason::out_of_window: return "out_of_window";
    case FilterReason::degenerate_equal: return "degenerate_equal";
    case FilterReason::length_ratio: return "length_ratio";
    case FilterReason::too_short: return "too_short";
    case FilterReason::too_long: return "too_long";
    case FilterReason::repetitive: return "repetitive";
    case FilterReason::prompt_echo: return "prompt_echo";
    case FilterReason::role_marker: return "role_marker";
  }
  return "unknown";
}

DualSampleResult dual_sample(ModelBackend& backend, const signals::QueryHintPair& pair,
                             const SampleOptions& opt, Rng& rng) {
  if (!pair.ok()) throw std::invalid_argument("dual_sample: malformed pair");
  DualSampleResult out;
  out.a_hard = backend.sample(render_context(pair.query), opt, rng);
  out.a_assisted = backend.sample(render_context(pair.query, pair.hint), opt, rng);
  return out;
}

double recompute_delta(ModelBackend& backend, const signals::QueryHintPair& pair,
                       std::span<const int> a_hard) {
  if (a_hard.empty()) throw std::invalid_argument("recompute_delta: empty response");
  signals::DualScore dual;
  dual.uncond = backend.score(render_context(pair.query), a_hard);
  dual.hinted = backend.score(render_context(pair.query, pair.hint), a_hard);
  return signals::hint_delta(dual);
}

CandidatePair build_candidate(ModelBackend& backend, const signals::QueryHintPair& pair,
                              const SampleOptions& opt, Rng& rng) {
  try {
    CandidatePair c;
    c.pair = pair;
    auto dual = dual_sample(backend, pair, opt, rng);
    c.a_hard = std::move(dual.a_hard);
    c.a_assisted = std::move(dual.a_assisted);
    c.delta = recompute_delta(backend, pair, c.a_hard.tokens);
    c.chars_w = c.a_assisted.text.size();
    c.chars_l = c.a_hard.text.size();
    return c;
  } catch (const BackendError& e) {
    throw BackendError(e.kind, std::string(e.what()) + " (pair " + pair.rollout_id + ")");
  }
}

std::vector<bool> percentile_window(const std::vector<double>& deltas, double low,
                                    double high) {
  if (!(low >= 0.0 && low < high && high <= 100.0))
    throw std::invalid_argument("percentile_window: need 0 <= low < high <= 100");
  const std::size_t n = deltas.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return deltas[a] < deltas[b]; });
  const auto lo_rank = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * low / 100.0));
  const auto hi_rank = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * high / 100.0));
  std::vector<bool> kept(n, false);
  for (std::size_t r = 1; r <= n; ++r)
    if (r > lo_rank && r <= hi_rank) kept[order[r - 1]] = true;
  return kept;
}

double compression_ratio(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("compression_ratio: empty text");
  uLongf bound = compressBound(static_cast<uLong>(text.size()));
  std::vector<Bytef> dest(bound);
  const int rc = compress2(dest.data(), &bound,
                           reinterpret_cast<const Bytef*>(text.data()),
                           static_cast<uLong>(text.size()), Z_DEFAULT_COMPRESSION);
  if (rc != Z_OK) throw std::runtime_error("compression_ratio: deflate failed");
  return static_cast<double>(bound) / static_cast<double>(text.size());
}

namespace {

std::string normalize_for_echo(const std::string& s) {
  std::string out;
  bool in_space = true;  // swallow leading whitespace
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::size_t shared_prefix_len(const std::string& a, const std::string& b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

}  // namespace

FilterDecision heuristic_filters(const CandidatePair& c, const CurationConfig& cfg) {
  if (c.a_assisted.text == c.a_hard.text)
    return {false, FilterReason::degenerate_equal};
  const double ratio = static_cast<double>(c.chars_w) /
                       static_cast<double>(std::max<std::size_t>(c.chars_l, 1));
  if (ratio > cfg.ratio_max) return {false, FilterReason::length_ratio};
  if (c.chars_w < cfg.min_chars) return {false, FilterReason::too_short};
  if (c.chars_w > cfg.max_chars) return {false, FilterReason::too_long};
  if (compression_ratio(c.a_assisted.text) < cfg.compression_threshold)
    return {false, FilterReason::repetitive};
  if (shared_prefix_len(normalize_for_echo(c.a_assisted.text),
                        normalize_for_echo(c.pair.query)) >= cfg.echo_prefix_chars)
    return {false, FilterReason::prompt_echo};
  for (const auto& marker : cfg.role_markers)
    if (c.a_assisted.text.find(marker) != std::string::npos)
      return {false, FilterReason::role_marker};
  return {true, FilterReason::kept};
}

CurationResult assemble_dataset(const std::vector<CandidatePair>& candidates,
                                const CurationConfig& cfg, std::size_t round) {
  CurationResult out;
  auto& report = out.report;
  report.total = candidates.size();
  report.decisions.assign(candidates.size(), FilterReason::kept);
  if (candidates.empty()) return out;

  std::vector<double> deltas;
  deltas.reserve(candidates.size());
  for (const auto& c : candidates) deltas.push_back(c.delta);
  const auto in_window = percentile_window(deltas, cfg.window_low, cfg.window_high);

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    FilterDecision d;
    if (!in_window[i])
      d = {false, FilterReason::out_of_window};
    else
      d = heuristic_filters(candidates[i], cfg);
    report.decisions[i] = d.reason;
    ++report.reason_counts[filter_reason_name(d.reason)];
    if (d.kept) {
      DatasetRecord rec;
      rec.pref.x = candidates[i].pair.query;
      rec.pref.y_w = candidates[i].a_assisted.tokens;
      rec.pref.y_l = candidates[i].a_hard.tokens;
      rec.delta = candidates[i].delta;
      rec.round = round;
      out.dataset.push_back(std::move(rec));
      ++report.kept;
    }
  }

  auto sorted = deltas;
  std::sort(sorted.begin(), sorted.end());
  report.delta_min = sorted.front();
  report.delta_max = sorted.back();
  const std::size_t n = sorted.size();
  report.delta_median =
      n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  report.histogram.assign(20, 0);
  report.histogram_lo = report.delta_min;
  report.histogram_hi = report.delta_max;
  const double width = report.delta_max - report.delta_min;
  for (double d : deltas) {
    std::size_t bin = 0;
    if (width > 0.0) {
      bin = static_cast<std::size_t>((d - report.delta_min) / width * 20.0);
      bin = std::min<std::size_t>(bin, 19);
    }
    ++report.histogram[bin];
  }
  return out;
}

// ------------------------------------------------------------ persistence ---

void save_dataset_jsonl(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset_jsonl: cannot open " + path);
  for (const auto& rec : records) {
    json j;
    j["x"] = rec.pref.x;
    j["y_w"] = rec.pref.y_w;
    j["y_l"] = rec.pref.y_l;
    j["delta"] = rec.delta;
    j["round"] = rec.round;
    out << j.dump() << "\n";
  }
}

std::vector<DatasetRecord> load_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset_jsonl: cannot open " + path);
  std::vector<DatasetRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    DatasetRecord rec;
    rec.pref.x = j.at("x").get<std::string>();
    rec.pref.y_w = j.at("y_w").get<std::vector<int>>();
    rec.pref.y_l = j.at("y_l").get<std::vector<int>>();
    rec.delta = j.at("delta").get<double>();
    rec.round = j.at("round").get<std::size_t>();
    records.push_back(std::move(rec));
  }
  return records;
}

void save_candidates_jsonl(const std::string& path,
                           const std::vector<CandidatePair>& candidates) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_candidates_jsonl: cannot open " + path);
  for (const auto& c : candidates) {
    json j;
    j["query"] = c.pair.query;
    j["hint"] = c.pair.hint;
    j["rollout_id"] = c.pair.rollout_id;
    j["a_hard_tokens"] = c.a_hard.tokens;
    j["a_hard_text"] = c.a_hard.text;
    j["a_assisted_tokens"] = c.a_assisted.tokens;
    j["a_assisted_text"] = c.a_assisted.text;
    j["delta"] = c.delta;
    out << j.dump() << "\n";
  }
}

std::vector<CandidatePair> load_candidates_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_candidates_jsonl: cannot open " + path);
  std::vector<CandidatePair> candidates;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    CandidatePair c;
    c.pair.query = j.at("query").get<std::string>();
    c.pair.hint = j.at("hint").get<std::string>();
    c.pair.rollout_id = j.value("rollout_id", std::string());
    c.pair.status = signals::ParseStatus::ok;
    c.a_hard.tokens = j.at("a_hard_tokens").get<std::vector<int>>();
    c.a_hard.text = j.at("a_hard_text").get<std::string>();
    c.a_assisted.tokens = j.at("a_assisted_tokens").get<std::vector<int>>();
    c.a_assisted.text = j.at("a_assisted_text").get<std::string>();
    c.delta = j.at("delta").get<double>();
    c.chars_w = c.a_assisted.text.size();
    c.chars_l = c.a_hard.text.size();
    candidates.push_back(std::move(c));
  }
  return candidates;
}

void save_report_json(const std::string& path, const FilterReport& report) {
  json j;
  j["total"] = report.total;
  j["kept"] = report.kept;
  j["reason_counts"] = report.reason_counts;
  j["delta_min"] = report.delta_min;
  j["delta_median"] = report.delta_median;
  j["delta_max"] = report.delta_max;
  j["histogram"] = report.histogram;
  j["histogram_lo"] = report.histogram_lo;
  j["histogram_hi"] = report.histogram_hi;
  std::vector<std::string> decisions;
  decisions.reserve(report.decisions.size());
  for (auto r : report.decisions) decisions.emplace_back(filter_reason_name(r));
  j["decisions"] = decisions;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_report_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace gzero::curation
