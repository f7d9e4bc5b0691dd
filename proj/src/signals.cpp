#include "gzero/signals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace gzero::signals {

namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Extracts the content of <tag>...</tag>. Distinguishes the failure modes so
// the malform_reason survives into training logs.
enum class TagResult { found, missing, unclosed, duplicated };

TagResult extract_block(std::string_view text, std::string_view tag, std::string& out) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto first = text.find(open);
  if (first == std::string_view::npos) return TagResult::missing;
  if (text.find(open, first + open.size()) != std::string_view::npos)
    return TagResult::duplicated;
  const auto end = text.find(close, first + open.size());
  if (end == std::string_view::npos) return TagResult::unclosed;
  out = std::string(text.substr(first + open.size(), end - first - open.size()));
  return TagResult::found;
}

const char* tag_failure_name(TagResult r) {
  switch (r) {
    case TagResult::missing: return "missing";
    case TagResult::unclosed: return "unclosed";
    case TagResult::duplicated: return "duplicated";
    default: return "";
  }
}

}  // namespace

QueryHintPair parse_proposer_output(std::string_view text) {
  QueryHintPair pair;
  std::string q, h;
  const TagResult rq = extract_block(text, "question", q);
  if (rq != TagResult::found) {
    pair.malform_reason = std::string(tag_failure_name(rq)) + " question block";
    return pair;
  }
  const TagResult rh = extract_block(text, "hint", h);
  if (rh != TagResult::found) {
    pair.malform_reason = std::string(tag_failure_name(rh)) + " hint block";
    return pair;
  }
  const std::string_view qt = trim(q);
  const std::string_view ht = trim(h);
  if (qt.empty()) {
    pair.malform_reason = "empty question";
    return pair;
  }
  if (ht.empty()) {
    pair.malform_reason = "empty hint";
    return pair;
  }
  pair.query = std::string(qt);
  pair.hint = std::string(ht);
  pair.status = ParseStatus::ok;
  return pair;
}

double hint_delta(const DualScore& dual) {
  const auto& u = dual.uncond.logprobs;
  const auto& h = dual.hinted.logprobs;
  if (u.empty() || u.size() != h.size())
    throw std::invalid_argument("hint_delta: dual score lengths must match and be nonzero");
  double sum = 0.0;
  for (std::size_t t = 0; t < u.size(); ++t) {
    if (!std::isfinite(u[t]) || !std::isfinite(h[t]))
      throw std::invalid_argument("hint_delta: non-finite logprob");
    sum += u[t] - h[t];
  }
  return sum / static_cast<double>(u.size());
}

double length_penalty(std::size_t hint_chars, const LengthPenaltyConfig& cfg) {
  const double over = (static_cast<double>(hint_chars) - cfg.budget_chars) / cfg.divisor;
  return cfg.lambda * std::max(0.0, over);
}

std::vector<std::string> bleu_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

// Directional sentence BLEU, candidate against reference.
double bleu_directional(const std::vector<std::string>& cand,
                        const std::vector<std::string>& ref) {
  constexpr int kMaxOrder = 4;
  double log_score = 0.0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    const std::size_t total = cand.size() >= static_cast<std::size_t>(n)
                                  ? cand.size() - n + 1
                                  : 0;
    if (total == 0) continue;  // p_n treated as 1 when the candidate has no n-grams

    std::map<std::vector<std::string>, int> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i)
      ++ref_counts[{ref.begin() + i, ref.begin() + i + n}];

    std::map<std::vector<std::string>, int> cand_counts;
    for (std::size_t i = 0; i + n <= cand.size(); ++i)
      ++cand_counts[{cand.begin() + i, cand.begin() + i + n}];

    long matches = 0;
    for (const auto& [gram, c] : cand_counts) {
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matches += std::min(c, it->second);
    }

    double p;
    if (n == 1) {
      if (matches == 0) return 0.0;  // disjoint texts score exactly 0
      p = static_cast<double>(matches) / static_cast<double>(total);
    } else {
      p = (static_cast<double>(matches) + 1.0) / (static_cast<double>(total) + 1.0);
    }
    log_score += std::log(p) / kMaxOrder;
  }
  const double bp =
      cand.size() >= ref.size()
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
  return bp * std::exp(log_score);
}

}  // namespace

double bleu_pairwise(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("bleu_pairwise: empty token sequence");
  return std::max(bleu_directional(a, b), bleu_directional(b, a));
}

std::vector<int> cluster_questions(const std::vector<std::vector<std::string>>& batch,
                                   double threshold) {
  const std::size_t n = batch.size();
  std::vector<int> assignment(n);
  if (n == 0) return assignment;

  // Pairwise similarity sums let average linkage update in O(1) per merge:
  // linkage(A,B) = simsum(A,B) / (|A|·|B|) and simsum is additive on merges.
  std::vector<std::vector<double>> simsum(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      simsum[i][j] = simsum[j][i] = bleu_pairwise(batch[i], batch[j]);

  struct Cluster {
    std::vector<std::size_t> members;
    bool alive = true;
  };
  std::vector<Cluster> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i].members = {i};

  while (true) {
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    bool found = false;
    // Iterating in index order means ties resolve to the smallest
    // (min member, min member) pair, keeping merges deterministic.
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (!clusters[i].alive) continue;
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        if (!clusters[j].alive) continue;
        const double link =
            simsum[i][j] / (static_cast<double>(clusters[i].members.size()) *
                            static_cast<double>(clusters[j].members.size()));
        if (link > best) {
          best = link;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found || best <= threshold) break;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      if (!clusters[k].alive || k == bi || k == bj) continue;
      simsum[bi][k] += simsum[bj][k];
      simsum[k][bi] = simsum[bi][k];
    }
    auto& dst = clusters[bi].members;
    dst.insert(dst.end(), clusters[bj].members.begin(), clusters[bj].members.end());
    clusters[bj].alive = false;
  }

  for (const auto& c : clusters) {
    if (!c.alive) continue;
    const auto id = static_cast<int>(*std::min_element(c.members.begin(), c.members.end()));
    for (std::size_t m : c.members) assignment[m] = id;
  }
  return assignment;
}

double duplication_penalty(const std::vector<int>& assignment, std::size_t item,
                           std::size_t batch_size) {
  if (item >= assignment.size() || batch_size == 0)
    throw std::invalid_argument("duplication_penalty: item outside assignment");
  const int id = assignment[item];
  const auto size = std::count(assignment.begin(), assignment.end(), id);
  return static_cast<double>(size) / static_cast<double>(batch_size);
}

RewardBreakdown proposer_reward(std::optional<double> delta, double p_length, double p_bleu) {
  RewardBreakdown r;
  r.p_bleu = p_bleu;
  if (delta.has_value()) {
    r.delta = delta;
    r.p_length = p_length;
    r.total = *delta - p_length - p_bleu;
  } else {
    // Formatting failures bottom out at -1 before duplication so repeated
    // malformed near-duplicates still get pushed apart.
    r.format_floor_applied = true;
    r.p_length = 0.0;
    r.total = -1.0 - p_bleu;
  }
  return r;
}

}  // namespace gzero::signals
