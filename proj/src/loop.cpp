#include "gzero/loop.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "gzero/errors.hpp"
#include "gzero/toy_policy.hpp"

namespace gzero::loop {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t hash_doubles(std::uint64_t h, std::span<const double> v) {
  for (double d : v) h = fnv1a64(&d, sizeof d, h);
  return h;
}

// Token material a phase-1 rollout contributes to question clustering: the
// parsed question when available, the raw text otherwise. A rollout whose
// material tokenizes to nothing gets no cluster mates, handled by the caller.
std::vector<std::string> cluster_tokens_for(const ProposerRollout& rollout,
                                            const signals::QueryHintPair& pair) {
  const std::string& material = pair.query.empty() ? rollout.text : pair.query;
  return signals::bleu_tokenize(material);
}

std::filesystem::path round_dir(const std::string& run_dir, std::size_t round) {
  char leaf[32];
  std::snprintf(leaf, sizeof leaf, "round_%03zu", round);
  return std::filesystem::path(run_dir) / leaf;
}

json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad ") + what + " file " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

std::uint64_t param_hash(const ToyPolicyParams& p) {
  std::uint64_t h = fnv1a64(&p.vocab_size, sizeof p.vocab_size);
  h = fnv1a64(&p.num_features, sizeof p.num_features, h);
  return hash_doubles(h, p.flatten());
}

std::uint64_t param_hash(const ToyProposerParams& p) {
  std::uint64_t h = fnv1a64(&p.num_templates, sizeof p.num_templates);
  h = fnv1a64(&p.num_hints, sizeof p.num_hints, h);
  return hash_doubles(h, p.flatten());
}

double mean_target_loglik(const ToyPolicyParams& generator, const ToyWorld& world,
                          std::size_t num_prompts) {
  if (num_prompts == 0 || world.templates.empty())
    throw std::invalid_argument("mean_target_loglik: nothing to evaluate");
  double sum = 0.0;
  for (std::size_t i = 0; i < num_prompts; ++i) {
    const std::size_t m = i % world.templates.size();
    const PromptContext ctx = render_context(world.templates[m].query);
    const std::vector<int> target = world.target_continuation(m);
    sum += toy_sequence_logprob(generator, ctx, target) / static_cast<double>(target.size());
  }
  return sum / static_cast<double>(num_prompts);
}

ToyLoopRunner::ToyLoopRunner(ToyWorld world, LoopConfig cfg)
    : world_(std::move(world)), bank_(bank_from_world(world_)), cfg_(std::move(cfg)) {
  if (cfg_.grpo.group_size < 2) throw ConfigError("loop: GRPO group size must be >= 2");
  if (cfg_.grpo.batch_size == 0 || cfg_.grpo.batch_size % cfg_.grpo.group_size != 0)
    throw ConfigError("loop: GRPO batch size must be a positive multiple of the group size");
  if (cfg_.grpo.steps == 0) throw ConfigError("loop: GRPO needs at least one step");
  if (cfg_.questions_per_round == 0) throw ConfigError("loop: questions_per_round must be > 0");
  if (cfg_.proposer_malform_prob < 0.0 || cfg_.proposer_malform_prob > 1.0)
    throw ConfigError("loop: proposer_malform_prob must lie in [0, 1]");
}

RoundState ToyLoopRunner::initial_state() const {
  RoundState state;
  state.round = 0;
  state.generator = world_.initial_generator();
  state.proposer = make_uniform_proposer(bank_);
  state.reference = {state.generator, 0};
  return state;
}

RoundState ToyLoopRunner::run_phase1(RoundState state) const {
  const auto t0 = Clock::now();
  const std::uint64_t generator_guard = param_hash(state.generator);
  ToyBackend frozen(state.generator);
  Rng rng = Rng(cfg_.seed).fork(2 * state.round);

  const std::size_t batch = cfg_.grpo.batch_size;
  const std::size_t K = cfg_.grpo.group_size;
  state.metrics.proposer_reward_curve.clear();

  for (std::size_t step = 0; step < cfg_.grpo.steps; ++step) {
    std::vector<ProposerRollout> rollouts;
    std::vector<signals::QueryHintPair> pairs;
    rollouts.reserve(batch);
    pairs.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      ProposerRollout r = toy_proposer_sample(state.proposer, bank_, rng,
                                              cfg_.proposer_malform_prob);
      signals::QueryHintPair pair = signals::parse_proposer_output(r.text);
      pair.rollout_id = "r" + std::to_string(state.round) + "_s" + std::to_string(step) +
                        "_" + std::to_string(i);
      rollouts.push_back(std::move(r));
      pairs.push_back(std::move(pair));
    }

    // Duplication penalties come from clustering the whole step batch.
    // Rollouts with no tokenizable question material stand alone.
    std::vector<std::vector<std::string>> texts;
    std::vector<std::size_t> clustered_index;
    for (std::size_t i = 0; i < batch; ++i) {
      std::vector<std::string> toks = cluster_tokens_for(rollouts[i], pairs[i]);
      if (!toks.empty()) {
        texts.push_back(std::move(toks));
        clustered_index.push_back(i);
      }
    }
    std::vector<double> p_bleu(batch, 1.0 / static_cast<double>(batch));
    if (!texts.empty()) {
      const std::vector<int> assignment = signals::cluster_questions(texts, cfg_.bleu_threshold);
      for (std::size_t pos = 0; pos < clustered_index.size(); ++pos)
        p_bleu[clustered_index[pos]] = signals::duplication_penalty(assignment, pos, batch);
    }

    std::vector<optim::RolloutGroup> groups(batch / K);
    double reward_sum = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      optim::ProposerRolloutRecord rec;
      rec.rollout = rollouts[i];
      rec.old_logprob =
          toy_proposer_logprob(state.proposer, rollouts[i].template_id, rollouts[i].fragment_id);
      if (pairs[i].ok()) {
        const Completion a_hard =
            frozen.sample(render_context(pairs[i].query), cfg_.gen_sample, rng);
        const double delta = curation::recompute_delta(frozen, pairs[i], a_hard.tokens);
        const double p_len = signals::length_penalty(pairs[i].hint.size(), cfg_.length_penalty);
        rec.reward = signals::proposer_reward(delta, p_len, p_bleu[i]);
      } else {
        rec.reward = signals::proposer_reward(std::nullopt, 0.0, p_bleu[i]);
      }
      reward_sum += rec.reward.total;
      groups[i / K].outputs.push_back(std::move(rec));
    }

    state.proposer = optim::grpo_step(state.proposer, groups, cfg_.grpo);
    state.metrics.proposer_reward_curve.push_back(reward_sum / static_cast<double>(batch));
  }

  if (param_hash(state.generator) != generator_guard)
    throw std::logic_error("phase 1 wrote to the generator");
  state.metrics.wall_phase1_s = seconds_since(t0);
  return state;
}

RoundState ToyLoopRunner::run_phase2(RoundState state) const {
  const auto t0 = Clock::now();
  const std::uint64_t proposer_guard = param_hash(state.proposer);
  ToyBackend backend(state.generator);
  Rng rng = Rng(cfg_.seed).fork(2 * state.round + 1);

  // The DPO anchor is the generator as it stood when this round began; phase 1
  // never touches the generator, so snapshotting here is equivalent.
  if (state.reference.round != state.round || state.reference.params.vocab_size == 0)
    state.reference = {state.generator, state.round};

  std::vector<curation::CandidatePair> candidates;
  candidates.reserve(cfg_.questions_per_round);
  std::size_t malformed = 0;
  for (std::size_t i = 0; i < cfg_.questions_per_round; ++i) {
    const ProposerRollout r =
        toy_proposer_sample(state.proposer, bank_, rng, cfg_.proposer_malform_prob);
    signals::QueryHintPair pair = signals::parse_proposer_output(r.text);
    pair.rollout_id = "r" + std::to_string(state.round) + "_q" + std::to_string(i);
    if (!pair.ok()) {
      ++malformed;
      continue;
    }
    candidates.push_back(curation::build_candidate(backend, pair, cfg_.gen_sample, rng));
  }

  curation::CurationResult curated =
      curation::assemble_dataset(candidates, cfg_.curation, state.round);
  if (curated.dataset.empty())
    throw RoundAbort("round " + std::to_string(state.round) + ": curation kept 0 of " +
                     std::to_string(candidates.size()) + " candidates (" +
                     std::to_string(malformed) + " draws malformed); generator unchanged");

  std::vector<optim::PreferenceRecord> prefs;
  prefs.reserve(curated.dataset.size());
  for (const auto& rec : curated.dataset) prefs.push_back(rec.pref);

  state.metrics.dpo_loss_curve.clear();
  state.generator =
      optim::dpo_train(state.generator, state.reference, prefs, cfg_.dpo,
                       &state.metrics.dpo_loss_curve);

  state.metrics.filter_report = std::move(curated.report);
  state.metrics.questions_drawn = cfg_.questions_per_round;
  state.metrics.malformed_drawn = malformed;

  if (param_hash(state.proposer) != proposer_guard)
    throw std::logic_error("phase 2 wrote to the proposer");
  state.metrics.wall_phase2_s = seconds_since(t0);

  if (!cfg_.run_dir.empty()) {
    const std::filesystem::path dir = round_dir(cfg_.run_dir, state.round);
    std::filesystem::create_directories(dir);
    curation::save_dataset_jsonl((dir / "dataset.jsonl").string(), curated.dataset);
    curation::save_candidates_jsonl((dir / "candidates.jsonl").string(), candidates);
    curation::save_report_json((dir / "report.json").string(), state.metrics.filter_report);
    save_generator_json((dir / "generator.json").string(), state.generator);
    save_proposer_json((dir / "proposer.json").string(), state.proposer);
    save_metrics_json((dir / "metrics.json").string(), state.metrics);
    state.dataset_path = (dir / "dataset.jsonl").string();
  }
  return state;
}

RoundState ToyLoopRunner::run_round(RoundState state) const {
  state.metrics = RoundMetrics{};
  state.reference = {state.generator, state.round};
  state = run_phase1(std::move(state));
  state = run_phase2(std::move(state));
  state.round += 1;
  if (cfg_.reset_proposer_each_round) state.proposer = make_uniform_proposer(bank_);
  return state;
}

void save_generator_json(const std::string& path, const ToyPolicyParams& p) {
  json j{{"vocab_size", p.vocab_size},
         {"num_features", p.num_features},
         {"start_logits", p.start_logits},
         {"bigram_logits", p.bigram_logits},
         {"feature_logits", p.feature_logits}};
  write_json_file(path, j);
}

ToyPolicyParams load_generator_json(const std::string& path) {
  const json j = load_json_file(path, "generator");
  try {
    ToyPolicyParams p;
    p.vocab_size = j.at("vocab_size").get<int>();
    p.num_features = j.at("num_features").get<int>();
    p.start_logits = j.at("start_logits").get<std::vector<double>>();
    p.bigram_logits = j.at("bigram_logits").get<std::vector<double>>();
    p.feature_logits = j.at("feature_logits").get<std::vector<double>>();
    if (p.vocab_size <= 0 || p.num_features <= 0 ||
        p.start_logits.size() != static_cast<std::size_t>(p.vocab_size) ||
        p.bigram_logits.size() != static_cast<std::size_t>(p.vocab_size) * p.vocab_size ||
        p.feature_logits.size() != static_cast<std::size_t>(p.num_features) * p.vocab_size)
      throw ConfigError("generator file " + path + " has inconsistent shapes");
    return p;
  } catch (const json::exception& e) {
    throw ConfigError("bad generator file " + path + ": " + e.what());
  }
}

void save_proposer_json(const std::string& path, const ToyProposerParams& p) {
  json j{{"num_templates", p.num_templates},
         {"num_hints", p.num_hints},
         {"template_logits", p.template_logits},
         {"fragment_logits", p.fragment_logits}};
  write_json_file(path, j);
}

ToyProposerParams load_proposer_json(const std::string& path) {
  const json j = load_json_file(path, "proposer");
  try {
    ToyProposerParams p;
    p.num_templates = j.at("num_templates").get<std::size_t>();
    p.num_hints = j.at("num_hints").get<std::size_t>();
    p.template_logits = j.at("template_logits").get<std::vector<double>>();
    p.fragment_logits = j.at("fragment_logits").get<std::vector<double>>();
    if (p.num_templates == 0 || p.num_hints == 0 ||
        p.template_logits.size() != p.num_templates ||
        p.fragment_logits.size() != p.num_templates * p.num_hints)
      throw ConfigError("proposer file " + path + " has inconsistent shapes");
    return p;
  } catch (const json::exception& e) {
    throw ConfigError("bad proposer file " + path + ": " + e.what());
  }
}

void save_metrics_json(const std::string& path, const RoundMetrics& m) {
  // Wall times stay out of the file on purpose: seeded reruns must reproduce
  // the artifact tree byte for byte, and timing is the one nondeterministic
  // field. Callers who want it read RoundMetrics directly.
  json j{{"proposer_reward_curve", m.proposer_reward_curve},
         {"dpo_loss_curve", m.dpo_loss_curve},
         {"questions_drawn", m.questions_drawn},
         {"malformed_drawn", m.malformed_drawn},
         {"candidates_total", m.filter_report.total},
         {"candidates_kept", m.filter_report.kept}};
  write_json_file(path, j);
}

}  // namespace gzero::loop
