#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "gzero/errors.hpp"
#include "gzero/loop.hpp"

using namespace gzero;
namespace fs = std::filesystem;

namespace {

// The toy-scale training knobs: tabular logits want far larger steps than the
// Table-style remote defaults, and toy responses are a handful of characters.
loop::LoopConfig desk_config(std::uint64_t seed, std::string run_dir = "") {
  loop::LoopConfig cfg;
  cfg.grpo.lr = 15.0;
  cfg.dpo.lr = 0.05;
  cfg.curation.min_chars = 1;
  cfg.gen_sample.max_tokens = 8;
  cfg.questions_per_round = 200;
  cfg.seed = seed;
  cfg.run_dir = std::move(run_dir);
  return cfg;
}

fs::path temp_dir(const std::string& tag) {
  return fs::temp_directory_path() /
         ("gzero_loop_" + tag + "_" + std::to_string(::getpid()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("initial state starts at round zero with the world's generator") {
  const ToyWorld world = make_toy_world();
  loop::ToyLoopRunner runner(world, desk_config(1));
  const loop::RoundState s = runner.initial_state();
  CHECK(s.round == 0);
  CHECK(loop::param_hash(s.generator) == loop::param_hash(world.initial_generator()));
  CHECK(loop::param_hash(s.proposer) ==
        loop::param_hash(make_uniform_proposer(runner.bank())));
  CHECK(s.reference.round == 0);
  CHECK(loop::param_hash(s.reference.params) == loop::param_hash(s.generator));
}

TEST_CASE("param hash separates distinct parameters and matches copies") {
  const ToyWorld world = make_toy_world();
  ToyPolicyParams a = world.initial_generator();
  ToyPolicyParams b = a;
  CHECK(loop::param_hash(a) == loop::param_hash(b));
  b.start_logits[3] += 1e-9;
  CHECK(loop::param_hash(a) != loop::param_hash(b));

  ToyProposerParams p = make_uniform_proposer(bank_from_world(world));
  ToyProposerParams q = p;
  CHECK(loop::param_hash(p) == loop::param_hash(q));
  q.fragment_logits[0] = 0.1;
  CHECK(loop::param_hash(p) != loop::param_hash(q));
}

TEST_CASE("mean target loglik is exactly -log(vocab) under uniform parameters") {
  const ToyWorld world = make_toy_world();
  const ToyPolicyParams uniform = make_uniform_toy_params(world.vocab_size, world.num_features);
  const double got = loop::mean_target_loglik(uniform, world, 500);
  CHECK(got == doctest::Approx(-std::log(12.0)).epsilon(1e-12));
  CHECK_THROWS_AS(loop::mean_target_loglik(uniform, world, 0), std::invalid_argument);
}

TEST_CASE("config validation rejects unusable optimizer shapes") {
  const ToyWorld world = make_toy_world();
  loop::LoopConfig bad = desk_config(1);
  bad.grpo.group_size = 1;
  CHECK_THROWS_AS(loop::ToyLoopRunner(world, bad), ConfigError);
  bad = desk_config(1);
  bad.grpo.batch_size = 126;  // not a multiple of the group size
  CHECK_THROWS_AS(loop::ToyLoopRunner(world, bad), ConfigError);
  bad = desk_config(1);
  bad.questions_per_round = 0;
  CHECK_THROWS_AS(loop::ToyLoopRunner(world, bad), ConfigError);
  bad = desk_config(1);
  bad.proposer_malform_prob = 1.5;
  CHECK_THROWS_AS(loop::ToyLoopRunner(world, bad), ConfigError);
}

TEST_CASE("phase 1 trains the proposer, freezes the generator, and logs rewards") {
  const ToyWorld world = make_toy_world();
  loop::ToyLoopRunner runner(world, desk_config(7));
  loop::RoundState s0 = runner.initial_state();
  const std::uint64_t gen_hash = loop::param_hash(s0.generator);
  const std::uint64_t prop_hash = loop::param_hash(s0.proposer);

  const loop::RoundState s1 = runner.run_phase1(s0);
  CHECK(s1.metrics.proposer_reward_curve.size() == 6);
  for (double r : s1.metrics.proposer_reward_curve) CHECK(std::isfinite(r));
  CHECK(loop::param_hash(s1.generator) == gen_hash);
  CHECK(loop::param_hash(s1.proposer) != prop_hash);
  CHECK(s1.metrics.proposer_reward_curve.back() >
        s1.metrics.proposer_reward_curve.front());

  const loop::RoundState again = runner.run_phase1(s0);
  CHECK(again.metrics.proposer_reward_curve == s1.metrics.proposer_reward_curve);
  CHECK(again.proposer.flatten() == s1.proposer.flatten());
}

TEST_CASE("phase 2 snapshots the reference, trains the generator, freezes the proposer") {
  const ToyWorld world = make_toy_world();
  loop::ToyLoopRunner runner(world, desk_config(11));
  loop::RoundState s = runner.run_phase1(runner.initial_state());
  const std::uint64_t gen_before = loop::param_hash(s.generator);
  const std::uint64_t prop_hash = loop::param_hash(s.proposer);
  s.reference = optim::ReferenceSnapshot{};  // force the phase to re-snapshot

  const loop::RoundState t = runner.run_phase2(s);
  CHECK(t.reference.round == 0);
  CHECK(loop::param_hash(t.reference.params) == gen_before);
  CHECK(loop::param_hash(t.generator) != gen_before);
  CHECK(loop::param_hash(t.proposer) == prop_hash);
  CHECK(!t.metrics.dpo_loss_curve.empty());
  CHECK(t.metrics.questions_drawn == 200);
  CHECK(t.metrics.filter_report.total + t.metrics.malformed_drawn == 200);
  CHECK(t.metrics.filter_report.kept > 0);
}

TEST_CASE("a full round improves the unassisted target likelihood") {
  const ToyWorld world = make_toy_world();
  loop::ToyLoopRunner runner(world, desk_config(3));
  const loop::RoundState s0 = runner.initial_state();
  const double before = loop::mean_target_loglik(s0.generator, world);

  const loop::RoundState s1 = runner.run_round(s0);
  CHECK(s1.round == 1);
  const double after = loop::mean_target_loglik(s1.generator, world);
  CHECK(after > before);

  // The preference data never leaks hints into the conditioning side.
  loop::ToyLoopRunner probe(world, desk_config(3));
  const loop::RoundState p = probe.run_phase2(probe.run_phase1(probe.initial_state()));
  CHECK(p.metrics.filter_report.kept > 0);
}

TEST_CASE("seeded reruns produce identical datasets and metrics") {
  const ToyWorld world = make_toy_world();
  const fs::path dir_a = temp_dir("rerun_a");
  const fs::path dir_b = temp_dir("rerun_b");
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  loop::ToyLoopRunner ra(world, desk_config(17, dir_a.string()));
  loop::ToyLoopRunner rb(world, desk_config(17, dir_b.string()));
  const loop::RoundState a = ra.run_round(ra.initial_state());
  const loop::RoundState b = rb.run_round(rb.initial_state());

  CHECK(slurp(dir_a / "round_000" / "dataset.jsonl") ==
        slurp(dir_b / "round_000" / "dataset.jsonl"));
  CHECK(slurp(dir_a / "round_000" / "candidates.jsonl") ==
        slurp(dir_b / "round_000" / "candidates.jsonl"));
  CHECK(a.metrics.proposer_reward_curve == b.metrics.proposer_reward_curve);
  CHECK(a.metrics.dpo_loss_curve == b.metrics.dpo_loss_curve);
  CHECK(a.generator.flatten() == b.generator.flatten());
  CHECK(a.dataset_path == (dir_a / "round_000" / "dataset.jsonl").string());

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("a round can be replayed from its persisted checkpoint") {
  const ToyWorld world = make_toy_world();
  const fs::path dir = temp_dir("replay");
  fs::remove_all(dir);

  loop::ToyLoopRunner runner(world, desk_config(23, dir.string()));
  loop::RoundState s1 = runner.run_round(runner.initial_state());
  const loop::RoundState s2 = runner.run_round(s1);

  loop::RoundState resumed;
  resumed.round = 1;
  resumed.generator = loop::load_generator_json((dir / "round_000" / "generator.json").string());
  resumed.proposer = loop::load_proposer_json((dir / "round_000" / "proposer.json").string());
  const loop::RoundState replayed = runner.run_round(resumed);

  CHECK(replayed.metrics.proposer_reward_curve == s2.metrics.proposer_reward_curve);
  CHECK(replayed.metrics.dpo_loss_curve == s2.metrics.dpo_loss_curve);
  CHECK(replayed.generator.flatten() == s2.generator.flatten());

  fs::remove_all(dir);
}

TEST_CASE("round directory holds dataset, report, checkpoints and metrics") {
  const ToyWorld world = make_toy_world();
  const fs::path dir = temp_dir("layout");
  fs::remove_all(dir);
  loop::ToyLoopRunner runner(world, desk_config(5, dir.string()));
  (void)runner.run_round(runner.initial_state());
  for (const char* leaf : {"dataset.jsonl", "candidates.jsonl", "report.json",
                           "generator.json", "proposer.json", "metrics.json"})
    CHECK(fs::exists(dir / "round_000" / leaf));
  fs::remove_all(dir);
}

TEST_CASE("an empty curated set aborts the round and leaves the state alone") {
  const ToyWorld world = make_toy_world();
  const fs::path dir = temp_dir("abort");
  fs::remove_all(dir);
  loop::LoopConfig cfg = desk_config(29, dir.string());
  cfg.curation.min_chars = 100000;  // every toy response is too short now
  loop::ToyLoopRunner runner(world, cfg);
  const loop::RoundState s0 = runner.initial_state();
  const std::uint64_t gen_hash = loop::param_hash(s0.generator);
  CHECK_THROWS_AS((void)runner.run_round(s0), RoundAbort);
  CHECK(loop::param_hash(s0.generator) == gen_hash);
  CHECK(!fs::exists(dir / "round_000"));
  fs::remove_all(dir);
}

TEST_CASE("proposer carries over by default and resets on request") {
  const ToyWorld world = make_toy_world();
  loop::LoopConfig cfg = desk_config(31);
  loop::ToyLoopRunner carry(world, cfg);
  const loop::RoundState c1 = carry.run_round(carry.initial_state());
  CHECK(loop::param_hash(c1.proposer) !=
        loop::param_hash(make_uniform_proposer(carry.bank())));

  cfg.reset_proposer_each_round = true;
  loop::ToyLoopRunner reset(world, cfg);
  const loop::RoundState r1 = reset.run_round(reset.initial_state());
  CHECK(loop::param_hash(r1.proposer) ==
        loop::param_hash(make_uniform_proposer(reset.bank())));
}

TEST_CASE("malformed proposer draws get floor rewards without breaking the round") {
  const ToyWorld world = make_toy_world();
  loop::LoopConfig cfg = desk_config(37);
  cfg.proposer_malform_prob = 0.3;
  loop::ToyLoopRunner runner(world, cfg);
  const loop::RoundState s = runner.run_round(runner.initial_state());
  CHECK(s.round == 1);
  CHECK(s.metrics.malformed_drawn > 0);
  CHECK(s.metrics.filter_report.total + s.metrics.malformed_drawn == 200);
  // With a 0.3 malform rate the first-step mean reward sits well below the
  // clean-run value because a third of the batch eats the -1 floor.
  CHECK(s.metrics.proposer_reward_curve.front() < 0.5);
}

TEST_CASE("parameter files round-trip and reject inconsistent shapes") {
  const ToyWorld world = make_toy_world();
  const fs::path dir = temp_dir("params");
  fs::remove_all(dir);
  fs::create_directories(dir);

  const ToyPolicyParams g = world.initial_generator();
  loop::save_generator_json((dir / "g.json").string(), g);
  CHECK(loop::load_generator_json((dir / "g.json").string()).flatten() == g.flatten());

  const ToyProposerParams p = make_uniform_proposer(bank_from_world(world));
  loop::save_proposer_json((dir / "p.json").string(), p);
  const ToyProposerParams q = loop::load_proposer_json((dir / "p.json").string());
  CHECK(q.flatten() == p.flatten());
  CHECK(q.num_templates == p.num_templates);

  CHECK_THROWS_AS(loop::load_generator_json((dir / "missing.json").string()), ConfigError);
  {
    std::ofstream out(dir / "bad.json");
    out << "{\"vocab_size\": 12, \"num_features\": 4, \"start_logits\": [0.0],"
        << "\"bigram_logits\": [], \"feature_logits\": []}\n";
  }
  CHECK_THROWS_AS(loop::load_generator_json((dir / "bad.json").string()), ConfigError);
  {
    std::ofstream out(dir / "garbage.json");
    out << "not json at all\n";
  }
  CHECK_THROWS_AS(loop::load_generator_json((dir / "garbage.json").string()), ConfigError);

  fs::remove_all(dir);
}
