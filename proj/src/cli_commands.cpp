#include "gzero/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gzero/config.hpp"
#include "gzero/curation.hpp"
#include "gzero/errors.hpp"
#include "gzero/loop.hpp"
#include "gzero/optim.hpp"
#include "gzero/signals.hpp"
#include "gzero/theory.hpp"
#include "gzero/toy_policy.hpp"
#include "gzero/toy_proposer.hpp"
#include "gzero/toy_world.hpp"

namespace gzero::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config_path;
  bool toy_preset = false;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string run_dir;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path,
                  "JSON config file (full-scale defaults when omitted)");
  sub->add_flag("--toy-preset", c.toy_preset,
                "start from the settings calibrated for the built-in toy policy");
  c.seed_opt = sub->add_option("--seed", c.seed, "override the config seed");
  sub->add_option("--run-dir", c.run_dir, "override the config run directory");
}

config::RunConfig resolve(const Common& c) {
  if (!c.config_path.empty() && c.toy_preset)
    throw ConfigError("--config and --toy-preset are mutually exclusive");
  config::RunConfig cfg;
  if (c.toy_preset)
    cfg = config::toy_preset();
  else if (!c.config_path.empty())
    cfg = config::load_file(c.config_path);
  if (c.seed_opt != nullptr && c.seed_opt->count() > 0) {
    cfg.seed = c.seed;
    cfg.theory.seed = c.seed;
  }
  if (!c.run_dir.empty()) cfg.run_dir = c.run_dir;
  return cfg;
}

// Writes to the named file, or to stdout when the name is "-".
void emit(const std::string& path, const std::string& payload) {
  if (path == "-") {
    std::cout << payload;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file: " + path);
  out << payload;
  if (!out) throw ConfigError("failed writing output file: " + path);
}

// 1-based average ranks with ties sharing their mean rank.
std::vector<double> fractional_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || a.size() != b.size()) return std::numeric_limits<double>::quiet_NaN();
  return pearson(fractional_ranks(a), fractional_ranks(b));
}

// ---------------------------------------------------------------- run-round

struct RunRoundArgs {
  Common common;
  std::size_t rounds = 1;
};

int cmd_run_round(const RunRoundArgs& a) {
  config::RunConfig cfg = resolve(a.common);
  if (a.rounds == 0) {
    std::cout << "config ok; nothing to run\n";
    return 0;
  }
  if (cfg.mode == config::Mode::remote) {
    const char* key = std::getenv(cfg.remote.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw ConfigError("remote mode needs an API key in $" + cfg.remote.api_key_env +
                        "; refusing to start");
    throw ConfigError(
        "remote mode covers sampling and scoring only; run-round updates model parameters, "
        "which the completion protocol does not expose. Use toy mode for training runs.");
  }
  if (cfg.run_dir.empty())
    throw ConfigError("run-round needs a run directory (--run-dir or run_dir in the config)");

  const ToyWorld world = make_toy_world();
  const loop::ToyLoopRunner runner(world, config::loop_config(cfg));
  fs::create_directories(cfg.run_dir);
  config::save_file(cfg, (fs::path(cfg.run_dir) / "config.json").string());

  loop::RoundState state = runner.initial_state();
  std::cout << "target loglik before training " << std::setprecision(6)
            << loop::mean_target_loglik(state.generator, world) << "\n";
  for (std::size_t i = 0; i < a.rounds; ++i) {
    state = runner.run_round(state);
    const loop::RoundMetrics& m = state.metrics;
    std::cout << "round " << state.round - 1 << ":";
    if (!m.proposer_reward_curve.empty())
      std::cout << " reward " << m.proposer_reward_curve.front() << " -> "
                << m.proposer_reward_curve.back();
    std::cout << "; kept " << m.filter_report.kept << "/" << m.filter_report.total;
    if (!m.dpo_loss_curve.empty())
      std::cout << "; dpo loss " << m.dpo_loss_curve.front() << " -> "
                << m.dpo_loss_curve.back();
    std::cout << "; target loglik " << loop::mean_target_loglik(state.generator, world)
              << "; wall " << m.wall_phase1_s << "s + " << m.wall_phase2_s << "s\n";
  }
  std::cout << "artifacts under " << cfg.run_dir << "\n";
  return 0;
}

// ------------------------------------------------------------------ propose

struct ProposeArgs {
  Common common;
  std::size_t count = 0;
  CLI::Option* count_opt = nullptr;
  std::string params_path;
  std::string out = "-";
};

int cmd_propose(const ProposeArgs& a) {
  config::RunConfig cfg = resolve(a.common);
  const ToyWorld world = make_toy_world();
  const ProposerBank bank = bank_from_world(world);
  const ToyProposerParams params = a.params_path.empty()
                                       ? make_uniform_proposer(bank)
                                       : loop::load_proposer_json(a.params_path);
  const std::size_t count =
      (a.count_opt != nullptr && a.count_opt->count() > 0) ? a.count : cfg.questions_per_round;

  Rng rng(cfg.seed);
  std::ostringstream buf;
  std::size_t malformed = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const ProposerRollout r = toy_proposer_sample(params, bank, rng, cfg.proposer_malform_prob);
    signals::QueryHintPair pair = signals::parse_proposer_output(r.text);
    json rec;
    rec["rollout_id"] = "r" + std::to_string(i);
    rec["text"] = r.text;
    rec["status"] = pair.ok() ? "ok" : "malformed";
    if (pair.ok()) {
      rec["query"] = pair.query;
      rec["hint"] = pair.hint;
    } else {
      rec["malform_reason"] = pair.malform_reason;
      ++malformed;
    }
    buf << rec.dump() << "\n";
  }
  emit(a.out, buf.str());
  std::cerr << "proposed " << count << " tasks (" << malformed << " malformed)\n";
  return 0;
}

// ------------------------------------------------------------------- curate

struct CurateArgs {
  Common common;
  std::string candidates;
  std::string out;
  std::string report;
  std::size_t round = 0;
};

int cmd_curate(const CurateArgs& a) {
  config::RunConfig cfg = resolve(a.common);
  if (!fs::exists(a.candidates))
    throw ConfigError("cannot open candidates file: " + a.candidates);
  const auto candidates = curation::load_candidates_jsonl(a.candidates);
  const curation::CurationResult res =
      curation::assemble_dataset(candidates, cfg.curation, a.round);
  curation::save_dataset_jsonl(a.out, res.dataset);
  if (!a.report.empty()) curation::save_report_json(a.report, res.report);

  const curation::FilterReport& rep = res.report;
  std::cout << "candidates " << rep.total << ", kept " << rep.kept << "\n";
  for (const auto& [name, n] : rep.reason_counts)
    std::cout << "  " << std::left << std::setw(16) << name << " " << n << "\n";
  if (rep.total > 0)
    std::cout << "delta min " << rep.delta_min << " median " << rep.delta_median << " max "
              << rep.delta_max << "\n";
  if (res.dataset.empty())
    throw RoundAbort("curation kept none of the " + std::to_string(rep.total) + " candidates");
  return 0;
}

// -------------------------------------------------------------------- score

struct ScoreArgs {
  Common common;
  std::string input;
  std::string out = "-";
  std::string params_path;
};

int cmd_score(const ScoreArgs& a) {
  config::RunConfig cfg = resolve(a.common);
  if (cfg.mode == config::Mode::remote)
    throw ConfigError(
        "score runs on the toy backend: remote scoring only accepts tokens sampled by the "
        "same client instance, which an offline record file cannot supply");
  const ToyWorld world = make_toy_world();
  ToyBackend backend(a.params_path.empty() ? world.initial_generator()
                                           : loop::load_generator_json(a.params_path));

  std::ifstream in(a.input);
  if (!in) throw ConfigError("cannot open input file: " + a.input);

  std::ostringstream buf;
  std::vector<double> deltas;
  std::vector<double> chars;
  std::size_t total = 0, malformed = 0, lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++total;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
      signals::QueryHintPair pair;
      pair.query = j.at("query").get<std::string>();
      pair.hint = j.at("hint").get<std::string>();
      pair.rollout_id = "line-" + std::to_string(lineno);
      pair.status = signals::ParseStatus::ok;
      const std::vector<int> a_hard = j.at("a_hard").get<std::vector<int>>();
      const double delta = curation::recompute_delta(backend, pair, a_hard);
      const std::string text = toy_detokenize(a_hard);

      json rec{{"query", pair.query}, {"hint", pair.hint},  {"a_hard", a_hard},
               {"delta", delta},      {"chars", text.size()}};
      buf << rec.dump() << "\n";
      deltas.push_back(delta);
      chars.push_back(static_cast<double>(text.size()));
    } catch (const json::exception& e) {
      ++malformed;
      std::cerr << "warning: skipping line " << lineno << ": " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
      ++malformed;
      std::cerr << "warning: skipping line " << lineno << ": " << e.what() << "\n";
    }
  }

  emit(a.out, buf.str());
  if (total == 0) {
    std::cerr << "warning: input file has no records\n";
    std::cout << "scored 0 records\n";
    return 0;
  }

  const double mean =
      std::accumulate(deltas.begin(), deltas.end(), 0.0) /
      std::max<double>(1.0, static_cast<double>(deltas.size()));
  std::cout << "scored " << deltas.size() << " of " << total << " records (" << malformed
            << " malformed)\n";
  if (!deltas.empty()) std::cout << "mean delta " << mean << "\n";
  const double rho = spearman(deltas, chars);
  if (std::isnan(rho))
    std::cout << "spearman(delta, response chars) undefined\n";
  else
    std::cout << "spearman(delta, response chars) " << rho << "\n";

  if (10 * malformed > total)
    throw ConfigError("more than 10% of the records were malformed (" +
                      std::to_string(malformed) + " of " + std::to_string(total) + ")");
  return 0;
}

// ---------------------------------------------------------------- dpo-train

struct DpoTrainArgs {
  Common common;
  std::string dataset;
  std::string params_path;
  std::string out;
  std::string curve;
};

int cmd_dpo_train(const DpoTrainArgs& a) {
  config::RunConfig cfg = resolve(a.common);
  if (!fs::exists(a.dataset)) throw ConfigError("cannot open dataset file: " + a.dataset);
  const auto dataset = curation::load_dataset_jsonl(a.dataset);
  if (dataset.empty()) throw RoundAbort("dataset has no records: " + a.dataset);

  const ToyWorld world = make_toy_world();
  const ToyPolicyParams start = a.params_path.empty()
                                    ? world.initial_generator()
                                    : loop::load_generator_json(a.params_path);
  const optim::ReferenceSnapshot ref{start, dataset.front().round};
  std::vector<optim::PreferenceRecord> records;
  records.reserve(dataset.size());
  for (const auto& d : dataset) records.push_back(d.pref);

  std::vector<double> curve;
  const ToyPolicyParams trained = optim::dpo_train(start, ref, records, cfg.dpo, &curve);
  loop::save_generator_json(a.out, trained);
  if (!a.curve.empty()) {
    const json j = curve;
    emit(a.curve, j.dump(2) + "\n");
  }
  std::cout << "trained on " << records.size() << " pairs";
  if (!curve.empty())
    std::cout << "; loss " << curve.front() << " -> " << curve.back() << " over "
              << curve.size() << " steps";
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------- simulate-theory

struct TheoryArgs {
  Common common;
  std::string record;
  std::string summary;
};

int cmd_simulate_theory(const TheoryArgs& a) {
  config::RunConfig cfg = resolve(a.common);
  if (!a.record.empty()) cfg.theory.record_path = a.record;
  if (!a.summary.empty()) cfg.theory.summary_path = a.summary;

  const theory::TheoryResult res = theory::run_theory_experiment(cfg.theory);
  const theory::TheorySummary& s = res.summary;
  std::cout << "rounds " << res.rounds.size() << "\n"
            << "min gap " << std::setprecision(12) << s.min_gap << " at round " << s.argmin_t
            << "\n"
            << "bound rhs " << s.bound_rhs << "\n"
            << "potential " << s.potential << " cap " << s.potential_cap << " logdet gain "
            << s.logdet_gain << "\n"
            << "kappa " << s.kappa << " c_q " << s.c_q << " alpha_s " << s.alpha_s
            << " eta_delta " << s.eta_delta << "\n";
  if (!s.warning.empty()) std::cout << "warning: " << s.warning << "\n";
  return 0;
}

// ------------------------------------------------------------------- report

struct ReportArgs {
  std::string run_dir;
};

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  return j;
}

void print_histogram(const json& rep) {
  const auto hist = rep.at("histogram").get<std::vector<std::size_t>>();
  if (hist.empty()) return;
  const double lo = rep.at("histogram_lo").get<double>();
  const double hi = rep.at("histogram_hi").get<double>();
  const std::size_t peak = *std::max_element(hist.begin(), hist.end());
  if (peak == 0) return;
  std::cout << "  delta histogram over [" << lo << ", " << hi << "]\n";
  const double width = (hi - lo) / static_cast<double>(hist.size());
  for (std::size_t b = 0; b < hist.size(); ++b) {
    const std::size_t bar = (hist[b] * 40 + peak - 1) / peak;
    std::cout << "    " << std::setw(10) << std::setprecision(4) << lo + width * static_cast<double>(b)
              << " | " << std::string(hist[b] > 0 ? std::max<std::size_t>(bar, 1) : 0, '#')
              << " " << hist[b] << "\n";
  }
}

int cmd_report(const ReportArgs& a) {
  const fs::path dir = a.run_dir;
  if (!fs::exists(dir)) throw ConfigError("run directory does not exist: " + dir.string());

  std::vector<fs::path> rounds;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("round_", 0) == 0)
      rounds.push_back(e.path());
  std::sort(rounds.begin(), rounds.end());

  if (rounds.empty()) {
    std::cout << "no rounds recorded under " << dir.string() << "\n";
    return 0;
  }

  for (const auto& rd : rounds) {
    const json rep = load_json_file(rd / "report.json");
    const json met = load_json_file(rd / "metrics.json");
    std::cout << rd.filename().string() << "\n";
    std::cout << "  questions drawn " << met.at("questions_drawn").get<std::size_t>() << " ("
              << met.at("malformed_drawn").get<std::size_t>() << " malformed)\n";
    std::cout << "  candidates " << rep.at("total").get<std::size_t>() << ", kept "
              << rep.at("kept").get<std::size_t>() << "\n";
    for (const auto& [name, n] : rep.at("reason_counts").items())
      std::cout << "    " << std::left << std::setw(16) << name << " "
                << n.get<std::size_t>() << "\n";
    std::cout << "  delta min " << rep.at("delta_min").get<double>() << " median "
              << rep.at("delta_median").get<double>() << " max "
              << rep.at("delta_max").get<double>() << "\n";
    print_histogram(rep);
    const auto reward = met.at("proposer_reward_curve").get<std::vector<double>>();
    if (!reward.empty())
      std::cout << "  proposer reward " << reward.front() << " -> " << reward.back() << " over "
                << reward.size() << " steps\n";
    const auto loss = met.at("dpo_loss_curve").get<std::vector<double>>();
    if (!loss.empty())
      std::cout << "  dpo loss " << loss.front() << " -> " << loss.back() << " over "
                << loss.size() << " steps\n";
  }
  std::cout << rounds.size() << (rounds.size() == 1 ? " round" : " rounds") << " reported\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"self-play preference optimization pipeline"};
  app.require_subcommand(1);

  RunRoundArgs rr;
  CLI::App* run = app.add_subcommand("run-round", "run full proposer/generator rounds");
  add_common(run, rr.common);
  run->add_option("--rounds", rr.rounds, "number of rounds (0 validates the config only)");

  ProposeArgs pr;
  CLI::App* propose = app.add_subcommand("propose", "sample query-hint tasks from the proposer");
  add_common(propose, pr.common);
  pr.count_opt = propose->add_option("--count", pr.count, "tasks to draw");
  propose->add_option("--params", pr.params_path, "proposer parameter file");
  propose->add_option("--out", pr.out, "output JSONL file, - for stdout");

  CurateArgs cu;
  CLI::App* curate = app.add_subcommand("curate", "filter candidates into a preference dataset");
  add_common(curate, cu.common);
  curate->add_option("--candidates", cu.candidates, "candidate JSONL file")->required();
  curate->add_option("--out", cu.out, "dataset JSONL file")->required();
  curate->add_option("--report", cu.report, "filter report JSON file");
  curate->add_option("--round", cu.round, "round id stamped on kept records");

  ScoreArgs sc;
  CLI::App* score = app.add_subcommand("score", "hint-delta for (query, hint, response) records");
  add_common(score, sc.common);
  score->add_option("--input", sc.input, "input JSONL file")->required();
  score->add_option("--out", sc.out, "output JSONL file, - for stdout");
  score->add_option("--params", sc.params_path, "generator parameter file");

  DpoTrainArgs dt;
  CLI::App* dpo = app.add_subcommand("dpo-train", "preference-train a generator on a dataset");
  add_common(dpo, dt.common);
  dpo->add_option("--dataset", dt.dataset, "dataset JSONL file")->required();
  dpo->add_option("--params", dt.params_path, "starting generator parameter file");
  dpo->add_option("--out", dt.out, "trained generator parameter file")->required();
  dpo->add_option("--curve", dt.curve, "per-step loss curve JSON file");

  TheoryArgs th;
  CLI::App* sim = app.add_subcommand("simulate-theory", "run the linear-world guarantee check");
  add_common(sim, th.common);
  sim->add_option("--record", th.record, "per-round record file");
  sim->add_option("--summary", th.summary, "summary JSON file");

  ReportArgs re;
  CLI::App* report = app.add_subcommand("report", "summarize a run directory");
  report->add_option("--run-dir", re.run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run_round(rr);
    if (propose->parsed()) return cmd_propose(pr);
    if (curate->parsed()) return cmd_curate(cu);
    if (score->parsed()) return cmd_score(sc);
    if (dpo->parsed()) return cmd_dpo_train(dt);
    if (sim->parsed()) return cmd_simulate_theory(th);
    if (report->parsed()) return cmd_report(re);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const RoundAbort& e) {
    std::cerr << "round aborted: " << e.what() << "\n";
    return 3;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("gzero");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace gzero::cli
