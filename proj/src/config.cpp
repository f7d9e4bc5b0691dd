#include "gzero/config.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "gzero/errors.hpp"

namespace gzero::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config key \"" + path + "\" " + what);
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "must be a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "must be a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "must be a string");
  return v.get<std::string>();
}

std::uint64_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0))
    fail(path, "must be a non-negative integer");
  return v.get<std::uint64_t>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "must be an integer");
  std::int64_t raw = v.get<std::int64_t>();
  if (raw < std::numeric_limits<int>::min() || raw > std::numeric_limits<int>::max())
    fail(path, "is out of range");
  return static_cast<int>(raw);
}

std::vector<std::string> as_string_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "must be an array of strings");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_string(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

const char* mode_name(Mode m) { return m == Mode::toy ? "toy" : "remote"; }

Mode parse_mode(const json& v, const std::string& path) {
  std::string s = as_string(v, path);
  if (s == "toy") return Mode::toy;
  if (s == "remote") return Mode::remote;
  fail(path, "must be \"toy\" or \"remote\"");
}

const char* helper_name(theory::HelperKind h) {
  switch (h) {
    case theory::HelperKind::uniform: return "uniform";
    case theory::HelperKind::adversarial_subset: return "adversarial_subset";
    case theory::HelperKind::telescoping: return "telescoping";
  }
  return "uniform";
}

theory::HelperKind parse_helper(const json& v, const std::string& path) {
  std::string s = as_string(v, path);
  if (s == "uniform") return theory::HelperKind::uniform;
  if (s == "adversarial_subset") return theory::HelperKind::adversarial_subset;
  if (s == "telescoping") return theory::HelperKind::telescoping;
  fail(path, "must be \"uniform\", \"adversarial_subset\" or \"telescoping\"");
}

const char* noise_name(theory::NoiseModel n) {
  return n == theory::NoiseModel::clean ? "clean" : "flip";
}

theory::NoiseModel parse_noise(const json& v, const std::string& path) {
  std::string s = as_string(v, path);
  if (s == "clean") return theory::NoiseModel::clean;
  if (s == "flip") return theory::NoiseModel::flip;
  fail(path, "must be \"clean\" or \"flip\"");
}

void parse_grpo(const json& j, const std::string& path, optim::GrpoConfig& out) {
  for (const auto& [key, val] : j.items()) {
    std::string p = path + "." + key;
    if (key == "lr") out.lr = as_double(val, p);
    else if (key == "epsilon") out.epsilon = as_double(val, p);
    else if (key == "group_size") out.group_size = as_count(val, p);
    else if (key == "batch_size") out.batch_size = as_count(val, p);
    else if (key == "steps") out.steps = as_count(val, p);
    else if (key == "log_ratio_cap") out.log_ratio_cap = as_double(val, p);
    else fail(p, "is not recognized");
  }
}

void parse_dpo(const json& j, const std::string& path, optim::DpoConfig& out) {
  for (const auto& [key, val] : j.items()) {
    std::string p = path + "." + key;
    if (key == "beta") out.beta = as_double(val, p);
    else if (key == "lr") out.lr = as_double(val, p);
    else if (key == "max_steps") out.max_steps = as_count(val, p);
    else if (key == "batch_size") out.batch_size = as_count(val, p);
    else if (key == "length_normalized") out.length_normalized = as_bool(val, p);
    else fail(p, "is not recognized");
  }
}

void parse_curation(const json& j, const std::string& path, curation::CurationConfig& out) {
  for (const auto& [key, val] : j.items()) {
    std::string p = path + "." + key;
    if (key == "window_low") out.window_low = as_double(val, p);
    else if (key == "window_high") out.window_high = as_double(val, p);
    else if (key == "ratio_max") out.ratio_max = as_double(val, p);
    else if (key == "min_chars") out.min_chars = as_count(val, p);
    else if (key == "max_chars") out.max_chars = as_count(val, p);
    else if (key == "compression_threshold") out.compression_threshold = as_double(val, p);
    else if (key == "echo_prefix_chars") out.echo_prefix_chars = as_count(val, p);
    else if (key == "role_markers") out.role_markers = as_string_list(val, p);
    else fail(p, "is not recognized");
  }
}

void parse_length_penalty(const json& j, const std::string& path,
                          signals::LengthPenaltyConfig& out) {
  for (const auto& [key, val] : j.items()) {
    std::string p = path + "." + key;
    if (key == "lambda") out.lambda = as_double(val, p);
    else if (key == "budget_chars") out.budget_chars = as_double(val, p);
    else if (key == "divisor") out.divisor = as_double(val, p);
    else fail(p, "is not recognized");
  }
}

void parse_theory(const json& j, const std::string& path, theory::TheoryConfig& out) {
  for (const auto& [key, val] : j.items()) {
    std::string p = path + "." + key;
    if (key == "d") out.d = as_int(val, p);
    else if (key == "B") out.B = as_double(val, p);
    else if (key == "lambda") out.lambda = as_double(val, p);
    else if (key == "m") out.m = as_count(val, p);
    else if (key == "T") out.T = as_count(val, p);
    else if (key == "num_questions") out.num_questions = as_int(val, p);
    else if (key == "num_actions") out.num_actions = as_int(val, p);
    else if (key == "helper") out.helper = parse_helper(val, p);
    else if (key == "adversarial_mass") out.adversarial_mass = as_double(val, p);
    else if (key == "noise") out.noise = parse_noise(val, p);
    else if (key == "flip_rate") out.flip_rate = as_double(val, p);
    else if (key == "directional_noise") out.directional_noise = as_bool(val, p);
    else if (key == "hint_shift") out.hint_shift = as_double(val, p);
    else if (key == "zeta") out.zeta = as_double(val, p);
    else if (key == "zeta_delta") out.zeta_delta = as_double(val, p);
    else if (key == "seed") out.seed = as_count(val, p);
    else if (key == "record_path") out.record_path = as_string(val, p);
    else if (key == "summary_path") out.summary_path = as_string(val, p);
    else fail(p, "is not recognized");
  }
}

void parse_remote(const json& j, const std::string& path, RemoteConfig& out) {
  for (const auto& [key, val] : j.items()) {
    std::string p = path + "." + key;
    if (key == "base_url") out.base_url = as_string(val, p);
    else if (key == "model") out.model = as_string(val, p);
    else if (key == "api_key_env") out.api_key_env = as_string(val, p);
    else if (key == "connect_timeout_ms") out.connect_timeout_ms = as_count(val, p);
    else if (key == "read_timeout_ms") out.read_timeout_ms = as_count(val, p);
    else if (key == "max_retries") out.max_retries = as_count(val, p);
    else if (key == "max_sample_retries") out.max_sample_retries = as_count(val, p);
    else if (key == "backoff_ms") out.backoff_ms = as_count(val, p);
    else if (key == "max_in_flight") out.max_in_flight = as_count(val, p);
    else fail(p, "is not recognized");
  }
}

json object_or_fail(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "must be an object");
  return v;
}

}  // namespace

RunConfig toy_preset(std::uint64_t seed, std::string run_dir) {
  RunConfig cfg;
  cfg.mode = Mode::toy;
  cfg.seed = seed;
  cfg.run_dir = std::move(run_dir);
  cfg.grpo.lr = 15.0;
  cfg.dpo.lr = 0.05;
  cfg.curation.min_chars = 1;  // toy responses are a few tokens long
  cfg.questions_per_round = 200;
  cfg.generator_max_tokens = 8;
  return cfg;
}

loop::LoopConfig loop_config(const RunConfig& cfg) {
  loop::LoopConfig out;
  out.grpo = cfg.grpo;
  out.dpo = cfg.dpo;
  out.curation = cfg.curation;
  out.length_penalty = cfg.length_penalty;
  out.gen_sample.temperature = cfg.temperature;
  out.gen_sample.max_tokens = cfg.generator_max_tokens;
  out.gen_sample.greedy = false;
  out.bleu_threshold = cfg.bleu_threshold;
  out.questions_per_round = cfg.questions_per_round;
  out.proposer_malform_prob = cfg.proposer_malform_prob;
  out.reset_proposer_each_round = cfg.reset_proposer_each_round;
  out.seed = cfg.seed;
  out.run_dir = cfg.run_dir;
  return out;
}

std::string serialize(const RunConfig& cfg) {
  json j;
  j["mode"] = mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  j["run_dir"] = cfg.run_dir;
  j["bleu_threshold"] = cfg.bleu_threshold;
  j["questions_per_round"] = cfg.questions_per_round;
  j["temperature"] = cfg.temperature;
  j["generator_max_tokens"] = cfg.generator_max_tokens;
  j["proposer_max_tokens"] = cfg.proposer_max_tokens;
  j["proposer_malform_prob"] = cfg.proposer_malform_prob;
  j["reset_proposer_each_round"] = cfg.reset_proposer_each_round;
  j["grpo"] = {{"lr", cfg.grpo.lr},
               {"epsilon", cfg.grpo.epsilon},
               {"group_size", cfg.grpo.group_size},
               {"batch_size", cfg.grpo.batch_size},
               {"steps", cfg.grpo.steps},
               {"log_ratio_cap", cfg.grpo.log_ratio_cap}};
  j["dpo"] = {{"beta", cfg.dpo.beta},
              {"lr", cfg.dpo.lr},
              {"max_steps", cfg.dpo.max_steps},
              {"batch_size", cfg.dpo.batch_size},
              {"length_normalized", cfg.dpo.length_normalized}};
  j["curation"] = {{"window_low", cfg.curation.window_low},
                   {"window_high", cfg.curation.window_high},
                   {"ratio_max", cfg.curation.ratio_max},
                   {"min_chars", cfg.curation.min_chars},
                   {"max_chars", cfg.curation.max_chars},
                   {"compression_threshold", cfg.curation.compression_threshold},
                   {"echo_prefix_chars", cfg.curation.echo_prefix_chars},
                   {"role_markers", cfg.curation.role_markers}};
  j["length_penalty"] = {{"lambda", cfg.length_penalty.lambda},
                         {"budget_chars", cfg.length_penalty.budget_chars},
                         {"divisor", cfg.length_penalty.divisor}};
  j["theory"] = {{"d", cfg.theory.d},
                 {"B", cfg.theory.B},
                 {"lambda", cfg.theory.lambda},
                 {"m", cfg.theory.m},
                 {"T", cfg.theory.T},
                 {"num_questions", cfg.theory.num_questions},
                 {"num_actions", cfg.theory.num_actions},
                 {"helper", helper_name(cfg.theory.helper)},
                 {"adversarial_mass", cfg.theory.adversarial_mass},
                 {"noise", noise_name(cfg.theory.noise)},
                 {"flip_rate", cfg.theory.flip_rate},
                 {"directional_noise", cfg.theory.directional_noise},
                 {"hint_shift", cfg.theory.hint_shift},
                 {"zeta", cfg.theory.zeta},
                 {"zeta_delta", cfg.theory.zeta_delta},
                 {"seed", cfg.theory.seed},
                 {"record_path", cfg.theory.record_path},
                 {"summary_path", cfg.theory.summary_path}};
  j["remote"] = {{"base_url", cfg.remote.base_url},
                 {"model", cfg.remote.model},
                 {"api_key_env", cfg.remote.api_key_env},
                 {"connect_timeout_ms", cfg.remote.connect_timeout_ms},
                 {"read_timeout_ms", cfg.remote.read_timeout_ms},
                 {"max_retries", cfg.remote.max_retries},
                 {"max_sample_retries", cfg.remote.max_sample_retries},
                 {"backoff_ms", cfg.remote.backoff_ms},
                 {"max_in_flight", cfg.remote.max_in_flight}};
  return j.dump(2) + "\n";
}

RunConfig parse(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  object_or_fail(j, "(root)");

  RunConfig cfg;
  for (const auto& [key, val] : j.items()) {
    if (key == "mode") cfg.mode = parse_mode(val, key);
    else if (key == "seed") cfg.seed = as_count(val, key);
    else if (key == "run_dir") cfg.run_dir = as_string(val, key);
    else if (key == "bleu_threshold") cfg.bleu_threshold = as_double(val, key);
    else if (key == "questions_per_round") cfg.questions_per_round = as_count(val, key);
    else if (key == "temperature") cfg.temperature = as_double(val, key);
    else if (key == "generator_max_tokens") cfg.generator_max_tokens = as_count(val, key);
    else if (key == "proposer_max_tokens") cfg.proposer_max_tokens = as_count(val, key);
    else if (key == "proposer_malform_prob") cfg.proposer_malform_prob = as_double(val, key);
    else if (key == "reset_proposer_each_round")
      cfg.reset_proposer_each_round = as_bool(val, key);
    else if (key == "grpo") parse_grpo(object_or_fail(val, key), key, cfg.grpo);
    else if (key == "dpo") parse_dpo(object_or_fail(val, key), key, cfg.dpo);
    else if (key == "curation") parse_curation(object_or_fail(val, key), key, cfg.curation);
    else if (key == "length_penalty")
      parse_length_penalty(object_or_fail(val, key), key, cfg.length_penalty);
    else if (key == "theory") parse_theory(object_or_fail(val, key), key, cfg.theory);
    else if (key == "remote") parse_remote(object_or_fail(val, key), key, cfg.remote);
    else fail(key, "is not recognized");
  }
  return cfg;
}

RunConfig load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void save_file(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << serialize(cfg);
  if (!out) throw ConfigError("failed writing config file: " + path);
}

}  // namespace gzero::config
