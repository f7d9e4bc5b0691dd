#include "gzero/remote_backend.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <optional>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gzero/errors.hpp"

namespace gzero {

namespace {

using nlohmann::json;

bool transport_error_before_send(httplib::Error err) {
  return err == httplib::Error::Connection || err == httplib::Error::ConnectionTimeout;
}

std::string classify_message(const json& body) {
  if (body.contains("error") && body["error"].contains("message") &&
      body["error"]["message"].is_string())
    return body["error"]["message"].get<std::string>();
  return "";
}

bool mentions_capability(const std::string& message) {
  return message.find("echo") != std::string::npos ||
         message.find("logprob") != std::string::npos;
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) throw ConfigError("remote backend: base_url is empty");
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw ConfigError("remote backend: environment variable " + cfg_.api_key_env +
                      " is not set; refusing to start");
  api_key_ = key;
}

int RemoteBackend::intern(const std::string& token) {
  const int id = static_cast<int>(fnv1a64(token) & 0x7fffffffull);
  std::lock_guard lock(registry_mutex_);
  auto [it, inserted] = registry_.emplace(id, token);
  if (!inserted && it->second != token)
    throw BackendError(BackendError::Kind::protocol,
                       "remote backend: token id collision between '" + it->second + "' and '" +
                           token + "'");
  return id;
}

std::string RemoteBackend::text_of(std::span<const int> response) {
  std::string text;
  std::lock_guard lock(registry_mutex_);
  for (int id : response) {
    const auto it = registry_.find(id);
    if (it == registry_.end())
      throw BackendError(BackendError::Kind::protocol,
                         "remote backend: token id " + std::to_string(id) +
                             " was not produced by this client and has no surface form");
    text += it->second;
  }
  return text;
}

RemoteBackend::WireChoice RemoteBackend::request_completion(const std::string& prompt,
                                                            std::size_t max_tokens,
                                                            double temperature, bool echo,
                                                            bool idempotent) {
  const json request{{"model", cfg_.model},      {"prompt", prompt},
                     {"max_tokens", max_tokens}, {"temperature", temperature},
                     {"logprobs", 0},            {"echo", echo}};
  const std::string body = request.dump();

  const int ambiguous_budget = idempotent ? cfg_.max_retries : cfg_.max_sample_retries;
  int transport_attempts = 0;
  int ambiguous_attempts = 0;
  std::string last_failure;

  for (;;) {
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(std::chrono::milliseconds(cfg_.connect_timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(cfg_.read_timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(cfg_.read_timeout_ms));
    client.set_default_headers({{"Authorization", "Bearer " + api_key_}});

    auto res = client.Post("/v1/completions", body, "application/json");

    bool retryable = false;
    bool counts_as_ambiguous = false;
    if (!res) {
      retryable = true;
      counts_as_ambiguous = !transport_error_before_send(res.error());
      last_failure = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 200) {
      json parsed;
      try {
        parsed = json::parse(res->body);
      } catch (const json::exception& e) {
        throw BackendError(BackendError::Kind::protocol,
                           std::string("remote backend: unparseable response body: ") + e.what());
      }
      if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
          parsed["choices"].empty())
        throw BackendError(BackendError::Kind::protocol,
                           "remote backend: response carries no choices");
      const json& choice = parsed["choices"][0];
      if (!choice.contains("logprobs") || choice["logprobs"].is_null())
        throw BackendError(BackendError::Kind::capability,
                           "remote backend: endpoint returned no logprobs block");
      const json& lp = choice["logprobs"];
      if (!lp.contains("tokens") || !lp.contains("token_logprobs"))
        throw BackendError(BackendError::Kind::capability,
                           "remote backend: logprobs block lacks tokens/token_logprobs");

      WireChoice out;
      out.text = choice.value("text", "");
      out.finish_reason = choice.value("finish_reason", "");
      for (const auto& tok : lp["tokens"]) {
        if (!tok.is_string())
          throw BackendError(BackendError::Kind::protocol,
                             "remote backend: non-string token in logprobs");
        out.tokens.push_back(tok.get<std::string>());
      }
      for (const auto& v : lp["token_logprobs"]) {
        out.has_logprob.push_back(v.is_number());
        out.logprobs.push_back(v.is_number() ? v.get<double>() : 0.0);
      }
      if (out.tokens.size() != out.logprobs.size())
        throw BackendError(BackendError::Kind::protocol,
                           "remote backend: tokens and token_logprobs lengths differ");
      return out;
    } else if (res->status == 429) {
      // Rate-limited requests were not executed; safe to retry either op.
      retryable = true;
      last_failure = "status 429";
    } else if (res->status >= 500) {
      retryable = true;
      counts_as_ambiguous = true;
      last_failure = "status " + std::to_string(res->status);
    } else if (res->status == 401 || res->status == 403) {
      throw BackendError(BackendError::Kind::unavailable,
                         "remote backend: endpoint rejected credentials (status " +
                             std::to_string(res->status) + ")");
    } else {
      json parsed;
      try {
        parsed = json::parse(res->body);
      } catch (const json::exception&) {
        parsed = json::object();
      }
      const std::string message = classify_message(parsed);
      const auto kind = mentions_capability(message) ? BackendError::Kind::capability
                                                     : BackendError::Kind::protocol;
      throw BackendError(kind, "remote backend: endpoint refused the request (status " +
                                   std::to_string(res->status) +
                                   (message.empty() ? ")" : "): " + message));
    }

    if (!retryable) break;  // unreachable; all non-retryable paths throw
    int& attempts = counts_as_ambiguous ? ambiguous_attempts : transport_attempts;
    const int budget = counts_as_ambiguous ? ambiguous_budget : cfg_.max_retries;
    if (attempts >= budget)
      throw BackendError(BackendError::Kind::unavailable,
                         "remote backend: gave up after " + std::to_string(attempts + 1) +
                             " attempts (" + last_failure + ")");
    ++attempts;
    if (cfg_.backoff_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(
          cfg_.backoff_ms << std::min(attempts - 1, 10)));
  }
  throw BackendError(BackendError::Kind::unavailable, "remote backend: unreachable retry exit");
}

Completion RemoteBackend::sample(const PromptContext& ctx, const SampleOptions& opt, Rng& rng) {
  (void)rng;  // remote sampling randomness lives server-side
  if (opt.max_tokens == 0)
    throw std::invalid_argument("remote backend: max_tokens must be positive");
  const double temperature = opt.greedy ? 0.0 : opt.temperature;
  const WireChoice choice =
      request_completion(ctx.rendered, opt.max_tokens, temperature, false, false);

  Completion out;
  out.text = choice.text;
  out.truncated = choice.finish_reason == "length";
  for (std::size_t i = 0; i < choice.tokens.size(); ++i) {
    if (!choice.has_logprob[i])
      throw BackendError(BackendError::Kind::protocol,
                         "remote backend: sampled token without a logprob");
    const int id = intern(choice.tokens[i]);
    out.tokens.push_back(id);
    out.sample_logprobs.tokens.push_back(id);
    out.sample_logprobs.logprobs.push_back(choice.logprobs[i]);
  }
  return out;
}

signals::TokenScoreSeq RemoteBackend::score(const PromptContext& ctx,
                                            std::span<const int> response) {
  if (response.empty()) throw std::invalid_argument("remote backend: empty response");
  const std::string response_text = text_of(response);

  // Scoring is teacher-forced: both echoed calls run at temperature 1 with a
  // zero completion budget, so the endpoint only tokenizes and scores.
  const WireChoice prefix = request_completion(ctx.rendered, 0, 1.0, true, true);
  const WireChoice full =
      request_completion(ctx.rendered + response_text, 0, 1.0, true, true);

  if (full.tokens.size() < prefix.tokens.size())
    throw BackendError(BackendError::Kind::alignment,
                       "remote backend: prompt+response tokenized shorter than the prompt");
  for (std::size_t i = 0; i < prefix.tokens.size(); ++i) {
    if (full.tokens[i] != prefix.tokens[i])
      throw BackendError(BackendError::Kind::alignment,
                         "remote backend: prompt tokenization shifted once the response was "
                         "appended (position " +
                             std::to_string(i) + ")");
  }
  const std::size_t suffix_len = full.tokens.size() - prefix.tokens.size();
  if (suffix_len != response.size())
    throw BackendError(BackendError::Kind::alignment,
                       "remote backend: echoed suffix has " + std::to_string(suffix_len) +
                           " tokens but the response has " + std::to_string(response.size()));

  signals::TokenScoreSeq out;
  for (std::size_t i = 0; i < suffix_len; ++i) {
    const std::size_t j = prefix.tokens.size() + i;
    if (intern(full.tokens[j]) != response[i])
      throw BackendError(BackendError::Kind::alignment,
                         "remote backend: echoed suffix token '" + full.tokens[j] +
                             "' does not match the response at position " + std::to_string(i));
    if (!full.has_logprob[j])
      throw BackendError(BackendError::Kind::protocol,
                         "remote backend: missing logprob for a response token");
    out.tokens.push_back(response[i]);
    out.logprobs.push_back(full.logprobs[j]);
  }
  return out;
}

std::vector<signals::TokenScoreSeq> RemoteBackend::score_batch(
    const std::vector<PromptContext>& ctxs, const std::vector<std::vector<int>>& responses) {
  if (ctxs.size() != responses.size())
    throw std::invalid_argument("score_batch: contexts and responses differ in length");
  const std::size_t n = ctxs.size();
  std::vector<signals::TokenScoreSeq> out(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};

  const std::size_t workers = std::min(cfg_.max_in_flight == 0 ? 1 : cfg_.max_in_flight, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          out[i] = score(ctxs[i], responses[i]);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace gzero
