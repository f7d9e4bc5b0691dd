#include "gzero/backend.hpp"

#include <stdexcept>

namespace gzero {

PromptContext render_context(std::string_view query, std::optional<std::string_view> hint) {
  if (query.empty()) throw std::invalid_argument("render_context: empty query");
  PromptContext ctx;
  ctx.query = std::string(query);
  if (hint.has_value()) {
    if (hint->empty()) throw std::invalid_argument("render_context: empty hint");
    ctx.hint = std::string(*hint);
    ctx.rendered = ctx.query + "\n\nHint: " + *ctx.hint;
  } else {
    ctx.rendered = ctx.query;
  }
  return ctx;
}

std::vector<signals::TokenScoreSeq> ModelBackend::score_batch(
    const std::vector<PromptContext>& ctxs, const std::vector<std::vector<int>>& responses) {
  if (ctxs.size() != responses.size())
    throw std::invalid_argument("score_batch: context/response count mismatch");
  std::vector<signals::TokenScoreSeq> out;
  out.reserve(ctxs.size());
  for (std::size_t i = 0; i < ctxs.size(); ++i) out.push_back(score(ctxs[i], responses[i]));
  return out;
}

std::vector<std::string> context_words(const PromptContext& ctx) {
  return signals::bleu_tokenize(ctx.rendered);
}

}  // namespace gzero
