#include <cmath>
#include <iostream>
#include <stdexcept>

#include "gzero/backend.hpp"
#include "gzero/optim.hpp"

namespace gzero::optim {

namespace {

// -log sigma(v) computed without overflow: log(1 + exp(-v)).
double softplus_neg(double v) {
  if (v > 0.0) return std::log1p(std::exp(-v));
  return -v + std::log1p(std::exp(v));
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

double dpo_logratio(const ToyPolicyParams& policy, const ReferenceSnapshot& ref,
                    const std::string& x, std::span<const int> y, bool length_normalized) {
  if (y.empty()) throw std::invalid_argument("dpo_logratio: empty response");
  const auto ctx = render_context(x);
  const double lp = toy_sequence_logprob(policy, ctx, y);
  const double lp_ref = toy_sequence_logprob(ref.params, ctx, y);
  double m = lp - lp_ref;
  if (length_normalized) m /= static_cast<double>(y.size());
  return m;
}

double dpo_loss(const ToyPolicyParams& policy, const ReferenceSnapshot& ref,
                const PreferenceBatch& batch) {
  if (batch.records.empty()) throw std::invalid_argument("dpo_loss: empty batch");
  double total = 0.0;
  for (const auto& rec : batch.records) {
    const double mw = dpo_logratio(policy, ref, rec.x, rec.y_w, batch.length_normalized);
    const double ml = dpo_logratio(policy, ref, rec.x, rec.y_l, batch.length_normalized);
    total += softplus_neg(batch.beta * (mw - ml));
  }
  return total / static_cast<double>(batch.records.size());
}

ToyPolicyParams dpo_loss_gradient(const ToyPolicyParams& policy, const ReferenceSnapshot& ref,
                                  const PreferenceBatch& batch) {
  if (batch.records.empty()) throw std::invalid_argument("dpo_loss_gradient: empty batch");
  auto flat = ToyPolicyParams::zeros_like(policy).flatten();
  for (const auto& rec : batch.records) {
    const auto ctx = render_context(rec.x);
    const double mw = dpo_logratio(policy, ref, rec.x, rec.y_w, batch.length_normalized);
    const double ml = dpo_logratio(policy, ref, rec.x, rec.y_l, batch.length_normalized);
    // d/dtheta -log sigma(beta*u) = -(1 - sigma(beta*u)) * beta * du/dtheta
    const double coeff = -(1.0 - sigmoid(batch.beta * (mw - ml))) * batch.beta;
    const double ww =
        batch.length_normalized ? 1.0 / static_cast<double>(rec.y_w.size()) : 1.0;
    const double wl =
        batch.length_normalized ? 1.0 / static_cast<double>(rec.y_l.size()) : 1.0;
    const auto gw = toy_logprob_gradient(policy, ctx, rec.y_w).flatten();
    const auto gl = toy_logprob_gradient(policy, ctx, rec.y_l).flatten();
    for (std::size_t j = 0; j < flat.size(); ++j)
      flat[j] += coeff * (ww * gw[j] - wl * gl[j]);
  }
  for (double& v : flat) v /= static_cast<double>(batch.records.size());
  ToyPolicyParams grad = ToyPolicyParams::zeros_like(policy);
  grad.set_flat(flat);
  return grad;
}

ToyPolicyParams dpo_step(const ToyPolicyParams& params, const ReferenceSnapshot& ref,
                         const PreferenceBatch& batch, double lr) {
  if (batch.records.empty()) {
    std::cerr << "dpo_step: empty batch, parameters unchanged\n";
    return params;
  }
  const auto grad = dpo_loss_gradient(params, ref, batch).flatten();
  auto flat = params.flatten();
  for (std::size_t j = 0; j < flat.size(); ++j) flat[j] -= lr * grad[j];
  ToyPolicyParams next = params;
  next.set_flat(flat);
  return next;
}

ToyPolicyParams dpo_train(const ToyPolicyParams& params, const ReferenceSnapshot& ref,
                          const std::vector<PreferenceRecord>& dataset, const DpoConfig& cfg,
                          std::vector<double>* loss_curve) {
  ToyPolicyParams cur = params;
  if (dataset.empty()) {
    std::cerr << "dpo_train: empty dataset, parameters unchanged\n";
    return cur;
  }
  std::size_t cursor = 0;
  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    PreferenceBatch batch;
    batch.beta = cfg.beta;
    batch.length_normalized = cfg.length_normalized;
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      batch.records.push_back(dataset[cursor]);
      cursor = (cursor + 1) % dataset.size();
    }
    if (loss_curve) loss_curve->push_back(dpo_loss(cur, ref, batch));
    cur = dpo_step(cur, ref, batch, cfg.lr);
  }
  return cur;
}

}  // namespace gzero::optim
