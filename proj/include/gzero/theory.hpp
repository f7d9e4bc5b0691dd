#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gzero/rng.hpp"

namespace gzero::theory {

// Finite linear-reward world: tabulated features phi(q,a) with norms <= 1/2,
// a true parameter theta_star inside the norm ball of radius B, a target
// question distribution, and a reference policy. Everything the bound needs
// (values, coverage constants, uncertainties) is computable exactly by
// enumeration.
struct LinearWorld {
  int d = 0;
  double B = 1.0;
  int num_questions = 0;
  int num_actions = 0;
  Eigen::VectorXd theta_star;
  std::vector<Eigen::MatrixXd> phi;  // per question: num_actions x d
  Eigen::VectorXd target_q;          // distribution over questions
  Eigen::MatrixXd ref_policy;        // num_questions x num_actions, rows sum to 1
};

LinearWorld make_random_world(int d, double B, int num_questions, int num_actions, Rng& rng);

// One question, two actions with scalar features +1/2 and -1/2, so the
// deterministic pair feature is exactly w = 1 and, with lambda = 1 and m = 1,
// the potential telescopes to log(T+1), meeting the cap with equality.
LinearWorld make_telescoping_world(double B = 1.0);

double sigmoid(double u);

// min over |u| <= B of sigma(u)*sigma(-u), attained at the endpoints.
double kappa_bt(double B);

// Clean Bradley-Terry label: +1 with probability sigma(theta_star . w).
int sample_clean_label(const Eigen::VectorXd& w, const Eigen::VectorXd& theta_star, Rng& rng);

// Exact Gibbs policy pi_theta(a|q) proportional to ref(a|q) * exp(phi . theta).
Eigen::VectorXd gibbs_policy(const LinearWorld& world, const Eigen::VectorXd& theta, int q);
Eigen::MatrixXd gibbs_policy_table(const LinearWorld& world, const Eigen::VectorXd& theta);

// KL-regularized value of an explicit policy table under reward phi . theta:
// E_Q[ E_pi[reward] - KL(pi || ref) ].
double policy_value(const LinearWorld& world, const Eigen::VectorXd& reward_theta,
                    const Eigen::MatrixXd& policy);

// One retained preference pair: pairwise feature, pseudo-label, clean label.
struct LabeledPair {
  Eigen::VectorXd w;
  int y_tilde = +1;
  int y_star = +1;
};

// Minimizer of (1/m) sum -log sigma(theta . y_tilde w) + (kappa_bt(B) lambda/2)|theta|^2
// over the ball |theta| <= B, by projected gradient descent with backtracking,
// run to projected-gradient norm <= tol. Empty data returns 0 (the ridge
// minimizer). Throws NumericalError if the iteration cap is hit.
Eigen::VectorXd cumulative_dpo_fit(const std::vector<LabeledPair>& data, std::size_t m,
                                   double lambda, double B, double tol = 1e-10,
                                   const Eigen::VectorXd* warm_start = nullptr);

enum class HelperKind { uniform, adversarial_subset, telescoping };
enum class NoiseModel { clean, flip };

struct TheoryConfig {
  int d = 8;
  double B = 1.0;
  double lambda = 1.0;
  std::size_t m = 32;
  std::size_t T = 200;
  int num_questions = 8;
  int num_actions = 6;
  HelperKind helper = HelperKind::uniform;
  double adversarial_mass = 0.8;  // question-0 weight for the adversarial helper
  NoiseModel noise = NoiseModel::clean;
  double flip_rate = 0.0;
  bool directional_noise = false;  // flip only pairs aligned with the first axis
  double hint_shift = 1.0;         // reward tilt of the assisted response draw
  double zeta = 0.05;
  double zeta_delta = 0.05;
  std::uint64_t seed = 0;
  std::string record_path;   // optional per-round numeric records
  std::string summary_path;  // optional summary json

  bool operator==(const TheoryConfig&) const = default;
};

struct RoundRecord {
  std::size_t t = 0;       // 1-based round index
  double gap = 0.0;        // J_Q(pi*) - J_Q(pi_t)
  double psi_hat_sq = 0.0;
  double psi_q_sq = 0.0;
  double potential_cum = 0.0;
  double noise_norm = 0.0;  // corruption norm with data from rounds < t
  double alpha_t = 0.0;     // realized per-round coverage ratio, capped at 1
  double theta_err = 0.0;   // |theta_hat_t - theta_star| in the Sigma_t norm
};

struct TheorySummary {
  double min_gap = 0.0;
  std::size_t argmin_t = 0;
  double bound_rhs = 0.0;
  double d_t = 0.0;
  double s_mtz = 0.0;
  double r = 0.0;
  double kappa = 0.0;
  double c_q = 1.0;
  double alpha_s = 1.0;
  double eta_delta = 0.0;
  double potential = 0.0;
  double potential_cap = 0.0;
  double logdet_gain = 0.0;
  std::string warning;  // set when the bound degenerates to infinity
};

struct TheoryResult {
  std::vector<RoundRecord> rounds;
  TheorySummary summary;
};

// Runs the round loop: Gibbs policy from the cumulative fit, helper batch,
// covariance update, refit; checks the potential inequality, the determinant
// inequality, the coverage-transfer inequality with the measured constants,
// and the Gibbs variational identity every round (throws std::logic_error on
// violation; those are theorems, so a violation is an implementation bug).
TheoryResult run_theory_experiment(const TheoryConfig& cfg, const LinearWorld& world);
TheoryResult run_theory_experiment(const TheoryConfig& cfg);

}  // namespace gzero::theory
