#pragma once

#include <vector>

#include "satcs/rng.hpp"
#include "satcs/signal_model.hpp"
#include "satcs/types.hpp"

namespace satcs {

struct BoundInputs {
  Index s = 0;
  Index n = 0;
  Index m = 0, m1 = 0, m2 = 0, m3 = 0;
  double sigma = 0;
  double gamma = 0;   // restricted eigenvalue estimate
  double varrho = 3;  // > 2
  double c1 = 0;
  double alpha = 0, beta = 0;  // alpha <= x_i <= beta

  void validate() const;
};

struct ErrorBound {
  double main = 0;      // 144 s log(n) sigma^2 varrho / (gamma^2 m) (sqrt(m3) + C1 sqrt(m1+m2))^2
  double appendix = 0;  // 144 s (sqrt(m3 log(n) varrho / m) + Q)^2 sigma^2 / gamma^2, Q = C1 sqrt((m1+m2) log(n) / m)
};

/// Squared-error bound on ||x_hat - x*||_2^2. Throws std::domain_error when gamma = 0.
ErrorBound thm4_bound(const BoundInputs& b);

/// The lambda the error bound is stated for:
/// (2/sigma) (sqrt(m3 varrho log n / m) + C1 sqrt(varrho (m1+m2) log n / m)).
double thm4_lambda(const BoundInputs& b);

/// Worst inverse-Mills factor over saturated rows when every x_i lies in
/// [alpha, beta]. For row i, p_i <= A^i x <= q_i over that box; S+ rows are
/// scored with g at (tau - q_i)/sigma and (tau - p_i)/sigma, S- rows with h at
/// (-tau - q_i)/sigma and (-tau - p_i)/sigma. Zero without saturated rows.
double c1_recipe(const MatrixXd& A, const MeasurementSet& meas, double alpha, double beta);

/// Largest violation of ||Delta_{S^c}||_1 <= 3 ||Delta_S||_1 (0 inside the cone).
double cone_excess(const VectorXd& delta, const IndexSet& support);

/// Random direction in the cone around `support`, unit l2 norm. Half of the
/// draws stay on the support; the rest add an off-support perturbation whose
/// l1 mass is a uniform fraction of the cone budget.
VectorXd sample_cone_direction(Index n, const IndexSet& support, Rng& rng);

struct RecOptions {
  int refine_starts = 16;   // best samples that get polished
  int refine_steps = 400;   // projected-gradient steps per start
};

struct RecSearch {
  double gamma = 0;
  double sampled = 0;  // best raw sample before refinement
  VectorXd direction;  // unit-norm minimiser found, inside the cone
};

/// min ||A_sub Delta||^2 / ||Delta||^2 over sampled cone directions, each of
/// the best samples locally minimised on the cone's unit sphere slice.
RecSearch rec_search(const MatrixXd& A_sub, const IndexSet& support, int samples, Seed seed,
                     const RecOptions& opt = {});

inline double rec_estimate(const MatrixXd& A_sub, const IndexSet& support, int samples, Seed seed,
                           const RecOptions& opt = {}) {
  return rec_search(A_sub, support, samples, seed, opt).gamma;
}

struct RscViolation {
  int sample = 0;
  double delta_l = 0;   // Bregman divergence
  double required = 0;  // kappa_hat ||Delta||^2
  VectorXd delta;
};

struct RscReport {
  double gamma_hat = 0;
  double kappa_hat = 0;  // gamma_hat / (2 sigma^2)
  int samples = 0;
  int violations = 0;            // delta_l < kappa_hat ||Delta||^2 - 1e-9
  int convexity_violations = 0;  // delta_l < -1e-9
  double min_margin = 0;         // min over samples of delta_l - kappa_hat ||Delta||^2
  std::vector<RscViolation> audit;
};

/// Bregman divergence of the LM loss at x_star along Delta.
double bregman(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x_star, const VectorXd& delta);

/// Samples cone directions around supp(x_star) with random lengths and tests
/// delta_L >= (gamma_hat / 2 sigma^2) ||Delta||^2. gamma_hat comes from
/// rec_estimate on the unsaturated rows unless given (> 0).
RscReport rsc_check(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x_star, int samples, Seed seed,
                    double gamma_hat = -1.0);

struct GradNormProbe {
  double grad_inf = 0;         // ||grad L(x*)||_inf
  double thm3_magnitude = 0;   // (1/sigma) sqrt(m3 varrho log n / m)
  double saturated_term = 0;   // (C1/sigma) sqrt(varrho (m1+m2) log n / m)
};

GradNormProbe grad_norm_probe(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x_star,
                              double varrho = 3.0, double c1 = 0.0);

/// One row of the bound-vs-error comparison.
struct BoundComparison {
  Seed seed = 0;
  double f_sat = 0;
  double err_sq = 0;    // ||x_hat - x*||^2
  double rrmse_sq = 0;  // err_sq / ||x*||^2
  double truth_norm_sq = 0;
  double bound = 0;     // main form, absolute
  double gamma_hat = 0;
  double c1 = 0;
  double lambda = 0;
  double grad_inf = 0;
  bool precondition = false;  // lambda >= 2 ||grad L(x*)||_inf
};

struct BoundCompareConfig {
  InstanceConfig instance{64, 48, 4, 0.15, 0.1, Basis::canonical, {}};
  double varrho = 3.0;
  int rec_samples = 20000;
};

/// Draws the instance for `seed`, estimates gamma on the unsaturated rows and
/// C1 from the true signal's range, solves LM at thm4_lambda and compares.
BoundComparison bound_compare(const BoundCompareConfig& cfg, Seed seed);

}  // namespace satcs
