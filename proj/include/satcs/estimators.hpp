#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "satcs/prox.hpp"
#include "satcs/signal_model.hpp"

namespace satcs {

/// LM: censored likelihood. SR: saturation rejection. SC: saturation
/// consistency. SS: saturation sparsity. SI: saturation ignorance.
enum class EstimatorKind { LM, SR, SC, SS, SI };

std::string to_string(EstimatorKind k);
EstimatorKind estimator_from_string(const std::string& s);

struct FixedLambda {
  double value = 1.0;
};

struct CrossValLambda {
  std::vector<double> grid;  // empty: default grid
  bool relative = true;      // grid values multiply the instance lambda_max
  double holdout_frac = 0.3;  // holdout size relative to the fitting set
  double fallback = 1e-2;     // relative lambda used when the holdout is empty
};

/// LM only: lambda at which the unsaturated residual ||y_ns - A_ns x||_2 lands
/// on sigma sqrt(m3), found by bisection. With no saturation this picks the
/// same solution as SI.
struct DiscrepancyLambda {
  double rel_band = 1e-3;
};

/// 15 log-spaced values spanning [1e-4, 1].
std::vector<double> default_relative_grid();

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::LM;
  std::variant<FixedLambda, CrossValLambda, DiscrepancyLambda> lambda_rule = CrossValLambda{};
  double sc_penalty_weight = 1.0;  // initial hinge weight for SC continuation
  Basis basis = Basis::dct;
  Seed seed = 0;  // holdout split
  int max_iters = 20000;

  void validate() const;
};

class EstimatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CvPoint {
  double lambda;
  double holdout_error;  // ||y_H - A_H x(lambda)||^2 / |H|
};

struct CvOutcome {
  double lambda = 0.0;
  std::vector<CvPoint> curve;
  Index holdout_size = 0;
  bool fallback = false;  // holdout was empty; lambda is the fallback value
};

struct RecoveryResult {
  EstimatorKind kind = EstimatorKind::LM;
  VectorXd x_hat;      // signal domain
  VectorXd theta_hat;  // coefficient domain
  double rrmse = std::numeric_limits<double>::quiet_NaN();
  double lambda_used = 0.0;
  SolveTrace trace;  // final solve
  int total_iters = 0;
  Seed seed = 0;
  std::optional<CvOutcome> cv;
  std::string flag;  // non-empty for degraded results (e.g. infeasible)
};

/// Recover the signal from (A, meas). A acts on the signal domain; all
/// l1 penalties act on coefficients in spec.basis.
RecoveryResult recover(const EstimatorSpec& spec, const MatrixXd& A, const MeasurementSet& meas);

/// Same, and fills in the RRMSE against the generating signal.
RecoveryResult recover(const EstimatorSpec& spec, const MatrixXd& A, const MeasurementSet& meas,
                       const SparseSignal& truth);

/// Hold out part of the unsaturated rows, fit every grid lambda on the rest,
/// return the lambda with the smallest holdout error. Ties go to the larger
/// lambda. Only LM and SS are lambda-penalised estimators.
CvOutcome crossval_lambda(const EstimatorSpec& spec, const MatrixXd& A, const MeasurementSet& meas, Seed seed);

/// Hinge-consistency violation for SC: the largest amount by which a
/// saturated row misses A^i x >= tau - 3 sigma (S+) or A^i x <= -tau + 3 sigma (S-).
double sc_violation(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x);

/// Penalised LM solve in whatever domain B acts on.
SolveTrace solve_lm(const MatrixXd& B, const MeasurementSet& meas, double lambda, int max_iters = 20000,
                    const VectorXd& warm = VectorXd());

/// Penalised SS solve; returns the stacked (theta; r).
SolveTrace solve_ss(const MatrixXd& B, const VectorXd& y, double lambda, int max_iters = 20000,
                    const VectorXd& warm = VectorXd());

/// lambda (||theta||_1 + ||r||_1) + 1/2 ||y - B theta - r||^2
double ss_objective(const MatrixXd& B, const VectorXd& y, const VectorXd& theta, const VectorXd& r, double lambda);

/// Smallest lambda at which the LM solution is zero, ||grad L(0)||_inf.
double lm_lambda_max(const MatrixXd& B, const MeasurementSet& meas);

}  // namespace satcs
