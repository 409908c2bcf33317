#pragma once

#include <vector>

#include "satcs/signal_model.hpp"
#include "satcs/types.hpp"

namespace satcs {

struct ObjectiveEval {
  double value = 0;  // q1 + q2 + q3
  VectorXd grad;
  double q1 = 0;  // unsaturated quadratic
  double q2 = 0;  // -sum_{S+} log(1 - Phi(u_i))
  double q3 = 0;  // -sum_{S-} log Phi(v_i)
};

/// Censored-Gaussian negative log-likelihood of clipped measurements,
///
///   L(x) = 1/2 sum_{S_ns} ((y_i - A^i x)/sigma)^2
///          - sum_{S+} log(1 - Phi((tau - A^i x)/sigma))
///          - sum_{S-} log Phi((-tau - A^i x)/sigma).
///
/// The constant m3 * log(sigma sqrt(2 pi)) of the density is omitted.
/// Holds references: A and meas must outlive the loss.
class LmLoss {
 public:
  LmLoss(const MatrixXd& A, const MeasurementSet& meas);

  double value(const VectorXd& x) const;
  double value_and_gradient(const VectorXd& x, VectorXd& grad) const;
  ObjectiveEval evaluate(const VectorXd& x) const;

  /// Upper bound on the Lipschitz constant of the gradient, ||A||_2^2 / sigma^2
  /// with ||A||_2 supplied by the caller.
  double lipschitz_bound(double spectral_norm) const { return spectral_norm * spectral_norm / (sigma_ * sigma_); }

  const MatrixXd& matrix() const { return A_; }
  const MeasurementSet& measurements() const { return meas_; }

 private:
  enum class Row : unsigned char { unsaturated, upper, lower };

  // Per-row loss contribution and its derivative with respect to a = A^i x.
  void row_terms(const VectorXd& ax, double& q1, double& q2, double& q3, VectorXd* dloss) const;

  const MatrixXd& A_;
  const MeasurementSet& meas_;
  double sigma_;
  std::vector<Row> kind_;
};

double eval_loss(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x);
VectorXd eval_grad(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x);
/// lambda ||x||_1 + L(x)
double eval_objective(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x, double lambda);

}  // namespace satcs
