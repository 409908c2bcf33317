#include "satcs/lm_objective.hpp"

#include <stdexcept>

#include "satcs/gauss.hpp"

namespace satcs {

LmLoss::LmLoss(const MatrixXd& A, const MeasurementSet& meas) : A_(A), meas_(meas), sigma_(meas.sigma) {
  if (!(sigma_ > 0)) throw std::invalid_argument("LmLoss: sigma must be positive");
  if (A.rows() != meas.m()) throw std::invalid_argument("LmLoss: A rows differ from measurement count");
  kind_.assign(static_cast<std::size_t>(meas.m()), Row::unsaturated);
  for (Index i : meas.s_plus) kind_[i] = Row::upper;
  for (Index i : meas.s_minus) kind_[i] = Row::lower;
}

void LmLoss::row_terms(const VectorXd& ax, double& q1, double& q2, double& q3, VectorXd* dloss) const {
  const double tau = meas_.tau;
  const double inv_sigma = 1.0 / sigma_;
  q1 = q2 = q3 = 0.0;
  for (Index i = 0; i < ax.size(); ++i) {
    switch (kind_[i]) {
      case Row::unsaturated: {
        const double r = (meas_.y(i) - ax(i)) * inv_sigma;
        q1 += 0.5 * r * r;
        if (dloss) (*dloss)(i) = -r * inv_sigma;
        break;
      }
      case Row::upper: {
        const double u = (tau - ax(i)) * inv_sigma;
        q2 -= log_norm_sf(u);
        if (dloss) (*dloss)(i) = -inverse_mills(u, Tail::upper) * inv_sigma;
        break;
      }
      case Row::lower: {
        const double v = (-tau - ax(i)) * inv_sigma;
        q3 -= log_norm_cdf(v);
        if (dloss) (*dloss)(i) = inverse_mills(v, Tail::lower) * inv_sigma;
        break;
      }
    }
  }
}

double LmLoss::value(const VectorXd& x) const {
  double q1, q2, q3;
  row_terms(A_ * x, q1, q2, q3, nullptr);
  return q1 + q2 + q3;
}

double LmLoss::value_and_gradient(const VectorXd& x, VectorXd& grad) const {
  double q1, q2, q3;
  VectorXd dloss(A_.rows());
  row_terms(A_ * x, q1, q2, q3, &dloss);
  grad.noalias() = A_.transpose() * dloss;
  return q1 + q2 + q3;
}

ObjectiveEval LmLoss::evaluate(const VectorXd& x) const {
  ObjectiveEval out;
  VectorXd dloss(A_.rows());
  row_terms(A_ * x, out.q1, out.q2, out.q3, &dloss);
  out.value = out.q1 + out.q2 + out.q3;
  out.grad = A_.transpose() * dloss;
  return out;
}

double eval_loss(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x) { return LmLoss(A, meas).value(x); }

VectorXd eval_grad(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x) {
  VectorXd g;
  LmLoss(A, meas).value_and_gradient(x, g);
  return g;
}

double eval_objective(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x, double lambda) {
  if (!(lambda >= 0)) throw std::invalid_argument("eval_objective: lambda must be non-negative");
  return lambda * x.lpNorm<1>() + eval_loss(A, meas, x);
}

}  // namespace satcs
