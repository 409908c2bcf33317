#include "satcs/prox.hpp"

#include "satcs/rng.hpp"

namespace satcs {

void SolverConfig::validate() const {
  if (!(lambda >= 0)) throw std::invalid_argument("SolverConfig: lambda must be non-negative");
  if (max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
  if (!(tol > 0)) throw std::invalid_argument("SolverConfig: tol must be positive");
  if (!(kkt_tol > 0)) throw std::invalid_argument("SolverConfig: kkt_tol must be positive");
  if (const auto* bt = std::get_if<Backtracking>(&step_rule)) {
    if (!(bt->eta > 1)) throw std::invalid_argument("SolverConfig: backtracking eta must exceed 1");
    if (!(bt->L0 > 0)) throw std::invalid_argument("SolverConfig: L0 must be positive");
  } else if (!(std::get<FixedStep>(step_rule).L > 0)) {
    throw std::invalid_argument("SolverConfig: fixed step L must be positive");
  }
}

double l1_kkt_residual(const VectorXd& x, const VectorXd& grad, double lambda) {
  double worst = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double v = x(j) != 0.0 ? std::abs(grad(j) + std::copysign(lambda, x(j))) : std::max(std::abs(grad(j)) - lambda, 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

double spectral_norm_sq(const MatrixXd& A, int iters) {
  if (A.size() == 0) return 0.0;
  Rng rng(0x5eed);
  std::normal_distribution<double> normal;
  VectorXd v(A.cols());
  for (Index j = 0; j < v.size(); ++j) v(j) = normal(rng);
  v.normalize();
  double est = 0.0;
  for (int k = 0; k < iters; ++k) {
    const VectorXd w = A.transpose() * (A * v);
    est = w.norm();
    if (est == 0.0) return 0.0;
    v = w / est;
  }
  return est;
}

ConstrainedSolution solve_residual_constrained(const MatrixXd& A, const VectorXd& y, double eps,
                                               const BisectionOptions& opt) {
  if (!(eps > 0)) throw std::invalid_argument("solve_residual_constrained: eps must be positive");
  if (A.rows() != y.size()) throw std::invalid_argument("solve_residual_constrained: dimension mismatch");

  const Index n = A.cols();
  const double y_norm = y.norm();
  if (y_norm <= eps) {
    ConstrainedSolution origin;
    origin.x = VectorXd::Zero(n);
    origin.lambda = (A.transpose() * y).lpNorm<Eigen::Infinity>();
    origin.residual = y_norm;
    return origin;
  }

  // Solve on y / ||y|| so the absolute KKT tolerance means the same at any
  // noise level, then scale back.
  const double k = y_norm;
  const VectorXd y_unit = y / k;
  const double lambda_max = (A.transpose() * y_unit).lpNorm<Eigen::Infinity>();
  const double L = spectral_norm_sq(A) * 1.01;
  LeastSquaresLoss loss(A, y_unit);

  auto solve_at = [&](double lambda, const VectorXd& warm) {
    SolverConfig cfg;
    cfg.lambda = lambda;
    cfg.max_iters = opt.max_iters;
    cfg.kkt_tol = std::min(cfg.kkt_tol, 1e-3 * eps / k);
    cfg.step_rule = Backtracking{2.0, L};
    cfg.x0 = warm;
    SolveTrace tr = fista(loss, n, cfg);
    ConstrainedSolution s;
    s.residual = (y_unit - A * tr.x_hat).norm();
    s.x = tr.x_hat;
    s.lambda = lambda;
    s.trace = std::move(tr);
    return s;
  };
  ConstrainedSolution sol = residual_bisection(solve_at, eps / k, opt.lambda_lo_ratio * lambda_max, lambda_max, opt);
  sol.x *= k;
  sol.lambda *= k;
  sol.residual *= k;
  sol.trace.x_hat *= k;
  for (double& f : sol.trace.objective_per_iter) f *= k * k;
  sol.trace.kkt_residual *= k;
  return sol;
}

}  // namespace satcs
