#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "satcs/types.hpp"

namespace satcs {

/// Proximal map of t ||.||_1: sign(v_i) max(|v_i| - t, 0).
template <typename Derived>
Vector<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  if (!(t >= Scalar(0))) throw std::invalid_argument("soft_threshold: threshold must be non-negative");
  return v.unaryExpr([t](Scalar a) {
    const Scalar mag = std::abs(a) - t;
    return mag > Scalar(0) ? std::copysign(mag, a) : Scalar(0);
  });
}

/// Anything FISTA can minimise alongside an l1 penalty.
template <typename F>
concept SmoothLoss = requires(const F& f, const VectorXd& x, VectorXd& g) {
  { f.value(x) } -> std::convertible_to<double>;
  { f.value_and_gradient(x, g) } -> std::convertible_to<double>;
};

/// 1/2 w ||y - A x||^2
class LeastSquaresLoss {
 public:
  LeastSquaresLoss(const MatrixXd& A, const VectorXd& y, double weight = 1.0) : A_(A), y_(y), w_(weight) {}

  double value(const VectorXd& x) const { return 0.5 * w_ * (A_ * x - y_).squaredNorm(); }

  double value_and_gradient(const VectorXd& x, VectorXd& g) const {
    const VectorXd r = A_ * x - y_;
    g.noalias() = w_ * (A_.transpose() * r);
    return 0.5 * w_ * r.squaredNorm();
  }

 private:
  const MatrixXd& A_;
  const VectorXd& y_;
  double w_;
};

struct Backtracking {
  double eta = 2.0;  // step-size shrink factor, > 1
  double L0 = 1.0;   // initial Lipschitz guess
};

struct FixedStep {
  double L = 1.0;
};

struct SolverConfig {
  double lambda = 0.0;
  int max_iters = 20000;
  double tol = 1e-10;      // relative objective decrease that counts as stalled
  double kkt_tol = 1e-6;   // converged when kkt_residual <= kkt_tol * (1 + lambda)
  std::variant<Backtracking, FixedStep> step_rule = Backtracking{};
  VectorXd x0;  // empty means start at zero

  void validate() const;
};

struct SolveTrace {
  VectorXd x_hat;
  std::vector<double> objective_per_iter;  // F(x_k) = f(x_k) + lambda ||x_k||_1
  int iters = 0;
  bool converged = false;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double lipschitz = 0.0;  // final step-size constant
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, VectorXd iterate) : std::runtime_error(what), iterate_(std::move(iterate)) {}
  const VectorXd& iterate() const { return iterate_; }

 private:
  VectorXd iterate_;
};

/// Largest violation of 0 in grad + lambda * subdiff ||x||_1.
double l1_kkt_residual(const VectorXd& x, const VectorXd& grad, double lambda);

/// ||A||_2^2 estimated with `iters` power iterations on A^T A from a fixed start.
double spectral_norm_sq(const MatrixXd& A, int iters = 20);

/// FISTA with backtracking and a monotone restart: whenever an accelerated
/// step would raise the objective the momentum is dropped and a plain
/// proximal-gradient step is taken from the current iterate instead.
template <SmoothLoss F>
SolveTrace fista(const F& smooth, Index n, const SolverConfig& cfg) {
  cfg.validate();
  const double lambda = cfg.lambda;
  const bool backtrack = std::holds_alternative<Backtracking>(cfg.step_rule);
  double L = backtrack ? std::get<Backtracking>(cfg.step_rule).L0 : std::get<FixedStep>(cfg.step_rule).L;
  const double eta = backtrack ? std::get<Backtracking>(cfg.step_rule).eta : 1.0;

  SolveTrace trace;
  VectorXd x = cfg.x0.size() == n ? cfg.x0 : VectorXd::Zero(n);
  VectorXd x_prev = x;
  VectorXd y = x;
  VectorXd gy(n), gx(n), z(n);

  auto require_finite = [&](double v, const VectorXd& at) {
    if (!std::isfinite(v)) throw SolverError("fista: non-finite loss or gradient", at);
  };

  double fx = smooth.value(x);
  require_finite(fx, x);
  double Fx = fx + lambda * x.lpNorm<1>();
  double t = 1.0;
  bool momentum_free = true;  // y == x
  int stalled = 0;
  double moved = 0.0;  // length of the last rounding-level step

  auto check_kkt = [&]() {
    const double f = smooth.value_and_gradient(x, gx);
    require_finite(f, x);
    if (!gx.allFinite()) throw SolverError("fista: non-finite gradient", x);
    trace.kkt_residual = l1_kkt_residual(x, gx, lambda);
    return trace.kkt_residual <= cfg.kkt_tol * (1.0 + lambda);
  };

  if (check_kkt()) {
    trace.x_hat = x;
    trace.converged = true;
    trace.lipschitz = L;
    return trace;
  }

  for (int k = 1; k <= cfg.max_iters; ++k) {
    trace.iters = k;
    const double fy = smooth.value_and_gradient(y, gy);
    require_finite(fy, y);
    if (!gy.allFinite()) throw SolverError("fista: non-finite gradient", y);

    double fz;
    for (;;) {
      z = soft_threshold(y - gy / L, lambda / L);
      fz = smooth.value(z);
      const VectorXd d = z - y;
      if (!backtrack) break;
      if (std::isfinite(fz) && fz <= fy + gy.dot(d) + 0.5 * L * d.squaredNorm() + 1e-12 * std::abs(fy)) break;
      L *= eta;
      if (!std::isfinite(L)) throw SolverError("fista: step size collapsed", y);
    }
    require_finite(fz, z);
    const double Fz = fz + lambda * z.lpNorm<1>();

    if (Fz > Fx && !momentum_free) {
      // Restart from x without momentum.
      t = 1.0;
      y = x;
      momentum_free = true;
      trace.objective_per_iter.push_back(Fx);
      continue;
    }

    double decrease = 0.0;
    if (Fz <= Fx) {
      decrease = (Fx - Fz) / std::max(1.0, std::abs(Fx));
      x_prev = x;
      x = z;
      fx = fz;
      Fx = Fz;
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x + ((t - 1.0) / t_next) * (x - x_prev);
      t = t_next;
      momentum_free = false;
    } else {
      // A plain prox-gradient step failed to decrease F. Within rounding of
      // F(x) the step is still taken: the iterate can keep converging after
      // the objective stops resolving progress.
      if (Fz <= Fx + 8 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(Fx))) {
        moved = (z - x).norm();
        x = z;
        fx = fz;
      } else {
        moved = 0.0;
      }
      y = x;
      momentum_free = true;
    }
    trace.objective_per_iter.push_back(Fx);

    stalled = decrease < cfg.tol ? stalled + 1 : 0;
    if (stalled >= 5 || k % 10 == 0) {
      if (check_kkt()) {
        trace.converged = true;
        break;
      }
      if (stalled >= 5 && momentum_free && moved <= 1e-15 * (1.0 + x.norm())) {
        // Rounding floor reached without meeting the KKT tolerance.
        break;
      }
    }
  }
  if (!trace.converged) check_kkt();
  trace.x_hat = x;
  trace.lipschitz = L;
  return trace;
}

/// Result of a residual-targeted lambda search.
struct ConstrainedSolution {
  VectorXd x;
  double lambda = 0.0;
  double residual = 0.0;  // ||y - A x||_2
  bool feasible = true;   // false: minimum achievable residual exceeds eps
  int solves = 0;
  int iters = 0;  // total FISTA iterations
  SolveTrace trace;  // the accepted solve
};

struct BisectionOptions {
  double rel_band = 1e-3;       // accept residual in [eps(1-band), eps(1+band)]
  double lambda_lo_ratio = 1e-8;  // bracket floor relative to lambda_max
  int max_steps = 60;
  int max_iters = 20000;  // per LASSO solve
  double lambda_guess = 0.0;  // > 0: bracket outward from here instead of from the ends
  double expand = 1.05;       // first outward factor from the guess; squared each step
};

/// Searches lambda in [lo, hi] (log scale) so that the residual reported by
/// `solve_at(lambda, warm_start)` lands in the eps band. The residual is
/// assumed non-decreasing in lambda.
template <typename SolveAt>
ConstrainedSolution residual_bisection(SolveAt&& solve_at, double eps, double lambda_lo, double lambda_hi,
                                       const BisectionOptions& opt, const VectorXd& warm0 = VectorXd()) {
  const double upper = eps * (1.0 + opt.rel_band);
  const double lower = eps * (1.0 - opt.rel_band);
  int solves = 0, iters = 0;
  auto eval = [&](double lambda, const VectorXd& warm) {
    ConstrainedSolution s = solve_at(lambda, warm);
    ++solves;
    iters += s.trace.iters;
    return s;
  };
  auto finish = [&](ConstrainedSolution s) {
    s.solves = solves;
    s.iters = iters;
    return s;
  };
  auto in_band = [&](const ConstrainedSolution& s) { return s.residual >= lower && s.residual <= upper; };

  ConstrainedSolution hi, lo;
  if (opt.lambda_guess > lambda_lo && opt.lambda_guess < lambda_hi) {
    ConstrainedSolution g = eval(opt.lambda_guess, warm0);
    if (in_band(g)) return finish(g);
    const bool above = g.residual > upper;
    double factor = opt.expand;
    ConstrainedSolution& near = above ? hi : lo;
    near = std::move(g);
    for (;;) {
      const double lambda = above ? std::max(near.lambda / factor, lambda_lo) : std::min(near.lambda * factor, lambda_hi);
      factor *= factor;
      ConstrainedSolution s = eval(lambda, near.x);
      if (in_band(s)) return finish(s);
      if (above && s.residual < lower) {
        lo = std::move(s);
        break;
      }
      if (!above && s.residual > upper) {
        hi = std::move(s);
        break;
      }
      near = std::move(s);
      if (above && lambda <= lambda_lo) {
        near.feasible = false;
        return finish(near);
      }
      if (!above && lambda >= lambda_hi) return finish(near);
    }
  } else {
    hi = eval(lambda_hi, warm0);
    if (hi.residual <= upper) return finish(hi);
    lo = eval(lambda_lo, hi.x);
    if (lo.residual > upper) {
      lo.feasible = false;
      return finish(lo);
    }
    if (lo.residual >= lower) return finish(lo);
  }

  for (int step = 0; step < opt.max_steps; ++step) {
    const double mid_lambda = std::sqrt(lo.lambda * hi.lambda);
    // Warm start from whichever end is closer in residual.
    const VectorXd& warm = (hi.residual - eps) < (eps - lo.residual) ? hi.x : lo.x;
    ConstrainedSolution mid = eval(mid_lambda, warm);
    if (mid.residual > upper)
      hi = std::move(mid);
    else if (mid.residual < lower)
      lo = std::move(mid);
    else
      return finish(mid);
    if (hi.lambda / lo.lambda < 1.0 + 1e-12) break;
  }
  // Band not reached (residual jump); return the feasible side.
  return finish(lo);
}

/// min ||x||_1 s.t. ||y - A x||_2 <= eps, realised as a lambda search over
/// LASSO solves of 1/2||y - Ax||^2 + lambda ||x||_1.
ConstrainedSolution solve_residual_constrained(const MatrixXd& A, const VectorXd& y, double eps,
                                               const BisectionOptions& opt = {});

}  // namespace satcs
