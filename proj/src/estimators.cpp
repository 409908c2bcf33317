#include "satcs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "satcs/lm_objective.hpp"
#include "satcs/rng.hpp"

namespace satcs {

namespace {

// 1/2 ||y - B theta - r||^2 over the stacked variable (theta; r).
class AugmentedLeastSquares {
 public:
  AugmentedLeastSquares(const MatrixXd& B, const VectorXd& y) : B_(B), y_(y) {}

  double value(const VectorXd& z) const { return 0.5 * residual(z).squaredNorm(); }

  double value_and_gradient(const VectorXd& z, VectorXd& g) const {
    const VectorXd res = residual(z);
    g.resize(z.size());
    g.head(B_.cols()).noalias() = -(B_.transpose() * res);
    g.tail(B_.rows()) = -res;
    return 0.5 * res.squaredNorm();
  }

 private:
  VectorXd residual(const VectorXd& z) const { return y_ - B_ * z.head(B_.cols()) - z.tail(B_.rows()); }

  const MatrixXd& B_;
  const VectorXd& y_;
};

// 1/2 ||y_ns - B_ns x||^2 + w sum_{S+} (c - B_i x)_+^2 + w sum_{S-} (B_i x + c)_+^2
// with c = tau - 3 sigma.
class HingePenalizedLeastSquares {
 public:
  HingePenalizedLeastSquares(const MatrixXd& B_ns, const VectorXd& y_ns, const MatrixXd& B_plus,
                             const MatrixXd& B_minus, double c, double w)
      : B_ns_(B_ns), y_ns_(y_ns), B_plus_(B_plus), B_minus_(B_minus), c_(c), w_(w) {}

  double value(const VectorXd& x) const {
    const VectorXd hp = (VectorXd::Constant(B_plus_.rows(), c_) - B_plus_ * x).cwiseMax(0.0);
    const VectorXd hm = (B_minus_ * x + VectorXd::Constant(B_minus_.rows(), c_)).cwiseMax(0.0);
    return 0.5 * (B_ns_ * x - y_ns_).squaredNorm() + w_ * (hp.squaredNorm() + hm.squaredNorm());
  }

  double value_and_gradient(const VectorXd& x, VectorXd& g) const {
    const VectorXd r = B_ns_ * x - y_ns_;
    const VectorXd hp = (VectorXd::Constant(B_plus_.rows(), c_) - B_plus_ * x).cwiseMax(0.0);
    const VectorXd hm = (B_minus_ * x + VectorXd::Constant(B_minus_.rows(), c_)).cwiseMax(0.0);
    g.noalias() = B_ns_.transpose() * r;
    g.noalias() -= 2.0 * w_ * (B_plus_.transpose() * hp);
    g.noalias() += 2.0 * w_ * (B_minus_.transpose() * hm);
    return 0.5 * r.squaredNorm() + w_ * (hp.squaredNorm() + hm.squaredNorm());
  }

 private:
  const MatrixXd& B_ns_;
  const VectorXd& y_ns_;
  const MatrixXd& B_plus_;
  const MatrixXd& B_minus_;
  double c_;
  double w_;
};

MatrixXd rows_of(const MatrixXd& A, const IndexSet& rows) { return A(rows, Eigen::all); }

VectorXd rows_of(const VectorXd& v, const IndexSet& rows) { return v(rows); }

// Measurement subset re-indexed to 0..rows.size()-1.
MeasurementSet subset(const MeasurementSet& meas, const IndexSet& rows) {
  return MeasurementSet::from_clipped(rows_of(meas.y, rows), meas.tau, meas.sigma);
}

struct Split {
  IndexSet fit;
  IndexSet holdout;
};

Split split_unsaturated(const MeasurementSet& meas, double holdout_frac, Seed seed) {
  const auto m = static_cast<double>(meas.m());
  const auto target = static_cast<Index>(std::llround(holdout_frac * m / (1.0 + holdout_frac)));
  const Index h = std::min(target, meas.m3());
  IndexSet ns = meas.s_ns;
  Rng rng(seed);
  std::shuffle(ns.begin(), ns.end(), rng);
  Split sp;
  sp.holdout.assign(ns.begin(), ns.begin() + h);
  std::sort(sp.holdout.begin(), sp.holdout.end());
  std::vector<char> held(static_cast<std::size_t>(meas.m()), 0);
  for (Index i : sp.holdout) held[i] = 1;
  for (Index i = 0; i < meas.m(); ++i)
    if (!held[i]) sp.fit.push_back(i);
  return sp;
}

double ss_lambda_max(const MatrixXd& B, const VectorXd& y) {
  return std::max((B.transpose() * y).lpNorm<Eigen::Infinity>(), y.lpNorm<Eigen::Infinity>());
}

// Penalised fit used inside cross-validation; returns coefficients only.
struct PenalisedFit {
  VectorXd state;  // warm start carried along the grid
  VectorXd theta;
  SolveTrace trace;
};

PenalisedFit penalised_fit(EstimatorKind kind, const MatrixXd& B, const MeasurementSet& meas, double lambda,
                           int max_iters, const VectorXd& warm) {
  PenalisedFit out;
  if (kind == EstimatorKind::LM) {
    out.trace = solve_lm(B, meas, lambda, max_iters, warm);
    out.theta = out.trace.x_hat;
  } else {
    out.trace = solve_ss(B, meas.y, lambda, max_iters, warm);
    out.theta = out.trace.x_hat.head(B.cols());
  }
  out.state = out.trace.x_hat;
  return out;
}

double penalised_lambda_max(EstimatorKind kind, const MatrixXd& B, const MeasurementSet& meas) {
  return kind == EstimatorKind::LM ? lm_lambda_max(B, meas) : ss_lambda_max(B, meas.y);
}

CvOutcome crossval_in_domain(const EstimatorSpec& spec, const MatrixXd& B, const MeasurementSet& meas, Seed seed) {
  if (spec.kind != EstimatorKind::LM && spec.kind != EstimatorKind::SS)
    throw std::invalid_argument("crossval_lambda: only LM and SS carry a penalty weight");
  const auto* rule = std::get_if<CrossValLambda>(&spec.lambda_rule);
  const CrossValLambda cv = rule ? *rule : CrossValLambda{};
  const std::vector<double> grid = cv.grid.empty() ? default_relative_grid() : cv.grid;

  const Split sp = split_unsaturated(meas, cv.holdout_frac, seed);
  CvOutcome out;
  out.holdout_size = static_cast<Index>(sp.holdout.size());
  if (sp.holdout.empty()) {
    out.fallback = true;
    out.lambda = cv.fallback * penalised_lambda_max(spec.kind, B, meas);
    return out;
  }

  const MatrixXd B_fit = rows_of(B, sp.fit);
  const MeasurementSet meas_fit = subset(meas, sp.fit);
  const MatrixXd B_hold = rows_of(B, sp.holdout);
  const VectorXd y_hold = rows_of(meas.y, sp.holdout);
  const double scale = cv.relative ? penalised_lambda_max(spec.kind, B_fit, meas_fit) : 1.0;

  std::vector<double> lambdas;
  for (double g : grid) lambdas.push_back(g * scale);
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());

  VectorXd warm;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : lambdas) {
    PenalisedFit fit = penalised_fit(spec.kind, B_fit, meas_fit, lambda, spec.max_iters, warm);
    warm = fit.state;
    const double err = (y_hold - B_hold * fit.theta).squaredNorm() / static_cast<double>(sp.holdout.size());
    out.curve.push_back({lambda, err});
    // Descending grid with strict '<' keeps the larger lambda on ties.
    if (err < best) {
      best = err;
      out.lambda = lambda;
    }
  }
  return out;
}

double resolve_lambda(const EstimatorSpec& spec, const MatrixXd& B, const MeasurementSet& meas,
                      std::optional<CvOutcome>& cv_out) {
  if (const auto* fixed = std::get_if<FixedLambda>(&spec.lambda_rule)) return fixed->value;
  if (std::holds_alternative<DiscrepancyLambda>(spec.lambda_rule))
    throw std::invalid_argument("discrepancy rule is resolved inside the LM solve");
  cv_out = crossval_in_domain(spec, B, meas, spec.seed);
  return cv_out->lambda;
}

RecoveryResult recover_in_domain(const EstimatorSpec& spec, const MatrixXd& B, const MeasurementSet& meas) {
  RecoveryResult res;
  res.kind = spec.kind;
  res.seed = spec.seed;
  const double sigma = meas.sigma;

  switch (spec.kind) {
    case EstimatorKind::LM: {
      if (const auto* rule = std::get_if<DiscrepancyLambda>(&spec.lambda_rule)) {
        if (meas.m3() == 0) throw EstimatorError("LM: discrepancy rule needs unsaturated measurements");
        const MatrixXd B_ns = rows_of(B, meas.s_ns);
        const VectorXd y_ns = rows_of(meas.y, meas.s_ns);
        auto solve_at = [&](double lambda, const VectorXd& warm) {
          ConstrainedSolution s;
          s.trace = solve_lm(B, meas, lambda, spec.max_iters, warm);
          s.x = s.trace.x_hat;
          s.residual = (y_ns - B_ns * s.x).norm();
          s.lambda = lambda;
          return s;
        };
        BisectionOptions opt;
        opt.rel_band = rule->rel_band;
        const double lambda_max = lm_lambda_max(B, meas);
        ConstrainedSolution sol = residual_bisection(solve_at, sigma * std::sqrt(static_cast<double>(meas.m3())),
                                                     opt.lambda_lo_ratio * lambda_max, lambda_max, opt);
        res.theta_hat = sol.x;
        res.lambda_used = sol.lambda;
        res.trace = std::move(sol.trace);
        res.total_iters = sol.iters;
        if (!sol.feasible) res.flag = "infeasible";
        break;
      }
      const double lambda = resolve_lambda(spec, B, meas, res.cv);
      res.trace = solve_lm(B, meas, lambda, spec.max_iters);
      res.theta_hat = res.trace.x_hat;
      res.lambda_used = lambda;
      res.total_iters = res.trace.iters;
      break;
    }
    case EstimatorKind::SS: {
      const double lambda = resolve_lambda(spec, B, meas, res.cv);
      res.trace = solve_ss(B, meas.y, lambda, spec.max_iters);
      res.theta_hat = res.trace.x_hat.head(B.cols());
      res.lambda_used = lambda;
      res.total_iters = res.trace.iters;
      break;
    }
    case EstimatorKind::SR:
    case EstimatorKind::SI: {
      const bool reject = spec.kind == EstimatorKind::SR;
      if (reject && meas.m3() == 0) throw EstimatorError("SR: no usable measurements (every row saturated)");
      const IndexSet rows = reject ? meas.s_ns : [&] {
        IndexSet all(static_cast<std::size_t>(meas.m()));
        std::iota(all.begin(), all.end(), Index{0});
        return all;
      }();
      const MatrixXd B_sub = rows_of(B, rows);
      const VectorXd y_sub = rows_of(meas.y, rows);
      const double eps = sigma * std::sqrt(static_cast<double>(rows.size()));
      if (!(eps > 0)) throw EstimatorError(to_string(spec.kind) + ": residual budget requires sigma > 0");
      BisectionOptions opt;
      opt.max_iters = spec.max_iters;
      ConstrainedSolution sol = solve_residual_constrained(B_sub, y_sub, eps, opt);
      res.theta_hat = sol.x;
      res.lambda_used = sol.lambda;
      res.trace = std::move(sol.trace);
      res.total_iters = sol.iters;
      if (!sol.feasible) res.flag = "infeasible";
      break;
    }
    case EstimatorKind::SC: {
      if (meas.m3() == 0) throw EstimatorError("SC: no usable measurements (every row saturated)");
      if (!(sigma > 0)) throw EstimatorError("SC: residual budget requires sigma > 0");
      const MatrixXd B_ns = rows_of(B, meas.s_ns);
      const MatrixXd B_plus = rows_of(B, meas.s_plus);
      const MatrixXd B_minus = rows_of(B, meas.s_minus);
      // Work on data scaled to unit size; the solver tolerances are absolute.
      const double k = std::max(meas.y.lpNorm<Eigen::Infinity>(), 1e-300);
      const VectorXd y_ns = rows_of(meas.y, meas.s_ns) / k;
      const double c = (meas.tau - 3.0 * sigma) / k;
      const double eps = sigma * std::sqrt(static_cast<double>(meas.m3())) / k;
      const double tol = 1e-4 * meas.tau;
      const double norm_ns = spectral_norm_sq(B_ns);
      MatrixXd B_sat(B_plus.rows() + B_minus.rows(), B.cols());
      B_sat << B_plus, B_minus;
      const double norm_sat = spectral_norm_sq(B_sat);

      BisectionOptions opt;
      opt.max_iters = spec.max_iters;
      ConstrainedSolution sol;
      double violation = 0.0;
      int total = 0;
      double w = spec.sc_penalty_weight;
      for (int stage = 0; stage < 12; ++stage) {
        HingePenalizedLeastSquares loss(B_ns, y_ns, B_plus, B_minus, c, w);
        const double L = 1.01 * (norm_ns + 2.0 * w * norm_sat);
        VectorXd g0;
        loss.value_and_gradient(VectorXd::Zero(B.cols()), g0);
        const double lambda_max = std::max(g0.lpNorm<Eigen::Infinity>(), 1e-300);
        auto solve_at = [&](double lambda, const VectorXd& warm) {
          SolverConfig cfg;
          cfg.lambda = lambda;
          cfg.max_iters = spec.max_iters;
          cfg.kkt_tol = std::min(cfg.kkt_tol, 1e-3 * eps);
          cfg.step_rule = Backtracking{2.0, L};
          cfg.x0 = warm;
          SolveTrace tr = fista(loss, B.cols(), cfg);
          ConstrainedSolution s;
          s.residual = (y_ns - B_ns * tr.x_hat).norm();
          s.x = tr.x_hat;
          s.lambda = lambda;
          s.trace = std::move(tr);
          return s;
        };
        const VectorXd warm0 = sol.x;
        sol = residual_bisection(solve_at, eps, opt.lambda_lo_ratio * lambda_max, lambda_max, opt, warm0);
        total += sol.iters;
        violation = sc_violation(B, meas, k * sol.x);
        if (violation <= tol) break;
        // The violation shrinks roughly like 1/w.
        w *= std::clamp(2.0 * violation / tol, 10.0, 1e4);
        opt.lambda_guess = sol.lambda;
      }
      res.theta_hat = k * sol.x;
      res.lambda_used = k * sol.lambda;
      res.trace = std::move(sol.trace);
      res.trace.x_hat *= k;
      res.total_iters = total;
      if (violation > tol) res.flag = "sc-violation";
      else if (!sol.feasible) res.flag = "infeasible";
      break;
    }
  }
  return res;
}

}  // namespace

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::LM: return "LM";
    case EstimatorKind::SR: return "SR";
    case EstimatorKind::SC: return "SC";
    case EstimatorKind::SS: return "SS";
    case EstimatorKind::SI: return "SI";
  }
  return "?";
}

EstimatorKind estimator_from_string(const std::string& s) {
  for (auto k : {EstimatorKind::LM, EstimatorKind::SR, EstimatorKind::SC, EstimatorKind::SS, EstimatorKind::SI})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown estimator '" + s + "'");
}

std::vector<double> default_relative_grid() {
  std::vector<double> g(15);
  for (int k = 0; k < 15; ++k) g[k] = std::pow(10.0, -4.0 + 4.0 * k / 14.0);
  return g;
}

void EstimatorSpec::validate() const {
  if (const auto* cv = std::get_if<CrossValLambda>(&lambda_rule)) {
    if (!(cv->holdout_frac > 0 && cv->holdout_frac < 1))
      throw std::invalid_argument("EstimatorSpec: holdout_frac must lie in (0, 1)");
    for (double g : cv->grid)
      if (!(g > 0)) throw std::invalid_argument("EstimatorSpec: lambda grid must be positive");
  } else if (const auto* fixed = std::get_if<FixedLambda>(&lambda_rule)) {
    if (!(fixed->value >= 0)) throw std::invalid_argument("EstimatorSpec: fixed lambda must be non-negative");
  } else {
    if (kind != EstimatorKind::LM) throw std::invalid_argument("EstimatorSpec: discrepancy rule applies to LM only");
    if (!(std::get<DiscrepancyLambda>(lambda_rule).rel_band > 0))
      throw std::invalid_argument("EstimatorSpec: discrepancy band must be positive");
  }
  if (!(sc_penalty_weight > 0)) throw std::invalid_argument("EstimatorSpec: SC penalty weight must be positive");
  if (max_iters < 1) throw std::invalid_argument("EstimatorSpec: max_iters must be >= 1");
}

double lm_lambda_max(const MatrixXd& B, const MeasurementSet& meas) {
  return eval_grad(B, meas, VectorXd::Zero(B.cols())).lpNorm<Eigen::Infinity>();
}

SolveTrace solve_lm(const MatrixXd& B, const MeasurementSet& meas, double lambda, int max_iters,
                    const VectorXd& warm) {
  LmLoss loss(B, meas);
  SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.max_iters = max_iters;
  cfg.step_rule = Backtracking{2.0, loss.lipschitz_bound(std::sqrt(spectral_norm_sq(B)))};
  cfg.x0 = warm;
  return fista(loss, B.cols(), cfg);
}

SolveTrace solve_ss(const MatrixXd& B, const VectorXd& y, double lambda, int max_iters, const VectorXd& warm) {
  AugmentedLeastSquares loss(B, y);
  SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.max_iters = max_iters;
  cfg.step_rule = Backtracking{2.0, spectral_norm_sq(B) + 1.0};
  cfg.x0 = warm;
  return fista(loss, B.cols() + B.rows(), cfg);
}

double ss_objective(const MatrixXd& B, const VectorXd& y, const VectorXd& theta, const VectorXd& r, double lambda) {
  return lambda * (theta.lpNorm<1>() + r.lpNorm<1>()) + 0.5 * (y - B * theta - r).squaredNorm();
}

double sc_violation(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x) {
  const double c = meas.tau - 3.0 * meas.sigma;
  double worst = 0.0;
  for (Index i : meas.s_plus) worst = std::max(worst, c - A.row(i).dot(x));
  for (Index i : meas.s_minus) worst = std::max(worst, A.row(i).dot(x) + c);
  return worst;
}

CvOutcome crossval_lambda(const EstimatorSpec& spec, const MatrixXd& A, const MeasurementSet& meas, Seed seed) {
  spec.validate();
  const MatrixXd B = A * synthesis_matrix(spec.basis, A.cols());
  return crossval_in_domain(spec, B, meas, seed);
}

RecoveryResult recover(const EstimatorSpec& spec, const MatrixXd& A, const MeasurementSet& meas) {
  spec.validate();
  meas.validate();
  if (A.rows() != meas.m()) throw std::invalid_argument("recover: A rows differ from measurement count");
  const MatrixXd synth = synthesis_matrix(spec.basis, A.cols());
  const MatrixXd B = A * synth;
  RecoveryResult res = recover_in_domain(spec, B, meas);
  res.x_hat = synth * res.theta_hat;
  return res;
}

RecoveryResult recover(const EstimatorSpec& spec, const MatrixXd& A, const MeasurementSet& meas,
                       const SparseSignal& truth) {
  RecoveryResult res = recover(spec, A, meas);
  res.rrmse = rrmse(truth.signal(), res.x_hat);
  return res;
}

}  // namespace satcs
