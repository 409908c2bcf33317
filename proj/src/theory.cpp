#include "satcs/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satcs/estimators.hpp"
#include "satcs/gauss.hpp"
#include "satcs/lm_objective.hpp"
#include "satcs/prox.hpp"

namespace satcs {

namespace {

double log_n(const BoundInputs& b) { return std::log(static_cast<double>(b.n)); }

std::vector<char> support_mask(Index n, const IndexSet& support) {
  std::vector<char> on(static_cast<std::size_t>(n), 0);
  for (Index j : support) {
    if (j < 0 || j >= n) throw std::invalid_argument("support index out of range");
    on[j] = 1;
  }
  return on;
}

// Euclidean projection onto the convex piece of the cone that keeps the signs
// of v on the support: ||b||_1 <= 3 sum(a) with a = sign-aligned support part.
VectorXd project_cone(const VectorXd& v, const std::vector<char>& on) {
  double mass_on = 0.0, mass_off = 0.0, top = 0.0;
  for (Index j = 0; j < v.size(); ++j) {
    if (on[j])
      mass_on += std::abs(v(j));
    else {
      mass_off += std::abs(v(j));
      top = std::max(top, std::abs(v(j)));
    }
  }
  if (mass_off <= 3.0 * mass_on) return v;

  const auto s = static_cast<double>(std::count(on.begin(), on.end(), char{1}));
  auto gap = [&](double mu) {
    double off = 0.0;
    for (Index j = 0; j < v.size(); ++j)
      if (!on[j]) off += std::max(std::abs(v(j)) - mu, 0.0);
    return off - 3.0 * (mass_on + 3.0 * mu * s);
  };
  double lo = 0.0, hi = top;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * top; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) > 0 ? lo : hi) = mid;
  }
  const double mu = hi;
  VectorXd out(v.size());
  for (Index j = 0; j < v.size(); ++j) {
    if (on[j])
      out(j) = std::copysign(std::abs(v(j)) + 3.0 * mu, v(j) == 0.0 ? 1.0 : v(j));
    else
      out(j) = std::copysign(std::max(std::abs(v(j)) - mu, 0.0), v(j));
  }
  return out;
}

double rayleigh(const MatrixXd& A, const VectorXd& d) { return (A * d).squaredNorm() / d.squaredNorm(); }

// Projected gradient on the unit sphere slice; only accepts decreasing steps.
double refine(const MatrixXd& A, VectorXd& d, const std::vector<char>& on, double step0, int steps) {
  d.normalize();
  double r = rayleigh(A, d);
  double step = step0;
  for (int k = 0; k < steps && step > 1e-14 * step0; ++k) {
    const VectorXd g = 2.0 * (A.transpose() * (A * d) - r * d);
    VectorXd cand = project_cone(d - step * g, on);
    const double nrm = cand.norm();
    if (!(nrm > 0)) {
      step *= 0.5;
      continue;
    }
    cand /= nrm;
    const double rc = rayleigh(A, cand);
    if (rc < r) {
      d = std::move(cand);
      r = rc;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  return r;
}

}  // namespace

void BoundInputs::validate() const {
  if (s < 1 || n < 2) throw std::invalid_argument("BoundInputs: need s >= 1 and n >= 2");
  if (m1 < 0 || m2 < 0 || m3 < 0 || m != m1 + m2 + m3 || m < 1)
    throw std::invalid_argument("BoundInputs: m must equal m1 + m2 + m3 > 0");
  if (!(sigma > 0)) throw std::invalid_argument("BoundInputs: sigma must be positive");
  if (!(varrho > 2)) throw std::invalid_argument("BoundInputs: varrho must exceed 2");
  if (!(c1 >= 0)) throw std::invalid_argument("BoundInputs: C1 must be non-negative");
  if (!(alpha <= beta)) throw std::invalid_argument("BoundInputs: need alpha <= beta");
  if (gamma == 0.0) throw std::domain_error("BoundInputs: gamma = 0 leaves the bound undefined");
  if (!(gamma > 0)) throw std::invalid_argument("BoundInputs: gamma must be positive");
}

ErrorBound thm4_bound(const BoundInputs& b) {
  b.validate();
  const double m = static_cast<double>(b.m);
  const double sat = static_cast<double>(b.m1 + b.m2);
  const double m3 = static_cast<double>(b.m3);
  const double s = static_cast<double>(b.s);
  const double ln = log_n(b);
  const double g2 = b.gamma * b.gamma;
  const double s2 = b.sigma * b.sigma;

  ErrorBound out;
  const double inner = std::sqrt(m3) + b.c1 * std::sqrt(sat);
  out.main = 144.0 * s * ln * s2 * b.varrho / (g2 * m) * inner * inner;
  const double q = b.c1 * std::sqrt(sat * ln / m);
  const double lead = std::sqrt(m3 * ln * b.varrho / m) + q;
  out.appendix = 144.0 * s * lead * lead * s2 / g2;
  return out;
}

double thm4_lambda(const BoundInputs& b) {
  b.validate();
  const double m = static_cast<double>(b.m);
  const double ln = log_n(b);
  return 2.0 / b.sigma *
         (std::sqrt(static_cast<double>(b.m3) * b.varrho * ln / m) +
          b.c1 * std::sqrt(b.varrho * static_cast<double>(b.m1 + b.m2) * ln / m));
}

double c1_recipe(const MatrixXd& A, const MeasurementSet& meas, double alpha, double beta) {
  if (!(alpha <= beta)) throw std::invalid_argument("c1_recipe: need alpha <= beta");
  if (A.rows() != meas.m()) throw std::invalid_argument("c1_recipe: A rows differ from measurement count");
  if (!(meas.sigma > 0)) throw std::invalid_argument("c1_recipe: sigma must be positive");
  auto range = [&](Index i, double& p, double& q) {
    const auto row = A.row(i);
    const double pos = row.cwiseMax(0.0).sum();
    const double neg = row.cwiseMin(0.0).sum();
    p = pos * alpha + neg * beta;
    q = pos * beta + neg * alpha;
  };
  const double tau = meas.tau, sigma = meas.sigma;
  double c1 = 0.0;
  for (Index i : meas.s_plus) {
    double p, q;
    range(i, p, q);
    c1 = std::max({c1, inverse_mills((tau - q) / sigma, Tail::upper), inverse_mills((tau - p) / sigma, Tail::upper)});
  }
  for (Index i : meas.s_minus) {
    double p, q;
    range(i, p, q);
    c1 = std::max({c1, inverse_mills((-tau - q) / sigma, Tail::lower), inverse_mills((-tau - p) / sigma, Tail::lower)});
  }
  return c1;
}

double cone_excess(const VectorXd& delta, const IndexSet& support) {
  const auto on = support_mask(delta.size(), support);
  double in = 0.0, out = 0.0;
  for (Index j = 0; j < delta.size(); ++j) (on[j] ? in : out) += std::abs(delta(j));
  return std::max(out - 3.0 * in, 0.0);
}

VectorXd sample_cone_direction(Index n, const IndexSet& support, Rng& rng) {
  if (support.empty()) throw std::invalid_argument("sample_cone_direction: empty support");
  const auto on = support_mask(n, support);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  VectorXd d = VectorXd::Zero(n);
  double l1_on = 0.0;
  for (Index j : support) {
    d(j) = normal(rng);
    l1_on += std::abs(d(j));
  }
  IndexSet off;
  for (Index j = 0; j < n; ++j)
    if (!on[j]) off.push_back(j);
  if (!off.empty() && unit(rng) < 0.5) {
    std::uniform_int_distribution<std::size_t> count(1, off.size());
    const std::size_t k = count(rng);
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, off.size() - 1);
      std::swap(off[i], off[pick(rng)]);
    }
    double l1_off = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      d(off[i]) = normal(rng);
      l1_off += std::abs(d(off[i]));
    }
    if (l1_off > 0) {
      const double scale = unit(rng) * 3.0 * l1_on / l1_off;
      for (std::size_t i = 0; i < k; ++i) d(off[i]) *= scale;
    }
  }
  const double nrm = d.norm();
  return nrm > 0 ? VectorXd(d / nrm) : d;
}

RecSearch rec_search(const MatrixXd& A_sub, const IndexSet& support, int samples, Seed seed, const RecOptions& opt) {
  if (samples < 1) throw std::invalid_argument("rec_estimate: samples must be >= 1");
  const Index n = A_sub.cols();
  const auto on = support_mask(n, support);
  Rng rng(seed);
  RecSearch out;
  out.gamma = std::numeric_limits<double>::infinity();
  // Keep the best few samples as refinement starts.
  std::vector<std::pair<double, VectorXd>> best;
  for (int k = 0; k < samples; ++k) {
    VectorXd d = sample_cone_direction(n, support, rng);
    const double r = A_sub.rows() ? rayleigh(A_sub, d) : 0.0;
    if (r < out.gamma) {
      out.gamma = r;
      out.direction = d;
    }
    if (static_cast<int>(best.size()) < opt.refine_starts) {
      best.emplace_back(r, std::move(d));
    } else if (opt.refine_starts > 0) {
      auto worst = std::max_element(best.begin(), best.end(),
                                    [](const auto& a, const auto& b) { return a.first < b.first; });
      if (r < worst->first) *worst = {r, std::move(d)};
    }
  }
  out.sampled = out.gamma;
  const double norm_sq = A_sub.rows() ? spectral_norm_sq(A_sub) : 0.0;
  if (norm_sq == 0.0) return out;
  const double step0 = 0.5 / norm_sq;
  for (auto& [r, d] : best) {
    const double rr = refine(A_sub, d, on, step0, opt.refine_steps);
    if (rr < out.gamma) {
      out.gamma = rr;
      out.direction = d;
    }
  }
  return out;
}

double bregman(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x_star, const VectorXd& delta) {
  LmLoss loss(A, meas);
  VectorXd g;
  const double f0 = loss.value_and_gradient(x_star, g);
  return loss.value(x_star + delta) - f0 - g.dot(delta);
}

RscReport rsc_check(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x_star, int samples, Seed seed,
                    double gamma_hat) {
  if (samples < 1) throw std::invalid_argument("rsc_check: samples must be >= 1");
  IndexSet support;
  for (Index j = 0; j < x_star.size(); ++j)
    if (x_star(j) != 0.0) support.push_back(j);
  if (support.empty()) throw std::invalid_argument("rsc_check: x_star has empty support");

  RscReport rep;
  rep.samples = samples;
  if (gamma_hat > 0) {
    rep.gamma_hat = gamma_hat;
  } else {
    const MatrixXd A_ns = A(meas.s_ns, Eigen::all);
    rep.gamma_hat = rec_estimate(A_ns, support, std::max(samples, 1000), derive_seed(seed, 1));
  }
  const double sigma = meas.sigma;
  rep.kappa_hat = rep.gamma_hat / (2.0 * sigma * sigma);

  LmLoss loss(A, meas);
  VectorXd g;
  const double f0 = loss.value_and_gradient(x_star, g);
  const double scale = std::max(x_star.norm(), 1.0);
  Rng rng(derive_seed(seed, 2));
  std::uniform_real_distribution<double> log_len(std::log(1e-2), std::log(10.0));
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    VectorXd d = sample_cone_direction(x_star.size(), support, rng);
    d *= scale * std::exp(log_len(rng));
    const double dl = loss.value(x_star + d) - f0 - g.dot(d);
    const double required = rep.kappa_hat * d.squaredNorm();
    rep.min_margin = std::min(rep.min_margin, dl - required);
    if (dl < -1e-9) ++rep.convexity_violations;
    if (dl < required - 1e-9) {
      ++rep.violations;
      rep.audit.push_back({k, dl, required, d});
    }
  }
  return rep;
}

GradNormProbe grad_norm_probe(const MatrixXd& A, const MeasurementSet& meas, const VectorXd& x_star, double varrho,
                              double c1) {
  if (!(varrho > 2)) throw std::invalid_argument("grad_norm_probe: varrho must exceed 2");
  GradNormProbe p;
  p.grad_inf = eval_grad(A, meas, x_star).lpNorm<Eigen::Infinity>();
  const double m = static_cast<double>(meas.m());
  const double ln = std::log(static_cast<double>(A.cols()));
  p.thm3_magnitude = std::sqrt(static_cast<double>(meas.m3()) * varrho * ln / m) / meas.sigma;
  p.saturated_term = c1 * std::sqrt(varrho * static_cast<double>(meas.m1() + meas.m2()) * ln / m) / meas.sigma;
  return p;
}

BoundComparison bound_compare(const BoundCompareConfig& cfg, Seed seed) {
  const Instance inst = synthesize(cfg.instance, seed);
  const VectorXd x_star = inst.truth.signal();
  const MatrixXd synth = synthesis_matrix(cfg.instance.basis, cfg.instance.n);
  const MatrixXd B = inst.A * synth;
  const MeasurementSet& meas = inst.meas;

  BoundComparison out;
  out.seed = seed;
  out.f_sat = cfg.instance.f_sat;
  const MatrixXd B_ns = B(meas.s_ns, Eigen::all);
  out.gamma_hat = rec_estimate(B_ns, inst.truth.support, cfg.rec_samples, derive_seed(seed, 11));

  const VectorXd& theta = inst.truth.coeffs;
  BoundInputs b;
  b.s = inst.truth.sparsity();
  b.n = cfg.instance.n;
  b.m = meas.m();
  b.m1 = meas.m1();
  b.m2 = meas.m2();
  b.m3 = meas.m3();
  b.sigma = meas.sigma;
  b.gamma = out.gamma_hat;
  b.varrho = cfg.varrho;
  b.alpha = theta.minCoeff();
  b.beta = theta.maxCoeff();
  b.c1 = out.c1 = c1_recipe(B, meas, b.alpha, b.beta);
  out.bound = thm4_bound(b).main;
  out.lambda = thm4_lambda(b);
  out.grad_inf = eval_grad(B, meas, theta).lpNorm<Eigen::Infinity>();
  out.precondition = out.lambda >= 2.0 * out.grad_inf;

  const SolveTrace tr = solve_lm(B, meas, out.lambda);
  out.err_sq = (tr.x_hat - theta).squaredNorm();
  out.truth_norm_sq = theta.squaredNorm();
  out.rrmse_sq = out.err_sq / out.truth_norm_sq;
  return out;
}

}  // namespace satcs
