#include "satcs/signal_model.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>

#include "satcs/rng.hpp"

namespace satcs {

std::string to_string(Basis b) { return b == Basis::dct ? "dct" : "canonical"; }

Basis basis_from_string(const std::string& s) {
  if (s == "dct") return Basis::dct;
  if (s == "canonical") return Basis::canonical;
  throw std::invalid_argument("unknown basis '" + s + "'");
}

MatrixXd synthesis_matrix(Basis basis, Index n) {
  if (basis == Basis::canonical) return MatrixXd::Identity(n, n);
  return dct_matrix<double>(n).transpose();
}

VectorXd SparseSignal::signal() const {
  if (basis == Basis::canonical) return coeffs;
  return dct_matrix<double>(n()).transpose() * coeffs;
}

SparseSignal gen_signal(Index n, Index s, const AmplitudeDist& amplitude, Seed seed, Basis basis) {
  if (n < 1) throw std::invalid_argument("gen_signal: n must be positive");
  if (s < 1 || s > n) throw std::invalid_argument("gen_signal: need 1 <= s <= n");
  Rng rng(seed);

  // Partial Fisher-Yates: the first s entries are a uniform s-subset.
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = 0; i < s; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  IndexSet support(perm.begin(), perm.begin() + s);
  std::sort(support.begin(), support.end());

  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::bernoulli_distribution coin;
  auto draw = [&]() -> double {
    switch (amplitude.kind) {
      case AmplitudeDist::Kind::gaussian: return amplitude.scale * normal(rng);
      case AmplitudeDist::Kind::uniform: return amplitude.scale * unit(rng);
      case AmplitudeDist::Kind::rademacher: return coin(rng) ? amplitude.scale : -amplitude.scale;
    }
    return 0.0;
  };

  SparseSignal sig;
  sig.basis = basis;
  sig.coeffs = VectorXd::Zero(n);
  for (Index j : support) {
    double v = 0.0;
    while (v == 0.0) v = draw();
    sig.coeffs(j) = v;
  }
  sig.support = std::move(support);
  return sig;
}

MatrixXd gen_sensing(Index m, Index n, Seed seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("gen_sensing: dimensions must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  MatrixXd A(m, n);
  // Row-major fill order so a given seed means the same matrix regardless of
  // Eigen's storage order.
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = normal(rng);
  return A;
}

MeasurementSet MeasurementSet::from_clipped(VectorXd y, double tau, double sigma) {
  MeasurementSet ms;
  ms.tau = tau;
  ms.sigma = sigma;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) == tau)
      ms.s_plus.push_back(i);
    else if (y(i) == -tau)
      ms.s_minus.push_back(i);
    else
      ms.s_ns.push_back(i);
  }
  ms.y = std::move(y);
  return ms;
}

void MeasurementSet::validate() const {
  if (!(tau > 0)) throw std::logic_error("MeasurementSet: tau must be positive");
  if (!(sigma >= 0)) throw std::logic_error("MeasurementSet: sigma must be non-negative");
  std::vector<int> seen(static_cast<std::size_t>(m()), 0);
  auto mark = [&](const IndexSet& set) {
    for (Index i : set) {
      if (i < 0 || i >= m()) throw std::logic_error("MeasurementSet: index out of range");
      if (seen[i]++) throw std::logic_error("MeasurementSet: index sets overlap");
    }
  };
  mark(s_plus);
  mark(s_minus);
  mark(s_ns);
  if (m1() + m2() + m3() != m()) throw std::logic_error("MeasurementSet: partition is not exhaustive");
  for (Index i : s_plus)
    if (y(i) != tau) throw std::logic_error("MeasurementSet: S+ entry differs from tau");
  for (Index i : s_minus)
    if (y(i) != -tau) throw std::logic_error("MeasurementSet: S- entry differs from -tau");
  for (Index i : s_ns)
    if (!(y(i) > -tau && y(i) < tau)) throw std::logic_error("MeasurementSet: unsaturated entry outside (-tau, tau)");
}

VectorXd presaturation(const MatrixXd& A, const VectorXd& x, double sigma, Seed seed) {
  if (!(sigma >= 0)) throw std::invalid_argument("presaturation: sigma must be non-negative");
  VectorXd q = A * x;
  if (sigma > 0) {
    Rng rng(seed);
    std::normal_distribution<double> normal;
    for (Index i = 0; i < q.size(); ++i) q(i) += sigma * normal(rng);
  }
  return q;
}

MeasurementSet measure(const MatrixXd& A, const VectorXd& x, double sigma, double tau, Seed seed) {
  if (!(tau > 0)) throw std::invalid_argument("measure: tau must be positive");
  VectorXd y = presaturation(A, x, sigma, seed);
  for (Index i = 0; i < y.size(); ++i) y(i) = clip(y(i), -tau, tau);
  return MeasurementSet::from_clipped(std::move(y), tau, sigma);
}

MeasurementSet measure(const MatrixXd& A, const SparseSignal& x, double sigma, double tau, Seed seed) {
  return measure(A, x.signal(), sigma, tau, seed);
}

double calibrate_tau(const MatrixXd& A, const VectorXd& x, double sigma, double f_sat, Seed seed) {
  if (!(f_sat >= 0.0 && f_sat < 1.0)) throw std::invalid_argument("calibrate_tau: need 0 <= f_sat < 1");
  VectorXd mag = presaturation(A, x, sigma, seed).cwiseAbs();
  std::vector<double> a(mag.data(), mag.data() + mag.size());
  std::sort(a.begin(), a.end(), std::greater<>());
  const auto m = static_cast<Index>(a.size());
  const auto k = static_cast<Index>(std::ceil(f_sat * static_cast<double>(m) - 1e-9));
  double tau;
  if (k == 0) {
    tau = a.front() * (1.0 + 1e-6) + std::numeric_limits<double>::min();
  } else if (k >= m) {
    tau = 0.5 * a.back();
  } else {
    // Strictly between the k-th and (k+1)-th largest magnitudes.
    tau = 0.5 * (a[k - 1] + a[k]);
  }
  if (!(tau > 0)) tau = std::numeric_limits<double>::min();
  return tau;
}

double mean_abs_measurement(const MatrixXd& A, const VectorXd& x) { return (A * x).cwiseAbs().mean(); }

Instance synthesize(const InstanceConfig& cfg, Seed seed) {
  Instance inst;
  inst.seed = seed;
  inst.truth = gen_signal(cfg.n, cfg.s, cfg.amplitude, derive_seed(seed, 1), cfg.basis);
  inst.A = gen_sensing(cfg.m, cfg.n, derive_seed(seed, 2));
  const Seed noise_seed = derive_seed(seed, 3);
  const VectorXd x = inst.truth.signal();
  const double sigma = cfg.f_sigma * mean_abs_measurement(inst.A, x);
  const double tau = calibrate_tau(inst.A, x, sigma, cfg.f_sat, noise_seed);
  inst.meas = measure(inst.A, x, sigma, tau, noise_seed);
  return inst;
}

}  // namespace satcs
