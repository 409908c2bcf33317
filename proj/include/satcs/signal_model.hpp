#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "satcs/types.hpp"

namespace satcs {

/// Saturation operator: a if q < a, b if q > b, q otherwise.
template <typename Scalar>
Scalar clip(Scalar q, Scalar a, Scalar b) {
  if (!(a < b)) throw std::invalid_argument("clip: requires a < b");
  if (q < a) return a;
  if (q > b) return b;
  return q;
}

/// Orthonormal type-II DCT matrix. Row k is the k-th basis vector, so
/// theta = Psi * x analyses and x = Psi^T * theta synthesises.
template <typename Scalar>
Matrix<Scalar> dct_matrix(Index n) {
  Matrix<Scalar> psi(n, n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar c0 = std::sqrt(Scalar(1) / Scalar(n));
  const Scalar ck = std::sqrt(Scalar(2) / Scalar(n));
  for (Index k = 0; k < n; ++k) {
    for (Index j = 0; j < n; ++j) {
      psi(k, j) = (k == 0 ? c0 : ck) * std::cos(pi * (Scalar(j) + Scalar(0.5)) * Scalar(k) / Scalar(n));
    }
  }
  return psi;
}

/// ||x_true - x_hat||_2 / ||x_true||_2
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar rrmse(const Eigen::MatrixBase<DerivedA>& x_true, const Eigen::MatrixBase<DerivedB>& x_hat) {
  if (x_true.size() != x_hat.size()) throw std::invalid_argument("rrmse: length mismatch");
  const auto denom = x_true.norm();
  if (!(denom > 0)) throw std::domain_error("rrmse: true signal is zero");
  return (x_true - x_hat).norm() / denom;
}

enum class Basis { canonical, dct };

std::string to_string(Basis b);
Basis basis_from_string(const std::string& s);

struct AmplitudeDist {
  enum class Kind { gaussian, uniform, rademacher } kind = Kind::gaussian;
  double scale = 1.0;
};

struct SparseSignal {
  Basis basis = Basis::dct;
  VectorXd coeffs;   // theta, exactly s-sparse
  IndexSet support;  // sorted

  Index n() const { return coeffs.size(); }
  Index sparsity() const { return static_cast<Index>(support.size()); }
  /// Time-domain signal x (= coeffs for the canonical basis).
  VectorXd signal() const;
};

/// Synthesis operator for a basis: x = synthesis * theta.
MatrixXd synthesis_matrix(Basis basis, Index n);

SparseSignal gen_signal(Index n, Index s, const AmplitudeDist& amplitude, Seed seed, Basis basis = Basis::dct);

/// m x n matrix with i.i.d. N(0, 1/m) entries.
MatrixXd gen_sensing(Index m, Index n, Seed seed);

struct MeasurementSet {
  VectorXd y;
  double tau = 0;
  double sigma = 0;
  IndexSet s_plus;
  IndexSet s_minus;
  IndexSet s_ns;

  Index m() const { return y.size(); }
  Index m1() const { return static_cast<Index>(s_plus.size()); }
  Index m2() const { return static_cast<Index>(s_minus.size()); }
  Index m3() const { return static_cast<Index>(s_ns.size()); }

  /// Partition by the data: y_i = tau goes to S+, y_i = -tau to S-.
  static MeasurementSet from_clipped(VectorXd y, double tau, double sigma);

  /// Throws std::logic_error when the partition or value invariants fail.
  void validate() const;
};

/// A x + eta with eta_i ~ N(0, sigma^2) drawn from `seed`; the value that the
/// sensor clips.
VectorXd presaturation(const MatrixXd& A, const VectorXd& x, double sigma, Seed seed);

MeasurementSet measure(const MatrixXd& A, const VectorXd& x, double sigma, double tau, Seed seed);
MeasurementSet measure(const MatrixXd& A, const SparseSignal& x, double sigma, double tau, Seed seed);

/// Threshold that saturates exactly ceil(f_sat * m) of the realised
/// pre-clipping measurements for the same (A, x, sigma, seed).
double calibrate_tau(const MatrixXd& A, const VectorXd& x, double sigma, double f_sat, Seed seed);

/// zeta = mean_i |A^i x| on noiseless, unclipped measurements.
double mean_abs_measurement(const MatrixXd& A, const VectorXd& x);

/// Everything one trial of the experiment protocol needs.
struct InstanceConfig {
  Index n = 256;
  Index m = 150;
  Index s = 25;
  double f_sat = 0.15;
  double f_sigma = 0.1;
  Basis basis = Basis::dct;
  AmplitudeDist amplitude{};
};

struct Instance {
  SparseSignal truth;
  MatrixXd A;
  MeasurementSet meas;
  Seed seed = 0;
};

/// Fresh signal, matrix and noise; sigma = f_sigma * zeta and tau calibrated
/// to f_sat. Deterministic in `seed`.
Instance synthesize(const InstanceConfig& cfg, Seed seed);

}  // namespace satcs
