#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "satcs/rng.hpp"
#include "satcs/signal_model.hpp"

using namespace satcs;

TEST_CASE("clip") {
  CHECK(clip(0.5, -1.0, 1.0) == 0.5);
  CHECK(clip(2.0, -1.0, 1.0) == 1.0);
  CHECK(clip(-3.0, -1.0, 1.0) == -1.0);
  CHECK_THROWS_AS(clip(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(clip(0.0, 2.0, 1.0), std::invalid_argument);
  for (double q = -3; q <= 3; q += 0.25) CHECK(clip(clip(q, -1.0, 1.0), -1.0, 1.0) == clip(q, -1.0, 1.0));
}

TEST_CASE("DCT is orthonormal and round-trips") {
  for (Index n : {1, 2, 7, 64, 256}) {
    const MatrixXd psi = dct_matrix<double>(n);
    CHECK((psi * psi.transpose() - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
  }
  Rng rng(3);
  std::normal_distribution<double> normal;
  VectorXd theta(64);
  for (Index j = 0; j < 64; ++j) theta(j) = normal(rng);
  const MatrixXd psi = dct_matrix<double>(64);
  CHECK((psi * (psi.transpose() * theta) - theta).lpNorm<Eigen::Infinity>() <= 1e-10);
  // first basis vector is constant
  CHECK((psi.row(0).array() - 1.0 / 8.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("rrmse") {
  VectorXd x(2), z(2), w(2);
  x << 3, 4;
  z << 0, 0;
  w << 0, 4;
  CHECK(rrmse(x, x) == 0.0);
  CHECK(rrmse(x, z) == doctest::Approx(1.0));
  CHECK(rrmse(x, w) == doctest::Approx(0.6));
  CHECK_THROWS_AS(rrmse(z, x), std::domain_error);
  CHECK_THROWS_AS(rrmse(x, VectorXd(3)), std::invalid_argument);
}

TEST_CASE("gen_signal") {
  const SparseSignal sig = gen_signal(256, 25, {}, 7);
  CHECK(sig.n() == 256);
  CHECK(sig.sparsity() == 25);
  CHECK((sig.coeffs.array() != 0.0).count() == 25);
  CHECK(std::is_sorted(sig.support.begin(), sig.support.end()));
  for (Index j : sig.support) CHECK(sig.coeffs(j) != 0.0);

  const SparseSignal dense = gen_signal(8, 8, {}, 11);
  CHECK((dense.coeffs.array() != 0.0).count() == 8);

  const SparseSignal again = gen_signal(256, 25, {}, 7);
  CHECK(again.coeffs == sig.coeffs);
  CHECK(again.support == sig.support);
  CHECK(gen_signal(256, 25, {}, 8).coeffs != sig.coeffs);

  CHECK_THROWS_AS(gen_signal(8, 9, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_signal(8, 0, {}, 1), std::invalid_argument);

  const SparseSignal rad = gen_signal(32, 5, {AmplitudeDist::Kind::rademacher, 2.0}, 1);
  for (Index j : rad.support) CHECK(std::abs(rad.coeffs(j)) == 2.0);
  const SparseSignal uni = gen_signal(32, 5, {AmplitudeDist::Kind::uniform, 0.5}, 1);
  for (Index j : uni.support) CHECK(std::abs(uni.coeffs(j)) <= 0.5);

  // time domain signal is the DCT synthesis of the coefficients
  CHECK((sig.signal() - dct_matrix<double>(256).transpose() * sig.coeffs).norm() < 1e-12);
  const SparseSignal can = gen_signal(16, 3, {}, 2, Basis::canonical);
  CHECK(can.signal() == can.coeffs);
}

TEST_CASE("gen_signal supports are uniform") {
  std::vector<int> hits(16, 0);
  for (Seed s = 0; s < 4000; ++s)
    for (Index j : gen_signal(16, 4, {}, s).support) ++hits[j];
  // expected 1000 per index; 5 sigma of a binomial(4000, 1/4) is ~137
  for (int h : hits) CHECK(std::abs(h - 1000) < 140);
}

TEST_CASE("gen_sensing") {
  const MatrixXd A = gen_sensing(150, 256, 5);
  CHECK(A.rows() == 150);
  CHECK(A.cols() == 256);
  CHECK(A == gen_sensing(150, 256, 5));
  const double mean_sq = A.colwise().squaredNorm().mean();
  CHECK(mean_sq >= 0.95);
  CHECK(mean_sq <= 1.05);

  // 1 x 1: one N(0, 1) draw from the seed's stream
  Rng rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  CHECK(gen_sensing(1, 1, 9)(0, 0) == normal(rng));
  CHECK_THROWS_AS(gen_sensing(0, 3, 1), std::invalid_argument);
}

TEST_CASE("measure") {
  const MatrixXd A = gen_sensing(40, 20, 1);
  const VectorXd x = gen_signal(20, 4, {}, 2, Basis::canonical).signal();
  const VectorXd ax = A * x;

  const MeasurementSet open = measure(A, x, 0.0, 1e18, 3);
  CHECK(open.y == ax);
  CHECK(open.m1() == 0);
  CHECK(open.m2() == 0);

  const double tau = 0.5 * ax.cwiseAbs().maxCoeff();
  const MeasurementSet half = measure(A, x, 0.0, tau, 3);
  for (Index i = 0; i < 40; ++i) {
    const bool plus = std::find(half.s_plus.begin(), half.s_plus.end(), i) != half.s_plus.end();
    const bool minus = std::find(half.s_minus.begin(), half.s_minus.end(), i) != half.s_minus.end();
    CHECK(plus == (ax(i) > tau));
    CHECK(minus == (ax(i) < -tau));
  }
  CHECK_NOTHROW(half.validate());

  for (Seed s = 0; s < 20; ++s) {
    const Instance inst = synthesize({64, 40, 5, 0.2, 0.1, Basis::dct, {}}, s);
    CHECK_NOTHROW(inst.meas.validate());
    CHECK(inst.meas.m1() + inst.meas.m2() + inst.meas.m3() == 40);
  }
  CHECK_THROWS_AS(measure(A, x, 0.1, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(measure(A, x, 0.1, -1.0, 1), std::invalid_argument);
}

TEST_CASE("MeasurementSet::validate rejects broken partitions") {
  MeasurementSet ms = MeasurementSet::from_clipped((VectorXd(3) << 1.0, -1.0, 0.2).finished(), 1.0, 0.1);
  CHECK(ms.s_plus == IndexSet{0});
  CHECK(ms.s_minus == IndexSet{1});
  CHECK(ms.s_ns == IndexSet{2});
  CHECK_NOTHROW(ms.validate());
  MeasurementSet overlap = ms;
  overlap.s_ns.push_back(0);
  CHECK_THROWS_AS(overlap.validate(), std::logic_error);
  MeasurementSet missing = ms;
  missing.s_ns.clear();
  CHECK_THROWS_AS(missing.validate(), std::logic_error);
  MeasurementSet wrong = ms;
  wrong.y(0) = 0.5;
  CHECK_THROWS_AS(wrong.validate(), std::logic_error);
}

TEST_CASE("calibrate_tau") {
  const MatrixXd A = gen_sensing(150, 256, 21);
  const VectorXd x = gen_signal(256, 25, {}, 22).signal();
  const double sigma = 0.1 * mean_abs_measurement(A, x);
  const Seed noise = 23;

  const double tau0 = calibrate_tau(A, x, sigma, 0.0, noise);
  CHECK(tau0 > presaturation(A, x, sigma, noise).cwiseAbs().maxCoeff());
  const MeasurementSet none = measure(A, x, sigma, tau0, noise);
  CHECK(none.m1() + none.m2() == 0);

  const MeasurementSet some = measure(A, x, sigma, calibrate_tau(A, x, sigma, 0.15, noise), noise);
  CHECK(some.m1() + some.m2() == 23);

  double prev = tau0;
  for (int k = 1; k <= 50; ++k) {
    const double f = k / 150.0;
    const double tau = calibrate_tau(A, x, sigma, f, noise);
    CHECK(tau <= prev);
    prev = tau;
    const MeasurementSet ms = measure(A, x, sigma, tau, noise);
    CHECK(ms.m1() + ms.m2() == k);
  }
  CHECK_THROWS_AS(calibrate_tau(A, x, sigma, 1.0, noise), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_tau(A, x, sigma, -0.1, noise), std::invalid_argument);
}

TEST_CASE("synthesize follows the protocol") {
  const InstanceConfig cfg{};
  const Instance inst = synthesize(cfg, 99);
  const VectorXd x = inst.truth.signal();
  CHECK(inst.meas.sigma == doctest::Approx(0.1 * (inst.A * x).cwiseAbs().mean()).epsilon(1e-14));
  CHECK(inst.meas.m1() + inst.meas.m2() == 23);
  CHECK(inst.truth.sparsity() == 25);
  const Instance again = synthesize(cfg, 99);
  CHECK(again.meas.y == inst.meas.y);
  CHECK(again.A == inst.A);
}

TEST_CASE("basis names") {
  CHECK(basis_from_string(to_string(Basis::dct)) == Basis::dct);
  CHECK(basis_from_string(to_string(Basis::canonical)) == Basis::canonical);
  CHECK_THROWS_AS(basis_from_string("haar"), std::invalid_argument);
}
