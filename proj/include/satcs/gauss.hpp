#pragma once

// Standard normal primitives evaluated in the log domain so that tails far
// beyond the underflow point of 1 - Phi(z) stay finite and accurate.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <type_traits>

namespace satcs {

enum class Tail { upper, lower };

namespace gauss_detail {

// |z| at which the log-tail switches from erfc to the Mills-ratio continued
// fraction. Both paths agree to ~1e-15 relative here.
inline constexpr double tail_seam = 8.0;
inline constexpr int cf_terms = 80;

template <typename Scalar>
void require_finite(Scalar z, const char* what) {
  if (!std::isfinite(z)) throw std::domain_error(std::string(what) + ": non-finite argument");
}

// Denominator of Laplace's continued fraction, x + 1/(x + 2/(x + 3/(x + ...))),
// which equals phi(x) / (1 - Phi(x)) for x > 0.
template <typename Scalar>
Scalar mills_cf(Scalar x) {
  Scalar t = x;
  for (int k = cf_terms; k >= 1; --k) t = x + Scalar(k) / t;
  return t;
}

template <typename Scalar>
Scalar log_pdf(Scalar z) {
  const Scalar half_log_two_pi = Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  return -Scalar(0.5) * z * z - half_log_two_pi;
}

}  // namespace gauss_detail

/// phi(z), the standard normal density.
template <typename Scalar>
Scalar norm_pdf(Scalar z) {
  static_assert(std::is_floating_point_v<Scalar>);
  gauss_detail::require_finite(z, "norm_pdf");
  return std::exp(gauss_detail::log_pdf(z));
}

/// log Phi(z). Uses erfc for z > -8 and the continued-fraction tail beyond.
template <typename Scalar>
Scalar log_norm_cdf(Scalar z) {
  static_assert(std::is_floating_point_v<Scalar>);
  gauss_detail::require_finite(z, "log_norm_cdf");
  const Scalar inv_sqrt2 = Scalar(1) / std::numbers::sqrt2_v<Scalar>;
  if (z > Scalar(0)) return std::log1p(-Scalar(0.5) * std::erfc(z * inv_sqrt2));
  if (z > -Scalar(gauss_detail::tail_seam)) return std::log(Scalar(0.5) * std::erfc(-z * inv_sqrt2));
  return gauss_detail::log_pdf(z) - std::log(gauss_detail::mills_cf(-z));
}

/// log(1 - Phi(z)); shares the log_norm_cdf code path through symmetry.
template <typename Scalar>
Scalar log_norm_sf(Scalar z) {
  return log_norm_cdf(-z);
}

/// Inverse Mills ratio: phi(z)/(1-Phi(z)) for the upper tail, phi(z)/Phi(z)
/// for the lower tail.
template <typename Scalar>
Scalar inverse_mills(Scalar z, Tail tail) {
  static_assert(std::is_floating_point_v<Scalar>);
  gauss_detail::require_finite(z, "inverse_mills");
  if (tail == Tail::lower) z = -z;
  if (z >= Scalar(gauss_detail::tail_seam)) return gauss_detail::mills_cf(z);
  return std::exp(gauss_detail::log_pdf(z) - log_norm_sf(z));
}

/// Standard normal loss function E[(Z - u)^+] = phi(u) - u (1 - Phi(u)).
/// Its non-negativity is what makes the saturated log-likelihood terms convex.
template <typename Scalar>
Scalar normal_loss(Scalar u) {
  return norm_pdf(u) - u * std::exp(log_norm_sf(u));
}

template <typename Scalar>
struct StdGaussEval {
  Scalar z;
  Scalar pdf;
  Scalar log_cdf;
  Scalar log_sf;
  Scalar mills_pos;  // phi / (1 - Phi)
  Scalar mills_neg;  // phi / Phi
};

template <typename Scalar>
StdGaussEval<Scalar> std_gauss_eval(Scalar z) {
  return {z,
          norm_pdf(z),
          log_norm_cdf(z),
          log_norm_sf(z),
          inverse_mills(z, Tail::upper),
          inverse_mills(z, Tail::lower)};
}

}  // namespace satcs
