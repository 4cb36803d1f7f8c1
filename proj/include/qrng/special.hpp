#pragma once

namespace qrng::special {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x). Series for
/// x < a + 1, Lentz continued fraction otherwise.
double gamma_q(double a, double x);

/// Upper-tail probability of a chi-square statistic with `dof` degrees of
/// freedom.
inline double chi_square_upper_tail(double statistic, double dof) {
  return gamma_q(0.5 * dof, 0.5 * statistic);
}

}  // namespace qrng::special
