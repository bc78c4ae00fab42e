#pragma once

// Student-t machinery for the paired comparison of strategies.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "uncertal/errors.hpp"

namespace uncertal {

namespace detail {

/// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= kEps) return h;
  }
  throw NumericalError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw InputError("incomplete beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(T <= t) for Student's t with `dof` degrees of freedom.
inline double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw InputError("student_t_cdf: degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

/// Inverse CDF by bisection on student_t_cdf; p in (0, 1).
inline double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("student_t_quantile: p must lie in (0, 1)");
  if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
  if (p == 0.5) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, dof) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("student_t_quantile: bracket overflow");
  }
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (student_t_cdf(mid, dof) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Two-sided critical value t such that P(|T| > t) = alpha.
inline double t_critical(double alpha, double dof) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("t_critical: alpha must lie in (0, 1)");
  return student_t_quantile(1.0 - alpha / 2.0, dof);
}

enum class Decision { win, tie, loss };

inline std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::win: return "win";
    case Decision::tie: return "tie";
    case Decision::loss: return "loss";
  }
  return "?";
}

struct PairedTTest {
  double mean_difference = 0.0;
  double t_statistic = 0.0;  // +/-inf for zero-variance nonzero differences
  double critical = 0.0;
  Decision decision = Decision::tie;
};

/// Two-sided paired t-test on d = a - b. "win" means a is significantly larger.
inline PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b,
                                 double alpha) {
  if (a.size() != b.size()) throw InputError("paired_t_test: samples differ in length");
  if (a.size() < 2) throw PreconditionError("paired_t_test: need at least two pairs");
  const auto k = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= k;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = (a[i] - b[i]) - mean;
    ss += r * r;
  }
  PairedTTest out;
  out.mean_difference = mean;
  out.critical = t_critical(alpha, k - 1.0);
  if (ss == 0.0) {
    if (mean == 0.0) return out;
    out.t_statistic = mean > 0 ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
    out.decision = mean > 0 ? Decision::win : Decision::loss;
    return out;
  }
  const double sd = std::sqrt(ss / (k - 1.0));
  out.t_statistic = mean / (sd / std::sqrt(k));
  if (std::abs(out.t_statistic) > out.critical)
    out.decision = mean > 0 ? Decision::win : Decision::loss;
  return out;
}

}  // namespace uncertal
