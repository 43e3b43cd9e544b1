#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "dartk/error.hpp"
#include "dartk/rng.hpp"

namespace dartk {

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Acklam's rational approximation with one Halley refinement step; accurate
// to ~1e-15 over (0, 1).
inline double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, Errc::BadArgument,
          "normal quantile needs p in (0, 1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::numbers::sqrt2 * std::sqrt(std::numbers::pi) *
                   std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz's method).
inline double betacf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double tol = 1e-12;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < tol) return h;
  }
  fail(Errc::NoConvergence, "incomplete beta continued fraction stalled");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  require(a > 0 && b > 0, Errc::BadArgument, "beta parameters must be > 0");
  require(x >= 0.0 && x <= 1.0, Errc::BadArgument, "x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p for Student's t with dof degrees of freedom.
inline double student_t_two_sided_p(double t, double dof) {
  require(dof > 0, Errc::BadArgument, "dof must be positive");
  const double x = dof / (dof + t * t);
  return incomplete_beta(dof / 2.0, 0.5, x);
}

struct PairedTestResult {
  double t_statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;
  double cohens_d = 0.0;
  std::size_t n = 0;
};

inline PairedTestResult paired_ttest(const std::vector<double>& a,
                                     const std::vector<double>& b) {
  require(a.size() == b.size(), Errc::LengthMismatch,
          "paired test needs equal-length samples");
  const std::size_t n = a.size();
  require(n >= 2, Errc::TooFew, "paired test needs n >= 2");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) {
    const double e = v - mean;
    ss += e * e;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  require(sd > 0.0, Errc::ConstantDifferences,
          "paired differences are constant; t undefined");
  PairedTestResult r;
  r.n = n;
  r.dof = static_cast<double>(n - 1);
  r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.cohens_d = mean / sd;
  r.p_value = student_t_two_sided_p(r.t_statistic, r.dof);
  return r;
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk via Royston's AS R94 approximation.

struct ShapiroWilkResult {
  double w = 0.0;
  double p_value = 0.0;
};

inline ShapiroWilkResult shapiro_wilk(std::vector<double> x) {
  const std::size_t n = x.size();
  require(n >= 3, Errc::TooFew, "shapiro-wilk needs n >= 3");
  require(n <= 5000, Errc::TooMany, "shapiro-wilk supports n <= 5000");
  std::sort(x.begin(), x.end());
  require(x.back() > x.front(), Errc::ConstantInput,
          "shapiro-wilk undefined for constant samples");

  const double an = static_cast<double>(n);
  const std::size_t nn2 = n / 2;
  std::vector<double> w(nn2);
  if (n == 3) {
    w[0] = std::numbers::sqrt2 / 2.0;
  } else {
    std::vector<double> m(nn2);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < nn2; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) /
                             (an + 0.25));
      summ2 += 2.0 * m[i] * m[i];
    }
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    auto poly5 = [&](const double* c) {
      return ((((c[5] * rsn + c[4]) * rsn + c[3]) * rsn + c[2]) * rsn +
              c[1]) *
                 rsn +
             c[0];
    };
    static constexpr double c1[6] = {0.0,       0.221157,  -0.147981,
                                     -2.071190, 4.434685, -2.706056};
    static constexpr double c2[6] = {0.0,       0.042981,  -0.293762,
                                     -1.752461, 5.682633, -3.582633};
    const double w1 = poly5(c1) - m[0] / ssumm2;
    std::size_t start;
    double phi;
    if (n > 5) {
      const double w2 = poly5(c2) - m[1] / ssumm2;
      start = 2;
      phi = (summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
            (1.0 - 2.0 * w1 * w1 - 2.0 * w2 * w2);
      w[1] = w2;
    } else {
      start = 1;
      phi = (summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * w1 * w1);
    }
    w[0] = w1;
    const double sphi = std::sqrt(phi);
    for (std::size_t i = start; i < nn2; ++i) w[i] = -m[i] / sphi;
  }

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= an;
  double ssq = 0.0;
  for (double v : x) {
    const double d = v - mean;
    ssq += d * d;
  }
  double b = 0.0;
  for (std::size_t i = 0; i < nn2; ++i) b += w[i] * (x[n - 1 - i] - x[i]);

  ShapiroWilkResult r;
  r.w = std::min(1.0, (b * b) / ssq);

  if (n == 3) {
    constexpr double pi6 = 6.0 / std::numbers::pi;
    constexpr double stqr = 1.047197551196598;  // asin(sqrt(3/4))
    r.p_value = pi6 * (std::asin(std::sqrt(r.w)) - stqr);
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
    return r;
  }
  const double lw = std::log1p(-r.w);
  double mu, sigma, z;
  if (n <= 11) {
    const double g = -2.273 + 0.459 * an;
    mu = 0.5440 - 0.39978 * an + 0.025054 * an * an -
         0.0006714 * an * an * an;
    sigma = std::exp(1.3822 - 0.77857 * an + 0.062767 * an * an -
                     0.0020322 * an * an * an);
    if (lw >= g) {
      r.p_value = 1e-99;
      return r;
    }
    z = (-std::log(g - lw) - mu) / sigma;
  } else {
    const double ln = std::log(an);
    mu = -1.5861 - 0.31082 * ln - 0.083751 * ln * ln +
         0.0038915 * ln * ln * ln;
    sigma = std::exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln * ln);
    z = (lw - mu) / sigma;
  }
  r.p_value = 1.0 - normal_cdf(z);
  return r;
}

// ---------------------------------------------------------------------------

// Linear-interpolation quantile on a copy of the data.
inline double quantile(std::vector<double> v, double q) {
  require(!v.empty(), Errc::Empty, "quantile of empty sample");
  require(q >= 0.0 && q <= 1.0, Errc::BadArgument, "q must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - std::floor(h);
  return v[lo] + frac * (v[hi] - v[lo]);
}

inline double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

struct BootstrapCi {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::size_t n_resamples = 1000;
  std::uint64_t seed = 0;
};

// Percentile bootstrap with per-resample seeded substreams.
inline BootstrapCi bootstrap_ci(
    const std::vector<double>& x, std::uint64_t seed,
    std::size_t n_resamples = 1000, double level = 0.95,
    const std::function<double(const std::vector<double>&)>& statistic =
        mean_of) {
  require(x.size() >= 2, Errc::TooFew, "bootstrap needs n >= 2");
  require(n_resamples >= 1, Errc::InvalidConfig,
          "bootstrap needs at least one resample");
  require(level > 0.0 && level < 1.0, Errc::InvalidConfig,
          "bootstrap level must lie in (0, 1)");
  Rng root(seed);
  std::vector<double> stats(n_resamples);
  std::vector<double> sample(x.size());
  for (std::size_t r = 0; r < n_resamples; ++r) {
    Rng rng = root.fork(r);
    for (std::size_t i = 0; i < x.size(); ++i) sample[i] = x[rng.below(x.size())];
    stats[r] = statistic(sample);
  }
  BootstrapCi ci;
  ci.level = level;
  ci.n_resamples = n_resamples;
  ci.seed = seed;
  const double alpha = (1.0 - level) / 2.0;
  ci.lower = quantile(stats, alpha);
  ci.upper = quantile(stats, 1.0 - alpha);
  return ci;
}

}  // namespace dartk
