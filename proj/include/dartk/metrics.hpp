#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dartk/error.hpp"

namespace dartk {

// All metrics take the clean reference x first and the estimate x-hat
// second; nrmse and snr are not symmetric in their arguments.

inline double rmse(const std::vector<double>& x,
                   const std::vector<double>& xhat) {
  require(x.size() == xhat.size() && !x.empty(), Errc::LengthMismatch,
          "rmse needs equal nonempty inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xhat[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(x.size()));
}

inline double nrmse(const std::vector<double>& x,
                    const std::vector<double>& xhat) {
  require(x.size() == xhat.size() && !x.empty(), Errc::LengthMismatch,
          "nrmse needs equal nonempty inputs");
  double lo = x[0], hi = x[0];
  for (double v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  require(hi > lo, Errc::ZeroRange,
          "nrmse undefined for a constant reference");
  return rmse(x, xhat) / (hi - lo);
}

inline double mae(const std::vector<double>& x,
                  const std::vector<double>& xhat) {
  require(x.size() == xhat.size() && !x.empty(), Errc::LengthMismatch,
          "mae needs equal nonempty inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - xhat[i]);
  return acc / static_cast<double>(x.size());
}

inline double pearson(const std::vector<double>& x,
                      const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, Errc::LengthMismatch,
          "pearson needs equal inputs of length >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  require(sxx > 0.0 && syy > 0.0, Errc::ConstantInput,
          "pearson undefined when either input is constant");
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

// Global single-window form with population statistics; dynamic range L = 2
// for signals normalized to [-1, 1].
inline double ssim(const std::vector<double>& x,
                   const std::vector<double>& xhat, double dynamic_range = 2.0) {
  require(x.size() == xhat.size() && x.size() >= 2, Errc::LengthMismatch,
          "ssim needs equal inputs of length >= 2");
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += xhat[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = xhat[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  vx /= n;
  vy /= n;
  cov /= n;
  return ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

inline double snr_db(const std::vector<double>& x,
                     const std::vector<double>& xhat) {
  require(x.size() == xhat.size() && !x.empty(), Errc::LengthMismatch,
          "snr needs equal nonempty inputs");
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sig += x[i] * x[i];
    const double d = x[i] - xhat[i];
    err += d * d;
  }
  require(sig > 0.0, Errc::ZeroSignal, "snr undefined for a zero reference");
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sig / err);
}

inline double snr_gain_db(const std::vector<double>& clean,
                          const std::vector<double>& noisy,
                          const std::vector<double>& denoised) {
  return snr_db(clean, denoised) - snr_db(clean, noisy);
}

inline double cosine(const std::vector<double>& x,
                     const std::vector<double>& xhat) {
  require(x.size() == xhat.size() && !x.empty(), Errc::LengthMismatch,
          "cosine needs equal nonempty inputs");
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * xhat[i];
    nx += x[i] * x[i];
    ny += xhat[i] * xhat[i];
  }
  require(nx > 0.0 && ny > 0.0, Errc::ZeroVector,
          "cosine undefined for a zero vector");
  return dot / (std::sqrt(nx) * std::sqrt(ny));
}

// ---------------------------------------------------------------------------

inline constexpr double kSnrCapDb = 120.0;

struct MetricReport {
  double rmse = 0.0;
  double nrmse = 0.0;
  double mae = 0.0;
  double pearson_r = 0.0;
  double ssim = 0.0;
  double cosine = 0.0;
  double snr_clean_vs_denoised_db = 0.0;
  double snr_gain_db = 0.0;
  bool nrmse_defined = true;
  bool pearson_defined = true;
  bool cosine_defined = true;
  bool snr_defined = true;
  bool snr_infinite = false;
};

// Per-segment metrics over flattened (C x T) vectors in normalized units.
inline MetricReport compute_metrics(const std::vector<double>& clean,
                                    const std::vector<double>& noisy,
                                    const std::vector<double>& denoised) {
  MetricReport r;
  r.rmse = rmse(clean, denoised);
  r.mae = mae(clean, denoised);
  r.ssim = ssim(clean, denoised);
  try {
    r.nrmse = nrmse(clean, denoised);
  } catch (const Error&) {
    r.nrmse_defined = false;
  }
  try {
    r.pearson_r = pearson(clean, denoised);
  } catch (const Error&) {
    r.pearson_defined = false;
  }
  try {
    r.cosine = cosine(clean, denoised);
  } catch (const Error&) {
    r.cosine_defined = false;
  }
  try {
    const double s_den = snr_db(clean, denoised);
    const double s_noi = snr_db(clean, noisy);
    if (std::isinf(s_den) || std::isinf(s_noi)) {
      r.snr_infinite = true;
      r.snr_clean_vs_denoised_db =
          std::isinf(s_den) ? kSnrCapDb : s_den;
      r.snr_gain_db = r.snr_clean_vs_denoised_db -
                      (std::isinf(s_noi) ? kSnrCapDb : s_noi);
    } else {
      r.snr_clean_vs_denoised_db = s_den;
      r.snr_gain_db = s_den - s_noi;
    }
  } catch (const Error&) {
    r.snr_defined = false;
  }
  return r;
}

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
  std::size_t n_excluded = 0;
  bool available = false;
};

struct AggregateReport {
  MetricSummary rmse, nrmse, mae, pearson_r, ssim, cosine, snr_db, snr_gain_db;
};

namespace detail {

inline MetricSummary summarize(const std::vector<double>& v,
                               std::size_t n_excluded) {
  MetricSummary s;
  s.n = v.size();
  s.n_excluded = n_excluded;
  if (v.empty()) return s;
  s.available = true;
  double acc = 0.0;
  for (double x : v) acc += x;
  s.mean = acc / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) {
      const double d = x - s.mean;
      ss += d * d;
    }
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace detail

// Mean and sample SD per metric; degenerate-flagged entries are excluded per
// metric, infinite SNR entries enter capped at kSnrCapDb.
inline AggregateReport aggregate(const std::vector<MetricReport>& reports) {
  require(!reports.empty(), Errc::Empty, "aggregate needs at least one report");
  AggregateReport agg;
  std::vector<double> v;
  auto fill = [&](auto selector, auto defined,
                  MetricSummary& out) {
    v.clear();
    std::size_t excluded = 0;
    for (const auto& r : reports) {
      if (defined(r))
        v.push_back(selector(r));
      else
        ++excluded;
    }
    out = detail::summarize(v, excluded);
  };
  auto yes = [](const MetricReport&) { return true; };
  fill([](const MetricReport& r) { return r.rmse; }, yes, agg.rmse);
  fill([](const MetricReport& r) { return r.mae; }, yes, agg.mae);
  fill([](const MetricReport& r) { return r.ssim; }, yes, agg.ssim);
  fill([](const MetricReport& r) { return r.nrmse; },
       [](const MetricReport& r) { return r.nrmse_defined; }, agg.nrmse);
  fill([](const MetricReport& r) { return r.pearson_r; },
       [](const MetricReport& r) { return r.pearson_defined; },
       agg.pearson_r);
  fill([](const MetricReport& r) { return r.cosine; },
       [](const MetricReport& r) { return r.cosine_defined; }, agg.cosine);
  fill(
      [](const MetricReport& r) {
        return std::min(r.snr_clean_vs_denoised_db, kSnrCapDb);
      },
      [](const MetricReport& r) { return r.snr_defined; }, agg.snr_db);
  fill(
      [](const MetricReport& r) {
        return std::min(r.snr_gain_db, kSnrCapDb);
      },
      [](const MetricReport& r) { return r.snr_defined; }, agg.snr_gain_db);
  return agg;
}

}  // namespace dartk
