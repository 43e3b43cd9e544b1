#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "dartk/error.hpp"
#include "dartk/parallel.hpp"
#include "dartk/recording.hpp"

namespace dartk {

struct FilterSpec {
  double f_low = 1.0;
  double f_high = 40.0;
  std::size_t n_taps = 825;
  bool forward_backward = false;
};

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Hamming-windowed ideal band-pass (difference of two sincs). Symmetric, so
// linear phase with integer group delay (n_taps-1)/2. Each low-pass prototype
// is normalized to unit DC gain before the difference, which cancels the DC
// response to rounding error instead of leaving the window's residual there.
inline std::vector<double> design_bandpass(double f_low, double f_high,
                                           double fs, std::size_t n_taps) {
  require(n_taps % 2 == 1, Errc::InvalidConfig,
          "band-pass tap count must be odd for integer group delay");
  require(f_low > 0 && f_low < f_high && f_high < fs / 2.0, Errc::InvalidBand,
          "band edges must satisfy 0 < f_low < f_high < fs/2");
  const double M = static_cast<double>(n_taps - 1) / 2.0;
  const auto lowpass = [&](double cutoff_hz) {
    const double w = cutoff_hz / fs;
    std::vector<double> h(n_taps);
    double dc = 0.0;
    for (std::size_t n = 0; n < n_taps; ++n) {
      const double m = static_cast<double>(n) - M;
      const double win =
          0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                 static_cast<double>(n) /
                                 static_cast<double>(n_taps - 1));
      h[n] = 2.0 * w * sinc(2.0 * w * m) * win;
      dc += h[n];
    }
    for (auto& v : h) v /= dc;
    return h;
  };
  const auto hi = lowpass(f_high);
  const auto lo = lowpass(f_low);
  std::vector<double> h(n_taps);
  for (std::size_t n = 0; n < n_taps; ++n) h[n] = hi[n] - lo[n];
  return h;
}

// Complex magnitude of the tap vector's frequency response at f (Hz).
inline double frequency_response_mag(const std::vector<double>& taps,
                                     double f, double fs) {
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const double w = 2.0 * std::numbers::pi * f * static_cast<double>(k) / fs;
    re += taps[k] * std::cos(w);
    im -= taps[k] * std::sin(w);
  }
  return std::hypot(re, im);
}

// One delay-compensated pass: y[t] = sum_k h[k] x[t + k - (n_taps-1)/2],
// zero-padded at the edges, output length preserved.
inline std::vector<double> filter_delay_compensated(
    const std::vector<double>& x, const std::vector<double>& taps) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t nt = static_cast<std::ptrdiff_t>(taps.size());
  const std::ptrdiff_t M = (nt - 1) / 2;
  std::vector<double> y(x.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const std::ptrdiff_t k0 = std::max<std::ptrdiff_t>(0, M - t);
    const std::ptrdiff_t k1 = std::min<std::ptrdiff_t>(nt, n - t + M);
    double acc = 0.0;
    const double* xs = x.data() + t - M;
    for (std::ptrdiff_t k = k0; k < k1; ++k) acc += taps[k] * xs[k];
    y[static_cast<std::size_t>(t)] = acc;
  }
  return y;
}

inline std::vector<double> filter_zero_phase(const std::vector<double>& x,
                                             const std::vector<double>& taps,
                                             bool forward_backward = false) {
  require(x.size() >= taps.size(), Errc::TooShort,
          "signal of " + std::to_string(x.size()) +
              " samples is shorter than the " + std::to_string(taps.size()) +
              "-tap filter");
  auto y = filter_delay_compensated(x, taps);
  if (forward_backward) {
    // Symmetric taps make the time-reversed pass identical to a second
    // delay-compensated pass; the magnitude response is squared.
    y = filter_delay_compensated(y, taps);
  }
  return y;
}

inline Recording bandpass_zero_phase(const Recording& rec,
                                     const FilterSpec& spec) {
  const auto taps =
      design_bandpass(spec.f_low, spec.f_high, rec.sampling_rate, spec.n_taps);
  require(rec.n_samples >= taps.size(), Errc::TooShort,
          "recording of " + std::to_string(rec.n_samples) +
              " samples is shorter than the filter");
  Recording out = rec;
  parallel_blocks(rec.n_channels, [&](std::size_t c) {
    std::vector<double> x(rec.channel(c), rec.channel(c) + rec.n_samples);
    auto y = filter_zero_phase(x, taps, spec.forward_backward);
    std::copy(y.begin(), y.end(), out.channel(c));
  });
  return out;
}

}  // namespace dartk
