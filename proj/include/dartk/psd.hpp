#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "dartk/error.hpp"

namespace dartk {

// In-place iterative radix-2 FFT; falls back to a direct DFT for lengths
// that are not powers of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if ((n & (n - 1)) != 0) {
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        const double w = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(n);
        acc += a[t] * std::complex<double>(std::cos(w), std::sin(w));
      }
      out[k] = acc;
    }
    a = std::move(out);
    return;
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

struct PsdEstimate {
  std::vector<double> frequencies;
  std::vector<double> power;  // density, units^2 / Hz
  std::size_t nperseg = 0;
  double overlap = 0.0;

  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < power.size(); ++i)
      if (power[i] > power[best]) best = i;
    return best;
  }

  // Rectangle-rule integral of the density over frequency.
  double integrated_power() const {
    if (frequencies.size() < 2) return 0.0;
    const double df = frequencies[1] - frequencies[0];
    double acc = 0.0;
    for (double p : power) acc += p;
    return acc * df;
  }

  double band_power(double f_low, double f_high) const {
    if (frequencies.size() < 2) return 0.0;
    const double df = frequencies[1] - frequencies[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < frequencies.size(); ++i)
      if (frequencies[i] >= f_low && frequencies[i] <= f_high)
        acc += power[i];
    return acc * df;
  }
};

// Welch's method with Hamming windows: averaged one-sided periodograms with
// density normalization 1/(fs * sum(w^2)), so the integral over frequency
// approximates the signal's mean square power.
inline PsdEstimate welch_psd(const std::vector<double>& x, double fs,
                             std::size_t nperseg = 256,
                             double overlap = 0.5) {
  require(nperseg >= 2, Errc::InvalidConfig, "welch needs nperseg >= 2");
  require(overlap >= 0.0 && overlap < 1.0, Errc::InvalidConfig,
          "welch overlap must lie in [0, 1)");
  require(x.size() >= nperseg, Errc::TooShort,
          "signal of " + std::to_string(x.size()) +
              " samples is shorter than nperseg " + std::to_string(nperseg));

  std::vector<double> w(nperseg);
  double wss = 0.0;
  for (std::size_t i = 0; i < nperseg; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                  static_cast<double>(i) /
                                  static_cast<double>(nperseg - 1));
    wss += w[i] * w[i];
  }

  const std::size_t hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::lround(static_cast<double>(nperseg) * (1.0 - overlap))));
  const std::size_t n_bins = nperseg / 2 + 1;
  std::vector<double> acc(n_bins, 0.0);
  std::size_t n_segs = 0;
  std::vector<std::complex<double>> buf(nperseg);
  for (std::size_t start = 0; start + nperseg <= x.size(); start += hop) {
    for (std::size_t i = 0; i < nperseg; ++i)
      buf[i] = std::complex<double>(x[start + i] * w[i], 0.0);
    fft(buf);
    for (std::size_t k = 0; k < n_bins; ++k) {
      double p = std::norm(buf[k]) / (fs * wss);
      if (k != 0 && !(nperseg % 2 == 0 && k == n_bins - 1)) p *= 2.0;
      acc[k] += p;
    }
    ++n_segs;
  }

  PsdEstimate est;
  est.nperseg = nperseg;
  est.overlap = overlap;
  est.frequencies.resize(n_bins);
  est.power.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    est.frequencies[k] =
        static_cast<double>(k) * fs / static_cast<double>(nperseg);
    est.power[k] = acc[k] / static_cast<double>(n_segs);
  }
  return est;
}

}  // namespace dartk
