#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "dartk/error.hpp"
#include "dartk/fir.hpp"
#include "dartk/parallel.hpp"
#include "dartk/recording.hpp"

namespace dartk {

struct Ratio {
  std::uint64_t p = 1;  // output samples per...
  std::uint64_t q = 1;  // ...input samples
};

// Best rational approximation of out_hz/in_hz by continued fractions with
// both terms bounded by 10000; ratios that cannot be matched exactly at that
// bound are rejected rather than silently approximated.
inline Ratio reduce_ratio(double in_hz, double out_hz) {
  require(in_hz > 0 && out_hz > 0, Errc::InvalidConfig,
          "sampling rates must be positive");
  const double target = out_hz / in_hz;
  constexpr std::uint64_t kBound = 10000;
  // Continued-fraction convergents p_k/q_k of `target`.
  double x = target;
  std::uint64_t p0 = 1, q0 = 0, p1 = 0, q1 = 1;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_f = std::floor(x);
    const std::uint64_t a = static_cast<std::uint64_t>(a_f);
    const std::uint64_t p2 = a * p0 + p1;
    const std::uint64_t q2 = a * q0 + q1;
    if (p2 > kBound || q2 > kBound) break;
    p1 = p0; q1 = q0; p0 = p2; q0 = q2;
    const double frac = x - a_f;
    if (frac < 1e-12) break;
    x = 1.0 / frac;
  }
  require(q0 != 0, Errc::IrrationalRatio, "no rational ratio within bounds");
  const double got = static_cast<double>(p0) / static_cast<double>(q0);
  require(std::abs(got - target) <= 1e-9 * target, Errc::IrrationalRatio,
          "rate ratio " + std::to_string(out_hz) + "/" +
              std::to_string(in_hz) +
              " has no exact fraction with terms <= 10000");
  return {p0, q0};
}

// Polyphase windowed-sinc resampling by the reduced rational factor p/q,
// anti-alias low-passed at half the lower of the two rates. Output length is
// ceil(n * p / q); markers rescale by p/q with rounding.
inline Recording resample(const Recording& rec, double target_hz) {
  validate(rec);
  require(rec.sampling_rate >= target_hz, Errc::UpsamplingUnsupported,
          "resample only lowers the rate: " +
              std::to_string(rec.sampling_rate) + " -> " +
              std::to_string(target_hz));
  const Ratio r = reduce_ratio(rec.sampling_rate, target_hz);
  if (r.p == r.q) {
    Recording out = rec;
    out.sampling_rate = target_hz;
    return out;
  }

  const double p = static_cast<double>(r.p), q = static_cast<double>(r.q);
  const std::size_t n_out = static_cast<std::size_t>(
      std::ceil(static_cast<double>(rec.n_samples) * p / q));

  // Kernel on the virtual p-upsampled grid (rate fs*p), cut off at the lower
  // Nyquist, 12 sinc zero crossings of half-width.
  const double fsu = rec.sampling_rate * p;
  const double fc = 0.5 * std::min(rec.sampling_rate, target_hz);
  const double w = fc / fsu;
  const std::size_t half =
      static_cast<std::size_t>(12 * std::max<std::uint64_t>(r.p, r.q));
  const std::size_t n_taps = 2 * half + 1;
  std::vector<double> h(n_taps);
  for (std::size_t k = 0; k < n_taps; ++k) {
    const double m =
        static_cast<double>(k) - static_cast<double>(half);
    const double win =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                               static_cast<double>(k) /
                               static_cast<double>(n_taps - 1));
    h[k] = 2.0 * w * sinc(2.0 * w * m) * win * p;
  }

  Recording out;
  out.n_channels = rec.n_channels;
  out.n_samples = n_out;
  out.sampling_rate = target_hz;
  out.channel_labels = rec.channel_labels;
  out.data.resize(out.n_channels * n_out);

  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(half);
  const std::ptrdiff_t P = static_cast<std::ptrdiff_t>(r.p);
  const std::ptrdiff_t Q = static_cast<std::ptrdiff_t>(r.q);
  const std::ptrdiff_t n_in = static_cast<std::ptrdiff_t>(rec.n_samples);
  parallel_blocks(rec.n_channels, [&](std::size_t c) {
    const double* x = rec.channel(c);
    double* y = out.channel(c);
    for (std::size_t m = 0; m < n_out; ++m) {
      const std::ptrdiff_t u = static_cast<std::ptrdiff_t>(m) * Q;
      std::ptrdiff_t n0 = (u - H + P - 1) / P;  // ceil((u-H)/p) for u-H >= 0
      if (u - H < 0) n0 = -((H - u) / P);
      std::ptrdiff_t n1 = (u + H) / P;  // floor
      n0 = std::max<std::ptrdiff_t>(n0, 0);
      n1 = std::min<std::ptrdiff_t>(n1, n_in - 1);
      double acc = 0.0;
      for (std::ptrdiff_t n = n0; n <= n1; ++n)
        acc += x[n] * h[static_cast<std::size_t>(u - n * P + H)];
      y[m] = acc;
    }
  });

  for (const auto& m : rec.markers) {
    Marker mk = m;
    const double pos = std::round(static_cast<double>(m.position) * p / q);
    mk.position = static_cast<std::size_t>(std::max(0.0, pos));
    if (mk.position >= n_out) mk.position = n_out == 0 ? 0 : n_out - 1;
    out.markers.push_back(mk);
  }
  return out;
}

}  // namespace dartk
