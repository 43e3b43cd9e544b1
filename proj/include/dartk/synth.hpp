#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "dartk/error.hpp"
#include "dartk/recording.hpp"
#include "dartk/rng.hpp"

namespace dartk {

struct GaParams {
  double tr_s = 2.0;
  std::size_t slices_per_tr = 30;
  double amplitude_ratio = 20.0;  // GA peak over EEG RMS
  std::size_t harmonic_count = 8;
};

struct BcgParams {
  double heart_rate_bpm = 65.0;
  double rate_jitter = 0.05;      // fractional SD of the beat interval
  double amplitude_ratio = 3.0;   // BCG peak over EEG RMS
  double template_width_s = 0.05;
  double per_channel_gain_spread = 0.3;
};

struct EegBand {
  double f_low = 0.0;
  double f_high = 0.0;
  double power = 0.0;
};

struct EegParams {
  std::vector<EegBand> band_powers = {
      {1.0, 4.0, 1.0},   // delta
      {4.0, 8.0, 0.6},   // theta
      {8.0, 12.0, 0.8},  // alpha
      {12.0, 30.0, 0.3}  // beta
  };
  double rms_uV = 10.0;
};

struct SynthConfig {
  std::size_t n_channels = 4;
  double duration_s = 30.0;
  double sampling_rate = 250.0;
  std::uint64_t seed = 42;
  GaParams ga;
  BcgParams bcg;
  EegParams eeg;
};

namespace synth_detail {

inline std::size_t sample_count(const SynthConfig& cfg) {
  return static_cast<std::size_t>(
      std::llround(cfg.duration_s * cfg.sampling_rate));
}

// Random-phase multisine on a fixed frequency grid; with many components the
// sum is effectively Gaussian band-limited noise.
inline void add_band(std::vector<double>& x, const EegBand& band,
                     double total_power, double fs, Rng& rng) {
  if (band.power <= 0.0 || total_power <= 0.0) return;
  const double width = band.f_high - band.f_low;
  const double duration = static_cast<double>(x.size()) / fs;
  const std::size_t m = std::min<std::size_t>(
      64, std::max<std::size_t>(1, static_cast<std::size_t>(width * duration)));
  const double amp = std::sqrt(2.0 * (band.power / total_power) /
                               static_cast<double>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const double f =
        band.f_low + (static_cast<double>(j) + 0.5) * width /
                         static_cast<double>(m);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    std::complex<double> z(std::cos(phase), std::sin(phase));
    const double wstep = 2.0 * std::numbers::pi * f / fs;
    const std::complex<double> rot(std::cos(wstep), std::sin(wstep));
    for (double& v : x) {
      v += amp * z.imag();
      z *= rot;
    }
  }
}

inline double global_rms(const Recording& rec) {
  if (rec.data.empty()) return 0.0;
  double acc = 0.0;
  for (double v : rec.data) acc += v * v;
  return std::sqrt(acc / static_cast<double>(rec.data.size()));
}

}  // namespace synth_detail

// Band-shaped pseudo-EEG, each channel scaled to exactly rms_uV.
inline Recording generate_clean(const SynthConfig& cfg) {
  require(cfg.duration_s > 0 && cfg.sampling_rate > 0 && cfg.n_channels > 0,
          Errc::InvalidConfig, "synth needs positive duration, rate, channels");
  double total_power = 0.0;
  for (const auto& b : cfg.eeg.band_powers) {
    require(b.power >= 0.0, Errc::InvalidBand, "band power must be >= 0");
    require(0.0 < b.f_low && b.f_low < b.f_high &&
                b.f_high < cfg.sampling_rate / 2.0,
            Errc::InvalidBand,
            "band must satisfy 0 < f_low < f_high < fs/2");
    total_power += b.power;
  }

  Recording rec;
  rec.n_channels = cfg.n_channels;
  rec.n_samples = synth_detail::sample_count(cfg);
  rec.sampling_rate = cfg.sampling_rate;
  for (std::size_t c = 0; c < cfg.n_channels; ++c)
    rec.channel_labels.push_back("Syn" + std::to_string(c + 1));
  rec.data.assign(rec.n_channels * rec.n_samples, 0.0);

  Rng eeg_rng = Rng(cfg.seed).fork(1);
  for (std::size_t c = 0; c < cfg.n_channels; ++c) {
    Rng ch_rng = eeg_rng.fork(c);
    std::vector<double> x(rec.n_samples, 0.0);
    for (const auto& b : cfg.eeg.band_powers)
      synth_detail::add_band(x, b, total_power, cfg.sampling_rate, ch_rng);
    double acc = 0.0;
    for (double v : x) acc += v * v;
    const double rms = std::sqrt(acc / static_cast<double>(x.size()));
    const double scale = rms > 0.0 ? cfg.eeg.rms_uV / rms : 0.0;
    double* dst = rec.channel(c);
    for (std::size_t t = 0; t < rec.n_samples; ++t) dst[t] = x[t] * scale;
  }
  return rec;
}

// Artifact-only render scaled against a reference EEG RMS, markers included:
// a harmonic comb at the slice frequency plus a sawtooth transient at each TR
// onset (identical on all channels), and cardiac-locked Mexican-hat pulses
// with per-channel gains at jittered beat times.
inline Recording render_artifacts(const SynthConfig& cfg, double rms_ref) {
  Recording art;
  art.n_channels = cfg.n_channels;
  art.n_samples = synth_detail::sample_count(cfg);
  art.sampling_rate = cfg.sampling_rate;
  for (std::size_t c = 0; c < cfg.n_channels; ++c)
    art.channel_labels.push_back("Syn" + std::to_string(c + 1));
  art.data.assign(art.n_channels * art.n_samples, 0.0);
  const double fs = cfg.sampling_rate;
  const std::size_t n = art.n_samples;

  // Gradient artifact.
  const std::size_t n_tr = static_cast<std::size_t>(
      std::floor(cfg.duration_s / cfg.ga.tr_s + 1e-9));
  for (std::size_t i = 0; i < n_tr; ++i) {
    const std::size_t pos = static_cast<std::size_t>(
        std::llround(static_cast<double>(i) * cfg.ga.tr_s * fs));
    if (pos < n)
      art.markers.push_back(
          {MarkerKind::VolumeTrigger, pos, "synthetic TR onset"});
  }
  if (cfg.ga.amplitude_ratio > 0.0 && rms_ref > 0.0 && n > 0) {
    require(cfg.ga.tr_s > 0 && cfg.ga.slices_per_tr >= 1, Errc::InvalidConfig,
            "GA needs tr_s > 0 and at least one slice per TR");
    std::vector<double> ga(n, 0.0);
    const double f_slice =
        static_cast<double>(cfg.ga.slices_per_tr) / cfg.ga.tr_s;
    for (std::size_t k = 1; k <= cfg.ga.harmonic_count; ++k) {
      const double w = 2.0 * std::numbers::pi * f_slice *
                       static_cast<double>(k) / fs;
      std::complex<double> z(1.0, 0.0);
      const std::complex<double> rot(std::cos(w), std::sin(w));
      const double a = 1.0 / static_cast<double>(k);
      for (std::size_t t = 0; t < n; ++t) {
        ga[t] += a * z.imag();
        z *= rot;
      }
    }
    const std::size_t ramp =
        std::max<std::size_t>(1, static_cast<std::size_t>(0.05 * fs));
    for (std::size_t i = 0; i < n_tr; ++i) {
      const std::size_t pos = static_cast<std::size_t>(
          std::llround(static_cast<double>(i) * cfg.ga.tr_s * fs));
      for (std::size_t t = pos; t < std::min(n, pos + ramp); ++t)
        ga[t] += 1.5 * (1.0 - static_cast<double>(t - pos) /
                                  static_cast<double>(ramp));
    }
    double peak = 0.0;
    for (double v : ga) peak = std::max(peak, std::abs(v));
    const double scale =
        peak > 0.0 ? cfg.ga.amplitude_ratio * rms_ref / peak : 0.0;
    for (std::size_t c = 0; c < cfg.n_channels; ++c) {
      double* dst = art.channel(c);
      for (std::size_t t = 0; t < n; ++t) dst[t] += ga[t] * scale;
    }
  }

  // Ballistocardiogram.
  require(cfg.bcg.heart_rate_bpm > 20.0 && cfg.bcg.heart_rate_bpm < 250.0,
          Errc::InvalidConfig, "heart rate must lie in (20, 250) bpm");
  Rng bcg_rng = Rng(cfg.seed).fork(2);
  Rng beat_rng = bcg_rng.fork(0);
  Rng gain_rng = bcg_rng.fork(1);
  const double mean_iv = 60.0 / cfg.bcg.heart_rate_bpm;
  std::vector<double> beats;
  double tc = 0.5 * mean_iv;
  while (tc < cfg.duration_s) {
    beats.push_back(tc);
    const double iv =
        mean_iv + cfg.bcg.rate_jitter * mean_iv * beat_rng.normal();
    tc += std::max(iv, 0.3 * mean_iv);
  }
  std::vector<double> gains(cfg.n_channels);
  for (std::size_t c = 0; c < cfg.n_channels; ++c)
    gains[c] = 1.0 + cfg.bcg.per_channel_gain_spread * gain_rng.normal();

  for (double b : beats) {
    const std::size_t pos =
        static_cast<std::size_t>(std::llround(b * fs));
    if (pos < n)
      art.markers.push_back(
          {MarkerKind::CardiacPeak, pos, "synthetic cardiac peak"});
  }
  if (cfg.bcg.amplitude_ratio > 0.0 && rms_ref > 0.0 && n > 0) {
    const double sigma = cfg.bcg.template_width_s * fs;
    std::vector<double> bcg(cfg.n_channels * n, 0.0);
    for (double b : beats) {
      const double center = b * fs;
      const std::ptrdiff_t t0 = static_cast<std::ptrdiff_t>(
          std::floor(center - 5.0 * sigma));
      const std::ptrdiff_t t1 =
          static_cast<std::ptrdiff_t>(std::ceil(center + 5.0 * sigma));
      for (std::ptrdiff_t t = std::max<std::ptrdiff_t>(0, t0);
           t <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1,
                                         t1);
           ++t) {
        const double u = (static_cast<double>(t) - center) / sigma;
        const double w = (1.0 - u * u) * std::exp(-0.5 * u * u);
        for (std::size_t c = 0; c < cfg.n_channels; ++c)
          bcg[c * n + static_cast<std::size_t>(t)] += gains[c] * w;
      }
    }
    double peak = 0.0;
    for (double v : bcg) peak = std::max(peak, std::abs(v));
    const double scale =
        peak > 0.0 ? cfg.bcg.amplitude_ratio * rms_ref / peak : 0.0;
    for (std::size_t i = 0; i < bcg.size(); ++i) art.data[i] += bcg[i] * scale;
  }

  sort_markers(art);
  return art;
}

inline Recording add_artifacts(const Recording& clean,
                               const SynthConfig& cfg) {
  require(clean.sampling_rate == cfg.sampling_rate, Errc::RateMismatch,
          "clean recording rate differs from synth config");
  require(clean.n_channels == cfg.n_channels &&
              clean.n_samples == synth_detail::sample_count(cfg),
          Errc::ShapeMismatch, "clean recording shape differs from config");
  const Recording art = render_artifacts(cfg, synth_detail::global_rms(clean));
  Recording out = clean;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += art.data[i];
  out.markers = art.markers;
  return out;
}

}  // namespace dartk
