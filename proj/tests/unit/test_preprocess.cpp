#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dartk/fir.hpp"
#include "dartk/preprocess.hpp"
#include "dartk/recording.hpp"
#include "dartk/resample.hpp"
#include "dartk/rng.hpp"
#include "temp_dir.hpp"

using dartk::Errc;
using dartk::Error;
using dartk::Recording;

namespace {

Recording sine_recording(double fs, double duration_s, double f,
                         std::size_t n_channels = 1) {
  Recording r;
  r.n_channels = n_channels;
  r.n_samples = static_cast<std::size_t>(std::llround(fs * duration_s));
  r.sampling_rate = fs;
  for (std::size_t c = 0; c < n_channels; ++c)
    r.channel_labels.push_back("C" + std::to_string(c + 1));
  r.data.resize(r.n_channels * r.n_samples);
  for (std::size_t c = 0; c < n_channels; ++c)
    for (std::size_t t = 0; t < r.n_samples; ++t)
      r.at(c, t) = std::sin(2.0 * std::numbers::pi * f *
                            static_cast<double>(t) / fs);
  return r;
}

std::vector<double> bandlimited_noise(std::size_t n, double fs, dartk::Rng& rng) {
  std::vector<double> x(n, 0.0);
  for (int k = 0; k < 12; ++k) {
    const double f = rng.uniform(5.0, 30.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < n; ++t)
      x[t] += std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) /
                           fs +
                       phase);
  }
  return x;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Ratio, ReducesExactRates) {
  auto r = dartk::reduce_ratio(500.0, 250.0);
  EXPECT_EQ(r.p, 1u);
  EXPECT_EQ(r.q, 2u);
  r = dartk::reduce_ratio(5000.0, 250.0);
  EXPECT_EQ(r.p, 1u);
  EXPECT_EQ(r.q, 20u);
  r = dartk::reduce_ratio(250.0, 250.0);
  EXPECT_EQ(r.p, 1u);
  EXPECT_EQ(r.q, 1u);
  r = dartk::reduce_ratio(1000.0, 333.0);
  EXPECT_EQ(r.p, 333u);
  EXPECT_EQ(r.q, 1000u);
}

TEST(Ratio, IrrationalRatioRejected) {
  try {
    dartk::reduce_ratio(12345.6789, 250.0);
    FAIL() << "expected IrrationalRatio";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IrrationalRatio);
  }
}

TEST(Resample, IdentityAtTargetRate) {
  Recording r = sine_recording(250.0, 2.0, 10.0);
  r.markers.push_back({dartk::MarkerKind::VolumeTrigger, 100, "t"});
  Recording out = dartk::resample(r, 250.0);
  EXPECT_EQ(out, r);
}

TEST(Resample, LengthFollowsCeilFormula) {
  Recording r = sine_recording(500.0, 2.0, 10.0);
  ASSERT_EQ(r.n_samples, 1000u);
  Recording out = dartk::resample(r, 250.0);
  EXPECT_EQ(out.n_samples, 500u);
  EXPECT_DOUBLE_EQ(out.sampling_rate, 250.0);
}

TEST(Resample, PureToneSurvivesTwentyFoldDecimation) {
  Recording r = sine_recording(5000.0, 10.0, 10.0);
  Recording out = dartk::resample(r, 250.0);
  ASSERT_EQ(out.n_samples, 2500u);
  // Compare with the analytically sampled tone away from the edges.
  const std::size_t trim = 100;
  std::vector<double> got, want;
  for (std::size_t t = trim; t < out.n_samples - trim; ++t) {
    got.push_back(out.at(0, t));
    want.push_back(std::sin(2.0 * std::numbers::pi * 10.0 *
                            static_cast<double>(t) / 250.0));
  }
  EXPECT_GT(correlation(got, want), 0.999);
}

TEST(Resample, MarkersRescaleWithRatio) {
  Recording r = sine_recording(500.0, 2.0, 10.0);
  r.markers.push_back({dartk::MarkerKind::VolumeTrigger, 501, "t"});
  Recording out = dartk::resample(r, 250.0);
  ASSERT_EQ(out.markers.size(), 1u);
  EXPECT_EQ(out.markers[0].position, 251u);  // round(501/2)
}

TEST(Resample, UpsamplingRejected) {
  Recording r = sine_recording(250.0, 1.0, 10.0);
  try {
    dartk::resample(r, 500.0);
    FAIL() << "expected UpsamplingUnsupported";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UpsamplingUnsupported);
  }
}

TEST(Bandpass, DcLandsInStopBand) {
  const auto taps = dartk::design_bandpass(1.0, 40.0, 250.0, 825);
  EXPECT_LT(dartk::frequency_response_mag(taps, 0.0, 250.0), 1e-3);
  std::vector<double> ones(2000, 1.0);
  auto y = dartk::filter_zero_phase(ones, taps);
  double peak = 0.0;
  for (std::size_t t = 900; t < 1100; ++t) peak = std::max(peak, std::abs(y[t]));
  EXPECT_LT(peak, 1e-3);
}

TEST(Bandpass, PassBandToneKeepsAmplitude) {
  const double fs = 250.0;
  const auto taps = dartk::design_bandpass(1.0, 40.0, fs, 825);
  Recording r = sine_recording(fs, 10.0, 10.0);
  std::vector<double> x(r.data);
  auto y = dartk::filter_zero_phase(x, taps);
  // Projection onto the tone over whole cycles, away from the edges.
  const std::size_t start = 825, len = 800;  // 32 cycles of 10 Hz
  double as = 0, ac = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const double ph = 2.0 * std::numbers::pi * 10.0 *
                      static_cast<double>(start + i) / fs;
    as += y[start + i] * std::sin(ph);
    ac += y[start + i] * std::cos(ph);
  }
  const double amp =
      2.0 * std::hypot(as, ac) / static_cast<double>(len);
  const double db = 20.0 * std::log10(amp);
  EXPECT_LT(std::abs(db), 0.5);
}

TEST(Bandpass, ImpulseReproducesTaps) {
  const auto taps = dartk::design_bandpass(1.0, 40.0, 250.0, 825);
  std::vector<double> x(2001, 0.0);
  x[1000] = 1.0;
  auto y = dartk::filter_zero_phase(x, taps);
  for (std::size_t k = 0; k < taps.size(); ++k)
    EXPECT_NEAR(y[1000 - 412 + k], taps[k], 1e-15);
}

TEST(Bandpass, ZeroPhaseCrossCorrelationPeaksAtLagZero) {
  dartk::Rng rng(301);
  const double fs = 250.0;
  const auto taps = dartk::design_bandpass(1.0, 40.0, fs, 825);
  for (int trial = 0; trial < 3; ++trial) {
    auto x = bandlimited_noise(3000, fs, rng);
    auto y = dartk::filter_zero_phase(x, taps);
    double best = -1e300;
    int best_lag = -999;
    for (int lag = -20; lag <= 20; ++lag) {
      double acc = 0.0;
      for (std::size_t t = 900; t < 2100; ++t)
        acc += x[t] * y[static_cast<std::size_t>(static_cast<int>(t) + lag)];
      if (acc > best) {
        best = acc;
        best_lag = lag;
      }
    }
    EXPECT_EQ(best_lag, 0) << "trial " << trial;
  }
}

TEST(Bandpass, FilterIsLinear) {
  dartk::Rng rng(302);
  const auto taps = dartk::design_bandpass(1.0, 40.0, 250.0, 825);
  auto x = bandlimited_noise(1200, 250.0, rng);
  auto y = bandlimited_noise(1200, 250.0, rng);
  const double a = 2.5, b = -1.25;
  std::vector<double> mix(1200);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
  auto fx = dartk::filter_zero_phase(x, taps);
  auto fy = dartk::filter_zero_phase(y, taps);
  auto fmix = dartk::filter_zero_phase(mix, taps);
  double norm = 0.0;
  for (double v : fmix) norm = std::max(norm, std::abs(v));
  for (std::size_t i = 0; i < mix.size(); ++i)
    EXPECT_NEAR(fmix[i], a * fx[i] + b * fy[i], 1e-10 * norm);
}

TEST(Bandpass, ShortSignalRejected) {
  const auto taps = dartk::design_bandpass(1.0, 40.0, 250.0, 825);
  std::vector<double> x(824, 0.0);
  try {
    dartk::filter_zero_phase(x, taps);
    FAIL() << "expected TooShort";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooShort);
  }
}

TEST(Bandpass, ForwardBackwardSquaresResponse) {
  const double fs = 250.0;
  const auto taps = dartk::design_bandpass(1.0, 40.0, fs, 825);
  Recording r = sine_recording(fs, 10.0, 20.0);
  auto once = dartk::filter_zero_phase(r.data, taps, false);
  auto twice = dartk::filter_zero_phase(r.data, taps, true);
  // In the passband the single-pass gain is ~1, so twice ~ once.
  const double h = dartk::frequency_response_mag(taps, 20.0, fs);
  double ratio = 0.0;
  for (std::size_t t = 1200; t < 1300; ++t)
    if (std::abs(once[t]) > 0.5) {
      ratio = twice[t] / once[t];
      break;
    }
  EXPECT_NEAR(ratio, h, 0.01);
}

TEST(Segmentation, CountFormula) {
  EXPECT_EQ(dartk::segment_count(1000, 500, 250), 3u);
  EXPECT_EQ(dartk::segment_count(499, 500, 250), 0u);
  EXPECT_EQ(dartk::segment_count(500, 500, 250), 1u);
}

TEST(Segmentation, PairsAlignAndNormalize) {
  dartk::Rng rng(303);
  Recording noisy = sine_recording(250.0, 4.0, 7.0, 3);
  Recording clean = noisy;
  for (auto& v : noisy.data) v += rng.uniform(-5.0, 5.0);
  auto pairs = dartk::segment(noisy, clean, 500, 250, "S01");
  ASSERT_EQ(pairs.size(), 3u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(pairs[i].noisy.source_offset, i * 250);
    EXPECT_EQ(pairs[i].clean.source_offset, i * 250);
    EXPECT_EQ(pairs[i].noisy.subject_id, "S01");
    double peak = 0.0;
    for (double v : pairs[i].noisy.data) peak = std::max(peak, std::abs(v));
    EXPECT_NEAR(peak, 1.0, 1e-12);
  }
}

TEST(Segmentation, MismatchedInputsRejected) {
  Recording a = sine_recording(250.0, 4.0, 7.0);
  Recording b = sine_recording(250.0, 3.0, 7.0);
  EXPECT_THROW(dartk::segment(a, b, 500, 250), Error);
}

TEST(Segmentation, StridesReconstructSource) {
  dartk::Rng rng(304);
  Recording noisy = sine_recording(250.0, 5.0, 9.0, 2);
  for (auto& v : noisy.data) v += rng.uniform(-2.0, 2.0);
  Recording clean = noisy;
  auto pairs = dartk::segment(noisy, clean, 500, 250, "S");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& seg = pairs[i].noisy;
    for (std::size_t c = 0; c < seg.n_channels; ++c)
      for (std::size_t t = 0; t < 250; ++t)
        EXPECT_NEAR(seg.channel(c)[t] * seg.norm_scale,
                    noisy.at(c, i * 250 + t), 1e-9);
  }
}

TEST(Normalize, HandExamples) {
  std::vector<double> w = {-3.0, 1.0};
  const double scale = dartk::normalize(w);
  EXPECT_DOUBLE_EQ(scale, 3.0);
  EXPECT_DOUBLE_EQ(w[0], -1.0);
  EXPECT_DOUBLE_EQ(w[1], 1.0 / 3.0);

  std::vector<double> z = {0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(dartk::normalize(z), 1.0);
  for (double v : z) EXPECT_DOUBLE_EQ(v, 0.0);

  std::vector<double> big = {200.0, -100.0};
  EXPECT_DOUBLE_EQ(dartk::normalize(big), 200.0);
  EXPECT_DOUBLE_EQ(big[0], 1.0);
}

TEST(Normalize, IdempotentOnUnitPeak) {
  std::vector<double> w = {-1.0, 0.25, 0.5};
  const auto before = w;
  EXPECT_DOUBLE_EQ(dartk::normalize(w), 1.0);
  EXPECT_EQ(w, before);
}

TEST(SegmentStore, RoundTrip) {
  testutil::TempDir tmp;
  dartk::Rng rng(305);
  Recording noisy = sine_recording(250.0, 4.0, 11.0, 2);
  for (auto& v : noisy.data) v += rng.uniform(-2.0, 2.0);
  Recording clean = sine_recording(250.0, 4.0, 11.0, 2);

  dartk::SegmentStore store;
  store.n_channels = 2;
  store.subjects.push_back(
      {"S01", "synthetic", dartk::segment(noisy, clean, 500, 250, "S01")});
  dartk::save_segment_store(store, tmp.file("segs"));
  dartk::SegmentStore back = dartk::load_segment_store(tmp.file("segs"));
  ASSERT_EQ(back.subjects.size(), 1u);
  ASSERT_EQ(back.subjects[0].pairs.size(), store.subjects[0].pairs.size());
  for (std::size_t i = 0; i < back.subjects[0].pairs.size(); ++i) {
    const auto& a = store.subjects[0].pairs[i];
    const auto& b = back.subjects[0].pairs[i];
    EXPECT_EQ(a.noisy.data, b.noisy.data);
    EXPECT_EQ(a.clean.data, b.clean.data);
    EXPECT_EQ(a.noisy.source_offset, b.noisy.source_offset);
    EXPECT_DOUBLE_EQ(a.noisy.norm_scale, b.noisy.norm_scale);
    EXPECT_DOUBLE_EQ(a.clean.norm_scale, b.clean.norm_scale);
    EXPECT_EQ(b.noisy.subject_id, "S01");
  }
}
