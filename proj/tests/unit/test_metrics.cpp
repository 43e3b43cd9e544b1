#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dartk/metrics.hpp"
#include "dartk/psd.hpp"
#include "dartk/rng.hpp"

using dartk::Errc;
using dartk::Error;

namespace {

// Deliberately naive references for the oracle-equivalence property.
namespace naive {

double mean(const std::vector<double>& v) {
  double acc = 0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double rmse(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    dx += (x[i] - mx) * (x[i] - mx);
    dy += (y[i] - my) * (y[i] - my);
  }
  return num / (std::sqrt(dx) * std::sqrt(dy));
}

double ssim(const std::vector<double>& x, const std::vector<double>& y) {
  const double c1 = 0.0004, c2 = 0.0036;  // (0.01*2)^2, (0.03*2)^2
  const double mx = mean(x), my = mean(y);
  const double n = static_cast<double>(x.size());
  double vx = 0, vy = 0, cov = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cov += (x[i] - mx) * (y[i] - my);
  }
  vx /= n;
  vy /= n;
  cov /= n;
  return ((2 * mx * my + c1) * (2 * cov + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

}  // namespace naive

std::vector<double> random_vec(std::size_t n, dartk::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST(ErrorMetrics, HandValues) {
  std::vector<double> x = {0.0, 2.0}, xhat = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(dartk::rmse(x, xhat), 1.0);
  EXPECT_DOUBLE_EQ(dartk::nrmse(x, xhat), 0.5);
  EXPECT_DOUBLE_EQ(dartk::mae(x, xhat), 1.0);
  EXPECT_DOUBLE_EQ(dartk::rmse(x, x), 0.0);
  EXPECT_DOUBLE_EQ(dartk::nrmse(x, x), 0.0);
  EXPECT_DOUBLE_EQ(dartk::mae(x, x), 0.0);
}

TEST(ErrorMetrics, ConstantReferenceHasNoRange) {
  std::vector<double> x = {2.0, 2.0, 2.0}, xhat = {1.0, 2.0, 3.0};
  try {
    dartk::nrmse(x, xhat);
    FAIL() << "expected ZeroRange";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroRange);
  }
}

TEST(Pearson, AffineAndReversal) {
  std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * v + 3.0);
  EXPECT_NEAR(dartk::pearson(x, y), 1.0, 1e-12);
  std::vector<double> a = {1.0, 2.0, 3.0}, b = {3.0, 2.0, 1.0};
  EXPECT_NEAR(dartk::pearson(a, b), -1.0, 1e-12);
  std::vector<double> p = {1.0, 0.0, 1.0, 0.0}, q = {0.0, 1.0, 1.0, 0.0};
  EXPECT_NEAR(dartk::pearson(p, q), 0.0, 1e-12);
}

TEST(Pearson, ConstantInputRejected) {
  std::vector<double> x = {1.0, 1.0, 1.0}, y = {1.0, 2.0, 3.0};
  try {
    dartk::pearson(x, y);
    FAIL() << "expected ConstantInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConstantInput);
  }
}

TEST(Ssim, IdentityIsOne) {
  dartk::Rng rng(501);
  auto x = random_vec(256, rng);
  EXPECT_NEAR(dartk::ssim(x, x), 1.0, 1e-12);
}

TEST(Ssim, SignFlipOfZeroMeanSignal) {
  dartk::Rng rng(502);
  auto x = random_vec(1000, rng);
  const double mx = naive::mean(x);
  for (auto& v : x) v -= mx;
  std::vector<double> y;
  for (double v : x) y.push_back(-v);
  double var = 0;
  for (double v : x) var += v * v;
  var /= static_cast<double>(x.size());
  const double c2 = 0.0036;
  const double expected = (-2.0 * var + c2) / (2.0 * var + c2);
  EXPECT_NEAR(dartk::ssim(x, y), expected, 1e-9);
  EXPECT_LT(dartk::ssim(x, y), 0.0);
}

TEST(Ssim, ZeroEstimateMatchesBruteForce) {
  dartk::Rng rng(503);
  auto x = random_vec(512, rng);
  const double mx = naive::mean(x);
  for (auto& v : x) v -= mx;
  std::vector<double> zero(x.size(), 0.0);
  EXPECT_NEAR(dartk::ssim(x, zero), naive::ssim(x, zero), 1e-12);
}

TEST(Snr, HandValueAndEdgeCases) {
  std::vector<double> x = {1.0, 1.0, 1.0, 1.0}, xhat = {1.0, 1.0, 1.0, 0.0};
  EXPECT_NEAR(dartk::snr_db(x, xhat), 10.0 * std::log10(4.0), 1e-12);
  EXPECT_TRUE(std::isinf(dartk::snr_db(x, x)));
  std::vector<double> noisy = {0.5, 1.5, 0.5, 1.5};
  EXPECT_DOUBLE_EQ(dartk::snr_gain_db(x, noisy, noisy), 0.0);
  std::vector<double> zero(4, 0.0);
  try {
    dartk::snr_db(zero, xhat);
    FAIL() << "expected ZeroSignal";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroSignal);
  }
}

TEST(Cosine, HandValues) {
  std::vector<double> x = {1.0, 2.0, -1.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v);
  EXPECT_NEAR(dartk::cosine(x, y), 1.0, 1e-12);
  EXPECT_NEAR(dartk::cosine({1.0, 0.0}, {0.0, 1.0}), 0.0, 1e-12);
  EXPECT_NEAR(dartk::cosine({1.0, 1.0}, {1.0, -1.0}), 0.0, 1e-12);
  try {
    dartk::cosine({0.0, 0.0}, {1.0, 1.0});
    FAIL() << "expected ZeroVector";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroVector);
  }
}

TEST(Metrics, MatchNaiveReferences) {
  dartk::Rng rng(504);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_vec(300, rng);
    auto y = random_vec(300, rng);
    EXPECT_NEAR(dartk::rmse(x, y), naive::rmse(x, y),
                1e-12 * naive::rmse(x, y));
    EXPECT_NEAR(dartk::pearson(x, y), naive::pearson(x, y), 1e-12);
    EXPECT_NEAR(dartk::ssim(x, y), naive::ssim(x, y), 1e-12);
  }
}

TEST(Metrics, SymmetryContracts) {
  dartk::Rng rng(505);
  auto x = random_vec(100, rng);
  auto y = random_vec(100, rng);
  EXPECT_DOUBLE_EQ(dartk::rmse(x, y), dartk::rmse(y, x));
  EXPECT_DOUBLE_EQ(dartk::mae(x, y), dartk::mae(y, x));
  EXPECT_DOUBLE_EQ(dartk::cosine(x, y), dartk::cosine(y, x));
  // Reference-dependent metrics are not symmetric.
  for (auto& v : y) v *= 0.2;
  EXPECT_NE(dartk::nrmse(x, y), dartk::nrmse(y, x));
  EXPECT_NE(dartk::snr_db(x, y), dartk::snr_db(y, x));
}

TEST(Aggregate, SingleReportHasZeroSd) {
  dartk::MetricReport r;
  r.rmse = 0.5;
  auto agg = dartk::aggregate({r});
  EXPECT_DOUBLE_EQ(agg.rmse.mean, 0.5);
  EXPECT_DOUBLE_EQ(agg.rmse.sd, 0.0);
  EXPECT_EQ(agg.rmse.n, 1u);
}

TEST(Aggregate, TwoReportsHandArithmetic) {
  dartk::MetricReport a, b;
  a.rmse = 0.01;
  b.rmse = 0.03;
  auto agg = dartk::aggregate({a, b});
  EXPECT_NEAR(agg.rmse.mean, 0.02, 1e-15);
  EXPECT_NEAR(agg.rmse.sd, 0.0141421356, 1e-9);
}

TEST(Aggregate, DegenerateEntriesExcluded) {
  dartk::MetricReport a, b;
  a.pearson_defined = false;
  b.pearson_defined = false;
  auto agg = dartk::aggregate({a, b});
  EXPECT_FALSE(agg.pearson_r.available);
  EXPECT_EQ(agg.pearson_r.n_excluded, 2u);
  EXPECT_TRUE(agg.rmse.available);
}

TEST(Aggregate, InfiniteSnrCapped) {
  std::vector<double> clean = {1.0, -1.0, 1.0, -1.0};
  std::vector<double> noisy = {2.0, 0.0, 2.0, 0.0};
  auto r = dartk::compute_metrics(clean, noisy, clean);  // perfect denoiser
  EXPECT_TRUE(r.snr_infinite);
  auto agg = dartk::aggregate({r});
  EXPECT_DOUBLE_EQ(agg.snr_db.mean, dartk::kSnrCapDb);
}

TEST(ComputeMetrics, PopulatesAllFields) {
  dartk::Rng rng(506);
  auto clean = random_vec(500, rng);
  auto noisy = clean;
  for (auto& v : noisy) v += rng.uniform(-0.5, 0.5);
  auto denoised = clean;
  for (auto& v : denoised) v += rng.uniform(-0.05, 0.05);
  auto r = dartk::compute_metrics(clean, noisy, denoised);
  EXPECT_GT(r.rmse, 0.0);
  EXPECT_GT(r.pearson_r, 0.9);
  EXPECT_GT(r.snr_gain_db, 0.0);
  EXPECT_TRUE(r.pearson_defined && r.cosine_defined && r.snr_defined);
  EXPECT_LE(std::abs(r.pearson_r), 1.0 + 1e-12);
  EXPECT_LE(std::abs(r.cosine), 1.0 + 1e-12);
  EXPECT_LE(r.ssim, 1.0 + 1e-12);
}

TEST(Welch, SinePeaksAtNearestBin) {
  const double fs = 250.0;
  std::vector<double> x(4096);
  for (std::size_t t = 0; t < x.size(); ++t)
    x[t] = std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(t) /
                    fs);
  auto psd = dartk::welch_psd(x, fs, 256, 0.5);
  const std::size_t peak = psd.argmax();
  // Bin spacing fs/256 ~ 0.977 Hz; 10 Hz lands nearest bin 10.
  EXPECT_EQ(peak, 10u);
  EXPECT_NEAR(psd.frequencies[peak], 10.0, fs / 256.0 / 2.0 + 1e-9);
}

TEST(Welch, WhiteNoiseSatisfiesParseval) {
  dartk::Rng rng(507);
  double ratio_acc = 0.0;
  const int trials = 100;
  for (int i = 0; i < trials; ++i) {
    std::vector<double> x(2048);
    double var = 0.0;
    for (auto& v : x) {
      v = rng.normal();
      var += v * v;
    }
    var /= static_cast<double>(x.size());
    auto psd = dartk::welch_psd(x, 250.0, 256, 0.5);
    ratio_acc += psd.integrated_power() / var;
  }
  EXPECT_NEAR(ratio_acc / trials, 1.0, 0.1);
}

TEST(Welch, ConstantSignalIsAllDc) {
  std::vector<double> x(1024, 3.0);
  auto psd = dartk::welch_psd(x, 250.0, 256, 0.5);
  EXPECT_EQ(psd.argmax(), 0u);
  // The symmetric Hamming window leaks ~3e-7 of the peak into integer bins,
  // so DC must dominate every other bin by at least 50 dB.
  for (std::size_t k = 3; k < psd.power.size(); ++k)
    EXPECT_LT(psd.power[k], 1e-5 * psd.power[0]);
}

TEST(Welch, ShortSignalRejected) {
  std::vector<double> x(100, 0.0);
  try {
    dartk::welch_psd(x, 250.0, 256, 0.5);
    FAIL() << "expected TooShort";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooShort);
  }
}

TEST(Fft, MatchesDirectDftOnNonPowerOfTwo) {
  dartk::Rng rng(508);
  std::vector<std::complex<double>> a(12);
  for (auto& v : a) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  auto b = a;
  dartk::fft(b);
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::complex<double> want(0.0, 0.0);
    for (std::size_t t = 0; t < a.size(); ++t) {
      const double w = -2.0 * std::numbers::pi * static_cast<double>(k * t) /
                       static_cast<double>(a.size());
      want += a[t] * std::complex<double>(std::cos(w), std::sin(w));
    }
    EXPECT_NEAR(std::abs(b[k] - want), 0.0, 1e-10);
  }
}

TEST(Fft, PowerOfTwoMatchesDirectDft) {
  dartk::Rng rng(509);
  std::vector<std::complex<double>> a(64);
  for (auto& v : a) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  auto b = a;
  dartk::fft(b);
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::complex<double> want(0.0, 0.0);
    for (std::size_t t = 0; t < a.size(); ++t) {
      const double w = -2.0 * std::numbers::pi * static_cast<double>(k * t) /
                       static_cast<double>(a.size());
      want += a[t] * std::complex<double>(std::cos(w), std::sin(w));
    }
    EXPECT_NEAR(std::abs(b[k] - want), 0.0, 1e-9);
  }
}
