#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dartk/error.hpp"
#include "dartk/parallel.hpp"
#include "dartk/psd.hpp"
#include "dartk/recording.hpp"
#include "dartk/rng.hpp"

namespace dartk {

// Epoch rows extracted around one marker kind for a single channel.
struct EpochMatrix {
  Eigen::MatrixXd epochs;            // n_epochs x epoch_len
  std::vector<std::size_t> starts;   // sample index of each row's first sample
  std::size_t epoch_len = 0;
};

inline std::size_t median_marker_gap(const Recording& rec, MarkerKind kind) {
  auto pos = marker_positions(rec, kind);
  require(pos.size() >= 2, Errc::TooFewMarkers,
          "need at least two markers to estimate an epoch length");
  std::vector<std::size_t> gaps;
  for (std::size_t i = 1; i < pos.size(); ++i)
    gaps.push_back(pos[i] - pos[i - 1]);
  std::nth_element(gaps.begin(), gaps.begin() + (gaps.size() - 1) / 2,
                   gaps.end());
  return gaps[(gaps.size() - 1) / 2];
}

namespace detail {

// Epoch placement is channel-independent: rows that would cross the recording
// bounds are dropped up front.
inline std::pair<std::vector<std::size_t>, std::size_t> epoch_starts(
    const Recording& rec, MarkerKind kind, std::size_t epoch_len,
    bool centered) {
  if (epoch_len == 0) epoch_len = median_marker_gap(rec, kind);
  require(epoch_len >= 2 && epoch_len <= rec.n_samples, Errc::InvalidConfig,
          "epoch length must fit the recording");
  std::vector<std::size_t> starts;
  for (std::size_t p : marker_positions(rec, kind)) {
    const std::size_t half = centered ? epoch_len / 2 : 0;
    if (p < half) continue;
    const std::size_t start = p - half;
    if (start + epoch_len > rec.n_samples) continue;
    starts.push_back(start);
  }
  return {starts, epoch_len};
}

inline EpochMatrix gather_epochs(const Recording& rec, std::size_t channel,
                                 const std::vector<std::size_t>& starts,
                                 std::size_t epoch_len) {
  EpochMatrix m;
  m.epoch_len = epoch_len;
  m.starts = starts;
  m.epochs.resize(static_cast<Eigen::Index>(starts.size()),
                  static_cast<Eigen::Index>(epoch_len));
  const double* x = rec.channel(channel);
  for (std::size_t r = 0; r < starts.size(); ++r)
    for (std::size_t t = 0; t < epoch_len; ++t)
      m.epochs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) =
          x[starts[r] + t];
  return m;
}

}  // namespace detail

// Epochs start at the marker (artifact onset) or are centered on it
// (pulse-shaped artifacts).
inline EpochMatrix extract_epochs(const Recording& rec, std::size_t channel,
                                  MarkerKind kind, std::size_t epoch_len,
                                  bool centered) {
  require(channel < rec.n_channels, Errc::MissingChannel,
          "epoch channel out of range");
  const auto [starts, len] =
      detail::epoch_starts(rec, kind, epoch_len, centered);
  return detail::gather_epochs(rec, channel, starts, len);
}

// Average artifact subtraction: each epoch loses the mean of up to `window`
// epochs ending at itself; samples outside epochs pass through.
inline Recording aas(const Recording& rec, std::size_t window = 25,
                     std::size_t epoch_len = 0) {
  require(window >= 1, Errc::InvalidConfig, "window must be positive");
  const auto pos = marker_positions(rec, MarkerKind::VolumeTrigger);
  require(pos.size() >= window, Errc::TooFewMarkers,
          std::to_string(pos.size()) + " volume triggers for a window of " +
              std::to_string(window));
  const auto placed =
      detail::epoch_starts(rec, MarkerKind::VolumeTrigger, epoch_len, false);
  Recording out = rec;
  parallel_blocks(rec.n_channels, [&](std::size_t c) {
    auto m = detail::gather_epochs(rec, c, placed.first, placed.second);
    const Eigen::Index n = m.epochs.rows();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m.epochs.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += m.epochs.row(i).transpose();
      if (i >= static_cast<Eigen::Index>(window))
        acc -= m.epochs.row(i - static_cast<Eigen::Index>(window)).transpose();
      const double used =
          static_cast<double>(std::min<Eigen::Index>(
              i + 1, static_cast<Eigen::Index>(window)));
      const Eigen::VectorXd corrected =
          m.epochs.row(i).transpose() - acc / used;
      double* y = out.channel(c);
      for (std::size_t t = 0; t < m.epoch_len; ++t)
        y[m.starts[static_cast<std::size_t>(i)] + t] =
            corrected(static_cast<Eigen::Index>(t));
    }
  });
  return out;
}

// Optimal basis set: per channel, fit [epoch mean, first n_basis-1 principal
// components of the demeaned epochs] to every epoch and subtract the fit.
inline Recording obs(const Recording& rec, std::size_t n_basis = 4,
                     std::size_t epoch_len = 0) {
  require(n_basis >= 1, Errc::InvalidConfig, "need at least one basis vector");
  const auto pos = marker_positions(rec, MarkerKind::CardiacPeak);
  const std::size_t need = std::max<std::size_t>(n_basis + 1, 10);
  require(pos.size() >= need, Errc::TooFewMarkers,
          std::to_string(pos.size()) + " cardiac peaks, need " +
              std::to_string(need));
  const auto placed =
      detail::epoch_starts(rec, MarkerKind::CardiacPeak, epoch_len, true);
  require(placed.first.size() >= n_basis && placed.second >= n_basis,
          Errc::RankDeficient, "more basis vectors than usable epochs");
  Recording out = rec;
  parallel_blocks(rec.n_channels, [&](std::size_t c) {
    auto m = detail::gather_epochs(rec, c, placed.first, placed.second);
    const Eigen::Index n = m.epochs.rows();
    const Eigen::VectorXd mu = m.epochs.colwise().mean();
    Eigen::MatrixXd demeaned = m.epochs.rowwise() - mu.transpose();
    Eigen::MatrixXd basis(m.epochs.cols(),
                          static_cast<Eigen::Index>(n_basis));
    basis.col(0) = mu;
    if (n_basis > 1) {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(demeaned, Eigen::ComputeThinV);
      basis.rightCols(static_cast<Eigen::Index>(n_basis - 1)) =
          svd.matrixV().leftCols(static_cast<Eigen::Index>(n_basis - 1));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd e = m.epochs.row(i).transpose();
      const Eigen::VectorXd fit = basis * qr.solve(e);
      double* y = out.channel(c);
      for (std::size_t t = 0; t < m.epoch_len; ++t)
        y[m.starts[static_cast<std::size_t>(i)] + t] =
            e(static_cast<Eigen::Index>(t)) - fit(static_cast<Eigen::Index>(t));
    }
  });
  return out;
}

namespace detail {

inline Eigen::MatrixXd channel_matrix(const Recording& rec) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rec.n_channels),
                    static_cast<Eigen::Index>(rec.n_samples));
  for (std::size_t c = 0; c < rec.n_channels; ++c)
    for (std::size_t t = 0; t < rec.n_samples; ++t)
      x(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) =
          rec.at(c, t);
  return x;
}

}  // namespace detail

// Channel-space PCA cleanup: drop the k largest-variance components.
inline Recording pca_denoise(const Recording& rec, std::size_t k = 3) {
  require(k >= 1 && k < rec.n_channels, Errc::InvalidK,
          "k must lie in [1, n_channels)");
  require(rec.n_samples >= 2, Errc::TooShort, "need at least two samples");
  Eigen::MatrixXd x = detail::channel_matrix(rec);
  const Eigen::VectorXd mean = x.rowwise().mean();
  x.colwise() -= mean;
  const Eigen::MatrixXd cov =
      x * x.transpose() / static_cast<double>(rec.n_samples - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // eigenvalues ascending: keep all but the top k
  const Eigen::Index keep =
      static_cast<Eigen::Index>(rec.n_channels - k);
  const Eigen::MatrixXd e = eig.eigenvectors().leftCols(keep);
  const Eigen::MatrixXd recon = e * (e.transpose() * x);
  Recording out = rec;
  for (std::size_t c = 0; c < rec.n_channels; ++c)
    for (std::size_t t = 0; t < rec.n_samples; ++t)
      out.channel(c)[t] =
          recon(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) +
          mean(static_cast<Eigen::Index>(c));
  return out;
}

struct UnmixingModel {
  Eigen::MatrixXd whitening;      // n_components x n_channels
  Eigen::MatrixXd unmixing;       // W in whitened space, n_components square
  Eigen::MatrixXd mixing;         // pseudo-inverse back to channels
  Eigen::VectorXd channel_means;  // removed before whitening
  std::vector<bool> mask;         // components flagged for removal
  bool converged = false;
  std::size_t iterations = 0;
};

namespace detail {

inline Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * w.transpose());
  const Eigen::VectorXd inv_sqrt =
      eig.eigenvalues().cwiseMax(1e-18).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() *
         eig.eigenvectors().transpose() * w;
}

}  // namespace detail

// Symmetric FastICA with a tanh contrast on whitened channels. A failure to
// converge is reported through the flag, not an exception.
inline UnmixingModel fastica(const Recording& rec, std::size_t n_components,
                             std::size_t max_iter = 500, double tol = 1e-6,
                             std::uint64_t seed = 42) {
  require(n_components >= 1 && n_components <= rec.n_channels, Errc::InvalidK,
          "n_components must lie in [1, n_channels]");
  require(rec.n_samples >= 2, Errc::TooShort, "need at least two samples");
  const auto n = static_cast<Eigen::Index>(n_components);
  const auto T = static_cast<double>(rec.n_samples);

  Eigen::MatrixXd x = detail::channel_matrix(rec);
  UnmixingModel model;
  model.channel_means = x.rowwise().mean();
  x.colwise() -= model.channel_means;

  const Eigen::MatrixXd cov = x * x.transpose() / (T - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd evals = eig.eigenvalues().tail(n);
  require(evals.minCoeff() > 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff()),
          Errc::RankDeficient, "covariance is rank deficient for whitening");
  model.whitening = evals.cwiseSqrt().cwiseInverse().asDiagonal() *
                    eig.eigenvectors().rightCols(n).transpose();
  const Eigen::MatrixXd z = model.whitening * x;

  Rng rng(seed);
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) w(i, j) = rng.normal();
  w = detail::symmetric_decorrelate(w);

  for (std::size_t it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd y = w * z;
    const Eigen::MatrixXd g = y.array().tanh().matrix();
    const Eigen::VectorXd gp_mean =
        (1.0 - g.array().square()).rowwise().mean();
    Eigen::MatrixXd w_new =
        g * z.transpose() / T - gp_mean.asDiagonal() * w;
    w_new = detail::symmetric_decorrelate(w_new);
    const double delta =
        ((w_new * w.transpose()).diagonal().cwiseAbs().array() - 1.0)
            .abs()
            .maxCoeff();
    w = w_new;
    model.iterations = it + 1;
    if (delta < tol) {
      model.converged = true;
      break;
    }
  }

  model.unmixing = w;
  const Eigen::MatrixXd u = w * model.whitening;
  model.mixing =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(u)
          .pseudoInverse();
  model.mask.assign(n_components, false);
  return model;
}

inline Eigen::MatrixXd ica_sources(const Recording& rec,
                                   const UnmixingModel& model) {
  Eigen::MatrixXd x = detail::channel_matrix(rec);
  x.colwise() -= model.channel_means;
  return model.unmixing * (model.whitening * x);
}

// Automatic artifact-component rule: heavy tails or a spectrum dominated by
// the slice frequency band and its harmonics.
struct SelectionRule {
  double kurtosis_threshold = 5.0;    // excess kurtosis
  double slice_hz = 0.0;              // 0 disables the spectral test
  double psd_fraction_threshold = 0.30;
  std::size_t n_harmonics = 3;        // harmonics checked beyond the fundamental
  double half_width_hz = 0.5;
};

inline std::vector<bool> select_components(const Recording& rec,
                                           const UnmixingModel& model,
                                           const SelectionRule& rule) {
  const Eigen::MatrixXd s = ica_sources(rec, model);
  std::vector<bool> mask(static_cast<std::size_t>(s.rows()), false);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const Eigen::VectorXd row = s.row(i).transpose();
    const double m = row.mean();
    const double var = (row.array() - m).square().mean();
    if (var > 0.0) {
      const double m4 = (row.array() - m).pow(4).mean();
      if (m4 / (var * var) - 3.0 > rule.kurtosis_threshold) {
        mask[static_cast<std::size_t>(i)] = true;
        continue;
      }
    }
    if (rule.slice_hz > 0.0 &&
        rec.n_samples >= static_cast<std::size_t>(256)) {
      std::vector<double> sig(row.data(), row.data() + row.size());
      const auto psd = welch_psd(sig, rec.sampling_rate);
      const double total = psd.integrated_power();
      if (total > 0.0) {
        double in_band = 0.0;
        for (std::size_t h = 1; h <= rule.n_harmonics + 1; ++h) {
          const double f = rule.slice_hz * static_cast<double>(h);
          in_band += psd.band_power(f - rule.half_width_hz,
                                    f + rule.half_width_hz);
        }
        if (in_band / total > rule.psd_fraction_threshold)
          mask[static_cast<std::size_t>(i)] = true;
      }
    }
  }
  return mask;
}

inline Recording ica_denoise(const Recording& rec, UnmixingModel& model,
                             const std::vector<bool>& mask) {
  require(mask.size() == static_cast<std::size_t>(model.unmixing.rows()),
          Errc::ShapeMismatch, "mask length must equal component count");
  Eigen::MatrixXd s = ica_sources(rec, model);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) s.row(static_cast<Eigen::Index>(i)).setZero();
  const Eigen::MatrixXd x = model.mixing * s;
  model.mask = mask;
  Recording out = rec;
  for (std::size_t c = 0; c < rec.n_channels; ++c)
    for (std::size_t t = 0; t < rec.n_samples; ++t)
      out.channel(c)[t] =
          x(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) +
          model.channel_means(static_cast<Eigen::Index>(c));
  return out;
}

inline Recording ica_denoise(const Recording& rec, UnmixingModel& model,
                             const SelectionRule& rule) {
  return ica_denoise(rec, model, select_components(rec, model, rule));
}

}  // namespace dartk
