#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "dartk/error.hpp"
#include "dartk/parallel.hpp"
#include "dartk/tensor.hpp"

namespace dartk {

// Reverse-mode tape. Each op records its output tensor and a closure that
// scatters the output gradient back to the inputs. backward() zeroes the
// gradients of every recorded output before replaying, so intermediates are
// clean per call while leaf gradients accumulate across calls.
template <typename T>
class Tape {
public:
  void record(Tensor<T> out, std::function<void()> fn) {
    entries_.push_back({std::move(out), std::move(fn)});
  }

  void backward(Tensor<T>& loss) {
    require(loss.size() == 1, Errc::NonScalarLoss,
            "backward() needs a scalar loss, got shape " + shape_string(loss));
    for (auto& e : entries_) e.out.zero_grad();
    loss.grad()[0] = T(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->fn();
  }

  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }

private:
  struct Entry {
    Tensor<T> out;
    std::function<void()> fn;
  };
  std::vector<Entry> entries_;
};

namespace ops {

namespace detail {

template <typename T>
using Rows = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowsView = Eigen::Map<Rows<T>, Eigen::Unaligned, Eigen::OuterStride<>>;
template <typename T>
using ConstRowsView =
    Eigen::Map<const Rows<T>, Eigen::Unaligned, Eigen::OuterStride<>>;
// One kernel tap of a [Co,Ci,K] weight block, viewed as a [Co,Ci] matrix.
template <typename T>
using TapView = Eigen::Map<const Rows<T>, Eigen::Unaligned,
                           Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

// Output columns [t0, t0+len) that tap k reaches; they read input columns
// shifted by off = k - padding.
struct TapSpan {
  Eigen::Index off, t0, len;
};

inline TapSpan tap_span(std::size_t k, std::ptrdiff_t padding, std::size_t tin,
                        std::size_t tout) {
  const auto off = static_cast<Eigen::Index>(k) - padding;
  const Eigen::Index t0 = off < 0 ? -off : 0;
  const Eigen::Index t1 = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(tout), static_cast<Eigen::Index>(tin) - off);
  return {off, t0, t1 > t0 ? t1 - t0 : 0};
}

}  // namespace detail

// y = x (*) w + b. x:[N,Ci,Tin], w:[Co,Ci,K], b:[Co], stride 1, zero padding.
template <typename T>
Tensor<T> conv1d(Tape<T>& tape, Tensor<T> x, Tensor<T> w, Tensor<T> b,
                 std::size_t padding) {
  require(x.rank() == 3, Errc::ShapeMismatch,
          "conv1d input must be [N,C,T], got " + shape_string(x));
  require(w.rank() == 3, Errc::ShapeMismatch,
          "conv1d weight must be [Co,Ci,K], got " + shape_string(w));
  require(b.rank() == 1 && b.dim(0) == w.dim(0), Errc::ShapeMismatch,
          "conv1d bias must be [Co]");
  require(x.dim(1) == w.dim(1), Errc::ShapeMismatch,
          "conv1d channel mismatch: input " + shape_string(x) + " weight " +
              shape_string(w));
  const std::size_t N = x.dim(0), Ci = x.dim(1), Tin = x.dim(2);
  const std::size_t Co = w.dim(0), K = w.dim(2);
  require(Tin + 2 * padding >= K, Errc::ShapeMismatch,
          "conv1d window longer than padded input");
  const std::size_t Tout = Tin + 2 * padding - K + 1;

  Tensor<T> y({N, Co, Tout});
  if (x.requires_grad() || w.requires_grad() || b.requires_grad())
    y.set_requires_grad(true);
  const T* xp = x.data();
  const T* wp = w.data();
  const T* bp = b.data();
  T* yp = y.data();
  const std::ptrdiff_t P = static_cast<std::ptrdiff_t>(padding);
  const auto eCi = static_cast<Eigen::Index>(Ci);
  const auto eCo = static_cast<Eigen::Index>(Co);
  const auto eTin = static_cast<Eigen::Index>(Tin);
  const auto eTout = static_cast<Eigen::Index>(Tout);
  const Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic> tap_stride(
      eCi * static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));

  parallel_blocks(N, [&](std::size_t n) {
    detail::ConstRowsView<T> X(xp + n * Ci * Tin, eCi, eTin,
                               Eigen::OuterStride<>(eTin));
    detail::RowsView<T> Y(yp + n * Co * Tout, eCo, eTout,
                          Eigen::OuterStride<>(eTout));
    Y.colwise() = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bp, eCo);
    for (std::size_t k = 0; k < K; ++k) {
      const auto s = detail::tap_span(k, P, Tin, Tout);
      if (s.len == 0) continue;
      detail::TapView<T> Wk(wp + k, eCo, eCi, tap_stride);
      Y.middleCols(s.t0, s.len).noalias() +=
          Wk * X.middleCols(s.t0 + s.off, s.len);
    }
  });

  tape.record(y, [x, w, b, y, padding]() mutable {
    const std::size_t N = x.dim(0), Ci = x.dim(1), Tin = x.dim(2);
    const std::size_t Co = w.dim(0), K = w.dim(2);
    const std::size_t Tout = y.dim(2);
    const std::ptrdiff_t P = static_cast<std::ptrdiff_t>(padding);
    const T* gy = y.grad().data();
    const T* xp = x.data();
    const T* wp = w.data();
    const auto eCi = static_cast<Eigen::Index>(Ci);
    const auto eCo = static_cast<Eigen::Index>(Co);
    const auto eTin = static_cast<Eigen::Index>(Tin);
    const auto eTout = static_cast<Eigen::Index>(Tout);
    const Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic> tap_stride(
        eCi * static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));

    if (x.requires_grad()) {
      T* gx = x.grad_data();
      parallel_blocks(N, [&](std::size_t n) {
        detail::ConstRowsView<T> GY(gy + n * Co * Tout, eCo, eTout,
                                    Eigen::OuterStride<>(eTout));
        detail::RowsView<T> GX(gx + n * Ci * Tin, eCi, eTin,
                               Eigen::OuterStride<>(eTin));
        for (std::size_t k = 0; k < K; ++k) {
          const auto s = detail::tap_span(k, P, Tin, Tout);
          if (s.len == 0) continue;
          detail::TapView<T> Wk(wp + k, eCo, eCi, tap_stride);
          GX.middleCols(s.t0 + s.off, s.len).noalias() +=
              Wk.transpose() * GY.middleCols(s.t0, s.len);
        }
      });
    }

    if (w.requires_grad()) {
      T* gw = w.grad_data();
      parallel_blocks(K, [&](std::size_t k) {
        const auto s = detail::tap_span(k, P, Tin, Tout);
        if (s.len == 0) return;
        detail::Rows<T> acc = detail::Rows<T>::Zero(eCo, eCi);
        for (std::size_t n = 0; n < N; ++n) {
          detail::ConstRowsView<T> GY(gy + n * Co * Tout, eCo, eTout,
                                      Eigen::OuterStride<>(eTout));
          detail::ConstRowsView<T> X(xp + n * Ci * Tin, eCi, eTin,
                                     Eigen::OuterStride<>(eTin));
          acc.noalias() += GY.middleCols(s.t0, s.len) *
                           X.middleCols(s.t0 + s.off, s.len).transpose();
        }
        for (std::size_t co = 0; co < Co; ++co)
          for (std::size_t ci = 0; ci < Ci; ++ci)
            gw[(co * Ci + ci) * K + k] += acc(co, ci);
      });
    }

    if (b.requires_grad()) {
      T* gb = b.grad_data();
      for (std::size_t co = 0; co < Co; ++co) {
        double acc = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
          const T* gr = gy + (n * Co + co) * Tout;
          for (std::size_t t = 0; t < Tout; ++t)
            acc += static_cast<double>(gr[t]);
        }
        gb[co] += static_cast<T>(acc);
      }
    }
  });
  return y;
}

template <typename T>
Tensor<T> relu(Tape<T>& tape, Tensor<T> x) {
  Tensor<T> y(x.shape());
  if (x.requires_grad()) y.set_requires_grad(true);
  const T* xp = x.data();
  T* yp = y.data();
  for (std::size_t i = 0; i < x.size(); ++i)
    yp[i] = xp[i] > T(0) ? xp[i] : T(0);
  tape.record(y, [x, y]() mutable {
    if (!x.requires_grad()) return;
    const T* xp = x.data();
    const T* gy = y.grad().data();
    T* gx = x.grad_data();
    for (std::size_t i = 0; i < x.size(); ++i)
      if (xp[i] > T(0)) gx[i] += gy[i];
  });
  return y;
}

template <typename T>
Tensor<T> tanh(Tape<T>& tape, Tensor<T> x) {
  Tensor<T> y(x.shape());
  if (x.requires_grad()) y.set_requires_grad(true);
  const T* xp = x.data();
  T* yp = y.data();
  for (std::size_t i = 0; i < x.size(); ++i)
    yp[i] = std::tanh(xp[i]);
  tape.record(y, [x, y]() mutable {
    if (!x.requires_grad()) return;
    const T* yp = y.data();
    const T* gy = y.grad().data();
    T* gx = x.grad_data();
    for (std::size_t i = 0; i < x.size(); ++i)
      gx[i] += gy[i] * (T(1) - yp[i] * yp[i]);
  });
  return y;
}

template <typename T>
Tensor<T> add(Tape<T>& tape, Tensor<T> a, Tensor<T> b) {
  require(a.same_shape(b), Errc::ShapeMismatch,
          "add: " + shape_string(a) + " vs " + shape_string(b));
  Tensor<T> y(a.shape());
  if (a.requires_grad() || b.requires_grad()) y.set_requires_grad(true);
  const T* ap = a.data();
  const T* bp = b.data();
  T* yp = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) yp[i] = ap[i] + bp[i];
  tape.record(y, [a, b, y]() mutable {
    const T* gy = y.grad().data();
    if (a.requires_grad()) {
      T* ga = a.grad_data();
      for (std::size_t i = 0; i < a.size(); ++i) ga[i] += gy[i];
    }
    if (b.requires_grad()) {
      T* gb = b.grad_data();
      for (std::size_t i = 0; i < b.size(); ++i) gb[i] += gy[i];
    }
  });
  return y;
}

// Batch normalization over (N,T) per channel of x:[N,C,T]. In training mode
// the batch statistics normalize and the running buffers are updated in place
// (unbiased variance); in eval mode the running buffers normalize. Both modes
// record a backward closure.
template <typename T>
Tensor<T> batchnorm1d(Tape<T>& tape, Tensor<T> x, Tensor<T> gamma,
                      Tensor<T> beta, Tensor<T> running_mean,
                      Tensor<T> running_var, bool train, T momentum = T(0.1),
                      T eps = T(1e-5)) {
  require(x.rank() == 3, Errc::ShapeMismatch,
          "batchnorm1d input must be [N,C,T], got " + shape_string(x));
  const std::size_t N = x.dim(0), C = x.dim(1), Tn = x.dim(2);
  require(gamma.size() == C && beta.size() == C && running_mean.size() == C &&
              running_var.size() == C,
          Errc::ShapeMismatch, "batchnorm1d parameter size must equal C");
  const std::size_t m = N * Tn;
  if (train)
    require(m > 1, Errc::DegenerateBatch,
            "batchnorm1d needs more than one value per channel in training");

  Tensor<T> y(x.shape());
  if (x.requires_grad() || gamma.requires_grad() || beta.requires_grad())
    y.set_requires_grad(true);
  Tensor<T> mean({C});
  Tensor<T> invstd({C});
  const T* xp = x.data();
  T* yp = y.data();
  T* mu = mean.data();
  T* is = invstd.data();

  if (train) {
    T* rm = running_mean.data();
    T* rv = running_var.data();
    parallel_blocks(C, [&](std::size_t c) {
      double s = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const T* xr = xp + (n * C + c) * Tn;
        for (std::size_t t = 0; t < Tn; ++t) s += static_cast<double>(xr[t]);
      }
      const double mc = s / static_cast<double>(m);
      double v = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const T* xr = xp + (n * C + c) * Tn;
        for (std::size_t t = 0; t < Tn; ++t) {
          const double d = static_cast<double>(xr[t]) - mc;
          v += d * d;
        }
      }
      const double var = v / static_cast<double>(m);
      mu[c] = static_cast<T>(mc);
      is[c] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      const double unbiased = v / static_cast<double>(m - 1);
      rm[c] = static_cast<T>((1.0 - static_cast<double>(momentum)) *
                                 static_cast<double>(rm[c]) +
                             static_cast<double>(momentum) * mc);
      rv[c] = static_cast<T>((1.0 - static_cast<double>(momentum)) *
                                 static_cast<double>(rv[c]) +
                             static_cast<double>(momentum) * unbiased);
    });
  } else {
    const T* rm = running_mean.data();
    const T* rv = running_var.data();
    for (std::size_t c = 0; c < C; ++c) {
      mu[c] = rm[c];
      is[c] = static_cast<T>(
          1.0 / std::sqrt(static_cast<double>(rv[c]) +
                          static_cast<double>(eps)));
    }
  }

  const T* gp = gamma.data();
  const T* bp = beta.data();
  parallel_blocks(C, [&](std::size_t c) {
    const T g = gp[c], bb = bp[c], mc = mu[c], isc = is[c];
    for (std::size_t n = 0; n < N; ++n) {
      const T* xr = xp + (n * C + c) * Tn;
      T* yr = yp + (n * C + c) * Tn;
      for (std::size_t t = 0; t < Tn; ++t)
        yr[t] = g * (xr[t] - mc) * isc + bb;
    }
  });

  tape.record(y, [x, gamma, beta, y, mean, invstd, train]() mutable {
    const std::size_t N = x.dim(0), C = x.dim(1), Tn = x.dim(2);
    const std::size_t m = N * Tn;
    const T* xp = x.data();
    const T* gy = y.grad().data();
    const T* gp = gamma.data();
    const T* mu = mean.data();
    const T* is = invstd.data();
    const bool need_x = x.requires_grad();
    const bool need_g = gamma.requires_grad();
    const bool need_b = beta.requires_grad();
    if (!need_x && !need_g && !need_b) return;
    T* gx = need_x ? x.grad_data() : nullptr;
    T* gg = need_g ? gamma.grad_data() : nullptr;
    T* gb = need_b ? beta.grad_data() : nullptr;

    parallel_blocks(C, [&](std::size_t c) {
      const double mc = static_cast<double>(mu[c]);
      const double isc = static_cast<double>(is[c]);
      double sum_gy = 0.0, sum_gy_xh = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const T* xr = xp + (n * C + c) * Tn;
        const T* gr = gy + (n * C + c) * Tn;
        for (std::size_t t = 0; t < Tn; ++t) {
          const double g = static_cast<double>(gr[t]);
          sum_gy += g;
          sum_gy_xh += g * (static_cast<double>(xr[t]) - mc) * isc;
        }
      }
      if (gg) gg[c] += static_cast<T>(sum_gy_xh);
      if (gb) gb[c] += static_cast<T>(sum_gy);
      if (!gx) return;
      const double gscale = static_cast<double>(gp[c]) * isc;
      if (train) {
        const double mg = sum_gy / static_cast<double>(m);
        const double mgx = sum_gy_xh / static_cast<double>(m);
        for (std::size_t n = 0; n < N; ++n) {
          const T* xr = xp + (n * C + c) * Tn;
          const T* gr = gy + (n * C + c) * Tn;
          T* gxr = gx + (n * C + c) * Tn;
          for (std::size_t t = 0; t < Tn; ++t) {
            const double xh = (static_cast<double>(xr[t]) - mc) * isc;
            gxr[t] += static_cast<T>(
                gscale * (static_cast<double>(gr[t]) - mg - xh * mgx));
          }
        }
      } else {
        for (std::size_t n = 0; n < N; ++n) {
          const T* gr = gy + (n * C + c) * Tn;
          T* gxr = gx + (n * C + c) * Tn;
          for (std::size_t t = 0; t < Tn; ++t)
            gxr[t] += static_cast<T>(gscale * static_cast<double>(gr[t]));
        }
      }
    });
  });
  return y;
}

// Mean absolute error, reduced to a scalar. The subgradient at zero is zero.
template <typename T>
Tensor<T> l1_loss(Tape<T>& tape, Tensor<T> pred, Tensor<T> target) {
  require(pred.same_shape(target), Errc::ShapeMismatch,
          "l1_loss: " + shape_string(pred) + " vs " + shape_string(target));
  const std::size_t n = pred.size();
  require(n > 0, Errc::Empty, "l1_loss on empty tensors");
  const T* pp = pred.data();
  const T* tp = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += std::abs(static_cast<double>(pp[i]) - static_cast<double>(tp[i]));
  Tensor<T> y = Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n)));
  if (pred.requires_grad()) y.set_requires_grad(true);
  tape.record(y, [pred, target, y]() mutable {
    if (!pred.requires_grad()) return;
    const std::size_t n = pred.size();
    const T g = y.grad()[0] / static_cast<T>(n);
    const T* pp = pred.data();
    const T* tp = target.data();
    T* gp = pred.grad_data();
    for (std::size_t i = 0; i < n; ++i) {
      const T d = pp[i] - tp[i];
      if (d > T(0))
        gp[i] += g;
      else if (d < T(0))
        gp[i] -= g;
    }
  });
  return y;
}

template <typename T>
Tensor<T> sum(Tape<T>& tape, Tensor<T> x) {
  double acc = 0.0;
  const T* xp = x.data();
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += static_cast<double>(xp[i]);
  Tensor<T> y = Tensor<T>::scalar(static_cast<T>(acc));
  if (x.requires_grad()) y.set_requires_grad(true);
  tape.record(y, [x, y]() mutable {
    if (!x.requires_grad()) return;
    const T g = y.grad()[0];
    T* gx = x.grad_data();
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g;
  });
  return y;
}

}  // namespace ops
}  // namespace dartk
