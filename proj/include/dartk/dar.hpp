#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dartk/adam.hpp"
#include "dartk/autodiff.hpp"
#include "dartk/error.hpp"
#include "dartk/hash.hpp"
#include "dartk/preprocess.hpp"
#include "dartk/rng.hpp"
#include "dartk/tensor.hpp"

namespace dartk {

enum class DarVariant : std::uint8_t {
  Baseline = 0,
  SmallKernel = 1,
  HalfChannels = 2,
  NoTanh = 3,
};

enum class OutputActivation : std::uint8_t { Tanh = 0, None = 1 };

inline const char* variant_name(DarVariant v) {
  switch (v) {
    case DarVariant::Baseline: return "baseline";
    case DarVariant::SmallKernel: return "small-kernel";
    case DarVariant::HalfChannels: return "half-channels";
    case DarVariant::NoTanh: return "no-tanh";
  }
  return "unknown";
}

inline DarVariant variant_from_name(const std::string& s) {
  if (s == "baseline") return DarVariant::Baseline;
  if (s == "small-kernel") return DarVariant::SmallKernel;
  if (s == "half-channels") return DarVariant::HalfChannels;
  if (s == "no-tanh") return DarVariant::NoTanh;
  fail(Errc::BadArgument, "unknown model variant '" + s + "'");
}

// Channel-wise denoising autoencoder: five length-preserving convolutions,
// ReLU + batch norm after each hidden layer, optional tanh on the output.
// Inputs are [B*C, 1, T]; every EEG channel is an independent sample.
struct DarConfig {
  std::size_t enc0 = 128, enc1 = 64;
  std::size_t dec0 = 64, dec1 = 128;
  std::size_t kernel = 5, padding = 2;
  OutputActivation output_activation = OutputActivation::Tanh;
  DarVariant variant = DarVariant::Baseline;

  static DarConfig for_variant(DarVariant v) {
    DarConfig c;
    c.variant = v;
    switch (v) {
      case DarVariant::Baseline: break;
      case DarVariant::SmallKernel:
        c.kernel = 3;
        c.padding = 1;
        break;
      case DarVariant::HalfChannels:
        c.enc0 = 64;
        c.enc1 = 32;
        c.dec0 = 32;
        c.dec1 = 64;
        break;
      case DarVariant::NoTanh:
        c.output_activation = OutputActivation::None;
        break;
    }
    return c;
  }

  void validate() const {
    require(kernel % 2 == 1 && kernel >= 1, Errc::InvalidConfig,
            "kernel size must be odd");
    require(padding == (kernel - 1) / 2, Errc::InvalidConfig,
            "padding must be (kernel-1)/2 to preserve length");
    require(enc0 > 0 && enc1 > 0 && dec0 > 0 && dec1 > 0, Errc::InvalidConfig,
            "channel widths must be positive");
  }

  // (in, out) channel widths of the five convolutions, encoder to decoder.
  std::vector<std::pair<std::size_t, std::size_t>> layer_io() const {
    return {{1, enc0}, {enc0, enc1}, {enc1, dec0}, {dec0, dec1}, {dec1, 1}};
  }

  bool operator==(const DarConfig&) const = default;
};

template <typename T>
struct Dar {
  struct Conv {
    Tensor<T> w, b;
  };
  struct Bn {
    Tensor<T> gamma, beta, running_mean, running_var;
  };

  DarConfig cfg;
  std::vector<Conv> conv;  // five layers
  std::vector<Bn> bn;      // after the four hidden layers

  // Kaiming-uniform fan-in weights, zero biases, identity batch norm.
  static Dar build(const DarConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Dar m;
    m.cfg = cfg;
    Rng root(seed);
    const auto io = cfg.layer_io();
    for (std::size_t l = 0; l < io.size(); ++l) {
      const auto [ci, co] = io[l];
      Rng lr = root.fork(l);
      const double fan_in = static_cast<double>(ci * cfg.kernel);
      const double bound = std::sqrt(6.0 / fan_in);
      Tensor<T> w({co, ci, cfg.kernel});
      for (auto& v : w.values())
        v = static_cast<T>(lr.uniform(-bound, bound));
      m.conv.push_back({w, Tensor<T>({co}, T(0))});
      if (l + 1 < io.size())
        m.bn.push_back({Tensor<T>({co}, T(1)), Tensor<T>({co}, T(0)),
                        Tensor<T>({co}, T(0)), Tensor<T>({co}, T(1))});
    }
    return m;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& c : conv) n += c.w.size() + c.b.size();
    for (const auto& g : bn) n += g.gamma.size() + g.beta.size();
    return n;
  }

  // Trainable tensors in a stable order (running stats are buffers).
  std::vector<Tensor<T>> parameters() {
    std::vector<Tensor<T>> p;
    for (auto& c : conv) {
      p.push_back(c.w);
      p.push_back(c.b);
    }
    for (auto& g : bn) {
      p.push_back(g.gamma);
      p.push_back(g.beta);
    }
    return p;
  }

  std::vector<Tensor<T>> buffers() {
    std::vector<Tensor<T>> p;
    for (auto& g : bn) {
      p.push_back(g.running_mean);
      p.push_back(g.running_var);
    }
    return p;
  }

  void set_requires_grad(bool on) {
    for (auto t : parameters()) t.set_requires_grad(on);
  }

  Dar clone() const {
    Dar m;
    m.cfg = cfg;
    for (const auto& c : conv) m.conv.push_back({c.w.clone(), c.b.clone()});
    for (const auto& g : bn)
      m.bn.push_back({g.gamma.clone(), g.beta.clone(), g.running_mean.clone(),
                      g.running_var.clone()});
    return m;
  }

  void copy_values_from(const Dar& other) {
    require(conv.size() == other.conv.size() && bn.size() == other.bn.size(),
            Errc::ShapeMismatch, "model structures differ");
    for (std::size_t l = 0; l < conv.size(); ++l) {
      conv[l].w.values() = other.conv[l].w.values();
      conv[l].b.values() = other.conv[l].b.values();
    }
    for (std::size_t l = 0; l < bn.size(); ++l) {
      bn[l].gamma.values() = other.bn[l].gamma.values();
      bn[l].beta.values() = other.bn[l].beta.values();
      bn[l].running_mean.values() = other.bn[l].running_mean.values();
      bn[l].running_var.values() = other.bn[l].running_var.values();
    }
  }

  Tensor<T> forward(Tape<T>& tape, Tensor<T> x, bool train) {
    require(x.rank() == 3 && x.dim(1) == 1, Errc::ShapeMismatch,
            "model input must be [B*C, 1, T], got " + shape_string(x));
    for (std::size_t l = 0; l < conv.size(); ++l) {
      x = ops::conv1d(tape, x, conv[l].w, conv[l].b, cfg.padding);
      if (l + 1 < conv.size()) {
        x = ops::relu(tape, x);
        x = ops::batchnorm1d(tape, x, bn[l].gamma, bn[l].beta,
                             bn[l].running_mean, bn[l].running_var, train);
      }
    }
    if (cfg.output_activation == OutputActivation::Tanh)
      x = ops::tanh(tape, x);
    return x;
  }
};

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  double min_delta = 1e-5;
  bool early_stopping = true;  // off: run every epoch, keep the final model
  std::uint64_t seed = 42;

  void validate() const {
    require(lr > 0 && batch_size > 0 && max_epochs > 0 && min_delta >= 0,
            Errc::InvalidConfig, "training parameters must be positive");
  }
};

struct TrainReport {
  std::vector<double> train_loss;  // one entry per epoch run
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;    // index into the loss vectors
  std::size_t stopped_epoch = 0; // number of epochs actually run
  double wall_seconds = 0.0;
};

namespace detail {

// One training sample: a single channel of one segment pair.
struct DarRow {
  const Segment* noisy;
  const Segment* clean;
  std::size_t channel;
};

inline std::vector<DarRow> dar_rows(const std::vector<SegmentPair>& pairs) {
  std::vector<DarRow> rows;
  for (const auto& p : pairs)
    for (std::size_t c = 0; c < p.noisy.n_channels; ++c)
      rows.push_back({&p.noisy, &p.clean, c});
  return rows;
}

template <typename T>
Tensor<T> gather_rows(const std::vector<DarRow>& rows, std::size_t lo,
                      std::size_t hi, bool clean, std::size_t n_samples) {
  Tensor<T> t({hi - lo, 1, n_samples});
  T* out = t.data();
  for (std::size_t r = lo; r < hi; ++r) {
    const Segment* s = clean ? rows[r].clean : rows[r].noisy;
    require(s->n_samples == n_samples, Errc::ShapeMismatch,
            "segments must share one window length");
    const double* src = s->data.data() + rows[r].channel * n_samples;
    for (std::size_t i = 0; i < n_samples; ++i)
      out[(r - lo) * n_samples + i] = static_cast<T>(src[i]);
  }
  return t;
}

// Mean absolute error over a row set, eval mode, in fixed order.
template <typename T>
double dar_eval_loss(Dar<T>& model, const std::vector<DarRow>& rows,
                     std::size_t batch_size, std::size_t n_samples) {
  double abs_sum = 0.0;
  std::size_t n_elems = 0;
  for (std::size_t lo = 0; lo < rows.size(); lo += batch_size) {
    const std::size_t hi = std::min(rows.size(), lo + batch_size);
    auto x = gather_rows<T>(rows, lo, hi, false, n_samples);
    auto y = gather_rows<T>(rows, lo, hi, true, n_samples);
    Tape<T> tape;
    auto out = model.forward(tape, x, false);
    const T* o = out.data();
    const T* t = y.data();
    for (std::size_t i = 0; i < out.size(); ++i)
      abs_sum += std::abs(static_cast<double>(o[i] - t[i]));
    n_elems += out.size();
  }
  return abs_sum / static_cast<double>(n_elems);
}

}  // namespace detail

// L1 training with Adam, seeded shuffling, and early stopping on the
// validation loss. The model is left holding the best-epoch parameters
// (including that epoch's batch-norm running statistics).
template <typename T>
TrainReport train_dar(Dar<T>& model, const std::vector<SegmentPair>& train_pairs,
                      const std::vector<SegmentPair>& val_pairs,
                      const TrainConfig& tcfg) {
  tcfg.validate();
  auto train_rows = detail::dar_rows(train_pairs);
  auto val_rows = detail::dar_rows(val_pairs);
  require(!train_rows.empty(), Errc::EmptySplit, "training split is empty");
  require(!val_rows.empty(), Errc::EmptySplit, "validation split is empty");
  const std::size_t n_samples = train_rows.front().noisy->n_samples;

  const auto t0 = std::chrono::steady_clock::now();
  model.set_requires_grad(true);
  AdamConfig<T> acfg;
  acfg.lr = static_cast<T>(tcfg.lr);
  acfg.beta1 = static_cast<T>(tcfg.beta1);
  acfg.beta2 = static_cast<T>(tcfg.beta2);
  acfg.eps = static_cast<T>(tcfg.eps);
  Adam<T> opt(model.parameters(), acfg);

  TrainReport report;
  Rng root(tcfg.seed);
  double best = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;
  Dar<T> best_model = model.clone();

  for (std::size_t epoch = 0; epoch < tcfg.max_epochs; ++epoch) {
    Rng erng = root.fork(epoch);
    erng.shuffle(train_rows);
    double loss_acc = 0.0;
    for (std::size_t lo = 0; lo < train_rows.size(); lo += tcfg.batch_size) {
      const std::size_t hi =
          std::min(train_rows.size(), lo + tcfg.batch_size);
      auto x = detail::gather_rows<T>(train_rows, lo, hi, false, n_samples);
      auto y = detail::gather_rows<T>(train_rows, lo, hi, true, n_samples);
      Tape<T> tape;
      auto out = model.forward(tape, x, true);
      auto loss = ops::l1_loss(tape, out, y);
      opt.zero_grad();
      tape.backward(loss);
      opt.step();
      loss_acc += static_cast<double>(loss.item()) *
                  static_cast<double>(hi - lo);
    }
    report.train_loss.push_back(loss_acc /
                                static_cast<double>(train_rows.size()));
    const double val =
        detail::dar_eval_loss(model, val_rows, tcfg.batch_size, n_samples);
    report.val_loss.push_back(val);

    if (val < best - tcfg.min_delta) {
      best = val;
      report.best_epoch = epoch;
      wait = 0;
      if (tcfg.early_stopping) best_model.copy_values_from(model);
    } else if (tcfg.early_stopping &&
               ++wait >= std::max<std::size_t>(tcfg.patience, 1)) {
      break;
    }
  }
  report.stopped_epoch = report.train_loss.size();
  if (tcfg.early_stopping) model.copy_values_from(best_model);
  model.set_requires_grad(false);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

// Eval-mode reconstruction of one segment; metadata and norm_scale carry over.
template <typename T>
Segment denoise(Dar<T>& model, const Segment& seg) {
  require(seg.n_channels >= 1 && seg.n_samples >= 1, Errc::ShapeMismatch,
          "cannot denoise an empty segment");
  Tensor<T> x({seg.n_channels, 1, seg.n_samples});
  for (std::size_t i = 0; i < seg.data.size(); ++i)
    x.data()[i] = static_cast<T>(seg.data[i]);
  Tape<T> tape;
  auto y = model.forward(tape, x, false);
  Segment out = seg;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = static_cast<double>(y.data()[i]);
  return out;
}

inline constexpr const char* kWeightsMagic = "DARW1";

namespace detail {

inline void put_bytes(std::vector<unsigned char>& buf, const void* p,
                      std::size_t n) {
  const auto* b = static_cast<const unsigned char*>(p);
  buf.insert(buf.end(), b, b + n);
}

template <typename U>
void put_scalar(std::vector<unsigned char>& buf, U v) {
  put_bytes(buf, &v, sizeof(U));
}

template <typename U>
U get_scalar(const std::vector<unsigned char>& buf, std::size_t& off) {
  require(off + sizeof(U) <= buf.size(), Errc::CorruptFile,
          "weight file ends mid-field");
  U v;
  std::memcpy(&v, buf.data() + off, sizeof(U));
  off += sizeof(U);
  return v;
}

template <typename T>
void put_tensor(std::vector<unsigned char>& buf, const Tensor<T>& t) {
  put_scalar<std::uint32_t>(buf, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d = 0; d < t.rank(); ++d)
    put_scalar<std::uint64_t>(buf, static_cast<std::uint64_t>(t.dim(d)));
  for (const T v : t.values())
    put_scalar<float>(buf, static_cast<float>(v));
}

template <typename T>
void get_tensor(const std::vector<unsigned char>& buf, std::size_t& off,
                Tensor<T>& t) {
  const auto rank = get_scalar<std::uint32_t>(buf, off);
  require(rank == t.rank(), Errc::CorruptFile, "tensor rank mismatch");
  for (std::size_t d = 0; d < t.rank(); ++d)
    require(get_scalar<std::uint64_t>(buf, off) == t.dim(d), Errc::CorruptFile,
            "tensor shape mismatch");
  for (auto& v : t.values())
    v = static_cast<T>(get_scalar<float>(buf, off));
}

}  // namespace detail

// Versioned binary weights: magic, config block, float32 tensors with shape
// headers, FNV-1a checksum trailer.
template <typename T>
void save_dar(Dar<T>& model, const std::filesystem::path& path) {
  std::vector<unsigned char> buf;
  detail::put_bytes(buf, kWeightsMagic, 5);
  detail::put_scalar<std::uint8_t>(
      buf, static_cast<std::uint8_t>(model.cfg.variant));
  detail::put_scalar<std::uint8_t>(
      buf, static_cast<std::uint8_t>(model.cfg.output_activation));
  for (std::size_t v : {model.cfg.kernel, model.cfg.padding, model.cfg.enc0,
                        model.cfg.enc1, model.cfg.dec0, model.cfg.dec1})
    detail::put_scalar<std::uint32_t>(buf, static_cast<std::uint32_t>(v));
  auto params = model.parameters();
  auto bufs = model.buffers();
  detail::put_scalar<std::uint32_t>(
      buf, static_cast<std::uint32_t>(params.size() + bufs.size()));
  for (const auto& t : params) detail::put_tensor(buf, t);
  for (const auto& t : bufs) detail::put_tensor(buf, t);
  detail::put_scalar<std::uint64_t>(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::IoFailure, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  require(out.good(), Errc::IoFailure, "short write to " + path.string());
}

template <typename T = double>
Dar<T> load_dar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::IoFailure, "cannot open " + path.string());
  std::vector<unsigned char> buf(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(buf.size() >= 5 + 8, Errc::CorruptFile, "weight file too small");
  require(std::memcmp(buf.data(), kWeightsMagic, 5) == 0, Errc::VersionMismatch,
          "not a DARW1 weight file");
  std::size_t tail = buf.size() - 8;
  std::uint64_t want;
  std::memcpy(&want, buf.data() + tail, 8);
  require(fnv1a64(buf.data(), tail) == want, Errc::CorruptFile,
          "weight file checksum mismatch");

  std::size_t off = 5;
  DarConfig cfg;
  cfg.variant = static_cast<DarVariant>(
      detail::get_scalar<std::uint8_t>(buf, off));
  cfg.output_activation = static_cast<OutputActivation>(
      detail::get_scalar<std::uint8_t>(buf, off));
  cfg.kernel = detail::get_scalar<std::uint32_t>(buf, off);
  cfg.padding = detail::get_scalar<std::uint32_t>(buf, off);
  cfg.enc0 = detail::get_scalar<std::uint32_t>(buf, off);
  cfg.enc1 = detail::get_scalar<std::uint32_t>(buf, off);
  cfg.dec0 = detail::get_scalar<std::uint32_t>(buf, off);
  cfg.dec1 = detail::get_scalar<std::uint32_t>(buf, off);
  try {
    cfg.validate();
  } catch (const Error&) {
    fail(Errc::CorruptFile, "weight file config block is inconsistent");
  }

  Dar<T> model = Dar<T>::build(cfg, 0);
  auto params = model.parameters();
  auto bufs = model.buffers();
  const auto count = detail::get_scalar<std::uint32_t>(buf, off);
  require(count == params.size() + bufs.size(), Errc::CorruptFile,
          "unexpected tensor count in weight file");
  for (auto& t : params) detail::get_tensor(buf, off, t);
  for (auto& t : bufs) detail::get_tensor(buf, off, t);
  require(off == tail, Errc::CorruptFile, "trailing bytes in weight file");
  return model;
}

template <typename T = double>
Dar<T> load_dar(const std::filesystem::path& path, DarVariant expected) {
  auto model = load_dar<T>(path);
  require(model.cfg.variant == expected, Errc::VersionMismatch,
          std::string("weight file holds variant '") +
              variant_name(model.cfg.variant) + "', expected '" +
              variant_name(expected) + "'");
  return model;
}

}  // namespace dartk
