#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dartk/autodiff.hpp"
#include "dartk/dar.hpp"
#include "dartk/error.hpp"
#include "dartk/preprocess.hpp"

namespace dartk {

// Absolute input-gradient magnitudes for one segment.
struct SaliencyMap {
  std::vector<double> values;         // channel-major [C, T], all >= 0
  std::vector<double> channel_means;  // time average per channel
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::string subject_id;
  std::size_t source_offset = 0;

  const double* channel(std::size_t c) const {
    return values.data() + c * n_samples;
  }
};

namespace detail {

template <typename T>
Tensor<T> saliency_input(const Segment& seg) {
  Tensor<T> x({seg.n_channels, 1, seg.n_samples});
  T* out = x.data();
  for (std::size_t i = 0; i < seg.data.size(); ++i)
    out[i] = static_cast<T>(seg.data[i]);
  x.set_requires_grad(true);
  return x;
}

template <typename T>
SaliencyMap saliency_from_grad(Tensor<T> x, const Segment& seg) {
  SaliencyMap map;
  map.n_channels = seg.n_channels;
  map.n_samples = seg.n_samples;
  map.subject_id = seg.subject_id;
  map.source_offset = seg.source_offset;
  map.values.resize(seg.data.size());
  const T* g = x.grad_data();
  for (std::size_t i = 0; i < map.values.size(); ++i)
    map.values[i] = std::abs(static_cast<double>(g[i]));
  map.channel_means.resize(seg.n_channels);
  for (std::size_t c = 0; c < seg.n_channels; ++c) {
    double acc = 0.0;
    for (std::size_t t = 0; t < seg.n_samples; ++t)
      acc += map.values[c * seg.n_samples + t];
    map.channel_means[c] = acc / static_cast<double>(seg.n_samples);
  }
  return map;
}

}  // namespace detail

// Gradient of the summed model output with respect to the input segment.
template <typename T>
SaliencyMap saliency(Dar<T>& model, const Segment& seg) {
  require(seg.n_channels >= 1 && seg.n_samples >= 1, Errc::ShapeMismatch,
          "saliency needs a nonempty segment");
  auto x = detail::saliency_input<T>(seg);
  Tape<T> tape;
  auto out = model.forward(tape, x, false);
  auto scalar = ops::sum(tape, out);
  tape.backward(scalar);
  return detail::saliency_from_grad(x, seg);
}

// Loss-gradient variant: gradient of the L1 loss against a clean reference.
template <typename T>
SaliencyMap saliency_loss(Dar<T>& model, const Segment& noisy,
                          const Segment& clean) {
  require(noisy.n_channels == clean.n_channels &&
              noisy.n_samples == clean.n_samples,
          Errc::ShapeMismatch, "saliency pair shapes differ");
  auto x = detail::saliency_input<T>(noisy);
  Tensor<T> y({clean.n_channels, 1, clean.n_samples});
  T* yd = y.data();
  for (std::size_t i = 0; i < clean.data.size(); ++i)
    yd[i] = static_cast<T>(clean.data[i]);
  Tape<T> tape;
  auto out = model.forward(tape, x, false);
  auto loss = ops::l1_loss(tape, out, y);
  tape.backward(loss);
  return detail::saliency_from_grad(x, noisy);
}

}  // namespace dartk
