#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dartk/tensor.hpp"

namespace dartk {

template <typename T>
struct AdamConfig {
  T lr = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

// Adam with bias correction. step() consumes the gradients currently stored
// on the parameters; the caller zeroes them between iterations.
template <typename T>
class Adam {
public:
  Adam(std::vector<Tensor<T>> params, AdamConfig<T> cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].size(), 0.0);
      v_[i].assign(params_[i].size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double b1 = static_cast<double>(cfg_.beta1);
    const double b2 = static_cast<double>(cfg_.beta2);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const double lr = static_cast<double>(cfg_.lr);
    const double eps = static_cast<double>(cfg_.eps);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor<T>& p = params_[i];
      const T* g = p.grad().data();
      T* w = p.data();
      std::vector<double>& m = m_[i];
      std::vector<double>& v = v_[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = static_cast<double>(g[j]);
        m[j] = b1 * m[j] + (1.0 - b1) * gj;
        v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
        const double mhat = m[j] / c1;
        const double vhat = v[j] / c2;
        w[j] = static_cast<T>(static_cast<double>(w[j]) -
                              lr * mhat / (std::sqrt(vhat) + eps));
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::size_t steps() const { return t_; }
  const std::vector<Tensor<T>>& params() const { return params_; }

private:
  std::vector<Tensor<T>> params_;
  AdamConfig<T> cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace dartk
