#pragma once

#include <cstddef>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "dartk/error.hpp"

namespace dartk {

// Dense tensor handle with shared storage, rank <= 3. Gradient buffers are
// allocated lazily and always match the value shape.
template <typename T>
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill = T(0)) {
    s_ = std::make_shared<Storage>();
    s_->shape = std::move(shape);
    s_->values.assign(count(s_->shape), fill);
  }

  Tensor(std::vector<std::size_t> shape, std::vector<T> values) {
    s_ = std::make_shared<Storage>();
    s_->shape = std::move(shape);
    require(values.size() == count(s_->shape), Errc::ShapeMismatch,
            "value count does not match tensor shape");
    s_->values = std::move(values);
  }

  static Tensor scalar(T v) { return Tensor({1}, std::vector<T>{v}); }

  bool valid() const { return static_cast<bool>(s_); }
  const std::vector<std::size_t>& shape() const { return s_->shape; }
  std::size_t rank() const { return s_->shape.size(); }
  std::size_t dim(std::size_t i) const { return s_->shape[i]; }
  std::size_t size() const { return s_->values.size(); }

  std::vector<T>& values() { return s_->values; }
  const std::vector<T>& values() const { return s_->values; }
  T* data() { return s_->values.data(); }
  const T* data() const { return s_->values.data(); }

  T item() const {
    require(size() == 1, Errc::ShapeMismatch, "item() on non-scalar tensor");
    return s_->values[0];
  }

  bool requires_grad() const { return s_ && s_->requires_grad; }
  Tensor& set_requires_grad(bool on = true) {
    s_->requires_grad = on;
    if (on) ensure_grad();
    return *this;
  }

  bool has_grad() const { return s_ && !s_->grad.empty(); }
  std::vector<T>& grad() {
    ensure_grad();
    return s_->grad;
  }
  const std::vector<T>& grad() const { return s_->grad; }
  T* grad_data() {
    ensure_grad();
    return s_->grad.data();
  }
  void zero_grad() {
    if (has_grad()) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
  }

  bool same_shape(const Tensor& o) const { return s_->shape == o.s_->shape; }

  // Deep copy of values only; the copy is a fresh leaf without gradients.
  Tensor clone() const {
    Tensor c;
    c.s_ = std::make_shared<Storage>();
    c.s_->shape = s_->shape;
    c.s_->values = s_->values;
    c.s_->requires_grad = s_->requires_grad;
    return c;
  }

  // Stable identity of the underlying storage, for graph bookkeeping.
  const void* id() const { return static_cast<const void*>(s_.get()); }

  static std::size_t count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

private:
  struct Storage {
    std::vector<std::size_t> shape;
    std::vector<T> values;
    std::vector<T> grad;
    bool requires_grad = false;
  };

  void ensure_grad() {
    if (s_->grad.empty()) s_->grad.assign(s_->values.size(), T(0));
  }

  std::shared_ptr<Storage> s_;
};

template <typename T>
std::string shape_string(const Tensor<T>& t) {
  if (!t.valid()) return "[null]";
  std::string s = "[";
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.dim(i));
  }
  return s + "]";
}

}  // namespace dartk
