#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tcpssm/common.hpp"
#include "tcpssm/errors.hpp"

namespace tcpssm {

enum class DType { f32, f64 };

inline std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 8; }

inline const char* dtype_name(DType d) { return d == DType::f32 ? "float32" : "float64"; }

inline DType dtype_from_name(const std::string& s) {
  if (s == "float32") return DType::f32;
  if (s == "float64") return DType::f64;
  throw DtypeUnsupported("unsupported dtype: " + s);
}

// Dense row-major array. Immutable by convention once filled: the scan and
// analysis paths never mutate their inputs.
class Tensor {
 public:
  Tensor() : dtype_(DType::f64) {}

  static Tensor zeros(DType dtype, std::vector<std::size_t> shape) {
    Tensor t;
    t.dtype_ = dtype;
    t.shape_ = std::move(shape);
    const std::size_t n = shape_numel(t.shape_);
    if (dtype == DType::f32) {
      t.f32_.assign(n, 0.0f);
    } else {
      t.f64_.assign(n, 0.0);
    }
    return t;
  }

  static Tensor from_f64(std::vector<std::size_t> shape, std::vector<double> data) {
    if (shape_numel(shape) != data.size()) {
      throw ShapeMismatch("tensor data length does not match shape");
    }
    Tensor t;
    t.dtype_ = DType::f64;
    t.shape_ = std::move(shape);
    t.f64_ = std::move(data);
    return t;
  }

  static Tensor from_f32(std::vector<std::size_t> shape, std::vector<float> data) {
    if (shape_numel(shape) != data.size()) {
      throw ShapeMismatch("tensor data length does not match shape");
    }
    Tensor t;
    t.dtype_ = DType::f32;
    t.shape_ = std::move(shape);
    t.f32_ = std::move(data);
    return t;
  }

  DType dtype() const { return dtype_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return shape_numel(shape_); }

  std::size_t dim(std::size_t i) const {
    if (i >= shape_.size()) throw IndexOutOfRange("tensor dim index out of range");
    return shape_[i];
  }

  double get(std::size_t i) const { return dtype_ == DType::f32 ? double(f32_[i]) : f64_[i]; }

  void set(std::size_t i, double v) {
    if (dtype_ == DType::f32) {
      f32_[i] = float(v);
    } else {
      f64_[i] = v;
    }
  }

  const std::vector<float>& data_f32() const { return f32_; }
  const std::vector<double>& data_f64() const { return f64_; }
  std::vector<float>& data_f32() { return f32_; }
  std::vector<double>& data_f64() { return f64_; }

  std::vector<double> to_f64_vector() const {
    if (dtype_ == DType::f64) return f64_;
    return std::vector<double>(f32_.begin(), f32_.end());
  }

  Tensor cast(DType target) const {
    if (target == dtype_) return *this;
    Tensor t;
    t.dtype_ = target;
    t.shape_ = shape_;
    if (target == DType::f32) {
      t.f32_.assign(f64_.begin(), f64_.end());
    } else {
      t.f64_.assign(f32_.begin(), f32_.end());
    }
    return t;
  }

  const void* raw_data() const {
    return dtype_ == DType::f32 ? static_cast<const void*>(f32_.data())
                                : static_cast<const void*>(f64_.data());
  }
  std::size_t raw_size() const { return numel() * dtype_size(dtype_); }

 private:
  DType dtype_;
  std::vector<std::size_t> shape_;
  std::vector<float> f32_;
  std::vector<double> f64_;
};

// Checks a token sequence is rank-3 [B, M, E].
inline void require_token_sequence(const Tensor& x) {
  if (x.rank() != 3) {
    throw ShapeMismatch("token sequence must be rank-3 [batch, length, channels], got rank " +
                        std::to_string(x.rank()));
  }
}

}  // namespace tcpssm
