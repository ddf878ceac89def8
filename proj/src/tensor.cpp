#include "rawcycle/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rawcycle/errors.hpp"

namespace rawcycle {

Tensor Tensor::make1(int n, double fill) {
  Tensor t;
  if (n <= 0) throw DimensionError("tensor dimension must be positive");
  t.rank_ = 1;
  t.dims_ = {n, 1, 1, 1};
  t.data_.assign(static_cast<std::size_t>(n), fill);
  return t;
}

Tensor Tensor::make3(int h, int w, int c, double fill) {
  Tensor t;
  if (h <= 0 || w <= 0 || c <= 0) throw DimensionError("tensor dimension must be positive");
  t.rank_ = 3;
  t.dims_ = {h, w, c, 1};
  t.data_.assign(static_cast<std::size_t>(h) * w * c, fill);
  return t;
}

Tensor Tensor::make4(int oc, int kh, int kw, int ic, double fill) {
  Tensor t;
  if (oc <= 0 || kh <= 0 || kw <= 0 || ic <= 0) throw DimensionError("tensor dimension must be positive");
  t.rank_ = 4;
  t.dims_ = {oc, kh, kw, ic};
  t.data_.assign(static_cast<std::size_t>(oc) * kh * kw * ic, fill);
  return t;
}

Tensor Tensor::zeros_like(const Tensor& t) {
  Tensor z = t;
  std::fill(z.data_.begin(), z.data_.end(), 0.0);
  return z;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < rank_; ++i) os << (i ? "x" : "") << dims_[i];
  os << ")";
  return os.str();
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double Tensor::min_value() const {
  return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double Tensor::max_value() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("tensor shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  Tensor r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("tensor shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  Tensor r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("tensor shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("tensor shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return a.size() ? s / static_cast<double>(a.size()) : 0.0;
}

double mse(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("tensor shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return a.size() ? s / static_cast<double>(a.size()) : 0.0;
}

}  // namespace rawcycle
