#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace rawcycle {

// Dense row-major array of doubles, rank 1..4.
//   rank 3: activations and images, dims (h, w, c), innermost c.
//   rank 4: convolution kernels, dims (oc, kh, kw, ic), innermost ic.
//   rank 1: bias vectors.
class Tensor {
 public:
  Tensor() = default;

  static Tensor make1(int n, double fill = 0.0);
  static Tensor make3(int h, int w, int c, double fill = 0.0);
  static Tensor make4(int oc, int kh, int kw, int ic, double fill = 0.0);
  static Tensor zeros_like(const Tensor& t);

  int rank() const { return rank_; }
  const std::array<int, 4>& dims() const { return dims_; }
  int dim(int i) const { return dims_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-3 accessors.
  int h() const { return dims_[0]; }
  int w() const { return dims_[1]; }
  int c() const { return dims_[2]; }

  double& at(int i, int j, int k) { return data_[(static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k]; }
  const double& at(int i, int j, int k) const { return data_[(static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& o) const { return rank_ == o.rank_ && dims_ == o.dims_; }
  std::string shape_str() const;

  void fill(double v);
  double min_value() const;
  double max_value() const;

 private:
  int rank_ = 0;
  std::array<int, 4> dims_{1, 1, 1, 1};
  std::vector<double> data_;
};

// Symmetric edge-including boundary fold for out-of-range indices (period
// 2n: ..., 1, 0 | 0, 1, ..., n-1 | n-1, n-2, ...), the padding rule shared
// by convolution and blur.
int reflect_index(int i, int n);

// Elementwise helpers used outside the autodiff graph.
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);
double mean_abs_diff(const Tensor& a, const Tensor& b);
double mse(const Tensor& a, const Tensor& b);

}  // namespace rawcycle
