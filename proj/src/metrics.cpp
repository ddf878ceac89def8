#include "rawcycle/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rawcycle/errors.hpp"

namespace rawcycle {

namespace {

constexpr int kWin = 11;

void check_pair(const char* who, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(who) + " shapes differ: " + a.shape_str() + " vs " +
                         b.shape_str());
}

// 11x11 Gaussian window, sigma 1.5, normalized to sum 1.
const std::array<double, kWin * kWin>& ssim_window() {
  static const std::array<double, kWin * kWin> w = [] {
    std::array<double, kWin * kWin> out{};
    const double sigma = 1.5;
    double total = 0.0;
    for (int i = 0; i < kWin; ++i)
      for (int j = 0; j < kWin; ++j) {
        const double di = i - kWin / 2, dj = j - kWin / 2;
        out[i * kWin + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
        total += out[i * kWin + j];
      }
    for (double& v : out) v /= total;
    return out;
  }();
  return w;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, double peak) {
  check_pair("psnr", a, b);
  if (!(peak > 0.0)) throw ArgumentError("psnr peak must be positive");
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

double ssim(const Tensor& a, const Tensor& b, double peak) {
  check_pair("ssim", a, b);
  if (!(peak > 0.0)) throw ArgumentError("ssim peak must be positive");
  if (a.rank() != 3)
    throw DimensionError("ssim expects an HxWxC image, got " + a.shape_str());
  if (a.h() < kWin || a.w() < kWin)
    throw DimensionError("ssim needs at least an 11x11 image, got " + a.shape_str());

  const auto& win = ssim_window();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  std::size_t windows = 0;
  for (int ch = 0; ch < a.c(); ++ch)
    for (int i = 0; i + kWin <= a.h(); ++i)
      for (int j = 0; j + kWin <= a.w(); ++j) {
        double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
        for (int u = 0; u < kWin; ++u)
          for (int v = 0; v < kWin; ++v) {
            const double w = win[u * kWin + v];
            const double x = a.at(i + u, j + v, ch);
            const double y = b.at(i + u, j + v, ch);
            mu_a += w * x;
            mu_b += w * y;
            aa += w * x * x;
            bb += w * y * y;
            ab += w * x * y;
          }
        const double var_a = aa - mu_a * mu_a;
        const double var_b = bb - mu_b * mu_b;
        const double cov = ab - mu_a * mu_b;
        total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                 ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        ++windows;
      }
  return total / static_cast<double>(windows);
}

}  // namespace rawcycle
