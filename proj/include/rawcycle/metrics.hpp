#pragma once

#include "rawcycle/tensor.hpp"

namespace rawcycle {

// Image quality metrics, computed in double on whatever value range the
// caller declares via `peak` (1.0 for our [0,1] images).

// Reported PSNR ceiling. A zero-MSE pair has infinite PSNR; we report this
// finite marker instead, and also clamp astronomically high finite values
// to it so the scale stays monotone and printable.
inline constexpr double kPsnrCap = 100.0;

// 10*log10(peak^2 / MSE), capped at kPsnrCap.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Mean structural similarity over all fully interior 11x11 windows
// (Gaussian weighted, sigma 1.5, standard stability constants), computed
// per channel and averaged. Needs both dims >= 11.
double ssim(const Tensor& a, const Tensor& b, double peak = 1.0);

}  // namespace rawcycle
