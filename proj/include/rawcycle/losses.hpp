#pragma once

#include <map>
#include <string>

#include "rawcycle/graph.hpp"
#include "rawcycle/tensor.hpp"

namespace rawcycle {

// Training objectives. Each loss exists twice: a tape builder used during
// optimization, and a plain evaluator that also reports the named sub-loss
// breakdown for metrics streams. Both compute identical arithmetic.
//
// The sRGB-to-RAW loss adds a log-domain term so dark raw values, where
// most of the sensor's dynamic range lives, weigh as much as bright ones:
//   mean |x - y|  +  mean |log(max(x, eps)) - log(max(y, eps))|.
// The RAW-to-sRGB loss is the plain mean absolute error. The joint loss is
// beta * loss_s2r + (1 - beta) * loss_r2s; only the r2s term touches the
// decoder, so the s2r term's gradient with respect to every RAW-to-sRGB
// parameter is identically zero.

inline constexpr double kDefaultLogEps = 1e-4;
inline constexpr double kDefaultJointBeta = 0.5;

struct LossValue {
  double value = 0.0;
  std::map<std::string, double> components;
};

Value loss_s2r(Graph& g, Value raw_hat, Value raw_gt, double eps = kDefaultLogEps);
Value loss_r2s(Graph& g, Value rgb_hat, Value rgb_gt);
Value loss_joint(Graph& g, Value raw_hat, Value raw_gt, Value rgb_hat, Value rgb_gt,
                 double beta = kDefaultJointBeta, double eps = kDefaultLogEps);

LossValue loss_s2r(const Tensor& raw_hat, const Tensor& raw_gt,
                   double eps = kDefaultLogEps);
LossValue loss_r2s(const Tensor& rgb_hat, const Tensor& rgb_gt);
LossValue loss_joint(const Tensor& raw_hat, const Tensor& raw_gt, const Tensor& rgb_hat,
                     const Tensor& rgb_gt, double beta = kDefaultJointBeta,
                     double eps = kDefaultLogEps);

}  // namespace rawcycle
