#include "rawcycle/losses.hpp"

#include <cmath>

#include "rawcycle/errors.hpp"

namespace rawcycle {

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0)) throw ArgumentError("log-loss eps must be positive");
}

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0))
    throw ArgumentError("joint-loss beta must lie strictly between 0 and 1");
}

void check_pair(const char* who, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(who) + " shapes differ: " + a.shape_str() + " vs " +
                         b.shape_str());
}

}  // namespace

Value loss_s2r(Graph& g, Value raw_hat, Value raw_gt, double eps) {
  check_eps(eps);
  Value l1 = g.mean_abs_diff(raw_hat, raw_gt);
  Value log_l1 = g.mean_abs_diff(g.log_clamp(raw_hat, eps), g.log_clamp(raw_gt, eps));
  return g.add(l1, log_l1);
}

Value loss_r2s(Graph& g, Value rgb_hat, Value rgb_gt) {
  return g.mean_abs_diff(rgb_hat, rgb_gt);
}

Value loss_joint(Graph& g, Value raw_hat, Value raw_gt, Value rgb_hat, Value rgb_gt,
                 double beta, double eps) {
  check_beta(beta);
  return g.add(g.scale_const(loss_s2r(g, raw_hat, raw_gt, eps), beta),
               g.scale_const(loss_r2s(g, rgb_hat, rgb_gt), 1.0 - beta));
}

LossValue loss_s2r(const Tensor& raw_hat, const Tensor& raw_gt, double eps) {
  check_eps(eps);
  check_pair("loss_s2r", raw_hat, raw_gt);
  double l1 = 0.0, log_l1 = 0.0;
  for (std::size_t i = 0; i < raw_hat.size(); ++i) {
    l1 += std::abs(raw_hat[i] - raw_gt[i]);
    log_l1 += std::abs(std::log(std::max(raw_hat[i], eps)) -
                       std::log(std::max(raw_gt[i], eps)));
  }
  l1 /= static_cast<double>(raw_hat.size());
  log_l1 /= static_cast<double>(raw_hat.size());
  return {l1 + log_l1, {{"l1", l1}, {"log_l1", log_l1}}};
}

LossValue loss_r2s(const Tensor& rgb_hat, const Tensor& rgb_gt) {
  check_pair("loss_r2s", rgb_hat, rgb_gt);
  double l1 = 0.0;
  for (std::size_t i = 0; i < rgb_hat.size(); ++i) l1 += std::abs(rgb_hat[i] - rgb_gt[i]);
  l1 /= static_cast<double>(rgb_hat.size());
  return {l1, {{"l1", l1}}};
}

LossValue loss_joint(const Tensor& raw_hat, const Tensor& raw_gt, const Tensor& rgb_hat,
                     const Tensor& rgb_gt, double beta, double eps) {
  check_beta(beta);
  LossValue s2r = loss_s2r(raw_hat, raw_gt, eps);
  LossValue r2s = loss_r2s(rgb_hat, rgb_gt);
  return {beta * s2r.value + (1.0 - beta) * r2s.value,
          {{"s2r", s2r.value}, {"r2s", r2s.value}}};
}

}  // namespace rawcycle
