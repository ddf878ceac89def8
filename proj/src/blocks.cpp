#include "rawcycle/blocks.hpp"

#include <cmath>
#include <vector>

#include "rawcycle/errors.hpp"

namespace rawcycle {

Value conv_layer(Graph& g, const std::string& name, Value x, int out_channels,
                 int ksize, bool zero_init) {
  ParamStore* ps = g.params();
  if (!ps) throw ConfigError("conv_layer needs a graph with a parameter store");
  const int ic = g.value(x).c();
  ps->get_or_create(name + "/w", [&] {
    Tensor w = Tensor::make4(out_channels, ksize, ksize, ic);
    if (!zero_init) {
      Rng rng = ps->init_rng(name + "/w");
      const double bound = std::sqrt(1.0 / (ksize * ksize * ic));
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    }
    return w;
  });
  ps->get_or_create(name + "/b", [&] { return Tensor::make1(out_channels); });
  return g.conv2d(x, g.param(name + "/w"), g.param(name + "/b"));
}

Value channel_attention(Graph& g, const std::string& name, Value u, int reduction) {
  const int c = g.value(u).c();
  if (reduction < 1 || c % reduction != 0)
    throw ConfigError("channel width " + std::to_string(c) +
                      " is not divisible by attention reduction " + std::to_string(reduction));
  Value z = g.global_avg_pool(u);
  Value mid = g.relu(conv_layer(g, name + "/c1", z, c / reduction, 1));
  Value s = g.sigmoid(conv_layer(g, name + "/c2", mid, c, 1));
  return g.scale_channels(u, s);
}

Value spatial_attention(Graph& g, const std::string& name, Value u) {
  Value d = g.concat_c(g.channel_mean(u), g.channel_max(u));
  Value m = g.sigmoid(conv_layer(g, name + "/conv", d, 1, 3));
  return g.scale_spatial(u, m);
}

Value dab(Graph& g, const std::string& name, Value t_in, int reduction) {
  const int c = g.value(t_in).c();
  Value u = conv_layer(g, name + "/conv_b", g.relu(conv_layer(g, name + "/conv_a", t_in, c, 3)), c, 3);
  Value att = g.concat_c(channel_attention(g, name + "/ca", u, reduction),
                         spatial_attention(g, name + "/sa", u));
  return g.add(t_in, conv_layer(g, name + "/mc", att, c, 1, /*zero_init=*/true));
}

Value rrg(Graph& g, const std::string& name, Value t_in, int n_dab, int reduction) {
  if (n_dab < 1) throw ConfigError("a residual group needs at least one block");
  Value t = t_in;
  for (int p = 0; p < n_dab; ++p) t = dab(g, name + "/dab" + std::to_string(p), t, reduction);
  const int c = g.value(t_in).c();
  return g.add(t_in, conv_layer(g, name + "/tail", t, c, 3, /*zero_init=*/true));
}

Tensor gaussian_blur(const Tensor& img, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("blur sigma must be positive");
  if (img.rank() != 3) throw DimensionError("blur needs a rank-3 tensor, got " + img.shape_str());
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    kernel[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += kernel[t + radius];
  }
  for (double& k : kernel) k /= sum;

  const int h = img.h(), w = img.w(), c = img.c();
  Tensor rows = Tensor::make3(h, w, c);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t)
          acc += kernel[t + radius] * img.at(i, reflect_index(j + t, w), k);
        rows.at(i, j, k) = acc;
      }
    }
  Tensor out = Tensor::make3(h, w, c);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t)
          acc += kernel[t + radius] * rows.at(reflect_index(i + t, h), j, k);
        out.at(i, j, k) = acc;
      }
  return out;
}

Tensor downscale2(const Tensor& img) {
  if (img.rank() != 3 || img.h() % 2 != 0 || img.w() % 2 != 0)
    throw DimensionError("2x2 downscale needs even rank-3 input, got " + img.shape_str());
  Tensor out = Tensor::make3(img.h() / 2, img.w() / 2, img.c());
  for (int i = 0; i < out.h(); ++i)
    for (int j = 0; j < out.w(); ++j)
      for (int k = 0; k < out.c(); ++k)
        out.at(i, j, k) = 0.25 * (img.at(2 * i, 2 * j, k) + img.at(2 * i, 2 * j + 1, k) +
                                  img.at(2 * i + 1, 2 * j, k) + img.at(2 * i + 1, 2 * j + 1, k));
  return out;
}

}  // namespace rawcycle
