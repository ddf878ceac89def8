#include "rawcycle/graph.hpp"

#include <cmath>

#include "rawcycle/bayer.hpp"
#include "rawcycle/errors.hpp"

namespace rawcycle {

namespace {

void require_rank3(const char* op, const Tensor& t) {
  if (t.rank() != 3)
    throw DimensionError(std::string(op) + " needs a rank-3 tensor, got " + t.shape_str());
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Value Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return {static_cast<int>(nodes_.size()) - 1};
}

const Graph::Node& Graph::at(Value v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw ArgumentError("value handle does not belong to this graph");
  return nodes_[v.id];
}

void Graph::check_same_shape(const char* op, Value a, Value b) const {
  if (!at(a).value.same_shape(at(b).value))
    throw DimensionError(std::string(op) + ": shape mismatch " + at(a).value.shape_str() +
                         " vs " + at(b).value.shape_str());
}

const Tensor& Graph::value(Value v) const { return at(v).value; }

const Tensor& Graph::grad(Value v) const {
  const Node& n = at(v);
  if (n.grad.empty()) throw ArgumentError("gradient not computed; call backward first");
  return n.grad;
}

Value Graph::input(Tensor t) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(t);
  return push(std::move(n));
}

Value Graph::param(const std::string& name) {
  if (!params_) throw ConfigError("graph has no parameter store bound");
  Node n;
  n.op = Op::kParam;
  n.value = params_->tensor(name);
  n.param_name = name;
  return push(std::move(n));
}

Value Graph::conv2d(Value x, Value w, Value b) {
  const Tensor& xv = at(x).value;
  const Tensor& wv = at(w).value;
  const Tensor& bv = at(b).value;
  require_rank3("conv2d", xv);
  if (wv.rank() != 4) throw DimensionError("conv2d kernel must be rank 4, got " + wv.shape_str());
  const int oc = wv.dim(0), kh = wv.dim(1), kw = wv.dim(2), ic = wv.dim(3);
  if (kh != kw || kh % 2 == 0)
    throw DimensionError("conv2d kernel must be square with odd size, got " + wv.shape_str());
  if (ic != xv.c())
    throw DimensionError("conv2d kernel expects " + std::to_string(ic) + " input channels, image has " +
                         std::to_string(xv.c()));
  if (bv.rank() != 1 || bv.dim(0) != oc)
    throw DimensionError("conv2d bias must be rank 1 of size " + std::to_string(oc));

  const int h = xv.h(), wd = xv.w(), r = kh / 2;
  Node n;
  n.op = Op::kConv2d;
  n.in = {x.id, w.id, b.id};
  n.value = Tensor::make3(h, wd, oc);

  std::vector<int> rows(static_cast<std::size_t>(h) * kh), cols(static_cast<std::size_t>(wd) * kw);
  for (int i = 0; i < h; ++i)
    for (int d = 0; d < kh; ++d) rows[i * kh + d] = reflect_index(i + d - r, h);
  for (int j = 0; j < wd; ++j)
    for (int d = 0; d < kw; ++d) cols[j * kw + d] = reflect_index(j + d - r, wd);

  const int taps = kh * kw;
  std::vector<const double*> tap(taps);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < wd; ++j) {
      for (int di = 0; di < kh; ++di)
        for (int dj = 0; dj < kw; ++dj)
          tap[di * kw + dj] = &xv.at(rows[i * kh + di], cols[j * kw + dj], 0);
      double* out = &n.value.at(i, j, 0);
      const double* wp = wv.data();
      for (int o = 0; o < oc; ++o) {
        double acc = bv[o];
        for (int t = 0; t < taps; ++t) {
          const double* xp = tap[t];
          for (int c = 0; c < ic; ++c) acc += wp[c] * xp[c];
          wp += ic;
        }
        out[o] = acc;
      }
    }
  }
  return push(std::move(n));
}

Value Graph::relu(Value x) {
  Node n;
  n.op = Op::kRelu;
  n.in = {x.id};
  n.value = at(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    if (n.value[i] < 0.0) n.value[i] = 0.0;
  return push(std::move(n));
}

Value Graph::sigmoid(Value x) {
  Node n;
  n.op = Op::kSigmoid;
  n.in = {x.id};
  n.value = at(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = 1.0 / (1.0 + std::exp(-n.value[i]));
  return push(std::move(n));
}

Value Graph::add(Value a, Value b) {
  check_same_shape("add", a, b);
  Node n;
  n.op = Op::kAdd;
  n.in = {a.id, b.id};
  n.value = at(a).value + at(b).value;
  return push(std::move(n));
}

Value Graph::sub(Value a, Value b) {
  check_same_shape("sub", a, b);
  Node n;
  n.op = Op::kSub;
  n.in = {a.id, b.id};
  n.value = at(a).value - at(b).value;
  return push(std::move(n));
}

Value Graph::hadamard(Value a, Value b) {
  check_same_shape("hadamard", a, b);
  Node n;
  n.op = Op::kHadamard;
  n.in = {a.id, b.id};
  n.value = at(a).value;
  const Tensor& bv = at(b).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= bv[i];
  return push(std::move(n));
}

Value Graph::scale_channels(Value x, Value s) {
  const Tensor& xv = at(x).value;
  const Tensor& sv = at(s).value;
  require_rank3("scale_channels", xv);
  if (sv.rank() != 3 || sv.h() != 1 || sv.w() != 1 || sv.c() != xv.c())
    throw DimensionError("scale_channels gate must be 1x1x" + std::to_string(xv.c()) + ", got " +
                         sv.shape_str());
  Node n;
  n.op = Op::kScaleChannels;
  n.in = {x.id, s.id};
  n.value = xv;
  const int c = xv.c();
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= sv[i % c];
  return push(std::move(n));
}

Value Graph::scale_spatial(Value x, Value m) {
  const Tensor& xv = at(x).value;
  const Tensor& mv = at(m).value;
  require_rank3("scale_spatial", xv);
  if (mv.rank() != 3 || mv.h() != xv.h() || mv.w() != xv.w() || mv.c() != 1)
    throw DimensionError("scale_spatial gate must be " + std::to_string(xv.h()) + "x" +
                         std::to_string(xv.w()) + "x1, got " + mv.shape_str());
  Node n;
  n.op = Op::kScaleSpatial;
  n.in = {x.id, m.id};
  n.value = xv;
  const int c = xv.c();
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= mv[i / c];
  return push(std::move(n));
}

Value Graph::scale_const(Value x, double k) {
  Node n;
  n.op = Op::kScaleConst;
  n.in = {x.id};
  n.k = k;
  n.value = at(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= k;
  return push(std::move(n));
}

Value Graph::global_avg_pool(Value x) {
  const Tensor& xv = at(x).value;
  require_rank3("global_avg_pool", xv);
  Node n;
  n.op = Op::kGlobalAvgPool;
  n.in = {x.id};
  n.value = Tensor::make3(1, 1, xv.c());
  const int c = xv.c();
  const double inv = 1.0 / (static_cast<double>(xv.h()) * xv.w());
  for (std::size_t i = 0; i < xv.size(); ++i) n.value[i % c] += xv[i];
  for (int k = 0; k < c; ++k) n.value[k] *= inv;
  return push(std::move(n));
}

Value Graph::channel_mean(Value x) {
  const Tensor& xv = at(x).value;
  require_rank3("channel_mean", xv);
  Node n;
  n.op = Op::kChannelMean;
  n.in = {x.id};
  n.value = Tensor::make3(xv.h(), xv.w(), 1);
  const int c = xv.c();
  const double inv = 1.0 / c;
  for (std::size_t i = 0; i < xv.size(); ++i) n.value[i / c] += xv[i];
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= inv;
  return push(std::move(n));
}

Value Graph::channel_max(Value x) {
  const Tensor& xv = at(x).value;
  require_rank3("channel_max", xv);
  Node n;
  n.op = Op::kChannelMax;
  n.in = {x.id};
  n.value = Tensor::make3(xv.h(), xv.w(), 1);
  const int c = xv.c();
  n.argmax.resize(n.value.size());
  for (std::size_t p = 0; p < n.value.size(); ++p) {
    const double* row = &xv[p * c];
    int best = 0;
    for (int k = 1; k < c; ++k)
      if (row[k] > row[best]) best = k;
    n.value[p] = row[best];
    n.argmax[p] = best;
  }
  return push(std::move(n));
}

Value Graph::concat_c(Value a, Value b) {
  const Tensor& av = at(a).value;
  const Tensor& bv = at(b).value;
  require_rank3("concat_c", av);
  require_rank3("concat_c", bv);
  if (av.h() != bv.h() || av.w() != bv.w())
    throw DimensionError("concat_c: spatial mismatch " + av.shape_str() + " vs " + bv.shape_str());
  Node n;
  n.op = Op::kConcatC;
  n.in = {a.id, b.id};
  const int ca = av.c(), cb = bv.c();
  n.value = Tensor::make3(av.h(), av.w(), ca + cb);
  for (int i = 0; i < av.h(); ++i)
    for (int j = 0; j < av.w(); ++j) {
      for (int k = 0; k < ca; ++k) n.value.at(i, j, k) = av.at(i, j, k);
      for (int k = 0; k < cb; ++k) n.value.at(i, j, ca + k) = bv.at(i, j, k);
    }
  return push(std::move(n));
}

Value Graph::pixel_shuffle(Value x, int k) {
  const Tensor& xv = at(x).value;
  require_rank3("pixel_shuffle", xv);
  if (k < 1) throw DimensionError("pixel_shuffle factor must be >= 1");
  if (xv.c() % (k * k) != 0)
    throw DimensionError("pixel_shuffle needs channels divisible by " + std::to_string(k * k) +
                         ", got " + std::to_string(xv.c()));
  Node n;
  n.op = Op::kPixelShuffle;
  n.in = {x.id};
  n.shuffle = k;
  const int c_out = xv.c() / (k * k);
  n.value = Tensor::make3(xv.h() * k, xv.w() * k, c_out);
  for (int i = 0; i < xv.h(); ++i)
    for (int j = 0; j < xv.w(); ++j)
      for (int c = 0; c < c_out; ++c)
        for (int di = 0; di < k; ++di)
          for (int dj = 0; dj < k; ++dj)
            n.value.at(i * k + di, j * k + dj, c) = xv.at(i, j, c * k * k + di * k + dj);
  return push(std::move(n));
}

Value Graph::mosaic_rggb(Value x) {
  const Tensor& xv = at(x).value;
  require_rank3("mosaic_rggb", xv);
  if (xv.c() != 3) throw DimensionError("mosaic_rggb needs HxWx3, got " + xv.shape_str());
  if (xv.h() % 2 != 0 || xv.w() % 2 != 0)
    throw DimensionError("mosaic_rggb needs even dimensions, got " + xv.shape_str());
  Node n;
  n.op = Op::kMosaicRggb;
  n.in = {x.id};
  n.value = Tensor::make3(xv.h(), xv.w(), 1);
  for (int i = 0; i < xv.h(); ++i)
    for (int j = 0; j < xv.w(); ++j)
      n.value.at(i, j, 0) = xv.at(i, j, bayer_color_at(BayerPattern::kRggb, i, j));
  return push(std::move(n));
}

Value Graph::pack_rggb(Value x) {
  const Tensor& xv = at(x).value;
  require_rank3("pack_rggb", xv);
  if (xv.c() != 1) throw DimensionError("pack_rggb needs HxWx1, got " + xv.shape_str());
  if (xv.h() % 2 != 0 || xv.w() % 2 != 0)
    throw DimensionError("pack_rggb needs even dimensions, got " + xv.shape_str());
  Node n;
  n.op = Op::kPackRggb;
  n.in = {x.id};
  n.value = Tensor::make3(xv.h() / 2, xv.w() / 2, 4);
  for (int i = 0; i < n.value.h(); ++i)
    for (int j = 0; j < n.value.w(); ++j) {
      n.value.at(i, j, 0) = xv.at(2 * i, 2 * j, 0);
      n.value.at(i, j, 1) = xv.at(2 * i, 2 * j + 1, 0);
      n.value.at(i, j, 2) = xv.at(2 * i + 1, 2 * j, 0);
      n.value.at(i, j, 3) = xv.at(2 * i + 1, 2 * j + 1, 0);
    }
  return push(std::move(n));
}

Value Graph::log_clamp(Value x, double eps) {
  if (!(eps > 0.0)) throw ArgumentError("log_clamp epsilon must be positive");
  Node n;
  n.op = Op::kLogClamp;
  n.in = {x.id};
  n.k = eps;
  n.value = at(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    n.value[i] = std::log(n.value[i] > eps ? n.value[i] : eps);
  return push(std::move(n));
}

Value Graph::mean_abs_diff(Value a, Value b) {
  check_same_shape("mean_abs_diff", a, b);
  Node n;
  n.op = Op::kMeanAbsDiff;
  n.in = {a.id, b.id};
  const Tensor& av = at(a).value;
  const Tensor& bv = at(b).value;
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  n.value = Tensor::make1(1, s / static_cast<double>(av.size()));
  return push(std::move(n));
}

Value Graph::dot(Value a, Value b) {
  check_same_shape("dot", a, b);
  Node n;
  n.op = Op::kDot;
  n.in = {a.id, b.id};
  const Tensor& av = at(a).value;
  const Tensor& bv = at(b).value;
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  n.value = Tensor::make1(1, s);
  return push(std::move(n));
}

void Graph::backward(Value loss) {
  Node& top = nodes_.at(loss.id);
  if (top.value.size() != 1)
    throw DimensionError("backward target must be scalar, got " + top.value.shape_str());
  for (Node& n : nodes_) n.grad = Tensor::zeros_like(n.value);
  top.grad[0] = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::kInput:
      case Op::kParam:
        break;
      case Op::kConv2d: {
        const Tensor& xv = nodes_[n.in[0]].value;
        const Tensor& wv = nodes_[n.in[1]].value;
        Tensor& dx = nodes_[n.in[0]].grad;
        Tensor& dw = nodes_[n.in[1]].grad;
        Tensor& db = nodes_[n.in[2]].grad;
        const int oc = wv.dim(0), kh = wv.dim(1), kw = wv.dim(2), ic = wv.dim(3);
        const int h = xv.h(), wd = xv.w(), r = kh / 2, taps = kh * kw;
        std::vector<int> rows(static_cast<std::size_t>(h) * kh),
            cols(static_cast<std::size_t>(wd) * kw);
        for (int i = 0; i < h; ++i)
          for (int d = 0; d < kh; ++d) rows[i * kh + d] = reflect_index(i + d - r, h);
        for (int j = 0; j < wd; ++j)
          for (int d = 0; d < kw; ++d) cols[j * kw + d] = reflect_index(j + d - r, wd);
        std::vector<const double*> tap(taps);
        std::vector<double*> dtap(taps);
        for (int i = 0; i < h; ++i) {
          for (int j = 0; j < wd; ++j) {
            for (int di = 0; di < kh; ++di)
              for (int dj = 0; dj < kw; ++dj) {
                const int t = di * kw + dj;
                tap[t] = &xv.at(rows[i * kh + di], cols[j * kw + dj], 0);
                dtap[t] = &dx.at(rows[i * kh + di], cols[j * kw + dj], 0);
              }
            const double* gout = &g.at(i, j, 0);
            const double* wp = wv.data();
            double* dwp = dw.data();
            for (int o = 0; o < oc; ++o) {
              const double go = gout[o];
              db[o] += go;
              for (int t = 0; t < taps; ++t) {
                const double* xp = tap[t];
                double* dxp = dtap[t];
                for (int c = 0; c < ic; ++c) {
                  dxp[c] += wp[c] * go;
                  dwp[c] += xp[c] * go;
                }
                wp += ic;
                dwp += ic;
              }
            }
          }
        }
        break;
      }
      case Op::kRelu: {
        const Tensor& xv = nodes_[n.in[0]].value;
        Tensor& dx = nodes_[n.in[0]].grad;
        for (std::size_t i = 0; i < g.size(); ++i)
          if (xv[i] > 0.0) dx[i] += g[i];
        break;
      }
      case Op::kSigmoid: {
        Tensor& dx = nodes_[n.in[0]].grad;
        for (std::size_t i = 0; i < g.size(); ++i)
          dx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        break;
      }
      case Op::kAdd: {
        Tensor& da = nodes_[n.in[0]].grad;
        Tensor& db = nodes_[n.in[1]].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          da[i] += g[i];
          db[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        Tensor& da = nodes_[n.in[0]].grad;
        Tensor& db = nodes_[n.in[1]].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          da[i] += g[i];
          db[i] -= g[i];
        }
        break;
      }
      case Op::kHadamard: {
        const Tensor& av = nodes_[n.in[0]].value;
        const Tensor& bv = nodes_[n.in[1]].value;
        Tensor& da = nodes_[n.in[0]].grad;
        Tensor& db = nodes_[n.in[1]].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          da[i] += g[i] * bv[i];
          db[i] += g[i] * av[i];
        }
        break;
      }
      case Op::kScaleChannels: {
        const Tensor& xv = nodes_[n.in[0]].value;
        const Tensor& sv = nodes_[n.in[1]].value;
        Tensor& dx = nodes_[n.in[0]].grad;
        Tensor& ds = nodes_[n.in[1]].grad;
        const int c = xv.c();
        for (std::size_t i = 0; i < g.size(); ++i) {
          dx[i] += g[i] * sv[i % c];
          ds[i % c] += g[i] * xv[i];
        }
        break;
      }
      case Op::kScaleSpatial: {
        const Tensor& xv = nodes_[n.in[0]].value;
        const Tensor& mv = nodes_[n.in[1]].value;
        Tensor& dx = nodes_[n.in[0]].grad;
        Tensor& dm = nodes_[n.in[1]].grad;
        const int c = xv.c();
        for (std::size_t i = 0; i < g.size(); ++i) {
          dx[i] += g[i] * mv[i / c];
          dm[i / c] += g[i] * xv[i];
        }
        break;
      }
      case Op::kScaleConst: {
        Tensor& dx = nodes_[n.in[0]].grad;
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * n.k;
        break;
      }
      case Op::kGlobalAvgPool: {
        const Tensor& xv = nodes_[n.in[0]].value;
        Tensor& dx = nodes_[n.in[0]].grad;
        const int c = xv.c();
        const double inv = 1.0 / (static_cast<double>(xv.h()) * xv.w());
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i % c] * inv;
        break;
      }
      case Op::kChannelMean: {
        Tensor& dx = nodes_[n.in[0]].grad;
        const int c = nodes_[n.in[0]].value.c();
        const double inv = 1.0 / c;
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i / c] * inv;
        break;
      }
      case Op::kChannelMax: {
        Tensor& dx = nodes_[n.in[0]].grad;
        const int c = nodes_[n.in[0]].value.c();
        for (std::size_t p = 0; p < g.size(); ++p) dx[p * c + n.argmax[p]] += g[p];
        break;
      }
      case Op::kConcatC: {
        Tensor& da = nodes_[n.in[0]].grad;
        Tensor& db = nodes_[n.in[1]].grad;
        const int ca = da.c(), cb = db.c();
        for (int i = 0; i < n.value.h(); ++i)
          for (int j = 0; j < n.value.w(); ++j) {
            for (int k = 0; k < ca; ++k) da.at(i, j, k) += g.at(i, j, k);
            for (int k = 0; k < cb; ++k) db.at(i, j, k) += g.at(i, j, ca + k);
          }
        break;
      }
      case Op::kPixelShuffle: {
        Tensor& dx = nodes_[n.in[0]].grad;
        const int k = n.shuffle;
        const int c_out = n.value.c();
        for (int i = 0; i < dx.h(); ++i)
          for (int j = 0; j < dx.w(); ++j)
            for (int c = 0; c < c_out; ++c)
              for (int di = 0; di < k; ++di)
                for (int dj = 0; dj < k; ++dj)
                  dx.at(i, j, c * k * k + di * k + dj) += g.at(i * k + di, j * k + dj, c);
        break;
      }
      case Op::kMosaicRggb: {
        Tensor& dx = nodes_[n.in[0]].grad;
        for (int i = 0; i < n.value.h(); ++i)
          for (int j = 0; j < n.value.w(); ++j)
            dx.at(i, j, bayer_color_at(BayerPattern::kRggb, i, j)) += g.at(i, j, 0);
        break;
      }
      case Op::kPackRggb: {
        Tensor& dx = nodes_[n.in[0]].grad;
        for (int i = 0; i < n.value.h(); ++i)
          for (int j = 0; j < n.value.w(); ++j) {
            dx.at(2 * i, 2 * j, 0) += g.at(i, j, 0);
            dx.at(2 * i, 2 * j + 1, 0) += g.at(i, j, 1);
            dx.at(2 * i + 1, 2 * j, 0) += g.at(i, j, 2);
            dx.at(2 * i + 1, 2 * j + 1, 0) += g.at(i, j, 3);
          }
        break;
      }
      case Op::kLogClamp: {
        const Tensor& xv = nodes_[n.in[0]].value;
        Tensor& dx = nodes_[n.in[0]].grad;
        for (std::size_t i = 0; i < g.size(); ++i)
          if (xv[i] > n.k) dx[i] += g[i] / xv[i];
        break;
      }
      case Op::kMeanAbsDiff: {
        const Tensor& av = nodes_[n.in[0]].value;
        const Tensor& bv = nodes_[n.in[1]].value;
        Tensor& da = nodes_[n.in[0]].grad;
        Tensor& db = nodes_[n.in[1]].grad;
        const double go = g[0] / static_cast<double>(av.size());
        for (std::size_t i = 0; i < av.size(); ++i) {
          const double s = sgn(av[i] - bv[i]);
          da[i] += go * s;
          db[i] -= go * s;
        }
        break;
      }
      case Op::kDot: {
        const Tensor& av = nodes_[n.in[0]].value;
        const Tensor& bv = nodes_[n.in[1]].value;
        Tensor& da = nodes_[n.in[0]].grad;
        Tensor& db = nodes_[n.in[1]].grad;
        for (std::size_t i = 0; i < av.size(); ++i) {
          da[i] += g[0] * bv[i];
          db[i] += g[0] * av[i];
        }
        break;
      }
    }
  }

  if (params_) {
    for (const Node& n : nodes_)
      if (n.op == Op::kParam) {
        Tensor& pg = params_->grad(n.param_name);
        for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
      }
  }
}

}  // namespace rawcycle
