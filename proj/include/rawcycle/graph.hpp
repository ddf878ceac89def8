#pragma once

#include <string>
#include <vector>

#include "rawcycle/params.hpp"
#include "rawcycle/tensor.hpp"

namespace rawcycle {

// Reverse-mode autodiff on a tape. A Graph records one forward pass eagerly
// (each op call computes its value immediately); backward() then sweeps the
// tape once in reverse and accumulates parameter gradients into the bound
// ParamStore. Graphs are built fresh per training step and are cheap to
// discard. Everything runs in double precision, single threaded, with a
// fully deterministic order of operations.

struct Value {
  int id = -1;
};

class Graph {
 public:
  explicit Graph(ParamStore* params = nullptr) : params_(params) {}

  // Leaves. input() copies the tensor onto the tape; param() reads the named
  // entry from the bound store and routes gradients back to it.
  Value input(Tensor t);
  Value param(const std::string& name);

  // Same-size convolution with symmetric reflective padding. w is a rank-4
  // kernel (oc, kh, kw, ic) with kh == kw odd; b is a rank-1 bias of size oc.
  Value conv2d(Value x, Value w, Value b);

  Value relu(Value x);
  Value sigmoid(Value x);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value hadamard(Value a, Value b);

  // Broadcast scalings: s is 1x1xC (per-channel gate), m is HxWx1 (per-site
  // gate applied across channels).
  Value scale_channels(Value x, Value s);
  Value scale_spatial(Value x, Value m);
  Value scale_const(Value x, double k);

  Value global_avg_pool(Value x);  // HxWxC -> 1x1xC
  Value channel_mean(Value x);     // HxWxC -> HxWx1
  Value channel_max(Value x);      // HxWxC -> HxWx1
  Value concat_c(Value a, Value b);

  // HxWx(C*k^2) -> (kH)x(kW)xC; input channel c*k*k + di*k + dj lands at
  // spatial offset (di, dj) of output channel c.
  Value pixel_shuffle(Value x, int k);

  // Bayer geometry on the tape, always in RGGB phase.
  Value mosaic_rggb(Value x);  // HxWx3 -> HxWx1
  Value pack_rggb(Value x);    // HxWx1 -> (H/2)x(W/2)x4

  Value log_clamp(Value x, double eps);  // elementwise log(max(x, eps))

  // Scalar reductions (rank-1 size-1 outputs).
  Value mean_abs_diff(Value a, Value b);
  Value dot(Value a, Value b);

  ParamStore* params() const { return params_; }

  const Tensor& value(Value v) const;
  // Gradient of the last backward() target with respect to this node.
  const Tensor& grad(Value v) const;

  // Reverse sweep from a scalar node. Parameter gradients are accumulated
  // (+=) into the store, so multi-sample batches sum naturally; call the
  // store's zero_grads() between steps.
  void backward(Value loss);

  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    kInput, kParam, kConv2d, kRelu, kSigmoid, kAdd, kSub, kHadamard,
    kScaleChannels, kScaleSpatial, kScaleConst, kGlobalAvgPool, kChannelMean,
    kChannelMax, kConcatC, kPixelShuffle, kMosaicRggb, kPackRggb, kLogClamp,
    kMeanAbsDiff, kDot,
  };

  struct Node {
    Op op;
    std::vector<int> in;
    Tensor value;
    Tensor grad;
    double k = 0.0;          // scale factor or clamp epsilon
    int shuffle = 1;         // pixel-shuffle factor
    std::string param_name;  // kParam only
    std::vector<int> argmax; // kChannelMax backward routing
  };

  Value push(Node node);
  const Node& at(Value v) const;
  void check_same_shape(const char* op, Value a, Value b) const;

  ParamStore* params_;
  std::vector<Node> nodes_;
};

}  // namespace rawcycle
