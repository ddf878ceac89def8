#pragma once

#include <string>

#include "rawcycle/graph.hpp"

namespace rawcycle {

// Learnable building blocks, expressed as tape ops over a Graph. Parameters
// live in the graph's bound store under "<name>/w"-style keys and are
// created on first use: convolution weights get fan-in-scaled uniform init,
// biases start at zero, and the final convolution of each residual branch
// starts at zero so every block begins as the identity map.

// 3x3 or 1x1 convolution layer with named parameters.
Value conv_layer(Graph& g, const std::string& name, Value x, int out_channels,
                 int ksize, bool zero_init = false);

// Squeeze-excitation gate: global average pool, a C -> C/reduction -> C
// bottleneck with rectification, sigmoid, then per-channel rescaling.
Value channel_attention(Graph& g, const std::string& name, Value u, int reduction);

// Per-site gate from channelwise mean and max descriptors through a 3x3
// convolution and sigmoid, broadcast back over channels.
Value spatial_attention(Graph& g, const std::string& name, Value u);

// Dual attention block: U = conv(relu(conv(T))), CA and SA applied to U in
// parallel, concatenated, merged by a zero-initialized 1x1 convolution, and
// added back to the input.
Value dab(Graph& g, const std::string& name, Value t_in, int reduction);

// Recursive residual group: n_dab DABs, a zero-initialized 3x3 convolution,
// and a group-level skip from the input.
Value rrg(Graph& g, const std::string& name, Value t_in, int n_dab, int reduction);

// Plain (non-tape) separable Gaussian blur: kernel radius ceil(4*sigma),
// kernel normalized to sum 1, symmetric boundary. Only ever applied to
// network inputs, so it needs no gradient.
Tensor gaussian_blur(const Tensor& img, double sigma);

// 2x2 block-average downscale used to align the color branch with the
// packed grid.
Tensor downscale2(const Tensor& img);

}  // namespace rawcycle
