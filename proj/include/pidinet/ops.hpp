#pragma once

#include <cstdint>
#include <vector>

#include "pidinet/tensor.hpp"

namespace pidinet {

// Dense convolution parameters. kernel is (C_out, C_in/groups, kH, kW).
struct ConvParams {
    Tensor kernel;
    int groups = 1;
    int stride = 1;
    int padding = 0;
    int dilation = 1;
    std::vector<real> bias;  // empty = no bias

    int out_channels() const { return kernel.n; }
    int in_per_group() const { return kernel.c; }
    int kh() const { return kernel.h; }
    int kw() const { return kernel.w; }
};

// Zero-padded direct convolution; accumulates in double.
Tensor conv2d(const Tensor& x, const ConvParams& p);

struct ConvGrads {
    Tensor x;                    // same shape as the forward input
    Tensor kernel;               // same shape as p.kernel
    std::vector<real> bias;      // empty when p has no bias
};

// Analytic adjoint of conv2d for the given upstream gradient.
ConvGrads conv2d_backward(const Tensor& x, const ConvParams& p, const Tensor& grad_out);

// 2x2/stride-2 max pooling; odd trailing row/column are dropped. argmax holds
// the flat input offset of each window maximum (first index wins ties).
struct PoolResult {
    Tensor y;
    std::vector<std::int32_t> argmax;
};
PoolResult maxpool2(const Tensor& x);
Tensor maxpool2_backward(const Tensor& x, const PoolResult& fwd, const Tensor& grad_out);

// Bilinear interpolation with half-pixel centers:
//   src = (dst + 0.5) * (in / out) - 0.5, clamped to [0, in - 1].
Tensor bilinear_upsample(const Tensor& x, int out_h, int out_w);
Tensor bilinear_upsample_backward(int in_h, int in_w, const Tensor& grad_out);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

Tensor sigmoid(const Tensor& x);
// y must be the sigmoid output; returns grad_out * y * (1 - y).
Tensor sigmoid_backward_from_output(const Tensor& y, const Tensor& grad_out);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// mul backward: grad_a = grad_out .* b, grad_b = grad_out .* a.

// Stacks along the channel axis; all parts must share N, H, W.
Tensor concat_channels(const std::vector<const Tensor*>& parts);
std::vector<Tensor> concat_channels_backward(const std::vector<int>& channels,
                                             const Tensor& grad_out);

}  // namespace pidinet
