#pragma once

#include <array>
#include <string>
#include <vector>

#include "pidinet/ops.hpp"
#include "pidinet/tensor.hpp"

namespace pidinet {

// Pixel-difference convolution variants. Central/Angular keep a 3x3
// receptive field; Radial reaches into a 5x5 patch.
enum class PdcKind { Vanilla, Central, Angular, Radial };

PdcKind pdc_kind_from_letter(char letter);  // C, A, R, V (case-insensitive)
char pdc_letter(PdcKind kind);
std::string pdc_kind_name(PdcKind kind);

// One difference term: the raw weight at weight_slot (0..8 on the 3x3 grid)
// multiplies patch[plus] - patch[minus]. plus/minus are row-major indices
// into the local patch (3x3 for Central/Angular, 5x5 for Radial).
struct PdcPair {
    int weight_slot;
    int plus;
    int minus;
};

struct PairSet {
    int patch_size;  // 3 or 5
    std::array<PdcPair, 8> pairs;
};

// The pixel-pair selection for each variant. Vanilla has no pairs.
PairSet pair_set(PdcKind kind);

// Kernel geometry after conversion to a dense convolution.
int converted_kernel_size(PdcKind kind);  // 3, except Radial -> 5
int converted_padding(PdcKind kind);      // spatial-size-preserving: 1 or 2

// Rewrites raw difference weights (O, I, 3, 3) as a dense kernel
// (O, I, k, k): each pair contributes +w at plus and -w at minus. Linear and
// exact; the center slot of the raw grid is never read.
Tensor convert_weights(const Tensor& raw, PdcKind kind);

// Adjoint of convert_weights: dense-kernel gradients back to the raw grid.
// The raw center slot stays zero.
Tensor convert_weights_backward(const Tensor& grad_converted, PdcKind kind);

// Difference-form evaluation: y = sum_pairs w * (x_plus - x_minus) at every
// output site, zero-padded. Reference path; the reparameterized path must
// match it to 1e-5 relative.
Tensor pdc_forward_difference_form(const Tensor& x, const Tensor& raw, PdcKind kind,
                                   int stride, int padding, int groups,
                                   const std::vector<real>& bias = {});

// Reparameterized evaluation: convert_weights then conv2d.
Tensor pdc_conv(const Tensor& x, const Tensor& raw, PdcKind kind, int stride,
                int padding, int groups, const std::vector<real>& bias = {});

// Gradients of pdc_conv; kernel gradient lands on the raw weight grid.
ConvGrads pdc_conv_backward(const Tensor& x, const Tensor& raw, PdcKind kind,
                            int stride, int padding, int groups,
                            const std::vector<real>& bias, const Tensor& grad_out);

}  // namespace pidinet
