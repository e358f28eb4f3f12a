#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pidinet/config.hpp"
#include "pidinet/ops.hpp"
#include "pidinet/pdc.hpp"

namespace pidinet {

// Evaluation path for PDC layers: reparameterized (convert + dense conv,
// the production path) or the pairwise difference form (reference path).
enum class ConvPath { Reparam, Difference };

struct ConvLayer {
    std::string name;
    PdcKind kind = PdcKind::Vanilla;
    int in_ch = 0, out_ch = 0;
    int ksize = 3;       // stored kernel size; PDC layers hold the raw 3x3 grid
    int groups = 1;
    int stride = 1;
    int padding = 1;     // used by vanilla layers; PDC padding follows the kind
    int dilation = 1;
    Tensor weight;       // (out_ch, in_ch/groups, ksize, ksize)
    std::vector<real> bias;       // empty = no bias
    std::vector<real> bias_grad;  // sized with bias

    bool is_pdc() const { return kind != PdcKind::Vanilla; }
    int effective_padding() const { return is_pdc() ? converted_padding(kind) : padding; }

    ConvParams effective() const;  // dense parameters (conversion applied)
    Tensor forward(const Tensor& x, ConvPath path = ConvPath::Reparam) const;
    // Accumulates into weight.grad / bias_grad, returns the input gradient.
    Tensor backward(const Tensor& x, const Tensor& grad_out);

    std::int64_t learnable_params() const;  // frozen PDC center slots excluded
    std::int64_t macs(std::int64_t out_h, std::int64_t out_w) const;
};

struct ResidualBlock {
    ConvLayer dw;                       // depthwise 3x3, PDC or vanilla, no bias
    ConvLayer pw;                       // pointwise 1x1, bias
    std::optional<ConvLayer> shortcut;  // 1x1 projection at stage transitions
};

struct Cdcm {
    ConvLayer conv_in;                  // 1x1 nC -> M, bias
    std::array<ConvLayer, 4> dilated;   // 3x3 M -> M, dilations 5/7/9/11, no bias
};

struct Csam {
    ConvLayer conv_mid;   // 1x1 -> 4 channels, bias
    ConvLayer conv_attn;  // 3x3 4 -> 1, no bias
};

struct SideHead {
    std::optional<Cdcm> cdcm;
    std::optional<Csam> csam;
    ConvLayer reduce;     // 1x1 -> 1 channel, bias
};

struct PiDiNetModel {
    ArchConfig cfg;
    std::uint64_t seed = 0;
    bool converted = false;  // PDC kernels already materialized as dense ones
    ConvLayer init_conv;
    std::vector<ResidualBlock> blocks;  // 15: stage sizes 3/4/4/4 after the init layer
    std::array<SideHead, 4> heads;
    ConvLayer fusion;  // 1x1 over the 4 concatenated side logits, bias

    int stage_channels(int stage) const {
        static constexpr int mult[4] = {1, 2, 4, 4};
        return cfg.base_channels * mult[stage];
    }
};

// Deterministic construction: weights ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in))
// from a seeded xoshiro stream, biases zero, fusion at uniform 0.25.
PiDiNetModel build_model(const ArchConfig& cfg, std::uint64_t seed);

struct ForwardResult {
    std::array<Tensor, 4> side;  // per-stage edge maps, (N,1,H,W), in (0,1)
    Tensor fused;                // the test-time prediction
};

// Intermediates cached during a training forward; consumed by backward().
struct BlockTrace {
    Tensor x;        // block input
    Tensor dw_out;   // depthwise output, pre-ReLU
    Tensor act;      // ReLU(dw_out)
};
struct CdcmTrace {
    Tensor x;
    Tensor pre;      // conv_in output, pre-ReLU
    Tensor act;
};
struct CsamTrace {
    Tensor x;
    Tensor mid;      // conv_mid output, pre-ReLU
    Tensor mid_act;
    Tensor attn;     // sigmoid attention map (N,1,H,W)
};
struct HeadTrace {
    std::optional<CdcmTrace> cdcm;
    std::optional<CsamTrace> csam;
    Tensor reduce_in;
    Tensor reduce_out;
    Tensor logits;     // upsampled to input size
    Tensor map;        // sigmoid(logits)
};
struct ForwardTrace {
    Tensor input;
    std::array<Tensor, 4> stage_out;
    std::vector<BlockTrace> blocks;
    std::array<PoolResult, 3> pools;
    std::array<HeadTrace, 4> heads;
    Tensor fusion_in;
    Tensor fused_map;
};

ForwardResult forward(const PiDiNetModel& m, const Tensor& x,
                      ConvPath path = ConvPath::Reparam);
ForwardResult forward(const PiDiNetModel& m, const Tensor& x, ForwardTrace& trace);

void zero_grads(PiDiNetModel& m);

// Reverse pass; gradients are w.r.t. the five sigmoid outputs (4 side maps +
// fused map) and accumulate into every layer's weight.grad / bias_grad.
void backward(PiDiNetModel& m, const ForwardTrace& trace,
              const std::array<Tensor, 4>& grad_side_maps, const Tensor& grad_fused_map);

// Stable enumeration of parameter blocks (optimizer + serialization order).
struct ParamBlockRef {
    std::string name;
    Tensor* weight;
    std::vector<real>* bias;       // nullptr when the layer has none
    std::vector<real>* bias_grad;
};
std::vector<ParamBlockRef> param_blocks(PiDiNetModel& m);
std::int64_t stored_param_count(const PiDiNetModel& m);  // every stored scalar

struct LayerCost {
    std::string name;
    std::int64_t params;
    std::int64_t macs;
};
std::vector<LayerCost> layer_costs(const PiDiNetModel& m, int h, int w);

std::int64_t count_params(const PiDiNetModel& m);
std::int64_t count_macs(const PiDiNetModel& m, int h, int w);

// Rewrites every PDC block as a dense convolution (Radial becomes 5x5 with
// padding 2). Forward outputs match the original within 1e-5 relative.
PiDiNetModel convert_model_for_inference(const PiDiNetModel& m);

}  // namespace pidinet
