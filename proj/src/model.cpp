#include "pidinet/model.hpp"

#include <cmath>

#include "pidinet/rng.hpp"

namespace pidinet {

ConvParams ConvLayer::effective() const {
    ConvParams p;
    if (is_pdc()) {
        p.kernel = convert_weights(weight, kind);
        p.padding = converted_padding(kind);
    } else {
        p.kernel = weight;
        p.kernel.grad.clear();
        p.padding = padding;
    }
    p.groups = groups;
    p.stride = stride;
    p.dilation = dilation;
    p.bias = bias;
    return p;
}

Tensor ConvLayer::forward(const Tensor& x, ConvPath path) const {
    if (path == ConvPath::Difference && is_pdc())
        return pdc_forward_difference_form(x, weight, kind, stride, effective_padding(),
                                           groups, bias);
    return conv2d(x, effective());
}

Tensor ConvLayer::backward(const Tensor& x, const Tensor& grad_out) {
    ConvGrads g;
    if (is_pdc()) {
        g = pdc_conv_backward(x, weight, kind, stride, effective_padding(), groups, bias,
                              grad_out);
    } else {
        g = conv2d_backward(x, effective(), grad_out);
    }
    weight.ensure_grad();
    for (std::size_t i = 0; i < weight.grad.size(); ++i) weight.grad[i] += g.kernel.data[i];
    if (!bias.empty()) {
        if (bias_grad.size() != bias.size()) bias_grad.assign(bias.size(), real(0));
        for (std::size_t i = 0; i < bias.size(); ++i) bias_grad[i] += g.bias[i];
    }
    return std::move(g.x);
}

std::int64_t ConvLayer::learnable_params() const {
    const std::int64_t slices = std::int64_t(weight.n) * weight.c;
    const std::int64_t per_slice = is_pdc() ? 8 : std::int64_t(ksize) * ksize;
    return slices * per_slice + std::int64_t(bias.size());
}

std::int64_t ConvLayer::macs(std::int64_t out_h, std::int64_t out_w) const {
    const int k = is_pdc() ? converted_kernel_size(kind) : ksize;
    return out_h * out_w * std::int64_t(out_ch) * (std::int64_t(in_ch) / groups) * k * k;
}

namespace {

ConvLayer make_conv(std::string name, PdcKind kind, int in_ch, int out_ch, int ksize,
                    int groups, bool with_bias, int padding, int dilation = 1) {
    ConvLayer l;
    l.name = std::move(name);
    l.kind = kind;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.ksize = ksize;
    l.groups = groups;
    l.stride = 1;
    l.padding = padding;
    l.dilation = dilation;
    l.weight = Tensor(out_ch, in_ch / groups, ksize, ksize);
    if (with_bias) {
        l.bias.assign(std::size_t(out_ch), real(0));
        l.bias_grad.assign(std::size_t(out_ch), real(0));
    }
    return l;
}

void init_weights(ConvLayer& l, Rng& rng) {
    const double fan_in = double(l.weight.c) * l.weight.h * l.weight.w;
    const double bound = std::sqrt(1.0 / fan_in);
    const std::int64_t slices = std::int64_t(l.weight.n) * l.weight.c;
    if (l.is_pdc()) {
        for (std::int64_t s = 0; s < slices; ++s) {
            real* grid = l.weight.data.data() + s * 9;
            for (int i = 0; i < 9; ++i)
                grid[i] = (i == 4) ? real(0) : real(rng.uniform(-bound, bound));
        }
    } else {
        for (auto& v : l.weight.data) v = real(rng.uniform(-bound, bound));
    }
}

}  // namespace

PiDiNetModel build_model(const ArchConfig& cfg, std::uint64_t seed) {
    if (cfg.base_channels <= 1) throw ConfigError("base channel count must exceed 1");
    if (cfg.use_cdcm && cfg.cdcm_channels >= cfg.base_channels)
        throw ConfigError("cdcm channels must stay below the base channel count");
    PiDiNetModel m;
    m.cfg = cfg;
    m.seed = seed;

    const int C = cfg.base_channels;
    const int M = cfg.cdcm_channels;
    const int stage_ch[4] = {C, 2 * C, 4 * C, 4 * C};

    m.init_conv = make_conv("init", cfg.blocks[0], 3, C, 3, 1, false, 1);

    int block_idx = 1;
    for (int s = 0; s < 4; ++s) {
        const int nblocks = (s == 0) ? 3 : 4;
        const int out_ch = stage_ch[s];
        for (int k = 0; k < nblocks; ++k, ++block_idx) {
            const bool transition = (s > 0 && k == 0);
            const int in_ch = transition ? stage_ch[s - 1] : out_ch;
            const PdcKind kind = cfg.blocks[std::size_t(block_idx)];
            const std::string base = "block" + std::to_string(block_idx);
            ResidualBlock rb;
            rb.dw = make_conv(base + ".dw", kind, in_ch, in_ch, 3, in_ch, false, 1);
            rb.pw = make_conv(base + ".pw", PdcKind::Vanilla, in_ch, out_ch, 1, 1, true, 0);
            if (transition)
                rb.shortcut =
                    make_conv(base + ".shortcut", PdcKind::Vanilla, in_ch, out_ch, 1, 1, true, 0);
            m.blocks.push_back(std::move(rb));
        }
    }

    for (int s = 0; s < 4; ++s) {
        const std::string base = "head" + std::to_string(s + 1);
        SideHead& head = m.heads[std::size_t(s)];
        int ch = stage_ch[s];
        if (cfg.use_cdcm) {
            Cdcm cdcm;
            cdcm.conv_in = make_conv(base + ".cdcm.in", PdcKind::Vanilla, ch, M, 1, 1, true, 0);
            const int dil[4] = {5, 7, 9, 11};
            for (int d = 0; d < 4; ++d)
                cdcm.dilated[std::size_t(d)] =
                    make_conv(base + ".cdcm.d" + std::to_string(dil[d]), PdcKind::Vanilla, M, M,
                              3, 1, false, dil[d], dil[d]);
            head.cdcm = std::move(cdcm);
            ch = M;
        }
        if (cfg.use_csam) {
            Csam csam;
            csam.conv_mid = make_conv(base + ".csam.mid", PdcKind::Vanilla, ch, 4, 1, 1, true, 0);
            csam.conv_attn =
                make_conv(base + ".csam.attn", PdcKind::Vanilla, 4, 1, 3, 1, false, 1);
            head.csam = std::move(csam);
        }
        head.reduce = make_conv(base + ".reduce", PdcKind::Vanilla, ch, 1, 1, 1, true, 0);
    }

    m.fusion = make_conv("fusion", PdcKind::Vanilla, 4, 1, 1, 1, true, 0);

    // Backbone first so its draws are independent of the side-module flags.
    Rng rng(seed);
    init_weights(m.init_conv, rng);
    for (ResidualBlock& rb : m.blocks) {
        init_weights(rb.dw, rng);
        init_weights(rb.pw, rng);
        if (rb.shortcut) init_weights(*rb.shortcut, rng);
    }
    for (SideHead& head : m.heads) {
        if (head.cdcm) {
            init_weights(head.cdcm->conv_in, rng);
            for (ConvLayer& d : head.cdcm->dilated) init_weights(d, rng);
        }
        if (head.csam) {
            init_weights(head.csam->conv_mid, rng);
            init_weights(head.csam->conv_attn, rng);
        }
        init_weights(head.reduce, rng);
    }
    // Fusion starts as a plain average of the four side logits.
    for (auto& v : m.fusion.weight.data) v = real(0.25);
    return m;
}

namespace {

// x (N,C,H,W) * a (N,1,H,W), attention broadcast over channels.
Tensor broadcast_mul(const Tensor& x, const Tensor& a) {
    if (a.c != 1 || a.n != x.n || a.h != x.h || a.w != x.w)
        throw DimensionError("broadcast_mul: attention map shape mismatch");
    Tensor y = zeros_like(x);
    const std::int64_t plane = std::int64_t(x.h) * x.w;
    for (int n = 0; n < x.n; ++n) {
        const real* ap = a.data.data() + std::int64_t(n) * plane;
        for (int c = 0; c < x.c; ++c) {
            const real* xp = x.data.data() + (std::int64_t(n) * x.c + c) * plane;
            real* yp = y.data.data() + (std::int64_t(n) * x.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) yp[i] = xp[i] * ap[i];
        }
    }
    return y;
}

// sum_c (g .* x) -> (N,1,H,W)
Tensor channel_sum_mul(const Tensor& g, const Tensor& x) {
    check_same_shape(g, x, "channel_sum_mul");
    Tensor y(g.n, 1, g.h, g.w);
    const std::int64_t plane = std::int64_t(g.h) * g.w;
    std::vector<double> acc(static_cast<std::size_t>(plane));
    for (int n = 0; n < g.n; ++n) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int c = 0; c < g.c; ++c) {
            const real* gp = g.data.data() + (std::int64_t(n) * g.c + c) * plane;
            const real* xp = x.data.data() + (std::int64_t(n) * g.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i)
                acc[std::size_t(i)] += double(gp[i]) * double(xp[i]);
        }
        real* yp = y.data.data() + std::int64_t(n) * plane;
        for (std::int64_t i = 0; i < plane; ++i) yp[i] = real(acc[std::size_t(i)]);
    }
    return y;
}

ForwardResult forward_impl(const PiDiNetModel& m, const Tensor& x, ConvPath path,
                           ForwardTrace* tr) {
    if (x.c != 3)
        throw DimensionError("forward: input must have 3 channels, got " + x.shape_str());
    if (x.h < 16 || x.w < 16)
        throw DimensionError("forward: input " + x.shape_str() +
                             " too small for three pooling stages (need >= 16x16)");
    if (tr) {
        tr->input = x;
        tr->blocks.clear();
        tr->blocks.reserve(m.blocks.size());
    }

    Tensor cur = m.init_conv.forward(x, path);

    std::array<Tensor, 4> stage_out;
    std::size_t bi = 0;
    for (int s = 0; s < 4; ++s) {
        const int nblocks = (s == 0) ? 3 : 4;
        for (int k = 0; k < nblocks; ++k, ++bi) {
            const ResidualBlock& rb = m.blocks[bi];
            Tensor dw_out = rb.dw.forward(cur, path);
            Tensor act = relu(dw_out);
            Tensor out = rb.pw.forward(act, path);
            if (rb.shortcut) {
                out = add(out, rb.shortcut->forward(cur, path));
            } else {
                out = add(out, cur);
            }
            if (tr) tr->blocks.push_back(BlockTrace{std::move(cur), std::move(dw_out), std::move(act)});
            cur = std::move(out);
        }
        stage_out[std::size_t(s)] = cur;
        if (tr) tr->stage_out[std::size_t(s)] = cur;
        if (s < 3) {
            PoolResult pr = maxpool2(cur);
            cur = pr.y;
            if (tr) tr->pools[std::size_t(s)] = std::move(pr);
        }
    }

    std::array<Tensor, 4> side_logits;
    for (int s = 0; s < 4; ++s) {
        const SideHead& head = m.heads[std::size_t(s)];
        HeadTrace* ht = tr ? &tr->heads[std::size_t(s)] : nullptr;
        Tensor h = stage_out[std::size_t(s)];
        if (head.cdcm) {
            Tensor pre = head.cdcm->conv_in.forward(h, path);
            Tensor act = relu(pre);
            Tensor sum;
            for (int d = 0; d < 4; ++d) {
                Tensor branch = head.cdcm->dilated[std::size_t(d)].forward(act, path);
                sum = (d == 0) ? std::move(branch) : add(sum, branch);
            }
            if (ht) ht->cdcm = CdcmTrace{std::move(h), std::move(pre), std::move(act)};
            h = std::move(sum);
        }
        if (head.csam) {
            Tensor mid = head.csam->conv_mid.forward(h, path);
            Tensor mid_act = relu(mid);
            Tensor attn = sigmoid(head.csam->conv_attn.forward(mid_act, path));
            Tensor gated = broadcast_mul(h, attn);
            if (ht)
                ht->csam = CsamTrace{std::move(h), std::move(mid), std::move(mid_act), attn};
            h = std::move(gated);
        }
        if (ht) ht->reduce_in = h;
        Tensor red = head.reduce.forward(h, path);
        Tensor logits = (red.h == x.h && red.w == x.w)
                            ? red
                            : bilinear_upsample(red, x.h, x.w);
        if (ht) {
            ht->reduce_out = std::move(red);
            ht->logits = logits;
        }
        side_logits[std::size_t(s)] = std::move(logits);
    }

    Tensor fusion_in = concat_channels(
        {&side_logits[0], &side_logits[1], &side_logits[2], &side_logits[3]});
    Tensor fused_logit = m.fusion.forward(fusion_in, path);

    ForwardResult res;
    res.fused = sigmoid(fused_logit);
    for (int s = 0; s < 4; ++s) res.side[std::size_t(s)] = sigmoid(side_logits[std::size_t(s)]);
    if (tr) {
        tr->fusion_in = std::move(fusion_in);
        tr->fused_map = res.fused;
        for (int s = 0; s < 4; ++s) tr->heads[std::size_t(s)].map = res.side[std::size_t(s)];
    }
    return res;
}

}  // namespace

ForwardResult forward(const PiDiNetModel& m, const Tensor& x, ConvPath path) {
    return forward_impl(m, x, path, nullptr);
}

ForwardResult forward(const PiDiNetModel& m, const Tensor& x, ForwardTrace& trace) {
    return forward_impl(m, x, ConvPath::Reparam, &trace);
}

void zero_grads(PiDiNetModel& m) {
    for (ParamBlockRef& b : param_blocks(m)) {
        b.weight->ensure_grad();
        b.weight->zero_grad();
        if (b.bias_grad) b.bias_grad->assign(b.bias_grad->size(), real(0));
    }
}

namespace {

Tensor cdcm_backward(Cdcm& c, const CdcmTrace& t, const Tensor& grad_out) {
    Tensor g_act;
    for (int d = 0; d < 4; ++d) {
        Tensor gd = c.dilated[std::size_t(d)].backward(t.act, grad_out);
        g_act = (d == 0) ? std::move(gd) : add(g_act, gd);
    }
    Tensor g_pre = relu_backward(t.pre, g_act);
    return c.conv_in.backward(t.x, g_pre);
}

Tensor csam_backward(Csam& c, const CsamTrace& t, const Tensor& grad_out) {
    Tensor g_x = broadcast_mul(grad_out, t.attn);
    Tensor g_attn = channel_sum_mul(grad_out, t.x);
    Tensor g_attn_pre = sigmoid_backward_from_output(t.attn, g_attn);
    Tensor g_mid_act = c.conv_attn.backward(t.mid_act, g_attn_pre);
    Tensor g_mid = relu_backward(t.mid, g_mid_act);
    Tensor g_x2 = c.conv_mid.backward(t.x, g_mid);
    return add(g_x, g_x2);
}

}  // namespace

void backward(PiDiNetModel& m, const ForwardTrace& tr,
              const std::array<Tensor, 4>& grad_side_maps, const Tensor& grad_fused_map) {
    if (tr.blocks.size() != m.blocks.size())
        throw DimensionError("backward: trace does not match the model");

    Tensor g_fused_logit = sigmoid_backward_from_output(tr.fused_map, grad_fused_map);
    Tensor g_fusion_in = m.fusion.backward(tr.fusion_in, g_fused_logit);
    std::vector<Tensor> g_logit_parts = concat_channels_backward({1, 1, 1, 1}, g_fusion_in);

    std::array<Tensor, 4> g_stage;
    for (int s = 0; s < 4; ++s) {
        const HeadTrace& ht = tr.heads[std::size_t(s)];
        SideHead& head = m.heads[std::size_t(s)];
        Tensor g_logits = add(sigmoid_backward_from_output(ht.map, grad_side_maps[std::size_t(s)]),
                              g_logit_parts[std::size_t(s)]);
        Tensor g_red = (ht.reduce_out.h == g_logits.h && ht.reduce_out.w == g_logits.w)
                           ? std::move(g_logits)
                           : bilinear_upsample_backward(ht.reduce_out.h, ht.reduce_out.w, g_logits);
        Tensor g_h = head.reduce.backward(ht.reduce_in, g_red);
        if (head.csam) g_h = csam_backward(*head.csam, *ht.csam, g_h);
        if (head.cdcm) g_h = cdcm_backward(*head.cdcm, *ht.cdcm, g_h);
        g_stage[std::size_t(s)] = std::move(g_h);
    }

    Tensor g_cur = std::move(g_stage[3]);
    int bi = int(m.blocks.size()) - 1;
    for (int s = 3; s >= 0; --s) {
        const int nblocks = (s == 0) ? 3 : 4;
        for (int k = 0; k < nblocks; ++k, --bi) {
            const BlockTrace& bt = tr.blocks[std::size_t(bi)];
            ResidualBlock& rb = m.blocks[std::size_t(bi)];
            Tensor g_act = rb.pw.backward(bt.act, g_cur);
            Tensor g_dw_out = relu_backward(bt.dw_out, g_act);
            Tensor g_x = rb.dw.backward(bt.x, g_dw_out);
            if (rb.shortcut) {
                g_x = add(g_x, rb.shortcut->backward(bt.x, g_cur));
            } else {
                g_x = add(g_x, g_cur);
            }
            g_cur = std::move(g_x);
        }
        if (s > 0) {
            Tensor g_pool_in =
                maxpool2_backward(tr.stage_out[std::size_t(s - 1)], tr.pools[std::size_t(s - 1)], g_cur);
            g_cur = add(g_pool_in, g_stage[std::size_t(s - 1)]);
        }
    }
    m.init_conv.backward(tr.input, g_cur);
}

std::vector<ParamBlockRef> param_blocks(PiDiNetModel& m) {
    std::vector<ParamBlockRef> out;
    auto push = [&out](ConvLayer& l) {
        out.push_back(ParamBlockRef{l.name, &l.weight,
                                    l.bias.empty() ? nullptr : &l.bias,
                                    l.bias.empty() ? nullptr : &l.bias_grad});
    };
    push(m.init_conv);
    for (ResidualBlock& rb : m.blocks) {
        push(rb.dw);
        push(rb.pw);
        if (rb.shortcut) push(*rb.shortcut);
    }
    for (SideHead& head : m.heads) {
        if (head.cdcm) {
            push(head.cdcm->conv_in);
            for (ConvLayer& d : head.cdcm->dilated) push(d);
        }
        if (head.csam) {
            push(head.csam->conv_mid);
            push(head.csam->conv_attn);
        }
        push(head.reduce);
    }
    push(m.fusion);
    return out;
}

std::int64_t stored_param_count(const PiDiNetModel& m) {
    std::int64_t total = 0;
    for (const ParamBlockRef& b : param_blocks(const_cast<PiDiNetModel&>(m))) {
        total += b.weight->size();
        if (b.bias) total += std::int64_t(b.bias->size());
    }
    return total;
}

std::vector<LayerCost> layer_costs(const PiDiNetModel& m, int h, int w) {
    std::vector<LayerCost> out;
    auto push = [&out](const ConvLayer& l, int lh, int lw) {
        out.push_back(LayerCost{l.name, l.learnable_params(), l.macs(lh, lw)});
    };
    int sh = h, sw = w;
    push(m.init_conv, sh, sw);
    std::size_t bi = 0;
    int stage_h[4], stage_w[4];
    for (int s = 0; s < 4; ++s) {
        stage_h[s] = sh;
        stage_w[s] = sw;
        const int nblocks = (s == 0) ? 3 : 4;
        for (int k = 0; k < nblocks; ++k, ++bi) {
            const ResidualBlock& rb = m.blocks[bi];
            push(rb.dw, sh, sw);
            push(rb.pw, sh, sw);
            if (rb.shortcut) push(*rb.shortcut, sh, sw);
        }
        if (s < 3) {
            sh /= 2;
            sw /= 2;
        }
    }
    for (int s = 0; s < 4; ++s) {
        const SideHead& head = m.heads[std::size_t(s)];
        const int lh = stage_h[s], lw = stage_w[s];
        if (head.cdcm) {
            push(head.cdcm->conv_in, lh, lw);
            for (const ConvLayer& d : head.cdcm->dilated) push(d, lh, lw);
        }
        if (head.csam) {
            push(head.csam->conv_mid, lh, lw);
            push(head.csam->conv_attn, lh, lw);
        }
        push(head.reduce, lh, lw);
    }
    push(m.fusion, h, w);
    return out;
}

std::int64_t count_params(const PiDiNetModel& m) {
    std::int64_t total = 0;
    for (const LayerCost& lc : layer_costs(m, 16, 16)) total += lc.params;
    return total;
}

std::int64_t count_macs(const PiDiNetModel& m, int h, int w) {
    std::int64_t total = 0;
    for (const LayerCost& lc : layer_costs(m, h, w)) total += lc.macs;
    return total;
}

PiDiNetModel convert_model_for_inference(const PiDiNetModel& m) {
    PiDiNetModel out = m;
    auto convert_layer = [](ConvLayer& l) {
        if (!l.is_pdc()) return;
        l.weight = convert_weights(l.weight, l.kind);
        l.ksize = converted_kernel_size(l.kind);
        l.padding = converted_padding(l.kind);
        l.kind = PdcKind::Vanilla;
    };
    convert_layer(out.init_conv);
    for (ResidualBlock& rb : out.blocks) {
        convert_layer(rb.dw);
        convert_layer(rb.pw);
        if (rb.shortcut) convert_layer(*rb.shortcut);
    }
    out.converted = true;
    return out;
}

}  // namespace pidinet
