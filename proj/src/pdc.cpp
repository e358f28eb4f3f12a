#include "pidinet/pdc.hpp"

#include <cctype>

namespace pidinet {

PdcKind pdc_kind_from_letter(char letter) {
    switch (std::toupper(static_cast<unsigned char>(letter))) {
        case 'C': return PdcKind::Central;
        case 'A': return PdcKind::Angular;
        case 'R': return PdcKind::Radial;
        case 'V': return PdcKind::Vanilla;
        default:
            throw ParameterError(std::string("unknown convolution letter '") + letter + "'");
    }
}

char pdc_letter(PdcKind kind) {
    switch (kind) {
        case PdcKind::Central: return 'C';
        case PdcKind::Angular: return 'A';
        case PdcKind::Radial: return 'R';
        case PdcKind::Vanilla: return 'V';
    }
    return '?';
}

std::string pdc_kind_name(PdcKind kind) {
    switch (kind) {
        case PdcKind::Central: return "central";
        case PdcKind::Angular: return "angular";
        case PdcKind::Radial: return "radial";
        case PdcKind::Vanilla: return "vanilla";
    }
    return "?";
}

PairSet pair_set(PdcKind kind) {
    // Raw 3x3 grid slots, row-major:   0 1 2
    //                                  3 4 5
    //                                  6 7 8
    switch (kind) {
        case PdcKind::Central:
            // Every ring pixel against the patch center.
            return PairSet{3,
                           {{{0, 0, 4},
                             {1, 1, 4},
                             {2, 2, 4},
                             {3, 3, 4},
                             {5, 5, 4},
                             {6, 6, 4},
                             {7, 7, 4},
                             {8, 8, 4}}}};
        case PdcKind::Angular:
            // Each ring pixel against its next clockwise ring neighbour;
            // the eight terms form a closed cycle.
            return PairSet{3,
                           {{{0, 0, 1},
                             {1, 1, 2},
                             {2, 2, 5},
                             {3, 3, 0},
                             {5, 5, 8},
                             {6, 6, 3},
                             {7, 7, 6},
                             {8, 8, 7}}}};
        case PdcKind::Radial:
            // Outer 5x5 ring pixel against the inner 3x3 ring pixel in the
            // same direction. Weight slots follow the direction on the raw
            // 3x3 grid.
            return PairSet{5,
                           {{{0, 0, 6},
                             {1, 2, 7},
                             {2, 4, 8},
                             {3, 10, 11},
                             {5, 14, 13},
                             {6, 20, 16},
                             {7, 22, 17},
                             {8, 24, 18}}}};
        case PdcKind::Vanilla:
            break;
    }
    throw ParameterError("pair_set: vanilla convolution has no pixel pairs");
}

int converted_kernel_size(PdcKind kind) { return kind == PdcKind::Radial ? 5 : 3; }
int converted_padding(PdcKind kind) { return kind == PdcKind::Radial ? 2 : 1; }

namespace {

void check_raw(const Tensor& raw) {
    if (raw.h != 3 || raw.w != 3)
        throw DimensionError("pdc: raw weights must be a 3x3 grid, got " + raw.shape_str());
}

}  // namespace

Tensor convert_weights(const Tensor& raw, PdcKind kind) {
    if (kind == PdcKind::Vanilla)
        throw ParameterError("convert_weights: vanilla kernels need no conversion");
    check_raw(raw);
    const PairSet ps = pair_set(kind);
    const int k = converted_kernel_size(kind);
    Tensor out(raw.n, raw.c, k, k);
    const std::int64_t slices = std::int64_t(raw.n) * raw.c;
    for (std::int64_t s = 0; s < slices; ++s) {
        const real* r = raw.data.data() + s * 9;
        real* o = out.data.data() + s * k * k;
        for (const PdcPair& p : ps.pairs) {
            o[p.plus] += r[p.weight_slot];
            o[p.minus] -= r[p.weight_slot];
        }
    }
    return out;
}

Tensor convert_weights_backward(const Tensor& grad_converted, PdcKind kind) {
    if (kind == PdcKind::Vanilla)
        throw ParameterError("convert_weights_backward: vanilla kernels need no conversion");
    const PairSet ps = pair_set(kind);
    const int k = converted_kernel_size(kind);
    if (grad_converted.h != k || grad_converted.w != k)
        throw DimensionError("convert_weights_backward: gradient grid mismatch");
    Tensor out(grad_converted.n, grad_converted.c, 3, 3);
    const std::int64_t slices = std::int64_t(out.n) * out.c;
    for (std::int64_t s = 0; s < slices; ++s) {
        const real* g = grad_converted.data.data() + s * k * k;
        real* o = out.data.data() + s * 9;
        for (const PdcPair& p : ps.pairs) o[p.weight_slot] += g[p.plus] - g[p.minus];
    }
    return out;
}

namespace {

ConvParams converted_params(const Tensor& raw, PdcKind kind, int stride, int padding,
                            int groups, const std::vector<real>& bias) {
    ConvParams p;
    p.kernel = convert_weights(raw, kind);
    p.groups = groups;
    p.stride = stride;
    p.padding = padding;
    p.dilation = 1;
    p.bias = bias;
    return p;
}

ConvParams vanilla_params(const Tensor& raw, int stride, int padding, int groups,
                          const std::vector<real>& bias) {
    ConvParams p;
    p.kernel = raw;
    p.kernel.grad.clear();
    p.groups = groups;
    p.stride = stride;
    p.padding = padding;
    p.dilation = 1;
    p.bias = bias;
    return p;
}

}  // namespace

Tensor pdc_forward_difference_form(const Tensor& x, const Tensor& raw, PdcKind kind,
                                   int stride, int padding, int groups,
                                   const std::vector<real>& bias) {
    if (kind == PdcKind::Vanilla) return conv2d(x, vanilla_params(raw, stride, padding, groups, bias));
    check_raw(raw);
    if (stride <= 0) throw ParameterError("pdc: stride must be positive");
    if (padding < 0) throw ParameterError("pdc: padding must be non-negative");
    const PairSet ps = pair_set(kind);
    const int k = ps.patch_size;
    const int oh = (x.h + 2 * padding - k) / stride + 1;
    const int ow = (x.w + 2 * padding - k) / stride + 1;
    if (x.h + 2 * padding < k || x.w + 2 * padding < k || oh <= 0 || ow <= 0)
        throw DimensionError("pdc: patch larger than padded input");
    if (x.c % groups != 0 || x.c / groups != raw.c)
        throw DimensionError("pdc: channel/group mismatch");
    if (raw.n % groups != 0) throw DimensionError("pdc: output channels not divisible by groups");
    if (!bias.empty() && int(bias.size()) != raw.n) throw DimensionError("pdc: bias size mismatch");

    const int icpg = raw.c;
    const int ocpg = raw.n / groups;
    Tensor out(x.n, raw.n, oh, ow);
    const std::int64_t in_plane = std::int64_t(x.h) * x.w;

    auto sample = [&](const real* plane, int iy, int ix) -> double {
        if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) return 0.0;
        return double(plane[std::int64_t(iy) * x.w + ix]);
    };

    std::int64_t oi = 0;
    for (int n = 0; n < x.n; ++n)
        for (int g = 0; g < groups; ++g)
            for (int ocg = 0; ocg < ocpg; ++ocg) {
                const int oc = g * ocpg + ocg;
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox, ++oi) {
                        double acc = bias.empty() ? 0.0 : double(bias[std::size_t(oc)]);
                        for (int icg = 0; icg < icpg; ++icg) {
                            const int ic = g * icpg + icg;
                            const real* plane =
                                x.data.data() + (std::int64_t(n) * x.c + ic) * in_plane;
                            const real* r = raw.data.data() +
                                            (std::int64_t(oc) * icpg + icg) * 9;
                            const int y0 = oy * stride - padding;
                            const int x0 = ox * stride - padding;
                            for (const PdcPair& p : ps.pairs) {
                                const double a =
                                    sample(plane, y0 + p.plus / k, x0 + p.plus % k);
                                const double b =
                                    sample(plane, y0 + p.minus / k, x0 + p.minus % k);
                                acc += double(r[p.weight_slot]) * (a - b);
                            }
                        }
                        out.data[std::size_t(oi)] = real(acc);
                    }
            }
    return out;
}

Tensor pdc_conv(const Tensor& x, const Tensor& raw, PdcKind kind, int stride,
                int padding, int groups, const std::vector<real>& bias) {
    if (kind == PdcKind::Vanilla)
        return conv2d(x, vanilla_params(raw, stride, padding, groups, bias));
    check_raw(raw);
    return conv2d(x, converted_params(raw, kind, stride, padding, groups, bias));
}

ConvGrads pdc_conv_backward(const Tensor& x, const Tensor& raw, PdcKind kind,
                            int stride, int padding, int groups,
                            const std::vector<real>& bias, const Tensor& grad_out) {
    if (kind == PdcKind::Vanilla) {
        return conv2d_backward(x, vanilla_params(raw, stride, padding, groups, bias), grad_out);
    }
    check_raw(raw);
    ConvGrads g =
        conv2d_backward(x, converted_params(raw, kind, stride, padding, groups, bias), grad_out);
    // Chain through the linear weight conversion.
    g.kernel = convert_weights_backward(g.kernel, kind);
    return g;
}

}  // namespace pidinet
