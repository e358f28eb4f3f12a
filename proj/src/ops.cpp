#include "pidinet/ops.hpp"

#include <algorithm>
#include <cmath>

namespace pidinet {

namespace {

void validate_conv(const Tensor& x, const ConvParams& p) {
    if (p.stride <= 0) throw ParameterError("conv2d: stride must be positive");
    if (p.padding < 0) throw ParameterError("conv2d: padding must be non-negative");
    if (p.dilation <= 0) throw ParameterError("conv2d: dilation must be positive");
    if (p.groups <= 0) throw ParameterError("conv2d: groups must be positive");
    if (p.kernel.h <= 0 || p.kernel.w <= 0)
        throw DimensionError("conv2d: empty kernel");
    if (x.c % p.groups != 0)
        throw DimensionError("conv2d: input channels " + std::to_string(x.c) +
                             " not divisible by groups " + std::to_string(p.groups));
    if (x.c / p.groups != p.in_per_group())
        throw DimensionError("conv2d: kernel expects " + std::to_string(p.in_per_group()) +
                             " channels per group, input provides " +
                             std::to_string(x.c / p.groups));
    if (p.out_channels() % p.groups != 0)
        throw DimensionError("conv2d: output channels not divisible by groups");
    if (!p.bias.empty() && int(p.bias.size()) != p.out_channels())
        throw DimensionError("conv2d: bias size mismatch");
}

struct OutDims {
    int h = 0, w = 0;
};

OutDims conv_out_dims(const Tensor& x, const ConvParams& p) {
    const int eh = p.dilation * (p.kh() - 1) + 1;
    const int ew = p.dilation * (p.kw() - 1) + 1;
    OutDims d;
    d.h = (x.h + 2 * p.padding - eh) / p.stride + 1;
    d.w = (x.w + 2 * p.padding - ew) / p.stride + 1;
    if (x.h + 2 * p.padding < eh || x.w + 2 * p.padding < ew || d.h <= 0 || d.w <= 0)
        throw DimensionError("conv2d: kernel larger than padded input");
    return d;
}

// Output coordinates for which in = out*stride - pad + tap stays in [0, in_size).
inline void tap_range(int in_size, int out_size, int stride, int pad, int tap,
                      int& lo, int& hi) {
    const int shift = tap - pad;
    lo = shift >= 0 ? 0 : (-shift + stride - 1) / stride;
    hi = (in_size - 1 - shift) / stride;
    if (hi > out_size - 1) hi = out_size - 1;
    if (lo > hi) {
        lo = 0;
        hi = -1;
    }
}

}  // namespace

Tensor conv2d(const Tensor& x, const ConvParams& p) {
    validate_conv(x, p);
    const OutDims od = conv_out_dims(x, p);
    const int icpg = p.in_per_group();
    const int ocpg = p.out_channels() / p.groups;

    Tensor out(x.n, p.out_channels(), od.h, od.w);
    const std::int64_t in_plane = std::int64_t(x.h) * x.w;
    const std::int64_t out_plane = std::int64_t(od.h) * od.w;
    std::vector<double> acc(static_cast<std::size_t>(out_plane));

    for (int n = 0; n < x.n; ++n) {
        for (int g = 0; g < p.groups; ++g) {
            for (int ocg = 0; ocg < ocpg; ++ocg) {
                const int oc = g * ocpg + ocg;
                const double b = p.bias.empty() ? 0.0 : double(p.bias[std::size_t(oc)]);
                std::fill(acc.begin(), acc.end(), b);
                for (int icg = 0; icg < icpg; ++icg) {
                    const int ic = g * icpg + icg;
                    const real* xplane = x.data.data() + (std::int64_t(n) * x.c + ic) * in_plane;
                    const real* kslice =
                        p.kernel.data.data() + (std::int64_t(oc) * icpg + icg) *
                                               std::int64_t(p.kh()) * p.kw();
                    for (int ky = 0; ky < p.kh(); ++ky) {
                        int oy_lo, oy_hi;
                        tap_range(x.h, od.h, p.stride, p.padding, ky * p.dilation, oy_lo, oy_hi);
                        for (int kx = 0; kx < p.kw(); ++kx) {
                            const real w = kslice[ky * p.kw() + kx];
                            if (w == real(0)) continue;
                            int ox_lo, ox_hi;
                            tap_range(x.w, od.w, p.stride, p.padding, kx * p.dilation, ox_lo, ox_hi);
                            const int yshift = ky * p.dilation - p.padding;
                            const int xshift = kx * p.dilation - p.padding;
                            for (int oy = oy_lo; oy <= oy_hi; ++oy) {
                                const real* xrow = xplane + std::int64_t(oy * p.stride + yshift) * x.w;
                                double* arow = acc.data() + std::int64_t(oy) * od.w;
                                if (p.stride == 1) {
                                    const real* xs = xrow + xshift;
                                    for (int ox = ox_lo; ox <= ox_hi; ++ox)
                                        arow[ox] += double(w) * double(xs[ox]);
                                } else {
                                    for (int ox = ox_lo; ox <= ox_hi; ++ox)
                                        arow[ox] += double(w) * double(xrow[ox * p.stride + xshift]);
                                }
                            }
                        }
                    }
                }
                real* orow = out.data.data() + (std::int64_t(n) * out.c + oc) * out_plane;
                for (std::int64_t i = 0; i < out_plane; ++i) orow[i] = real(acc[std::size_t(i)]);
            }
        }
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& x, const ConvParams& p, const Tensor& grad_out) {
    validate_conv(x, p);
    const OutDims od = conv_out_dims(x, p);
    if (grad_out.n != x.n || grad_out.c != p.out_channels() || grad_out.h != od.h ||
        grad_out.w != od.w)
        throw DimensionError("conv2d_backward: grad_out shape " + grad_out.shape_str() +
                             " does not match forward output");

    const int icpg = p.in_per_group();
    const int ocpg = p.out_channels() / p.groups;
    const std::int64_t in_plane = std::int64_t(x.h) * x.w;
    const std::int64_t out_plane = std::int64_t(od.h) * od.w;

    ConvGrads g;
    g.x = zeros_like(x);
    g.kernel = zeros_like(p.kernel);
    if (!p.bias.empty()) g.bias.assign(p.bias.size(), real(0));

    // Bias gradient: plain sums over each output channel.
    if (!p.bias.empty()) {
        for (int oc = 0; oc < p.out_channels(); ++oc) {
            double acc = 0.0;
            for (int n = 0; n < x.n; ++n) {
                const real* go = grad_out.data.data() + (std::int64_t(n) * grad_out.c + oc) * out_plane;
                for (std::int64_t i = 0; i < out_plane; ++i) acc += double(go[i]);
            }
            g.bias[std::size_t(oc)] = real(acc);
        }
    }

    // Kernel gradient: per tap, dot of grad_out rows with shifted input rows.
    for (int g_idx = 0; g_idx < p.groups; ++g_idx) {
        for (int ocg = 0; ocg < ocpg; ++ocg) {
            const int oc = g_idx * ocpg + ocg;
            for (int icg = 0; icg < icpg; ++icg) {
                const int ic = g_idx * icpg + icg;
                real* kgrad = g.kernel.data.data() + (std::int64_t(oc) * icpg + icg) *
                                                     std::int64_t(p.kh()) * p.kw();
                for (int ky = 0; ky < p.kh(); ++ky) {
                    int oy_lo, oy_hi;
                    tap_range(x.h, od.h, p.stride, p.padding, ky * p.dilation, oy_lo, oy_hi);
                    const int yshift = ky * p.dilation - p.padding;
                    for (int kx = 0; kx < p.kw(); ++kx) {
                        int ox_lo, ox_hi;
                        tap_range(x.w, od.w, p.stride, p.padding, kx * p.dilation, ox_lo, ox_hi);
                        const int xshift = kx * p.dilation - p.padding;
                        // Four independent accumulators keep the reduction
                        // pipelined; the grouping is fixed, so results stay
                        // bitwise deterministic.
                        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                        for (int n = 0; n < x.n; ++n) {
                            const real* xplane = x.data.data() + (std::int64_t(n) * x.c + ic) * in_plane;
                            const real* gplane =
                                grad_out.data.data() + (std::int64_t(n) * grad_out.c + oc) * out_plane;
                            for (int oy = oy_lo; oy <= oy_hi; ++oy) {
                                const real* xrow = xplane + std::int64_t(oy * p.stride + yshift) * x.w;
                                const real* grow = gplane + std::int64_t(oy) * od.w;
                                if (p.stride == 1) {
                                    const real* xs = xrow + xshift;
                                    int ox = ox_lo;
                                    for (; ox + 3 <= ox_hi; ox += 4) {
                                        a0 += double(grow[ox]) * double(xs[ox]);
                                        a1 += double(grow[ox + 1]) * double(xs[ox + 1]);
                                        a2 += double(grow[ox + 2]) * double(xs[ox + 2]);
                                        a3 += double(grow[ox + 3]) * double(xs[ox + 3]);
                                    }
                                    for (; ox <= ox_hi; ++ox)
                                        a0 += double(grow[ox]) * double(xs[ox]);
                                } else {
                                    for (int ox = ox_lo; ox <= ox_hi; ++ox)
                                        a0 += double(grow[ox]) * double(xrow[ox * p.stride + xshift]);
                                }
                            }
                        }
                        kgrad[ky * p.kw() + kx] = real((a0 + a1) + (a2 + a3));
                    }
                }
            }
        }
    }

    // Input gradient: weight-stationary scatter into a double plane per (n, ic).
    std::vector<double> acc(static_cast<std::size_t>(in_plane));
    for (int n = 0; n < x.n; ++n) {
        for (int g_idx = 0; g_idx < p.groups; ++g_idx) {
            for (int icg = 0; icg < icpg; ++icg) {
                const int ic = g_idx * icpg + icg;
                std::fill(acc.begin(), acc.end(), 0.0);
                for (int ocg = 0; ocg < ocpg; ++ocg) {
                    const int oc = g_idx * ocpg + ocg;
                    const real* gplane =
                        grad_out.data.data() + (std::int64_t(n) * grad_out.c + oc) * out_plane;
                    const real* kslice =
                        p.kernel.data.data() + (std::int64_t(oc) * icpg + icg) *
                                               std::int64_t(p.kh()) * p.kw();
                    for (int ky = 0; ky < p.kh(); ++ky) {
                        int oy_lo, oy_hi;
                        tap_range(x.h, od.h, p.stride, p.padding, ky * p.dilation, oy_lo, oy_hi);
                        const int yshift = ky * p.dilation - p.padding;
                        for (int kx = 0; kx < p.kw(); ++kx) {
                            const real w = kslice[ky * p.kw() + kx];
                            if (w == real(0)) continue;
                            int ox_lo, ox_hi;
                            tap_range(x.w, od.w, p.stride, p.padding, kx * p.dilation, ox_lo, ox_hi);
                            const int xshift = kx * p.dilation - p.padding;
                            for (int oy = oy_lo; oy <= oy_hi; ++oy) {
                                double* arow = acc.data() + std::int64_t(oy * p.stride + yshift) * x.w;
                                const real* grow = gplane + std::int64_t(oy) * od.w;
                                if (p.stride == 1) {
                                    double* as = arow + xshift;
                                    for (int ox = ox_lo; ox <= ox_hi; ++ox)
                                        as[ox] += double(w) * double(grow[ox]);
                                } else {
                                    for (int ox = ox_lo; ox <= ox_hi; ++ox)
                                        arow[ox * p.stride + xshift] += double(w) * double(grow[ox]);
                                }
                            }
                        }
                    }
                }
                real* xg = g.x.data.data() + (std::int64_t(n) * x.c + ic) * in_plane;
                for (std::int64_t i = 0; i < in_plane; ++i) xg[i] = real(acc[std::size_t(i)]);
            }
        }
    }
    return g;
}

PoolResult maxpool2(const Tensor& x) {
    if (x.h < 2 || x.w < 2)
        throw DimensionError("maxpool2: spatial dims " + x.shape_str() + " too small");
    const int oh = x.h / 2, ow = x.w / 2;
    PoolResult r;
    r.y = Tensor(x.n, x.c, oh, ow);
    r.argmax.resize(std::size_t(r.y.size()));
    std::int64_t oi = 0;
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox, ++oi) {
                    real best = x.at(n, c, 2 * oy, 2 * ox);
                    std::int64_t best_idx = x.index(n, c, 2 * oy, 2 * ox);
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const real v = x.at(n, c, 2 * oy + dy, 2 * ox + dx);
                            if (v > best) {  // strict: first (row-major) index wins ties
                                best = v;
                                best_idx = x.index(n, c, 2 * oy + dy, 2 * ox + dx);
                            }
                        }
                    r.y.data[std::size_t(oi)] = best;
                    r.argmax[std::size_t(oi)] = std::int32_t(best_idx);
                }
    return r;
}

Tensor maxpool2_backward(const Tensor& x, const PoolResult& fwd, const Tensor& grad_out) {
    check_same_shape(fwd.y, grad_out, "maxpool2_backward");
    Tensor gx = zeros_like(x);
    for (std::size_t i = 0; i < fwd.argmax.size(); ++i)
        gx.data[std::size_t(fwd.argmax[i])] += grad_out.data[i];
    return gx;
}

namespace {

struct LerpIdx {
    int lo = 0, hi = 0;
    double frac = 0.0;
};

std::vector<LerpIdx> lerp_table(int in_size, int out_size) {
    std::vector<LerpIdx> t(static_cast<std::size_t>(out_size));
    const double scale = double(in_size) / double(out_size);
    for (int d = 0; d < out_size; ++d) {
        double src = (double(d) + 0.5) * scale - 0.5;
        if (src < 0.0) src = 0.0;
        if (src > double(in_size - 1)) src = double(in_size - 1);
        int lo = int(std::floor(src));
        if (lo > in_size - 2) lo = in_size - 2;
        if (lo < 0) lo = 0;
        t[std::size_t(d)].lo = lo;
        t[std::size_t(d)].hi = std::min(lo + 1, in_size - 1);
        t[std::size_t(d)].frac = src - double(lo);
    }
    return t;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& x, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0)
        throw ParameterError("bilinear_upsample: target size must be positive");
    if (x.h <= 0 || x.w <= 0) throw DimensionError("bilinear_upsample: empty input");
    const auto ty = lerp_table(x.h, out_h);
    const auto tx = lerp_table(x.w, out_w);
    Tensor out(x.n, x.c, out_h, out_w);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const real* plane = x.data.data() + (std::int64_t(n) * x.c + c) * x.h * x.w;
            real* oplane = out.data.data() + (std::int64_t(n) * x.c + c) *
                                              std::int64_t(out_h) * out_w;
            for (int oy = 0; oy < out_h; ++oy) {
                const auto& iy = ty[std::size_t(oy)];
                const real* r0 = plane + std::int64_t(iy.lo) * x.w;
                const real* r1 = plane + std::int64_t(iy.hi) * x.w;
                for (int ox = 0; ox < out_w; ++ox) {
                    const auto& ix = tx[std::size_t(ox)];
                    const double v0 = double(r0[ix.lo]) * (1.0 - ix.frac) + double(r0[ix.hi]) * ix.frac;
                    const double v1 = double(r1[ix.lo]) * (1.0 - ix.frac) + double(r1[ix.hi]) * ix.frac;
                    oplane[std::int64_t(oy) * out_w + ox] = real(v0 * (1.0 - iy.frac) + v1 * iy.frac);
                }
            }
        }
    return out;
}

Tensor bilinear_upsample_backward(int in_h, int in_w, const Tensor& grad_out) {
    if (in_h <= 0 || in_w <= 0)
        throw ParameterError("bilinear_upsample_backward: source size must be positive");
    const auto ty = lerp_table(in_h, grad_out.h);
    const auto tx = lerp_table(in_w, grad_out.w);
    Tensor gx(grad_out.n, grad_out.c, in_h, in_w);
    std::vector<double> acc(std::size_t(in_h) * in_w);
    for (int n = 0; n < grad_out.n; ++n)
        for (int c = 0; c < grad_out.c; ++c) {
            std::fill(acc.begin(), acc.end(), 0.0);
            const real* gplane = grad_out.data.data() +
                                 (std::int64_t(n) * grad_out.c + c) *
                                 std::int64_t(grad_out.h) * grad_out.w;
            for (int oy = 0; oy < grad_out.h; ++oy) {
                const auto& iy = ty[std::size_t(oy)];
                for (int ox = 0; ox < grad_out.w; ++ox) {
                    const auto& ix = tx[std::size_t(ox)];
                    const double go = double(gplane[std::int64_t(oy) * grad_out.w + ox]);
                    acc[std::size_t(iy.lo) * in_w + ix.lo] += go * (1.0 - iy.frac) * (1.0 - ix.frac);
                    acc[std::size_t(iy.lo) * in_w + ix.hi] += go * (1.0 - iy.frac) * ix.frac;
                    acc[std::size_t(iy.hi) * in_w + ix.lo] += go * iy.frac * (1.0 - ix.frac);
                    acc[std::size_t(iy.hi) * in_w + ix.hi] += go * iy.frac * ix.frac;
                }
            }
            real* xg = gx.data.data() + (std::int64_t(n) * grad_out.c + c) *
                                        std::int64_t(in_h) * in_w;
            for (std::size_t i = 0; i < acc.size(); ++i) xg[i] = real(acc[i]);
        }
    return gx;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    y.grad.clear();
    for (auto& v : y.data)
        if (v < real(0)) v = real(0);
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
    check_same_shape(x, grad_out, "relu_backward");
    Tensor gx = zeros_like(x);
    for (std::size_t i = 0; i < gx.data.size(); ++i)
        gx.data[i] = x.data[i] > real(0) ? grad_out.data[i] : real(0);
    return gx;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.n, x.c, x.h, x.w);
    for (std::size_t i = 0; i < y.data.size(); ++i)
        y.data[i] = real(1.0 / (1.0 + std::exp(-double(x.data[i]))));
    return y;
}

Tensor sigmoid_backward_from_output(const Tensor& y, const Tensor& grad_out) {
    check_same_shape(y, grad_out, "sigmoid_backward");
    Tensor gx = zeros_like(y);
    for (std::size_t i = 0; i < gx.data.size(); ++i) {
        const double s = double(y.data[i]);
        gx.data[i] = real(double(grad_out.data[i]) * s * (1.0 - s));
    }
    return gx;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor y = zeros_like(a);
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] = a.data[i] + b.data[i];
    return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor y = zeros_like(a);
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] = a.data[i] * b.data[i];
    return y;
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) throw ParameterError("concat_channels: no inputs");
    int total_c = 0;
    for (const Tensor* t : parts) {
        if (t->n != parts[0]->n || t->h != parts[0]->h || t->w != parts[0]->w)
            throw DimensionError("concat_channels: N/H/W mismatch");
        total_c += t->c;
    }
    Tensor out(parts[0]->n, total_c, parts[0]->h, parts[0]->w);
    const std::int64_t plane = std::int64_t(out.h) * out.w;
    for (int n = 0; n < out.n; ++n) {
        int coff = 0;
        for (const Tensor* t : parts) {
            for (int c = 0; c < t->c; ++c) {
                const real* src = t->data.data() + (std::int64_t(n) * t->c + c) * plane;
                real* dst = out.data.data() + (std::int64_t(n) * total_c + coff + c) * plane;
                std::copy(src, src + plane, dst);
            }
            coff += t->c;
        }
    }
    return out;
}

std::vector<Tensor> concat_channels_backward(const std::vector<int>& channels,
                                             const Tensor& grad_out) {
    int total = 0;
    for (int c : channels) total += c;
    if (total != grad_out.c)
        throw DimensionError("concat_channels_backward: channel split mismatch");
    std::vector<Tensor> grads;
    grads.reserve(channels.size());
    const std::int64_t plane = std::int64_t(grad_out.h) * grad_out.w;
    int coff = 0;
    for (int c : channels) {
        Tensor g(grad_out.n, c, grad_out.h, grad_out.w);
        for (int n = 0; n < grad_out.n; ++n)
            for (int j = 0; j < c; ++j) {
                const real* src =
                    grad_out.data.data() + (std::int64_t(n) * grad_out.c + coff + j) * plane;
                std::copy(src, src + plane,
                          g.data.data() + (std::int64_t(n) * c + j) * plane);
            }
        grads.push_back(std::move(g));
        coff += c;
    }
    return grads;
}

}  // namespace pidinet
