#pragma once

// Test-only reference implementations, kept independent of the library's
// production code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pidinet/eval.hpp"
#include "pidinet/ops.hpp"
#include "pidinet/rng.hpp"
#include "pidinet/tensor.hpp"

namespace oracle {

using pidinet::Bitmap;
using pidinet::ConvParams;
using pidinet::real;
using pidinet::Tensor;

// Direct nested-loop convolution: per-output gather in double, textbook
// index arithmetic. The production conv must agree with this.
inline Tensor conv2d_direct(const Tensor& x, const ConvParams& p) {
    const int icpg = p.in_per_group();
    const int ocpg = p.out_channels() / p.groups;
    const int eh = p.dilation * (p.kh() - 1) + 1;
    const int ew = p.dilation * (p.kw() - 1) + 1;
    const int oh = (x.h + 2 * p.padding - eh) / p.stride + 1;
    const int ow = (x.w + 2 * p.padding - ew) / p.stride + 1;
    Tensor out(x.n, p.out_channels(), oh, ow);
    for (int n = 0; n < x.n; ++n)
        for (int g = 0; g < p.groups; ++g)
            for (int ocg = 0; ocg < ocpg; ++ocg) {
                const int oc = g * ocpg + ocg;
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        double acc = p.bias.empty() ? 0.0 : double(p.bias[std::size_t(oc)]);
                        for (int icg = 0; icg < icpg; ++icg) {
                            const int ic = g * icpg + icg;
                            for (int ky = 0; ky < p.kh(); ++ky)
                                for (int kx = 0; kx < p.kw(); ++kx) {
                                    const int iy = oy * p.stride - p.padding + ky * p.dilation;
                                    const int ix = ox * p.stride - p.padding + kx * p.dilation;
                                    if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                                    acc += double(p.kernel.at(oc, icg, ky, kx)) *
                                           double(x.at(n, ic, iy, ix));
                                }
                        }
                        out.at(n, oc, oy, ox) = real(acc);
                    }
            }
    return out;
}

// Window-max enumeration for 2x2/stride-2 pooling.
inline Tensor maxpool2_direct(const Tensor& x) {
    Tensor out(x.n, x.c, x.h / 2, x.w / 2);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int oy = 0; oy < out.h; ++oy)
                for (int ox = 0; ox < out.w; ++ox) {
                    real m = x.at(n, c, 2 * oy, 2 * ox);
                    m = std::max(m, x.at(n, c, 2 * oy, 2 * ox + 1));
                    m = std::max(m, x.at(n, c, 2 * oy + 1, 2 * ox));
                    m = std::max(m, x.at(n, c, 2 * oy + 1, 2 * ox + 1));
                    out.at(n, c, oy, ox) = m;
                }
    return out;
}

// Central finite differences of a scalar function over one parameter array.
inline std::vector<double> finite_diff(std::vector<real>& params,
                                       const std::function<double()>& loss, double h) {
    std::vector<double> g(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const real saved = params[i];
        params[i] = real(double(saved) + h);
        const double lp = loss();
        params[i] = real(double(saved) - h);
        const double lm = loss();
        params[i] = saved;
        g[i] = (lp - lm) / (2.0 * h);
    }
    return g;
}

// Fraction of entries where |analytic - fd| <= tol * (|entry| + scale),
// the usual mixed relative/absolute gradient-check criterion with the
// absolute floor tied to the gradient magnitude of the instance.
inline double grad_agreement(const std::vector<real>& analytic,
                             const std::vector<double>& fd, double tol) {
    double scale = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i)
        scale = std::max({scale, std::abs(double(analytic[i])), std::abs(fd[i])});
    if (scale == 0.0) return 1.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double mag = std::max(std::abs(double(analytic[i])), std::abs(fd[i]));
        if (std::abs(double(analytic[i]) - fd[i]) <= tol * (mag + scale)) ++ok;
    }
    return double(ok) / double(analytic.size());
}

// Largest elementwise deviation, measured against the local magnitude plus
// the overall magnitude of the pair (single-precision storage makes strictly
// pointwise-relative comparison meaningless under cancellation).
inline double max_rel_diff(const Tensor& a, const Tensor& b) {
    double scale = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        scale = std::max({scale, std::abs(double(a.data[i])), std::abs(double(b.data[i]))});
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double mag = std::max(std::abs(double(a.data[i])), std::abs(double(b.data[i])));
        worst = std::max(worst,
                         std::abs(double(a.data[i]) - double(b.data[i])) / (mag + scale));
    }
    return worst;
}

// Number of 8-connected foreground components.
inline int component_count(const Bitmap& b) {
    std::vector<int> label(b.v.size(), -1);
    int comps = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < b.h; ++y)
        for (int x = 0; x < b.w; ++x) {
            if (!b.at(y, x) || label[std::size_t(y) * b.w + x] >= 0) continue;
            ++comps;
            stack.push_back({y, x});
            label[std::size_t(y) * b.w + x] = comps;
            while (!stack.empty()) {
                auto [cy, cx] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = cy + dy, nx = cx + dx;
                        if (ny < 0 || ny >= b.h || nx < 0 || nx >= b.w) continue;
                        if (!b.at(ny, nx) || label[std::size_t(ny) * b.w + nx] >= 0) continue;
                        label[std::size_t(ny) * b.w + nx] = comps;
                        stack.push_back({ny, nx});
                    }
            }
        }
    return comps;
}

// Maximum-cardinality matching by exhaustive recursion over the candidate
// pairs (feasible for <= ~16 pairs).
struct CandidatePair {
    int pi, ti;
};

inline std::vector<CandidatePair> candidate_pairs(const Bitmap& pred, const Bitmap& truth,
                                                  double radius) {
    std::vector<std::pair<int, int>> ppix, tpix;
    for (int y = 0; y < pred.h; ++y)
        for (int x = 0; x < pred.w; ++x) {
            if (pred.at(y, x)) ppix.push_back({y, x});
            if (truth.at(y, x)) tpix.push_back({y, x});
        }
    std::vector<CandidatePair> out;
    for (int i = 0; i < int(ppix.size()); ++i)
        for (int j = 0; j < int(tpix.size()); ++j) {
            const double dy = ppix[std::size_t(i)].first - tpix[std::size_t(j)].first;
            const double dx = ppix[std::size_t(i)].second - tpix[std::size_t(j)].second;
            if (dy * dy + dx * dx <= radius * radius) out.push_back({i, j});
        }
    return out;
}

inline std::int64_t optimal_match_count(const std::vector<CandidatePair>& pairs) {
    std::int64_t best = 0;
    std::vector<int> pused, tused;
    for (const auto& p : pairs) {
        pused.resize(std::size_t(std::max<int>(int(pused.size()), p.pi + 1)), 0);
        tused.resize(std::size_t(std::max<int>(int(tused.size()), p.ti + 1)), 0);
    }
    std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t idx,
                                                             std::int64_t count) {
        best = std::max(best, count);
        if (idx >= pairs.size()) return;
        rec(idx + 1, count);  // skip this pair
        const auto& p = pairs[idx];
        if (!pused[std::size_t(p.pi)] && !tused[std::size_t(p.ti)]) {
            pused[std::size_t(p.pi)] = 1;
            tused[std::size_t(p.ti)] = 1;
            rec(idx + 1, count + 1);
            pused[std::size_t(p.pi)] = 0;
            tused[std::size_t(p.ti)] = 0;
        }
    };
    rec(0, 0);
    return best;
}

inline Tensor random_tensor(int n, int c, int h, int w, pidinet::Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(n, c, h, w);
    for (auto& v : t.data) v = real(rng.uniform(lo, hi));
    return t;
}

}  // namespace oracle
