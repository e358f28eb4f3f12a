#include "pidinet/data.hpp"

#include <algorithm>
#include <cmath>

#include "pidinet/ops.hpp"

namespace pidinet {

namespace {

struct Shape {
    bool ellipse = true;
    double cx = 0, cy = 0;
    double rx = 1, ry = 1;
    double rot = 0;                    // ellipse orientation
    std::vector<double> poly;          // x0,y0,x1,y1,... (convex, CCW)
    real color[3] = {0, 0, 0};

    bool contains(double x, double y) const {
        if (ellipse) {
            const double dx = x - cx, dy = y - cy;
            const double c = std::cos(rot), s = std::sin(rot);
            const double u = (dx * c + dy * s) / rx;
            const double v = (-dx * s + dy * c) / ry;
            return u * u + v * v <= 1.0;
        }
        const std::size_t k = poly.size() / 2;
        for (std::size_t i = 0; i < k; ++i) {
            const double x0 = poly[2 * i], y0 = poly[2 * i + 1];
            const double x1 = poly[2 * ((i + 1) % k)], y1 = poly[2 * ((i + 1) % k) + 1];
            if ((x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) < 0.0) return false;
        }
        return true;
    }
};

Shape random_shape(Rng& rng, int size) {
    Shape sh;
    sh.ellipse = rng.bernoulli(0.5);
    sh.cx = rng.uniform(0.15, 0.85) * size;
    sh.cy = rng.uniform(0.15, 0.85) * size;
    for (int c = 0; c < 3; ++c) sh.color[c] = real(rng.uniform(0.05, 0.95));
    if (sh.ellipse) {
        sh.rx = rng.uniform(0.07, 0.22) * size;
        sh.ry = rng.uniform(0.07, 0.22) * size;
        sh.rot = rng.uniform(0.0, 3.14159265358979);
    } else {
        const int verts = rng.uniform_int(3, 6);
        const double radius = rng.uniform(0.08, 0.22) * size;
        const double phase = rng.uniform(0.0, 6.28318530717959);
        for (int v = 0; v < verts; ++v) {
            const double a = phase + 6.28318530717959 * v / verts;
            const double r = radius * rng.uniform(0.7, 1.0);
            sh.poly.push_back(sh.cx + r * std::cos(a));
            sh.poly.push_back(sh.cy + r * std::sin(a));
        }
    }
    return sh;
}

// Topmost shape covering the point, -1 for background.
int label_at(const std::vector<Shape>& shapes, double x, double y) {
    for (int i = int(shapes.size()) - 1; i >= 0; --i)
        if (shapes[std::size_t(i)].contains(x, y)) return i;
    return -1;
}

Sample render_sample(int size, int annotators, Rng& rng) {
    Sample s;
    s.image = Tensor(1, 3, size, size);
    s.truth = Tensor(1, 1, size, size);

    real bg[3];
    for (int c = 0; c < 3; ++c) bg[c] = real(rng.uniform(0.05, 0.95));
    const int nshapes = rng.uniform_int(2, 6);
    std::vector<Shape> shapes;
    for (int i = 0; i < nshapes; ++i) shapes.push_back(random_shape(rng, size));

    // 3x3 subsampled coverage for anti-aliased fills.
    const std::int64_t plane = std::int64_t(size) * size;
    std::vector<int> labels(static_cast<std::size_t>(plane));
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double acc[3] = {0, 0, 0};
            for (int sy = 0; sy < 3; ++sy)
                for (int sx = 0; sx < 3; ++sx) {
                    const double px = x + (sx + 0.5) / 3.0;
                    const double py = y + (sy + 0.5) / 3.0;
                    const int l = label_at(shapes, px, py);
                    const real* col = l < 0 ? bg : shapes[std::size_t(l)].color;
                    for (int c = 0; c < 3; ++c) acc[c] += double(col[c]);
                }
            for (int c = 0; c < 3; ++c)
                s.image.at(0, c, y, x) = real(acc[c] / 9.0);
            labels[std::size_t(y) * size + x] = label_at(shapes, x + 0.5, y + 0.5);
        }

    // True boundary: label changes toward the right or lower neighbour.
    std::vector<std::pair<int, int>> boundary;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const int l = labels[std::size_t(y) * size + x];
            const bool edge =
                (x + 1 < size && labels[std::size_t(y) * size + x + 1] != l) ||
                (y + 1 < size && labels[std::size_t(y + 1) * size + x] != l);
            if (edge) boundary.emplace_back(y, x);
        }

    // Pixel noise.
    for (auto& v : s.image.data) {
        double nv = double(v) + rng.normal(0.0, 0.05);
        v = real(std::clamp(nv, 0.0, 1.0));
    }

    if (boundary.empty()) return s;  // caller redraws

    // Each annotator traces the boundary with a per-pixel wobble: the exact
    // pixel with probability 0.8, one of its 8 neighbours otherwise.
    std::vector<int> counts(std::size_t(plane), 0);
    std::vector<std::uint8_t> marked(static_cast<std::size_t>(plane));
    static const int kOff[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                   {0, 1},  {1, -1}, {1, 0},  {1, 1}};
    for (int a = 0; a < annotators; ++a) {
        std::fill(marked.begin(), marked.end(), std::uint8_t(0));
        for (const auto& [by, bx] : boundary) {
            int y = by, x = bx;
            if (!rng.bernoulli(0.8)) {
                const int k = rng.uniform_int(0, 7);
                y += kOff[k][0];
                x += kOff[k][1];
            }
            if (y >= 0 && y < size && x >= 0 && x < size)
                marked[std::size_t(y) * size + x] = 1;
        }
        for (std::int64_t i = 0; i < plane; ++i) counts[std::size_t(i)] += marked[std::size_t(i)];
    }
    for (std::int64_t i = 0; i < plane; ++i)
        s.truth.data[std::size_t(i)] = real(double(counts[std::size_t(i)]) / annotators);
    return s;
}

}  // namespace

std::vector<Sample> synth_dataset(int n, int size, int annotators, std::uint64_t seed) {
    if (n <= 0) throw ParameterError("synth_dataset: sample count must be positive");
    if (size < 32) throw ParameterError("synth_dataset: size must be at least 32");
    if (annotators < 1) throw ParameterError("synth_dataset: need at least one annotator");

    std::vector<Sample> out;
    out.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        Sample s;
        for (std::uint64_t attempt = 0;; ++attempt) {
            Rng rng = substream(seed, std::uint64_t(i), attempt);
            s = render_sample(size, annotators, rng);
            bool any = false;
            for (real v : s.truth.data)
                if (v > real(0)) {
                    any = true;
                    break;
                }
            if (any) break;
        }
        char name[32];
        std::snprintf(name, sizeof(name), "im%04d", i);
        s.name = name;
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

Tensor resize_nearest(const Tensor& x, int out_h, int out_w) {
    Tensor out(x.n, x.c, out_h, out_w);
    const double sy = double(x.h) / out_h, sx = double(x.w) / out_w;
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int oy = 0; oy < out_h; ++oy)
                for (int ox = 0; ox < out_w; ++ox) {
                    int iy = int(std::lround((oy + 0.5) * sy - 0.5));
                    int ix = int(std::lround((ox + 0.5) * sx - 0.5));
                    iy = std::clamp(iy, 0, x.h - 1);
                    ix = std::clamp(ix, 0, x.w - 1);
                    out.at(n, c, oy, ox) = x.at(n, c, iy, ix);
                }
    return out;
}

Tensor rot_quarters(const Tensor& x, int q) {
    q = ((q % 4) + 4) % 4;
    if (q == 0) return x;
    const int oh = (q % 2 == 0) ? x.h : x.w;
    const int ow = (q % 2 == 0) ? x.w : x.h;
    Tensor out(x.n, x.c, oh, ow);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) {
                    int ny = 0, nx = 0;
                    switch (q) {  // counter-clockwise quarter turns
                        case 1: ny = x.w - 1 - xx; nx = y; break;
                        case 2: ny = x.h - 1 - y; nx = x.w - 1 - xx; break;
                        case 3: ny = xx; nx = x.h - 1 - y; break;
                    }
                    out.at(n, c, ny, nx) = x.at(n, c, y, xx);
                }
    return out;
}

Tensor flip_horizontal(const Tensor& x) {
    Tensor out = zeros_like(x);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx)
                    out.at(n, c, y, x.w - 1 - xx) = x.at(n, c, y, xx);
    return out;
}

Tensor crop(const Tensor& x, int y0, int x0, int ch, int cw) {
    if (y0 < 0 || x0 < 0 || y0 + ch > x.h || x0 + cw > x.w)
        throw ParameterError("augment: crop window out of bounds");
    Tensor out(x.n, x.c, ch, cw);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int y = 0; y < ch; ++y)
                for (int xx = 0; xx < cw; ++xx)
                    out.at(n, c, y, xx) = x.at(n, c, y0 + y, x0 + xx);
    return out;
}

}  // namespace

Sample augment_apply(const Sample& s, const AugmentDraw& d, int crop_h, int crop_w) {
    Sample out;
    out.name = s.name;
    Tensor img = s.image;
    Tensor tr = s.truth;
    if (d.scale != 1.0) {
        const int nh = std::max(1, int(std::lround(s.image.h * d.scale)));
        const int nw = std::max(1, int(std::lround(s.image.w * d.scale)));
        img = bilinear_upsample(img, nh, nw);
        tr = resize_nearest(tr, nh, nw);
    }
    if (d.rot_quarters % 4 != 0) {
        img = rot_quarters(img, d.rot_quarters);
        tr = rot_quarters(tr, d.rot_quarters);
    }
    if (d.flip_h) {
        img = flip_horizontal(img);
        tr = flip_horizontal(tr);
    }
    if (crop_h > 0 && crop_w > 0 && (crop_h != img.h || crop_w != img.w)) {
        img = crop(img, d.crop_y, d.crop_x, crop_h, crop_w);
        tr = crop(tr, d.crop_y, d.crop_x, crop_h, crop_w);
    }
    out.image = std::move(img);
    out.truth = std::move(tr);
    return out;
}

Sample augment(const Sample& s, Rng& rng, int crop_size) {
    static const double kScales[3] = {0.5, 1.0, 1.5};
    const int crop_h = crop_size > 0 ? crop_size : s.image.h;
    const int crop_w = crop_size > 0 ? crop_size : s.image.w;
    AugmentDraw d;
    d.flip_h = rng.bernoulli(0.5);
    d.rot_quarters = rng.uniform_int(0, 3);

    int sh = 0, sw = 0;
    for (int attempt = 0;; ++attempt) {
        d.scale = kScales[rng.uniform_int(0, 2)];
        sh = std::max(1, int(std::lround(s.image.h * d.scale)));
        sw = std::max(1, int(std::lround(s.image.w * d.scale)));
        const int rh = d.rot_quarters % 2 ? sw : sh;
        const int rw = d.rot_quarters % 2 ? sh : sw;
        if (rh >= crop_h && rw >= crop_w) break;
        if (attempt >= 16)
            throw ParameterError("augment: crop size exceeds every scaled image size");
    }
    const int rh = d.rot_quarters % 2 ? sw : sh;
    const int rw = d.rot_quarters % 2 ? sh : sw;
    d.crop_y = rh > crop_h ? int(rng.next_below(std::uint64_t(rh - crop_h + 1))) : 0;
    d.crop_x = rw > crop_w ? int(rng.next_below(std::uint64_t(rw - crop_w + 1))) : 0;
    return augment_apply(s, d, crop_h, crop_w);
}

}  // namespace pidinet
