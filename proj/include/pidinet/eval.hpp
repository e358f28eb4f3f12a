#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pidinet/tensor.hpp"

namespace pidinet {

// Binary pixel map used by the boundary benchmark.
struct Bitmap {
    int h = 0, w = 0;
    std::vector<std::uint8_t> v;  // 0/1

    Bitmap() = default;
    Bitmap(int h_, int w_) : h(h_), w(w_), v(std::size_t(h_) * w_, 0) {}
    std::uint8_t at(int y, int x) const { return v[std::size_t(y) * w + x]; }
    void set(int y, int x, std::uint8_t val) { v[std::size_t(y) * w + x] = val; }
    std::int64_t count() const {
        std::int64_t c = 0;
        for (auto b : v) c += b;
        return c;
    }
};

Bitmap binarize(const Tensor& map, double threshold);  // value >= threshold

// Guo-Hall two-subiteration thinning to a 1-pixel-wide skeleton. Idempotent;
// never adds pixels.
Bitmap thin_edges(const Bitmap& b);

struct MatchCounts {
    std::int64_t tp = 0, fp = 0, fn = 0;
};

// Greedy closest-first one-to-one matching within the given Euclidean pixel
// radius. Ties break on the coordinate pair, symmetrically, so swapping the
// two maps exactly swaps fp and fn.
MatchCounts match_edges(const Bitmap& pred, const Bitmap& truth, double radius);

struct PrPoint {
    double threshold = 0;
    std::int64_t tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f = 0;
};

struct EvalConfig {
    int n_thresholds = 33;
    double match_radius_frac = 0.0075;  // of the image diagonal
    bool thin = true;
    bool quantile_thresholds = false;   // per-image order statistics instead of uniform levels
    double truth_eta = 0.3;             // truth binarization threshold
};

struct EvalReport {
    double ods_f = 0;
    double ois_f = 0;
    double ods_threshold = 0;
    std::vector<PrPoint> pr_curve;
};

// F-measure at the best dataset-wide threshold (ODS) and at the best
// per-image threshold (OIS) over a sweep of n_thresholds levels in (0,1).
EvalReport ods_ois(const std::vector<Tensor>& preds, const std::vector<Tensor>& truths,
                   const EvalConfig& cfg);

std::string pr_curve_csv(const std::vector<PrPoint>& curve);

}  // namespace pidinet
