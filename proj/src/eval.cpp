#include "pidinet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace pidinet {

Bitmap binarize(const Tensor& map, double threshold) {
    if (map.n != 1 || map.c != 1)
        throw DimensionError("binarize: expected a single-channel map, got " + map.shape_str());
    Bitmap b(map.h, map.w);
    for (std::size_t i = 0; i < b.v.size(); ++i)
        b.v[i] = double(map.data[i]) >= threshold ? 1 : 0;
    return b;
}

Bitmap thin_edges(const Bitmap& b) {
    Bitmap cur = b;
    if (cur.h == 0 || cur.w == 0) return cur;
    std::vector<std::uint8_t> del(cur.v.size());
    auto px = [&cur](int y, int x) -> int {
        if (y < 0 || y >= cur.h || x < 0 || x >= cur.w) return 0;
        return cur.v[std::size_t(y) * cur.w + x];
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (int iter = 0; iter < 2; ++iter) {
            std::fill(del.begin(), del.end(), std::uint8_t(0));
            for (int y = 0; y < cur.h; ++y)
                for (int x = 0; x < cur.w; ++x) {
                    if (!px(y, x)) continue;
                    const int p2 = px(y - 1, x), p3 = px(y - 1, x + 1), p4 = px(y, x + 1);
                    const int p5 = px(y + 1, x + 1), p6 = px(y + 1, x), p7 = px(y + 1, x - 1);
                    const int p8 = px(y, x - 1), p9 = px(y - 1, x - 1);
                    const int C = ((!p2) & (p3 | p4)) + ((!p4) & (p5 | p6)) +
                                  ((!p6) & (p7 | p8)) + ((!p8) & (p9 | p2));
                    const int n1 = (p9 | p2) + (p3 | p4) + (p5 | p6) + (p7 | p8);
                    const int n2 = (p2 | p3) + (p4 | p5) + (p6 | p7) + (p8 | p9);
                    const int n = n1 < n2 ? n1 : n2;
                    const int m = iter == 0 ? ((p6 | p7 | (!p9)) & p8)
                                            : ((p2 | p3 | (!p5)) & p4);
                    if (C == 1 && n >= 2 && n <= 3 && m == 0)
                        del[std::size_t(y) * cur.w + x] = 1;
                }
            for (std::size_t i = 0; i < cur.v.size(); ++i)
                if (del[i]) {
                    cur.v[i] = 0;
                    changed = true;
                }
        }
    }
    return cur;
}

MatchCounts match_edges(const Bitmap& pred, const Bitmap& truth, double radius) {
    if (pred.h != truth.h || pred.w != truth.w)
        throw DimensionError("match_edges: map size mismatch");
    if (radius < 0) throw ParameterError("match_edges: negative radius");

    const int r = int(std::floor(radius));
    const double r2 = radius * radius;

    struct Cand {
        std::int64_t d2;
        std::int32_t ka, kb;  // coordinate keys, sorted so the order is symmetric
        std::int32_t pi, ti;
    };
    std::vector<std::pair<int, int>> ppix, tpix;
    std::vector<std::int32_t> tindex(std::size_t(pred.h) * pred.w, -1);
    for (int y = 0; y < pred.h; ++y)
        for (int x = 0; x < pred.w; ++x) {
            if (pred.at(y, x)) ppix.emplace_back(y, x);
            if (truth.at(y, x)) {
                tindex[std::size_t(y) * pred.w + x] = std::int32_t(tpix.size());
                tpix.emplace_back(y, x);
            }
        }

    std::vector<Cand> cands;
    for (std::int32_t pi = 0; pi < std::int32_t(ppix.size()); ++pi) {
        const auto [py, px] = ppix[std::size_t(pi)];
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const int ty = py + dy, tx = px + dx;
                if (ty < 0 || ty >= pred.h || tx < 0 || tx >= pred.w) continue;
                const std::int64_t d2 = std::int64_t(dy) * dy + std::int64_t(dx) * dx;
                if (double(d2) > r2) continue;
                const std::int32_t ti = tindex[std::size_t(ty) * pred.w + tx];
                if (ti < 0) continue;
                const std::int32_t kp = std::int32_t(py) * pred.w + px;
                const std::int32_t kt = std::int32_t(ty) * pred.w + tx;
                cands.push_back(Cand{d2, std::min(kp, kt), std::max(kp, kt), pi, ti});
            }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return std::tie(a.d2, a.ka, a.kb) < std::tie(b.d2, b.ka, b.kb);
    });

    std::vector<std::uint8_t> pused(ppix.size()), tused(tpix.size());
    std::int64_t tp = 0;
    for (const Cand& c : cands) {
        if (pused[std::size_t(c.pi)] || tused[std::size_t(c.ti)]) continue;
        pused[std::size_t(c.pi)] = 1;
        tused[std::size_t(c.ti)] = 1;
        ++tp;
    }
    MatchCounts mc;
    mc.tp = tp;
    mc.fp = std::int64_t(ppix.size()) - tp;
    mc.fn = std::int64_t(tpix.size()) - tp;
    return mc;
}

namespace {

double fmeasure(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

PrPoint make_pr(double threshold, std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    PrPoint pt;
    pt.threshold = threshold;
    pt.tp = tp;
    pt.fp = fp;
    pt.fn = fn;
    pt.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
    pt.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
    pt.f = fmeasure(pt.precision, pt.recall);
    return pt;
}

}  // namespace

EvalReport ods_ois(const std::vector<Tensor>& preds, const std::vector<Tensor>& truths,
                   const EvalConfig& cfg) {
    if (preds.empty()) throw ParameterError("ods_ois: empty dataset");
    if (preds.size() != truths.size())
        throw DimensionError("ods_ois: prediction/truth count mismatch");
    if (cfg.n_thresholds < 2) throw ParameterError("ods_ois: need at least 2 thresholds");
    if (cfg.match_radius_frac <= 0) throw ParameterError("ods_ois: radius must be positive");

    const int nt = cfg.n_thresholds;
    std::vector<std::int64_t> tp(std::size_t(nt), 0), fp(std::size_t(nt), 0),
        fn(std::size_t(nt), 0);
    std::vector<double> levels(static_cast<std::size_t>(nt));
    for (int k = 0; k < nt; ++k) levels[std::size_t(k)] = double(k + 1) / double(nt + 1);

    double ois_sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Tensor& pred = preds[i];
        const Tensor& truth = truths[i];
        if (pred.h != truth.h || pred.w != truth.w)
            throw DimensionError("ods_ois: prediction/truth size mismatch");
        const Bitmap truth_bin = binarize(truth, cfg.truth_eta);
        const double diag = std::sqrt(double(pred.h) * pred.h + double(pred.w) * pred.w);
        const double radius = cfg.match_radius_frac * diag;

        std::vector<real> sorted;
        if (cfg.quantile_thresholds) {
            sorted.assign(pred.data.begin(), pred.data.end());
            std::sort(sorted.begin(), sorted.end());
        }

        double best_f = 0.0;
        for (int k = 0; k < nt; ++k) {
            double threshold;
            if (cfg.quantile_thresholds) {
                std::size_t idx = std::size_t(levels[std::size_t(k)] * double(sorted.size()));
                if (idx >= sorted.size()) idx = sorted.size() - 1;
                threshold = double(sorted[idx]);
            } else {
                threshold = levels[std::size_t(k)];
            }
            Bitmap pb = binarize(pred, threshold);
            if (cfg.thin) pb = thin_edges(pb);
            const MatchCounts mc = match_edges(pb, truth_bin, radius);
            tp[std::size_t(k)] += mc.tp;
            fp[std::size_t(k)] += mc.fp;
            fn[std::size_t(k)] += mc.fn;
            const PrPoint pt = make_pr(threshold, mc.tp, mc.fp, mc.fn);
            if (pt.f > best_f) best_f = pt.f;
        }
        ois_sum += best_f;
    }

    EvalReport rep;
    rep.pr_curve.reserve(std::size_t(nt));
    for (int k = 0; k < nt; ++k) {
        PrPoint pt = make_pr(levels[std::size_t(k)], tp[std::size_t(k)], fp[std::size_t(k)],
                             fn[std::size_t(k)]);
        if (pt.f > rep.ods_f) {
            rep.ods_f = pt.f;
            rep.ods_threshold = pt.threshold;
        }
        rep.pr_curve.push_back(pt);
    }
    rep.ois_f = ois_sum / double(preds.size());
    return rep;
}

std::string pr_curve_csv(const std::vector<PrPoint>& curve) {
    std::string out = "threshold,precision,recall,f\n";
    char line[128];
    for (const PrPoint& p : curve) {
        std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g,%.9g\n", p.threshold, p.precision,
                      p.recall, p.f);
        out += line;
    }
    return out;
}

}  // namespace pidinet
