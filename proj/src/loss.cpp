#include "pidinet/loss.hpp"

#include <cmath>

namespace pidinet {

LossResult robust_edge_loss(const Tensor& p, const Tensor& y, const LossConfig& cfg) {
    check_same_shape(p, y, "robust_edge_loss");
    if (cfg.lambda <= 0.0) throw ParameterError("robust_edge_loss: lambda must be positive");
    if (cfg.eta < 0.0 || cfg.eta > 1.0)
        throw ParameterError("robust_edge_loss: eta must lie in [0, 1]");

    constexpr double kEps = 1e-6;
    LossResult r;
    r.grad_p = zeros_like(p);
    r.degenerate = true;

    const std::int64_t per_image = std::int64_t(p.c) * p.h * p.w;
    double total = 0.0;
    for (int n = 0; n < p.n; ++n) {
        const real* yp = y.data.data() + std::int64_t(n) * per_image;
        const real* pp = p.data.data() + std::int64_t(n) * per_image;
        real* gp = r.grad_p.data.data() + std::int64_t(n) * per_image;

        std::int64_t neg = 0, pos = 0;
        for (std::int64_t i = 0; i < per_image; ++i) {
            if (yp[i] == real(0))
                ++neg;
            else if (double(yp[i]) >= cfg.eta)
                ++pos;
        }
        const std::int64_t valid = neg + pos;
        if (valid == 0) continue;  // whole map excluded; contributes nothing
        r.degenerate = false;

        const double beta = double(neg) / double(valid);
        const double alpha = cfg.lambda * (1.0 - beta);

        for (std::int64_t i = 0; i < per_image; ++i) {
            const double pv = double(pp[i]);
            const double pc = pv < kEps ? kEps : (pv > 1.0 - kEps ? 1.0 - kEps : pv);
            const bool clamped = pv < kEps || pv > 1.0 - kEps;
            if (yp[i] == real(0)) {
                total += -alpha * std::log(1.0 - pc);
                gp[i] = clamped ? real(0) : real(alpha / (1.0 - pc));
            } else if (double(yp[i]) >= cfg.eta) {
                total += -beta * std::log(pc);
                gp[i] = clamped ? real(0) : real(-beta / pc);
            }
            // 0 < y < eta: excluded, loss and gradient stay exactly zero
        }
    }
    r.loss = total;
    return r;
}

}  // namespace pidinet
