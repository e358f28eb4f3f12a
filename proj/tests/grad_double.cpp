// Double-precision gradient oracle. Built against the PIDINET_DOUBLE_PRECISION
// library variant so end-to-end finite differences stay tight (1e-6) even
// through deep graphs, where single-precision forward noise would swamp the
// comparison.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "pidinet/loss.hpp"
#include "pidinet/model.hpp"
#include "pidinet/rng.hpp"

using namespace pidinet;

static_assert(sizeof(real) == 8, "this suite requires the double-precision build");

TEST_CASE("conv2d gradients at 1e-6 in double precision") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int groups = 1 + int(rng.next_below(2));
        const int k = rng.bernoulli(0.3) ? 1 : 3;
        const int padding = k == 3 ? int(rng.next_below(2)) : 0;
        Tensor x = oracle::random_tensor(1, 2 * groups, 5, 5, rng);
        ConvParams p;
        p.kernel = oracle::random_tensor(2 * groups, x.c / groups, k, k, rng);
        p.groups = groups;
        p.padding = padding;
        p.bias.resize(std::size_t(2 * groups));
        for (auto& b : p.bias) b = real(rng.uniform(-0.3, 0.3));

        const Tensor out = conv2d(x, p);
        const Tensor w = oracle::random_tensor(out.n, out.c, out.h, out.w, rng);
        auto loss = [&]() {
            const Tensor o = conv2d(x, p);
            double s = 0.0;
            for (std::size_t i = 0; i < o.data.size(); ++i)
                s += double(o.data[i]) * double(w.data[i]);
            return s;
        };
        const ConvGrads g = conv2d_backward(x, p, w);
        const double h = 1e-5;
        CHECK(oracle::grad_agreement(g.x.data, oracle::finite_diff(x.data, loss, h), 1e-6) == 1.0);
        CHECK(oracle::grad_agreement(g.kernel.data, oracle::finite_diff(p.kernel.data, loss, h),
                                     1e-6) == 1.0);
        CHECK(oracle::grad_agreement(g.bias, oracle::finite_diff(p.bias, loss, h), 1e-6) == 1.0);
    }
}

TEST_CASE("full-model backward matches finite differences at 1e-6") {
    const ArchConfig cfg = make_arch_config("[CARV]x4", 4);  // M = 3
    PiDiNetModel m = build_model(cfg, 3);
    Rng rng(41);
    // Zero-initialized biases put ReLU inputs exactly on the kink wherever an
    // upstream activation patch is all zero; nudging every parameter moves
    // the graph to a generic (differentiable) point, as training would.
    for (ParamBlockRef& b : param_blocks(m)) {
        for (auto& v : b.weight->data) v += real(rng.uniform(-0.02, 0.02));
        if (b.bias)
            for (auto& v : *b.bias) v += real(rng.uniform(-0.02, 0.02));
    }
    const Tensor x = oracle::random_tensor(1, 3, 16, 16, rng, 0.0, 1.0);
    std::array<Tensor, 4> cs;
    Tensor cf = oracle::random_tensor(1, 1, 16, 16, rng);
    for (int s = 0; s < 4; ++s) cs[std::size_t(s)] = oracle::random_tensor(1, 1, 16, 16, rng);

    auto loss = [&]() {
        const ForwardResult r = forward(m, x);
        double total = 0.0;
        for (int s = 0; s < 4; ++s)
            for (std::size_t i = 0; i < r.side[std::size_t(s)].data.size(); ++i)
                total += double(r.side[std::size_t(s)].data[i]) *
                         double(cs[std::size_t(s)].data[i]);
        for (std::size_t i = 0; i < r.fused.data.size(); ++i)
            total += double(r.fused.data[i]) * double(cf.data[i]);
        return total;
    };

    ForwardTrace trace;
    forward(m, x, trace);
    zero_grads(m);
    backward(m, trace, cs, cf);

    std::vector<real> analytic;
    std::vector<double> fd;
    for (ParamBlockRef& b : param_blocks(m)) {
        Tensor* wt = b.weight;
        for (int pick = 0; pick < 3; ++pick) {
            const std::size_t idx = std::size_t(rng.next_below(wt->data.size()));
            const real saved = wt->data[idx];
            const double h = 1e-5;
            wt->data[idx] = real(double(saved) + h);
            const double lp = loss();
            wt->data[idx] = real(double(saved) - h);
            const double lm = loss();
            wt->data[idx] = saved;
            fd.push_back((lp - lm) / (2.0 * h));
            analytic.push_back(wt->grad[idx]);
        }
        if (b.bias && !b.bias->empty()) {
            const std::size_t idx = std::size_t(rng.next_below(b.bias->size()));
            const real saved = (*b.bias)[idx];
            const double h = 1e-5;
            (*b.bias)[idx] = real(double(saved) + h);
            const double lp = loss();
            (*b.bias)[idx] = real(double(saved) - h);
            const double lm = loss();
            (*b.bias)[idx] = saved;
            fd.push_back((lp - lm) / (2.0 * h));
            analytic.push_back((*b.bias_grad)[idx]);
        }
    }
    REQUIRE(analytic.size() >= 150);
    CHECK(oracle::grad_agreement(analytic, fd, 1e-6) >= 0.99);
}

TEST_CASE("loss + sigmoid chain through a traced forward at 1e-6") {
    const ArchConfig cfg = make_arch_config("[AV]x8", 4, false, false);
    PiDiNetModel m = build_model(cfg, 9);
    Rng rng(77);
    const Tensor x = oracle::random_tensor(1, 3, 16, 16, rng, 0.0, 1.0);
    Tensor truth(1, 1, 16, 16);
    for (auto& v : truth.data) {
        const double u = rng.next_double();
        v = u < 0.75 ? real(0) : (u < 0.85 ? real(0.2) : real(1));
    }
    const LossConfig lcfg{1.1, 0.3};

    auto total_loss = [&]() {
        const ForwardResult r = forward(m, x);
        double total = 0.0;
        for (int s = 0; s < 4; ++s)
            total += robust_edge_loss(r.side[std::size_t(s)], truth, lcfg).loss;
        total += robust_edge_loss(r.fused, truth, lcfg).loss;
        return total;
    };

    ForwardTrace trace;
    const ForwardResult r = forward(m, x, trace);
    std::array<Tensor, 4> gs;
    for (int s = 0; s < 4; ++s)
        gs[std::size_t(s)] = robust_edge_loss(r.side[std::size_t(s)], truth, lcfg).grad_p;
    const Tensor gf = robust_edge_loss(r.fused, truth, lcfg).grad_p;
    zero_grads(m);
    backward(m, trace, gs, gf);

    std::vector<real> analytic;
    std::vector<double> fd;
    for (ParamBlockRef& b : param_blocks(m)) {
        for (int pick = 0; pick < 2; ++pick) {
            const std::size_t idx = std::size_t(rng.next_below(b.weight->data.size()));
            const real saved = b.weight->data[idx];
            const double h = 1e-5;
            b.weight->data[idx] = real(double(saved) + h);
            const double lp = total_loss();
            b.weight->data[idx] = real(double(saved) - h);
            const double lm = total_loss();
            b.weight->data[idx] = saved;
            fd.push_back((lp - lm) / (2.0 * h));
            analytic.push_back(b.weight->grad[idx]);
        }
    }
    CHECK(oracle::grad_agreement(analytic, fd, 1e-6) >= 0.99);
}
