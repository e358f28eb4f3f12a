#include "pidinet/optim.hpp"

#include <cmath>

namespace pidinet {

AdamState make_adam_state(std::int64_t param_count, double lr) {
    if (param_count < 0) throw ParameterError("make_adam_state: negative parameter count");
    if (lr <= 0.0) throw ParameterError("make_adam_state: learning rate must be positive");
    AdamState s;
    s.lr = lr;
    s.m.assign(std::size_t(param_count), 0.0);
    s.v.assign(std::size_t(param_count), 0.0);
    return s;
}

void adam_begin_step(AdamState& s) { ++s.step; }

void adam_update(AdamState& s, std::int64_t offset, std::span<real> params,
                 std::span<const real> grads, const std::string& block) {
    if (params.size() != grads.size())
        throw DimensionError("adam_update: parameter/gradient size mismatch");
    if (offset < 0 || std::size_t(offset) + params.size() > s.m.size())
        throw DimensionError("adam_update: segment exceeds optimizer state");
    if (s.step <= 0) throw ParameterError("adam_update: call adam_begin_step first");

    for (const real g : grads)
        if (!std::isfinite(double(g)))
            throw NonFiniteGradientError("non-finite gradient in parameter block '" + block + "'");

    const double bc1 = 1.0 - std::pow(s.beta1, double(s.step));
    const double bc2 = 1.0 - std::pow(s.beta2, double(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::size_t j = std::size_t(offset) + i;
        const double g = double(grads[i]);
        s.m[j] = s.beta1 * s.m[j] + (1.0 - s.beta1) * g;
        s.v[j] = s.beta2 * s.v[j] + (1.0 - s.beta2) * g * g;
        const double mhat = s.m[j] / bc1;
        const double vhat = s.v[j] / bc2;
        params[i] = real(double(params[i]) - s.lr * mhat / (std::sqrt(vhat) + s.eps));
    }
}

void adam_step(AdamState& s, std::span<real> params, std::span<const real> grads) {
    adam_begin_step(s);
    adam_update(s, 0, params, grads);
}

double lr_schedule_factor(int epoch, bool with_extra_data) {
    const int first = with_extra_data ? 10 : 8;
    const int second = with_extra_data ? 16 : 12;
    double f = 1.0;
    if (epoch >= first) f *= 0.1;
    if (epoch >= second) f *= 0.1;
    return f;
}

double lr_at(int epoch, int total_epochs, bool with_extra_data) {
    if (epoch < 0 || epoch >= total_epochs)
        throw ParameterError("lr_at: epoch out of range");
    return 0.005 * lr_schedule_factor(epoch, with_extra_data);
}

}  // namespace pidinet
