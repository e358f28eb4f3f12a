#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pidinet/tensor.hpp"

namespace pidinet {

struct AdamState {
    std::int64_t step = 0;
    double lr = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m, v;  // first/second moments, one entry per parameter
};

AdamState make_adam_state(std::int64_t param_count, double lr = 0.005);

// Starts one optimizer step (advances the bias-correction counter).
void adam_begin_step(AdamState& s);

// Bias-corrected update of a contiguous parameter segment whose moments live
// at [offset, offset + params.size()). Throws NonFiniteGradientError naming
// `block` when any gradient entry is non-finite; the segment is left intact.
void adam_update(AdamState& s, std::int64_t offset, std::span<real> params,
                 std::span<const real> grads, const std::string& block = "params");

// Whole-array convenience: begin_step + update at offset 0.
void adam_step(AdamState& s, std::span<real> params, std::span<const real> grads);

// Multi-step schedule: base 0.005, decayed by 0.1 at epochs {8, 12}, or at
// {10, 16} when the extended 20-epoch scheme is selected.
double lr_at(int epoch, int total_epochs, bool with_extra_data);
double lr_schedule_factor(int epoch, bool with_extra_data);

}  // namespace pidinet
