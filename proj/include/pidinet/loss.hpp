#pragma once

#include "pidinet/tensor.hpp"

namespace pidinet {

struct LossConfig {
    double lambda = 1.1;  // positive-class weighting coefficient
    double eta = 0.3;     // annotator-agreement threshold
};

struct LossResult {
    double loss = 0.0;
    Tensor grad_p;           // d(loss)/d(prediction), zero at excluded pixels
    bool degenerate = false; // every pixel excluded (0 < y < eta)
};

// Annotator-robust weighted cross-entropy over one edge map. Per pixel:
//   y == 0        ->  -alpha * ln(1 - p)
//   0 < y < eta   ->  0 (pixel excluded entirely)
//   y >= eta      ->  -beta * ln(p)
// with beta = (#negatives) / (#non-excluded) per image and
// alpha = lambda * (1 - beta). p is clamped to [1e-6, 1 - 1e-6] before the
// logs; the gradient is exactly zero where the clamp is active. Batches sum
// over images, with beta computed per image.
LossResult robust_edge_loss(const Tensor& p, const Tensor& y, const LossConfig& cfg);

}  // namespace pidinet
