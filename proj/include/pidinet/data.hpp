#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pidinet/rng.hpp"
#include "pidinet/tensor.hpp"

namespace pidinet {

// One training/eval pair: RGB image in [0,1] and a ground-truth map whose
// values are the fraction of annotators marking each pixel as edge.
struct Sample {
    Tensor image;  // (1, 3, H, W)
    Tensor truth;  // (1, 1, H, W), values in [0, 1]
    std::string name;
};

// Renders n images of random anti-aliased ellipses/polygons with Gaussian
// pixel noise (sigma 0.05). The truth map simulates `annotators` tracings of
// the visible region boundaries, each with a +-1 px wobble, so fractional
// agreement values appear whenever annotators > 1.
std::vector<Sample> synth_dataset(int n, int size, int annotators, std::uint64_t seed);

// Deterministic augmentation parameters, applied as
// scale -> rotate -> flip -> crop.
struct AugmentDraw {
    double scale = 1.0;     // one of 0.5 / 1.0 / 1.5
    int rot_quarters = 0;   // 0..3 quarter turns counter-clockwise
    bool flip_h = false;
    int crop_y = 0, crop_x = 0;
};

// Images resample bilinearly, truth maps with nearest neighbour; flips and
// quarter rotations are exact index permutations.
Sample augment_apply(const Sample& s, const AugmentDraw& d, int crop_h, int crop_w);

// Random draw: flip 1/2, scale uniform over {0.5, 1, 1.5} (redrawn while the
// scaled image cannot fit the crop), rotation uniform over quarter turns,
// crop offset uniform. crop_size == 0 keeps the native size.
Sample augment(const Sample& s, Rng& rng, int crop_size);

}  // namespace pidinet
