#pragma once

#include <string>

#include "pidinet/tensor.hpp"

namespace pidinet {

// Binary PPM (P6), 8-bit RGB. image is (1,3,H,W) with values in [0,1].
void write_ppm(const std::string& path, const Tensor& image);
Tensor read_ppm(const std::string& path);

// Binary PGM (P5). maxval 255 or 65535; 16-bit samples are big-endian per
// the format. map is (1,1,H,W) with values in [0,1], scaled to the full
// integer range.
void write_pgm(const std::string& path, const Tensor& map, int maxval = 65535);
Tensor read_pgm(const std::string& path);

}  // namespace pidinet
