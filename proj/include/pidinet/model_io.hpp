#pragma once

#include <string>

#include "pidinet/model.hpp"

namespace pidinet {

// Model container: "PDCN" magic, u32-LE version, u32-LE header length, a
// UTF-8 JSON header (architecture, flags, seed, tensor manifest with byte
// offsets), then all tensors as raw little-endian f32 in manifest order.
// load(save(m)) reproduces bit-identical weights.
void save_model(const PiDiNetModel& m, const std::string& path);
PiDiNetModel load_model(const std::string& path);

}  // namespace pidinet
