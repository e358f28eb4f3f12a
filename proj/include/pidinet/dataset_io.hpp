#pragma once

#include <string>
#include <vector>

#include "pidinet/data.hpp"

namespace pidinet {

// Reads paired files NAME.ppm + NAME.gt.pgm from a directory, sorted by
// stem. Unpaired files produce a warning on stderr and are skipped; zero
// pairs is a DataError. Truth values are normalized to [0,1].
std::vector<Sample> load_dataset(const std::string& dir);

// Writes NAME.ppm + NAME.gt.pgm (16-bit truth) per sample.
void write_dataset(const std::string& dir, const std::vector<Sample>& samples);

}  // namespace pidinet
