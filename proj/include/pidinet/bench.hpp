#pragma once

#include <string>
#include <vector>

#include "pidinet/model.hpp"

namespace pidinet {

struct BenchReport {
    std::int64_t params = 0;
    std::int64_t macs = 0;
    int height = 0, width = 0;
    int warmup = 0, iters = 0;
    double fps = 0.0;                  // reparameterized (dense) forward
    double fps_difference_form = 0.0;  // pairwise difference forward; equals
                                       // fps for PDC-free models
    std::vector<LayerCost> layers;
};

// Wall-clock single-image forwards; warmup runs are discarded. Single
// threaded so timings stay stable.
double measure_fps(const PiDiNetModel& m, int h, int w, int warmup, int iters,
                   ConvPath path);

BenchReport benchmark(const PiDiNetModel& m, int h, int w, int warmup, int iters);

std::string bench_report_text(const BenchReport& r);  // key=value block
std::string bench_report_json(const BenchReport& r);

}  // namespace pidinet
