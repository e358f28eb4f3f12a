#include "pidinet/bench.hpp"

#include <chrono>
#include <cstdio>

#include "json.hpp"

#include "pidinet/rng.hpp"

namespace pidinet {

namespace {

Tensor random_image(int h, int w, std::uint64_t seed) {
    Tensor x(1, 3, h, w);
    Rng rng(seed);
    for (auto& v : x.data) v = real(rng.next_double());
    return x;
}

// Keeps the optimizer from discarding the forward results.
volatile double g_sink = 0.0;

}  // namespace

double measure_fps(const PiDiNetModel& m, int h, int w, int warmup, int iters,
                   ConvPath path) {
    if (iters <= 0) throw ParameterError("measure_fps: iteration count must be positive");
    const Tensor x = random_image(h, w, 0xb43c9ULL);
    for (int i = 0; i < warmup; ++i) {
        ForwardResult r = forward(m, x, path);
        g_sink = g_sink + double(r.fused.data[0]);
    }
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) {
        ForwardResult r = forward(m, x, path);
        g_sink = g_sink + double(r.fused.data[0]);
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    return secs > 0 ? double(iters) / secs : 0.0;
}

BenchReport benchmark(const PiDiNetModel& m, int h, int w, int warmup, int iters) {
    BenchReport r;
    r.height = h;
    r.width = w;
    r.warmup = warmup;
    r.iters = iters;
    r.layers = layer_costs(m, h, w);
    for (const LayerCost& lc : r.layers) {
        r.params += lc.params;
        r.macs += lc.macs;
    }
    r.fps = measure_fps(m, h, w, warmup, iters, ConvPath::Reparam);
    bool has_pdc = m.init_conv.is_pdc();
    for (const ResidualBlock& rb : m.blocks) has_pdc = has_pdc || rb.dw.is_pdc();
    r.fps_difference_form =
        has_pdc ? measure_fps(m, h, w, warmup, iters, ConvPath::Difference) : r.fps;
    return r;
}

std::string bench_report_text(const BenchReport& r) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "params=%lld\n", (long long)r.params);
    out += buf;
    std::snprintf(buf, sizeof(buf), "macs=%lld\n", (long long)r.macs);
    out += buf;
    std::snprintf(buf, sizeof(buf), "height=%d\nwidth=%d\nwarmup=%d\niters=%d\n", r.height,
                  r.width, r.warmup, r.iters);
    out += buf;
    std::snprintf(buf, sizeof(buf), "fps=%.4f\n", r.fps);
    out += buf;
    std::snprintf(buf, sizeof(buf), "fps_difference_form=%.4f\n", r.fps_difference_form);
    out += buf;
    return out;
}

std::string bench_report_json(const BenchReport& r) {
    nlohmann::json j;
    j["params"] = r.params;
    j["macs"] = r.macs;
    j["height"] = r.height;
    j["width"] = r.width;
    j["warmup"] = r.warmup;
    j["iters"] = r.iters;
    j["fps"] = r.fps;
    j["fps_difference_form"] = r.fps_difference_form;
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerCost& lc : r.layers) {
        layers.push_back({{"name", lc.name}, {"params", lc.params}, {"macs", lc.macs}});
    }
    j["layers"] = layers;
    return j.dump(2) + "\n";
}

}  // namespace pidinet
