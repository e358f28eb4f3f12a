#include "doctest.h"

#include <algorithm>

#include "json.hpp"
#include "pidinet/bench.hpp"
#include "pidinet/config.hpp"

using namespace pidinet;

TEST_CASE("bench report delegates counts and carries the layer breakdown") {
    const PiDiNetModel m =
        convert_model_for_inference(build_model(make_arch_config("[CARV]x4", 6), 3));
    const BenchReport r = benchmark(m, 32, 32, 1, 3);
    CHECK(r.params == count_params(m));
    CHECK(r.macs == count_macs(m, 32, 32));
    CHECK(r.fps > 0.0);
    CHECK(r.fps_difference_form == r.fps);  // nothing left to run in difference form
    CHECK(!r.layers.empty());
    CHECK(r.layers.front().name == "init");
}

TEST_CASE("bench JSON is schema-stable") {
    const PiDiNetModel m = build_model(make_arch_config("[V]x16", 4, false, false), 1);
    const BenchReport r = benchmark(m, 32, 32, 1, 2);
    const nlohmann::json j = nlohmann::json::parse(bench_report_json(r));
    for (const char* key :
         {"params", "macs", "height", "width", "warmup", "iters", "fps",
          "fps_difference_form", "layers"})
        CHECK(j.contains(key));
    CHECK(j["layers"].is_array());
    CHECK(j["layers"][0].contains("name"));
    const std::string text = bench_report_text(r);
    CHECK(text.find("params=") != std::string::npos);
    CHECK(text.find("fps=") != std::string::npos);
}

TEST_CASE("repeated throughput measurements stay within 20%") {
    const PiDiNetModel m = convert_model_for_inference(
        build_model(make_arch_config("[CARV]x4", 8, false, false), 5));
    // medians of three windows each; single windows are at the mercy of
    // scheduler bursts on small shared machines
    auto median3 = [&]() {
        double v[3];
        for (double& f : v) f = measure_fps(m, 64, 64, 2, 40, ConvPath::Reparam);
        std::sort(std::begin(v), std::end(v));
        return v[1];
    };
    const double a = median3();
    const double b = median3();
    CHECK(a > 0.0);
    CHECK(b > 0.0);
    const double ratio = a > b ? a / b : b / a;
    CHECK(ratio < 1.2);
}
