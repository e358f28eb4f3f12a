#include "doctest.h"

#include <set>

#include "pidinet/data.hpp"

using namespace pidinet;

TEST_CASE("synth_dataset determinism and validation") {
    const auto a = synth_dataset(3, 32, 4, 99);
    const auto b = synth_dataset(3, 32, 4, 99);
    const auto c = synth_dataset(3, 32, 4, 100);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image.data == b[i].image.data);
        CHECK(a[i].truth.data == b[i].truth.data);
    }
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        differs = differs || a[i].image.data != c[i].image.data;
    CHECK(differs);

    CHECK_THROWS_AS(synth_dataset(0, 64, 1, 1), ParameterError);
    CHECK_THROWS_AS(synth_dataset(1, 16, 1, 1), ParameterError);
    CHECK_THROWS_AS(synth_dataset(1, 64, 0, 1), ParameterError);
}

TEST_CASE("single annotator gives binary truth") {
    const auto data = synth_dataset(4, 48, 1, 5);
    for (const Sample& s : data)
        for (real v : s.truth.data) CHECK((v == 0.0f || v == 1.0f));
}

TEST_CASE("several annotators produce fractional agreement levels") {
    const auto data = synth_dataset(6, 64, 5, 7);
    bool fractional = false, excluded_band = false;
    for (const Sample& s : data)
        for (real v : s.truth.data) {
            if (v > 0.0f && v < 1.0f) fractional = true;
            if (v > 0.0f && double(v) < 0.3) excluded_band = true;
        }
    CHECK(fractional);
    CHECK(excluded_band);  // values below eta exist, exercising the exclusion rule
}

TEST_CASE("truth positive fraction stays in (0, 0.3)") {
    int idx = 0;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const auto data = synth_dataset(20, 64, 5, seed);
        for (const Sample& s : data) {
            std::int64_t positive = 0;
            for (real v : s.truth.data)
                if (v > 0.0f) ++positive;
            const double frac = double(positive) / double(s.truth.size());
            CAPTURE(seed);
            CAPTURE(idx);
            CHECK(frac > 0.0);
            CHECK(frac < 0.3);
            ++idx;
        }
    }
    CHECK(idx == 100);
}

TEST_CASE("images stay in range and carry noise") {
    const auto data = synth_dataset(2, 48, 3, 11);
    for (const Sample& s : data) {
        for (real v : s.image.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
        // noise makes exact value repeats across a row unlikely
        std::set<float> row;
        for (int x = 0; x < s.image.w; ++x) row.insert(float(s.image.at(0, 0, 5, x)));
        CHECK(row.size() > std::size_t(s.image.w) / 2);
    }
}

TEST_CASE("augment identity draw keeps the sample bit-identical") {
    const auto data = synth_dataset(1, 48, 3, 21);
    const AugmentDraw identity{1.0, 0, false, 0, 0};
    const Sample out = augment_apply(data[0], identity, 48, 48);
    CHECK(out.image.data == data[0].image.data);
    CHECK(out.truth.data == data[0].truth.data);
}

TEST_CASE("horizontal flip is an involution and preserves positives") {
    const auto data = synth_dataset(1, 48, 3, 22);
    const AugmentDraw flip{1.0, 0, true, 0, 0};
    const Sample once = augment_apply(data[0], flip, 48, 48);
    const Sample twice = augment_apply(once, flip, 48, 48);
    CHECK(twice.image.data == data[0].image.data);
    CHECK(twice.truth.data == data[0].truth.data);

    std::int64_t before = 0, after = 0;
    for (real v : data[0].truth.data)
        if (v > 0.0f) ++before;
    for (real v : once.truth.data)
        if (v > 0.0f) ++after;
    CHECK(before == after);
}

TEST_CASE("rotations permute pixels exactly") {
    const auto data = synth_dataset(1, 48, 3, 23);
    Sample cur = data[0];
    for (int i = 0; i < 4; ++i) cur = augment_apply(cur, AugmentDraw{1.0, 1, false, 0, 0}, 0, 0);
    CHECK(cur.image.data == data[0].image.data);
}

TEST_CASE("random augmentation respects the crop size") {
    const auto data = synth_dataset(1, 64, 3, 24);
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const Sample s = augment(data[0], rng, 32);
        CHECK(s.image.h == 32);
        CHECK(s.image.w == 32);
        CHECK(s.truth.h == 32);
        for (real v : s.truth.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    // crop that cannot fit even the largest scale
    CHECK_THROWS_AS(augment(data[0], rng, 200), ParameterError);
}
