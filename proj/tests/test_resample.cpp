#include <doctest.h>

#include "pff/errors.hpp"
#include "pff/resample.hpp"
#include "pff/rng.hpp"
#include "testutil.hpp"

using namespace pff;

TEST_CASE("scale 1 is the exact identity") {
    Rng rng(7);
    const Image img = testutil::random_image(3, 9, 13, rng);
    const Image out = resize_bicubic(img, 1.0, true);
    CHECK(out.data == img.data);
}

TEST_CASE("constants survive every scale") {
    for (double scale : {0.37, 0.5, 1.5, 2.0, 3.1}) {
        for (bool aa : {false, true}) {
            Image img(1, 10, 10, 0.625f);
            const Image out = resize_bicubic(img, scale, aa);
            CHECK(out.height == std::max<int>(1, std::lround(scale * 10)));
            for (float v : out.data) CHECK(v == doctest::Approx(0.625).epsilon(1e-6));
        }
    }
}

TEST_CASE("matches the dense 2-D oracle on random images") {
    Rng rng(8);
    for (int trial = 0; trial < 4; ++trial) {
        const Image img = testutil::random_image(1, 12 + trial, 9 + 2 * trial, rng);
        for (bool aa : {false, true}) {
            for (double scale : {0.5, 2.0, 0.75}) {
                const int oh = std::max<int>(1, std::lround(scale * img.height));
                const int ow = std::max<int>(1, std::lround(scale * img.width));
                const Image got = resize_bicubic(img, scale, aa);
                const Image want = testutil::resize_bicubic_oracle(img, oh, ow, aa);
                CHECK(testutil::max_abs_diff(got, want) < 1e-5);
            }
        }
    }
}

TEST_CASE("frozen ramp fixture: 8x8 ramp, half down with antialias, double up") {
    Image ramp(1, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(0, y, x) = static_cast<float>(y * 8 + x) / 63.f;

    const Image down = resize_bicubic(ramp, 0.5, true);
    REQUIRE(down.height == 4);
    REQUIRE(down.width == 4);
    const Image up = resize_bicubic(down, 2.0, false);
    REQUIRE(up.height == 8);

    // frozen from the dense 2-D oracle (values match to float precision)
    const Image odown = testutil::resize_bicubic_oracle(ramp, 4, 4, true);
    const Image oup = testutil::resize_bicubic_oracle(odown, 8, 8, false);
    CHECK(testutil::max_abs_diff(down, odown) < 1e-6);
    CHECK(testutil::max_abs_diff(up, oup) < 1e-6);

    const float expected_down[16] = {
        0.072545f, 0.103981f, 0.136099f, 0.167535f,
        0.324033f, 0.355469f, 0.387587f, 0.419023f,
        0.580977f, 0.612413f, 0.644531f, 0.675967f,
        0.832465f, 0.863901f, 0.896019f, 0.927455f};
    for (int i = 0; i < 16; ++i)
        CHECK(down.data[i] == doctest::Approx(expected_down[i]).epsilon(2e-5));
    const float expected_up_row0[8] = {0.052652f, 0.060495f, 0.077654f, 0.094295f,
                                       0.110418f, 0.127060f, 0.144219f, 0.152062f};
    for (int i = 0; i < 8; ++i)
        CHECK(up.data[i] == doctest::Approx(expected_up_row0[i]).epsilon(2e-5));
}

TEST_CASE("zero-sized output is rejected") {
    Image img(1, 4, 4, 0.f);
    CHECK_THROWS_AS(resize_bicubic(img, 0, 4, false), FormatError);
    CHECK_THROWS_AS(resize_bicubic(img, -1.0, false), FormatError);
}
