#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pff/errors.hpp"
#include "pff/image.hpp"
#include "pff/rng.hpp"
#include "testutil.hpp"

using namespace pff;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("grayscale PPM loads with direct 1/255 scaling") {
    const std::string path = temp_path("pff_gray.pgm");
    std::string payload = "P5\n2 2\n255\n";
    payload.push_back(static_cast<char>(0));
    payload.push_back(static_cast<char>(128));
    payload.push_back(static_cast<char>(255));
    payload.push_back(static_cast<char>(64));
    write_file(path, payload);

    const Image img = load_image(path);
    CHECK(img.channels == 1);
    CHECK(img.height == 2);
    CHECK(img.width == 2);
    CHECK(img.data[0] == doctest::Approx(0.0));
    CHECK(img.data[1] == doctest::Approx(128.0 / 255.0));
    CHECK(img.data[2] == doctest::Approx(1.0));
    CHECK(img.data[3] == doctest::Approx(64.0 / 255.0));
}

TEST_CASE("PNG save/load round trip is the identity on quantized data") {
    Rng rng(11);
    Image img = testutil::random_image(3, 9, 7, rng);
    // quantize first so the round trip is exact
    for (auto& v : img.data) v = quantize_sample(v) / 255.f;

    const std::string path = temp_path("pff_roundtrip.png");
    save_image(img, path);
    const Image back = load_image(path);
    REQUIRE(back.channels == 3);
    REQUIRE(back.height == 9);
    REQUIRE(back.width == 7);
    CHECK(testutil::max_abs_diff(img, back) == 0.0);

    // a second save/load of the loaded image changes nothing
    save_image(back, path);
    const Image again = load_image(path);
    CHECK(again.data == back.data);
}

TEST_CASE("1x1 RGB PNG round trip keeps channel identity") {
    Image px(3, 1, 1);
    px.at(0, 0, 0) = 1.f;
    const std::string path = temp_path("pff_red.png");
    save_image(px, path);
    const Image img = load_image(path);
    CHECK(img.channels == 3);
    CHECK(img.data[0] == 1.f);
    CHECK(img.data[1] == 0.f);
    CHECK(img.data[2] == 0.f);
}

TEST_CASE("quantization clamps and rounds half up") {
    CHECK(quantize_sample(0.5f) == 128);  // round(127.5) half-up
    CHECK(quantize_sample(-0.2f) == 0);
    CHECK(quantize_sample(1.7f) == 255);
    CHECK(quantize_sample(0.0f) == 0);
    CHECK(quantize_sample(1.0f) == 255);
}

TEST_CASE("io errors are distinct") {
    CHECK_THROWS_AS(load_image("/nonexistent/nope.png"), IoError);

    const std::string bad = temp_path("pff_bad.bin");
    write_file(bad, "MZ\x90\x00 not an image");
    CHECK_THROWS_AS(load_image(bad), FormatError);

    const std::string trunc = temp_path("pff_trunc.pgm");
    write_file(trunc, "P5\n4 4\n255\nxy");  // payload too short
    CHECK_THROWS_AS(load_image(trunc), FormatError);

    Image img(1, 2, 2);
    CHECK_THROWS_AS(save_image(img, "/nonexistent/dir/out.png"), IoError);
}

TEST_CASE("truncated PNG payload reports a format error") {
    Rng rng(3);
    const Image img = testutil::random_image(1, 16, 16, rng);
    const std::string path = temp_path("pff_cut.png");
    save_image(img, path);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    write_file(path, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_image(path), FormatError);
}

TEST_CASE("rgb_to_y uses BT.601 weights") {
    Image white(3, 1, 1, 1.f);
    CHECK(rgb_to_y(white).data[0] == doctest::Approx(1.0));

    Image red(3, 1, 1);
    red.at(0, 0, 0) = 1.f;
    CHECK(rgb_to_y(red).data[0] == doctest::Approx(0.299));

    for (float g : {0.f, 0.25f, 0.5f, 1.f}) {
        Image gray(3, 1, 1, g);
        CHECK(rgb_to_y(gray).data[0] == doctest::Approx(g));
    }

    Image gray1(1, 2, 2, 0.3f);
    CHECK(rgb_to_y(gray1).data == gray1.data);

    Image odd(2, 1, 1);
    CHECK_THROWS_AS(rgb_to_y(odd), FormatError);
}

TEST_CASE("rgb_to_y is linear") {
    Rng rng(5);
    const Image x = testutil::random_image(3, 6, 6, rng);
    const Image y = testutil::random_image(3, 6, 6, rng);
    const float a = 0.3f, b = 0.6f;
    Image mix(3, 6, 6);
    for (size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = a * x.data[i] + b * y.data[i];
    const Image ym = rgb_to_y(mix);
    const Image yx = rgb_to_y(x);
    const Image yy = rgb_to_y(y);
    for (size_t i = 0; i < ym.data.size(); ++i)
        CHECK(ym.data[i] == doctest::Approx(a * yx.data[i] + b * yy.data[i]).epsilon(1e-7));
}
