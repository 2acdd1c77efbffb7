// Generates the in-repo fixture images: a small training corpus, held-out
// evaluation images, and frozen metric pairs. Deterministic; run once and
// commit the output.
//
//   gen_fixtures <fixtures-dir>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <vector>

#include "pff/degrade.hpp"
#include "pff/image.hpp"
#include "pff/rng.hpp"

using namespace pff;
namespace fs = std::filesystem;

namespace {

// layered synthetic scene dominated by strong step edges at varied
// orientations (boxes, disks, wedges) over smooth shading, plus moderate
// stripes. Step edges are what blur and blocking destroy and what
// restoration recovers; sub-blur-scale detail would be unrecoverable.
Image scene(int size, uint64_t seed) {
    Rng rng(seed);
    Image img(3, size, size);
    const double gx = rng.uniform(-0.4, 0.4), gy = rng.uniform(-0.4, 0.4);
    const double f2 = rng.uniform(0.25, 0.6), a2 = rng.uniform(0.06, 0.12);
    const double hue[3] = {rng.uniform(0.5, 1.0), rng.uniform(0.5, 1.0), rng.uniform(0.5, 1.0)};

    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double u = static_cast<double>(x) / size;
                const double v = static_cast<double>(y) / size;
                double val = 0.45 + gx * (u - 0.5) + gy * (v - 0.5);
                val += a2 * hue[c] * std::sin(f2 * x) * std::cos(f2 * 1.3 * y);
                img.at(c, y, x) = static_cast<float>(val);
            }

    auto blend = [&](int c, int y, int x, float s) {
        img.at(c, y, x) = 0.15f * img.at(c, y, x) + 0.85f * s;
    };

    // solid boxes
    const int boxes = rng.uniform_int(2, 4);
    for (int b = 0; b < boxes; ++b) {
        const int bw = rng.uniform_int(size / 6, size / 2);
        const int bh = rng.uniform_int(size / 6, size / 2);
        const int x0 = rng.uniform_int(0, size - bw - 1);
        const int y0 = rng.uniform_int(0, size - bh - 1);
        const float shade[3] = {static_cast<float>(rng.uniform(0.02, 0.98)),
                                static_cast<float>(rng.uniform(0.02, 0.98)),
                                static_cast<float>(rng.uniform(0.02, 0.98))};
        for (int c = 0; c < 3; ++c)
            for (int y = y0; y < y0 + bh; ++y)
                for (int x = x0; x < x0 + bw; ++x) blend(c, y, x, shade[c]);
    }

    // disks give edges at every orientation
    const int disks = rng.uniform_int(2, 3);
    for (int d = 0; d < disks; ++d) {
        const int rad = rng.uniform_int(size / 10, size / 4);
        const int cx = rng.uniform_int(rad, size - rad - 1);
        const int cy = rng.uniform_int(rad, size - rad - 1);
        const float shade[3] = {static_cast<float>(rng.uniform(0.02, 0.98)),
                                static_cast<float>(rng.uniform(0.02, 0.98)),
                                static_cast<float>(rng.uniform(0.02, 0.98))};
        for (int c = 0; c < 3; ++c)
            for (int y = cy - rad; y <= cy + rad; ++y)
                for (int x = cx - rad; x <= cx + rad; ++x)
                    if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= rad * rad)
                        blend(c, y, x, shade[c]);
    }

    // one oriented half-plane (wedge) edge through the image
    {
        const double th = rng.uniform(0, 3.14159);
        const double off = rng.uniform(0.3, 0.7) * size;
        const float shade[3] = {static_cast<float>(rng.uniform(0.02, 0.98)),
                                static_cast<float>(rng.uniform(0.02, 0.98)),
                                static_cast<float>(rng.uniform(0.02, 0.98))};
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    if (x * std::cos(th) + y * std::sin(th) > off)
                        img.at(c, y, x) = 0.5f * img.at(c, y, x) + 0.5f * shade[c];
    }

    // one striped band, period comfortably above the blur scale
    {
        const int period = rng.uniform_int(6, 10);
        const int bh = rng.uniform_int(size / 6, size / 3);
        const int y0 = rng.uniform_int(0, size - bh - 1);
        const bool vertical = rng.uniform() < 0.5;
        const float shade = static_cast<float>(rng.uniform(0.02, 0.4));
        for (int c = 0; c < 3; ++c)
            for (int y = y0; y < y0 + bh; ++y)
                for (int x = 0; x < size; ++x)
                    if (((vertical ? x : y) / period) % 2) blend(c, y, x, shade);
    }

    // faint texture noise; heavy noise in the clean targets would put an
    // unpredictability floor right at the deblur baseline
    for (auto& s : img.data) s += static_cast<float>(0.004 * (rng.uniform() - 0.5));
    return clamp01(img);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gen_fixtures <fixtures-dir>\n";
        return 1;
    }
    const fs::path root(argv[1]);
    fs::create_directories(root / "corpus");
    fs::create_directories(root / "heldout");
    fs::create_directories(root / "metrics");

    for (int i = 0; i < 12; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "train_%02d.png", i);
        save_image(scene(64, 100 + i), (root / "corpus" / name).string());
    }
    for (int i = 0; i < 6; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "heldout_%02d.png", i);
        save_image(scene(48, 900 + i), (root / "heldout" / name).string());
    }

    // metric pairs: reference scenes vs various perturbations
    for (int i = 0; i < 5; ++i) {
        const Image ref = scene(40, 500 + i);
        Image test = ref;
        Rng rng(700 + i);
        switch (i) {
            case 0:  // additive noise
                for (auto& v : test.data) v += static_cast<float>(0.05 * (rng.uniform() - 0.5));
                break;
            case 1:  // jpeg artifacts
                test = jpeg_degrade(ref, 12);
                break;
            case 2: {  // blur
                BlurKernel k = random_linear_kernel(rng, 5.0, 7);
                test = convolve(ref, k);
                break;
            }
            case 3:  // contrast shift
                for (auto& v : test.data) v = 0.85f * v + 0.05f;
                break;
            case 4:  // mixed
                test = jpeg_degrade(ref, 25);
                for (auto& v : test.data) v += static_cast<float>(0.02 * (rng.uniform() - 0.5));
                break;
        }
        char rn[32], tn[32];
        std::snprintf(rn, sizeof rn, "pair%d_ref.png", i);
        std::snprintf(tn, sizeof tn, "pair%d_test.png", i);
        save_image(ref, (root / "metrics" / rn).string());
        save_image(clamp01(test), (root / "metrics" / tn).string());
    }
    std::cout << "fixtures written under " << root << "\n";
    return 0;
}
