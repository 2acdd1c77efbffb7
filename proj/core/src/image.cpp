#include "pff/image.hpp"

#include <cmath>

#include "pff/errors.hpp"

namespace pff {

uint8_t quantize_sample(float v) {
    if (!(v > 0.f)) return 0;  // also catches NaN
    if (v >= 1.f) return 255;
    return static_cast<uint8_t>(std::floor(255.f * v + 0.5f));
}

Image rgb_to_y(const Image& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3)
        throw FormatError("rgb_to_y: expected 1 or 3 channels, got " + std::to_string(img.channels));
    Image out(1, img.height, img.width);
    const float* r = img.plane(0);
    const float* g = img.plane(1);
    const float* b = img.plane(2);
    float* y = out.plane(0);
    const size_t n = static_cast<size_t>(img.height) * img.width;
    for (size_t i = 0; i < n; ++i)
        y[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
    return out;
}

Image clamp01(const Image& img) {
    Image out = img;
    for (auto& v : out.data) v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
    return out;
}

}  // namespace pff
