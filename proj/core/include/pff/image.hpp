#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pff {

// Planar floating-point raster, channel-major: data[(c*height + y)*width + x].
// Samples are nominally in [0,1]; intermediate results may leave that range,
// persistence clamps on save.
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int c, int h, int w, float fill = 0.f)
        : channels(c), height(h), width(w),
          data(static_cast<size_t>(c) * h * w, fill) {}

    float& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }

    const float* plane(int c) const { return data.data() + static_cast<size_t>(c) * height * width; }
    float* plane(int c) { return data.data() + static_cast<size_t>(c) * height * width; }

    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// Reads an 8-bit PNG or a binary PPM/PGM (P6/P5, maxval 255). Samples map to
// [0,1] by division by 255; grayscale loads as 1 channel, RGB as 3.
// Throws IoError if the file cannot be opened, FormatError for anything else.
Image load_image(const std::string& path);

// Clamps to [0,1], quantizes with round-half-up to 8 bits and writes a PNG.
void save_image(const Image& img, const std::string& path);

// BT.601 full-range luma: Y = 0.299 R + 0.587 G + 0.114 B.
// 1-channel input is returned unchanged.
Image rgb_to_y(const Image& img);

// Clamp every sample to [0,1].
Image clamp01(const Image& img);

uint8_t quantize_sample(float v);  // clamp + round-half-up to [0,255]

}  // namespace pff
