#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pff/image.hpp"
#include "pff/rng.hpp"

namespace pff {

// Small 2-D convolution kernel used for degradation synthesis.
// Weights are non-negative and sum to one.
struct BlurKernel {
    int size = 0;  // odd extent
    std::vector<float> weights;  // size*size, row-major

    float at(int y, int x) const { return weights[static_cast<size_t>(y) * size + x]; }
};

enum class Task { motion_blur, jpeg, super_resolution, none };

const char* task_name(Task t);
Task parse_task(const std::string& name);

// Pair-generation recipe for one task. A fixed seed gives byte-identical
// degraded output across runs and thread counts.
struct DegradeSpec {
    Task task = Task::motion_blur;
    double max_len = 9.0;      // motion blur: max segment length, pixels
    double orient_lo = 0.0;    // degrees
    double orient_hi = 180.0;
    int kernel_size = 9;       // odd raster extent of the blur kernel
    int quality = 10;          // jpeg quality factor, 1..100
    int sr_factor = 4;         // super-resolution factor, >= 2
    uint64_t seed = 0;

    std::string to_kv() const;
    static DegradeSpec from_kv(const std::string& text);
};

// Rasterizes a random line segment: orientation uniform in [orient_lo,
// orient_hi) degrees, length uniform in [1, max_len] pixels. The centered
// segment is sampled at ceil(4L) points which are bilinearly splatted onto
// the raster, then the kernel is normalized to sum 1.
BlurKernel random_linear_kernel(Rng& rng, double max_len, int size,
                                double orient_lo = 0.0, double orient_hi = 180.0);

// Per-channel 2-D correlation with replicate padding; output size = input.
Image convolve(const Image& img, const BlurKernel& kern);

// In-process JPEG luma-path simulation: 8x8 DCT, quantization by the Annex-K
// luminance table scaled with the IJG rule, dequantization, inverse DCT.
// Every channel goes through the luma path; there is no subsampling and no
// entropy coding. Output clamps to [0,1].
Image jpeg_degrade(const Image& img, int quality);

// The scaled quantization table a given quality factor produces.
std::array<int, 64> jpeg_quant_table(int quality);

// Bicubic downsample by 1/factor (with anti-aliasing) followed by bicubic
// upsample back to the original size. Input dims must be divisible by
// factor; callers crop beforehand (see crop_to_multiple).
Image sr_degrade(const Image& img, int factor);

Image crop_to_multiple(const Image& img, int multiple);

// Applies spec.task to img using the supplied generator.
Image degrade_image(const Image& img, const DegradeSpec& spec, Rng& rng);

}  // namespace pff
