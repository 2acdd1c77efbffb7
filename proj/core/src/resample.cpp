#include "pff/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pff/errors.hpp"

namespace pff {

namespace {

// Keys cubic, a = -0.5
double cubic(double x) {
    x = std::fabs(x);
    if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
    if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
    return 0.0;
}

struct AxisWeights {
    int taps = 0;
    std::vector<int> index;      // out_n * taps source indices, clamped
    std::vector<double> weight;  // normalized per output sample
};

AxisWeights make_weights(int in_n, int out_n, bool antialias) {
    const double scale = static_cast<double>(out_n) / in_n;
    const double kscale = (antialias && scale < 1.0) ? scale : 1.0;
    const double support = 4.0 / kscale;

    AxisWeights w;
    w.taps = static_cast<int>(std::ceil(support)) + 1;
    w.index.resize(static_cast<size_t>(out_n) * w.taps);
    w.weight.resize(static_cast<size_t>(out_n) * w.taps);

    for (int u = 0; u < out_n; ++u) {
        const double center = (u + 0.5) / scale - 0.5;
        const int left = static_cast<int>(std::floor(center - support / 2)) + 1;
        double sum = 0.0;
        for (int t = 0; t < w.taps; ++t) {
            const int src = left + t;
            const double val = kscale * cubic(kscale * (center - src));
            w.index[static_cast<size_t>(u) * w.taps + t] = std::clamp(src, 0, in_n - 1);
            w.weight[static_cast<size_t>(u) * w.taps + t] = val;
            sum += val;
        }
        for (int t = 0; t < w.taps; ++t) w.weight[static_cast<size_t>(u) * w.taps + t] /= sum;
    }
    return w;
}

// Resample along rows (y axis): (h, w) -> (out_h, w)
Image resample_rows(const Image& img, const AxisWeights& w, int out_h) {
    Image out(img.channels, out_h, img.width);
    for (int c = 0; c < img.channels; ++c) {
        const float* src = img.plane(c);
        float* dst = out.plane(c);
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (int t = 0; t < w.taps; ++t) {
                    const int sy = w.index[static_cast<size_t>(y) * w.taps + t];
                    acc += w.weight[static_cast<size_t>(y) * w.taps + t] *
                           src[static_cast<size_t>(sy) * img.width + x];
                }
                dst[static_cast<size_t>(y) * img.width + x] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

Image resample_cols(const Image& img, const AxisWeights& w, int out_w) {
    Image out(img.channels, img.height, out_w);
    for (int c = 0; c < img.channels; ++c) {
        const float* src = img.plane(c);
        float* dst = out.plane(c);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (int t = 0; t < w.taps; ++t) {
                    const int sx = w.index[static_cast<size_t>(x) * w.taps + t];
                    acc += w.weight[static_cast<size_t>(x) * w.taps + t] *
                           src[static_cast<size_t>(y) * img.width + sx];
                }
                dst[static_cast<size_t>(y) * out_w + x] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

}  // namespace

Image resize_bicubic(const Image& img, int out_h, int out_w, bool antialias) {
    if (out_h < 1 || out_w < 1) throw FormatError("resize_bicubic: zero-sized output");
    Image cur = img;
    if (out_h != img.height)
        cur = resample_rows(cur, make_weights(img.height, out_h, antialias), out_h);
    if (out_w != img.width)
        cur = resample_cols(cur, make_weights(img.width, out_w, antialias), out_w);
    return cur;
}

Image resize_bicubic(const Image& img, double scale, bool antialias) {
    if (scale <= 0.0) throw FormatError("resize_bicubic: scale must be positive");
    const int out_h = std::max(1, static_cast<int>(std::lround(scale * img.height)));
    const int out_w = std::max(1, static_cast<int>(std::lround(scale * img.width)));
    return resize_bicubic(img, out_h, out_w, antialias);
}

}  // namespace pff
