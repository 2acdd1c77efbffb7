#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pff/parallel.hpp"

// Scalar-templated kernels behind the FilterFlow operations. The float
// instantiation is the production path; the double instantiation exists so
// finite-difference gradient checks can run the very same computation at
// higher precision.

namespace pff::detail {

// softmax over the kk filter taps of each pixel, max-subtracted
template <class T>
void softmax_per_pixel(const T* logits, T* out, int64_t pixels, int kk) {
    parallel_for(0, pixels, [&](int64_t p) {
        const T* in = logits + p * kk;
        T* o = out + p * kk;
        T mx = in[0];
        for (int i = 1; i < kk; ++i) mx = std::max(mx, in[i]);
        T sum = 0;
        for (int i = 0; i < kk; ++i) {
            o[i] = std::exp(in[i] - mx);
            sum += o[i];
        }
        const T inv = T(1) / sum;
        for (int i = 0; i < kk; ++i) o[i] *= inv;
    });
}

// d logits = s .* (up - <up, s>)
template <class T>
void softmax_backward_per_pixel(const T* softmax_out, const T* upstream, T* dlogits,
                                int64_t pixels, int kk) {
    parallel_for(0, pixels, [&](int64_t p) {
        const T* s = softmax_out + p * kk;
        const T* u = upstream + p * kk;
        T* d = dlogits + p * kk;
        T dot = 0;
        for (int i = 0; i < kk; ++i) dot += u[i] * s[i];
        for (int i = 0; i < kk; ++i) d[i] = s[i] * (u[i] - dot);
    });
}

// out(c,y,x) = sum_o coeffs(y,x,o) * img(c, clamp(y+dy), clamp(x+dx)).
// Materializes the im2col patch row of one image row, then every output
// pixel is a contiguous kk-element dot product accumulated in double, so
// the float path agrees with the double-precision operator-matrix oracle.
// Rows are independent, so the row parallelism cannot change the result.
template <class T>
void apply_flow_kernel(const T* coeffs, const T* img, T* out,
                       int channels, int h, int w, int k) {
    const int kk = k * k;
    const int r = (k - 1) / 2;
    const int64_t plane = static_cast<int64_t>(h) * w;
    parallel_for(0, h, [&](int64_t y) {
        thread_local std::vector<T> patch;
        patch.resize(static_cast<size_t>(w) * kk);
        for (int c = 0; c < channels; ++c) {
            const T* src = img + c * plane;
            for (int dy = -r; dy <= r; ++dy) {
                const int sy = std::clamp(static_cast<int>(y) + dy, 0, h - 1);
                const T* srow = src + static_cast<int64_t>(sy) * w;
                for (int dx = -r; dx <= r; ++dx) {
                    const int o = (dy + r) * k + (dx + r);
                    for (int x = 0; x < w; ++x)
                        patch[static_cast<size_t>(x) * kk + o] = srow[std::clamp(x + dx, 0, w - 1)];
                }
            }
            T* orow = out + c * plane + y * w;
            const T* crow = coeffs + y * w * kk;
            for (int x = 0; x < w; ++x) {
                const T* cf = crow + static_cast<int64_t>(x) * kk;
                const T* pt = patch.data() + static_cast<size_t>(x) * kk;
                double acc = 0;
                for (int o = 0; o < kk; ++o)
                    acc += static_cast<double>(cf[o]) * static_cast<double>(pt[o]);
                orow[x] = static_cast<T>(acc);
            }
        }
    });
}

// Gradients of apply_flow. d coeffs(y,x,o) is the im2col patch value summed
// over channels; d img scatter-adds the filter weights. dcoeffs or dimg may
// be null to skip that side. dimg accumulation is single threaded (the
// scatter crosses rows); dcoeffs rows are independent.
template <class T>
void apply_flow_backward_kernel(const T* coeffs, const T* img, const T* upstream,
                                T* dcoeffs, T* dimg,
                                int channels, int h, int w, int k) {
    const int kk = k * k;
    const int r = (k - 1) / 2;
    const int64_t plane = static_cast<int64_t>(h) * w;
    if (dcoeffs) {
        parallel_for(0, h, [&](int64_t y) {
            for (int x = 0; x < w; ++x) {
                T* dcf = dcoeffs + (y * w + x) * kk;
                for (int dy = -r; dy <= r; ++dy) {
                    const int sy = std::clamp(static_cast<int>(y) + dy, 0, h - 1);
                    for (int dx = -r; dx <= r; ++dx) {
                        const int sx = std::clamp(x + dx, 0, w - 1);
                        const int o = (dy + r) * k + (dx + r);
                        T acc = 0;
                        for (int c = 0; c < channels; ++c)
                            acc += upstream[c * plane + y * w + x] * img[c * plane + sy * w + sx];
                        dcf[o] += acc;
                    }
                }
            }
        });
    }
    if (dimg) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const T* cf = coeffs + (static_cast<int64_t>(y) * w + x) * kk;
                for (int dy = -r; dy <= r; ++dy) {
                    const int sy = std::clamp(y + dy, 0, h - 1);
                    for (int dx = -r; dx <= r; ++dx) {
                        const int sx = std::clamp(x + dx, 0, w - 1);
                        const T wgt = cf[(dy + r) * k + (dx + r)];
                        for (int c = 0; c < channels; ++c)
                            dimg[c * plane + sy * w + sx] += wgt * upstream[c * plane + y * w + x];
                    }
                }
            }
    }
}

}  // namespace pff::detail
