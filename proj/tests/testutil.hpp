#pragma once

// Independent oracles for the test suites. Everything here recomputes the
// quantity under test through a different route than the production code:
// plain scalar loops, dense 2-D evaluation, central finite differences.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pff/degrade.hpp"
#include "pff/filter_flow.hpp"
#include "pff/image.hpp"
#include "pff/rng.hpp"

namespace testutil {

inline pff::Image random_image(int channels, int h, int w, pff::Rng& rng) {
    pff::Image img(channels, h, w);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

inline pff::FilterFlow random_simplex_flow(int h, int w, int k, pff::Rng& rng) {
    pff::FilterFlow raw(h, w, k, pff::FlowConstraint::free);
    for (auto& v : raw.coeffs) v = static_cast<float>(rng.uniform(-3.0, 3.0));
    return pff::normalize_simplex(raw);
}

inline pff::FilterFlow random_free_flow(int h, int w, int k, pff::Rng& rng) {
    pff::FilterFlow f(h, w, k, pff::FlowConstraint::free);
    for (auto& v : f.coeffs) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return f;
}

// scalar-loop PSNR oracle (luma, peak 1.0, no compensated summation games)
inline double psnr_oracle(const pff::Image& ref, const pff::Image& test) {
    const pff::Image a = pff::rgb_to_y(ref);
    const pff::Image b = pff::rgb_to_y(test);
    double sum = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(a.data.size());
    if (mse <= 0) return 99.0;
    const double db = 10.0 * std::log10(1.0 / mse);
    return db > 99.0 ? 99.0 : db;
}

// windowed-loop SSIM oracle
inline double ssim_oracle(const pff::Image& ref, const pff::Image& test) {
    const pff::Image a = pff::rgb_to_y(ref);
    const pff::Image b = pff::rgb_to_y(test);
    const int win = 11;
    const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
    double g[11];
    double gs = 0;
    for (int i = 0; i < win; ++i) {
        const double d = i - 5.0;
        g[i] = std::exp(-d * d / (2 * sigma * sigma));
        gs += g[i];
    }
    for (auto& v : g) v /= gs;

    double total = 0;
    int count = 0;
    for (int wy = 0; wy + win <= a.height; ++wy)
        for (int wx = 0; wx + win <= a.width; ++wx) {
            double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double wgt = g[i] * g[j];
                    const double va = a.at(0, wy + i, wx + j);
                    const double vb = b.at(0, wy + i, wx + j);
                    ma += wgt * va;
                    mb += wgt * vb;
                    aa += wgt * va * va;
                    bb += wgt * vb * vb;
                    ab += wgt * va * vb;
                }
            const double s = ((2 * ma * mb + c1) * (2 * (ab - ma * mb) + c2)) /
                             ((ma * ma + mb * mb + c1) * ((aa - ma * ma) + (bb - mb * mb) + c2));
            total += s;
            ++count;
        }
    return total / count;
}

// direct (non-separable) bicubic oracle: per output pixel, full 2-D product
// kernel with per-axis normalization and index clamping
inline pff::Image resize_bicubic_oracle(const pff::Image& img, int out_h, int out_w,
                                        bool antialias) {
    auto cubic = [](double x) {
        x = std::fabs(x);
        if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
        if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
        return 0.0;
    };
    auto axis = [&](int in_n, int out_n, int u, std::vector<int>& idx, std::vector<double>& wgt) {
        const double scale = static_cast<double>(out_n) / in_n;
        const double ks = (antialias && scale < 1.0) ? scale : 1.0;
        const double support = 4.0 / ks;
        const int taps = static_cast<int>(std::ceil(support)) + 1;
        const double center = (u + 0.5) / scale - 0.5;
        const int left = static_cast<int>(std::floor(center - support / 2)) + 1;
        idx.resize(taps);
        wgt.resize(taps);
        double sum = 0;
        for (int t = 0; t < taps; ++t) {
            const int src = left + t;
            wgt[t] = ks * cubic(ks * (center - src));
            idx[t] = std::min(std::max(src, 0), in_n - 1);
            sum += wgt[t];
        }
        for (auto& v : wgt) v /= sum;
    };

    pff::Image out(img.channels, out_h, out_w);
    std::vector<int> yi, xi;
    std::vector<double> yw, xw;
    for (int y = 0; y < out_h; ++y) {
        axis(img.height, out_h, y, yi, yw);
        for (int x = 0; x < out_w; ++x) {
            axis(img.width, out_w, x, xi, xw);
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0;
                for (size_t a = 0; a < yi.size(); ++a)
                    for (size_t b = 0; b < xi.size(); ++b)
                        acc += yw[a] * xw[b] * img.at(c, yi[a], xi[b]);
                out.at(c, y, x) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

// quadruple-loop correlation oracle with replicate padding
inline pff::Image convolve_oracle(const pff::Image& img, const pff::BlurKernel& kern) {
    const int r = (kern.size - 1) / 2;
    pff::Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double acc = 0;
                for (int ky = -r; ky <= r; ++ky)
                    for (int kx = -r; kx <= r; ++kx) {
                        const int sy = std::clamp(y + ky, 0, img.height - 1);
                        const int sx = std::clamp(x + kx, 0, img.width - 1);
                        acc += static_cast<double>(kern.at(ky + r, kx + r)) * img.at(c, sy, sx);
                    }
                out.at(c, y, x) = static_cast<float>(acc);
            }
    return out;
}

inline double max_abs_diff(const pff::Image& a, const pff::Image& b) {
    double m = 0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(static_cast<double>(a.data[i]) - b.data[i]));
    return m;
}

// central finite differences of a scalar function at x, against analytic g
struct GradCheckResult {
    double max_rel = 0.0;
    double max_abs = 0.0;
    size_t worst_index = 0;
};

inline GradCheckResult finite_diff_check(std::vector<double>& x,
                                         const std::function<double()>& eval,
                                         const std::vector<double>& analytic,
                                         double eps = 1e-4) {
    GradCheckResult r;
    for (size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double fp = eval();
        x[i] = keep - eps;
        const double fm = eval();
        x[i] = keep;
        const double fd = (fp - fm) / (2 * eps);
        const double abs_err = std::fabs(fd - analytic[i]);
        const double rel = abs_err / std::max(std::fabs(fd) + std::fabs(analytic[i]), 1e-3);
        if (rel > r.max_rel) {
            r.max_rel = rel;
            r.worst_index = i;
        }
        r.max_abs = std::max(r.max_abs, abs_err);
    }
    return r;
}

}  // namespace testutil
