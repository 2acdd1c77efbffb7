#pragma once

#include <vector>

#include "pff/image.hpp"

namespace pff {

// Quality metrics, computed over the luma channel (3-channel inputs are
// converted with rgb_to_y first). Peak value is 1.0.

// 10*log10(1/MSE), capped at 99 dB so identical images stay finite.
double psnr(const Image& ref, const Image& test);
constexpr double kPsnrCap = 99.0;

// Mean SSIM over valid 11x11 windows, Gaussian weighting sigma = 1.5,
// K1 = 0.01, K2 = 0.03, L = 1.
double ssim(const Image& ref, const Image& test);

struct MetricsRow {
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct MetricsReport {
    std::vector<MetricsRow> per_image;
    double mean_psnr_db = 0.0;
    double mean_ssim = 0.0;

    void push(double p, double s);
};

}  // namespace pff
