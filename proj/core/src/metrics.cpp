#include "pff/metrics.hpp"

#include <cmath>
#include <vector>

#include "pff/errors.hpp"
#include "pff/parallel.hpp"

namespace pff {

namespace {

struct Kahan {
    double sum = 0.0, carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

void check_dims(const Image& a, const Image& b, const char* who) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw FormatError(std::string(who) + ": dimension mismatch");
}

}  // namespace

void MetricsReport::push(double p, double s) {
    per_image.push_back({p, s});
    Kahan kp, ks;
    for (const auto& r : per_image) {
        kp.add(r.psnr_db);
        ks.add(r.ssim);
    }
    mean_psnr_db = kp.sum / static_cast<double>(per_image.size());
    mean_ssim = ks.sum / static_cast<double>(per_image.size());
}

double psnr(const Image& ref, const Image& test) {
    check_dims(ref, test, "psnr");
    const Image a = rgb_to_y(ref);
    const Image b = rgb_to_y(test);
    const int h = a.height, w = a.width;

    // one compensated partial per row; rows combine in index order so the
    // result is independent of the worker count
    std::vector<double> row_sum(h, 0.0);
    parallel_for(0, h, [&](int64_t y) {
        Kahan k;
        const float* pa = a.plane(0) + y * w;
        const float* pb = b.plane(0) + y * w;
        for (int x = 0; x < w; ++x) {
            const double d = static_cast<double>(pa[x]) - pb[x];
            k.add(d * d);
        }
        row_sum[y] = k.sum;
    });
    Kahan total;
    for (int y = 0; y < h; ++y) total.add(row_sum[y]);
    const double mse = total.sum / (static_cast<double>(h) * w);
    if (mse <= 0.0) return kPsnrCap;
    const double db = 10.0 * std::log10(1.0 / mse);
    return db > kPsnrCap ? kPsnrCap : db;
}

double ssim(const Image& ref, const Image& test) {
    check_dims(ref, test, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2
    constexpr double kC2 = 0.03 * 0.03;  // (K2*L)^2
    if (ref.height < kWin || ref.width < kWin)
        throw FormatError("ssim: image smaller than the 11x11 window");

    const Image a = rgb_to_y(ref);
    const Image b = rgb_to_y(test);

    double g[kWin];
    double gsum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - (kWin - 1) / 2.0;
        g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        gsum += g[i];
    }
    for (auto& v : g) v /= gsum;

    const int oh = a.height - kWin + 1;
    const int ow = a.width - kWin + 1;
    std::vector<double> row_sum(oh, 0.0);
    parallel_for(0, oh, [&](int64_t wy) {
        Kahan k;
        for (int wx = 0; wx < ow; ++wx) {
            double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
            for (int i = 0; i < kWin; ++i) {
                for (int j = 0; j < kWin; ++j) {
                    const double wgt = g[i] * g[j];
                    const double va = a.at(0, static_cast<int>(wy) + i, wx + j);
                    const double vb = b.at(0, static_cast<int>(wy) + i, wx + j);
                    mu_a += wgt * va;
                    mu_b += wgt * vb;
                    aa += wgt * va * va;
                    bb += wgt * vb * vb;
                    ab += wgt * va * vb;
                }
            }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            const double s = ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
                             ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
            k.add(s);
        }
        row_sum[wy] = k.sum;
    });
    Kahan total;
    for (int y = 0; y < oh; ++y) total.add(row_sum[y]);
    return total.sum / (static_cast<double>(oh) * ow);
}

}  // namespace pff
