#pragma once

#include <cmath>
#include <vector>

#include "pff/detail/flow_kernels.hpp"
#include "pff/tensor.hpp"

// Differentiable bridge from predictor logits to a restored image:
// transpose to per-pixel filters, optional softmax, spatially-variant apply.
// Templated so gradient checks can run it in double precision.

namespace pff::detail {

template <class T>
struct FlowPipeline {
    int n = 0, c = 0, h = 0, w = 0, k = 0;
    bool simplex = false;
    std::vector<T> coeffs;  // n * h*w*kk, pixel-major filters after constraint
    std::vector<T> logits_pm;  // pre-softmax, pixel-major (kept when simplex)
    TensorT<T> img_cache;

    // logits (N, k*k, H, W), img (N, C, H, W) -> restored (N, C, H, W)
    TensorT<T> forward(const TensorT<T>& logits, const TensorT<T>& img, bool use_simplex, int k_) {
        n = img.n;
        c = img.c;
        h = img.h;
        w = img.w;
        k = k_;
        simplex = use_simplex;
        img_cache = img;
        const int kk = k * k;
        const int64_t pixels = static_cast<int64_t>(h) * w;
        logits_pm.resize(static_cast<size_t>(n) * pixels * kk);
        coeffs.resize(logits_pm.size());

        for (int in = 0; in < n; ++in) {
            T* dst = logits_pm.data() + static_cast<size_t>(in) * pixels * kk;
            for (int o = 0; o < kk; ++o) {
                const T* src = logits.plane(in, o);
                for (int64_t p = 0; p < pixels; ++p) dst[p * kk + o] = src[p];
            }
        }
        if (simplex) {
            softmax_per_pixel(logits_pm.data(), coeffs.data(), static_cast<int64_t>(n) * pixels, kk);
        } else {
            coeffs = logits_pm;
        }

        TensorT<T> out(n, c, h, w);
        for (int in = 0; in < n; ++in)
            apply_flow_kernel(coeffs.data() + static_cast<size_t>(in) * pixels * kk,
                              img.plane(in, 0), out.plane(in, 0), c, h, w, k);
        return out;
    }

    // d restored -> d logits; optional penalties on the constrained coeffs
    // are added here: smooth_l2 * sum of squared first differences across
    // neighboring pixels and sparse_l1 * sum |coeff|, both mean-normalized.
    // penalty_out, when non-null, receives the penalty value.
    TensorT<T> backward(const TensorT<T>& upstream, double smooth_l2 = 0.0,
                        double sparse_l1 = 0.0, double* penalty_out = nullptr) {
        const int kk = k * k;
        const int64_t pixels = static_cast<int64_t>(h) * w;
        std::vector<T> dcoeffs(coeffs.size(), T(0));
        for (int in = 0; in < n; ++in)
            apply_flow_backward_kernel(coeffs.data() + static_cast<size_t>(in) * pixels * kk,
                                       img_cache.plane(in, 0), upstream.plane(in, 0),
                                       dcoeffs.data() + static_cast<size_t>(in) * pixels * kk,
                                       static_cast<T*>(nullptr), c, h, w, k);

        double penalty = 0.0;
        if (sparse_l1 > 0.0) {
            const T lam = static_cast<T>(sparse_l1 / static_cast<double>(coeffs.size()));
            for (size_t i = 0; i < coeffs.size(); ++i) {
                penalty += static_cast<double>(lam) * std::fabs(static_cast<double>(coeffs[i]));
                dcoeffs[i] += coeffs[i] > T(0) ? lam : (coeffs[i] < T(0) ? -lam : T(0));
            }
        }
        if (smooth_l2 > 0.0) {
            const T lam = static_cast<T>(smooth_l2 / static_cast<double>(coeffs.size()));
            for (int in = 0; in < n; ++in) {
                const T* cf = coeffs.data() + static_cast<size_t>(in) * pixels * kk;
                T* dcf = dcoeffs.data() + static_cast<size_t>(in) * pixels * kk;
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        for (int o = 0; o < kk; ++o) {
                            const int64_t idx = (static_cast<int64_t>(y) * w + x) * kk + o;
                            if (x + 1 < w) {
                                const T d = cf[idx] - cf[idx + kk];
                                penalty += static_cast<double>(lam) * d * d;
                                dcf[idx] += 2 * lam * d;
                                dcf[idx + kk] -= 2 * lam * d;
                            }
                            if (y + 1 < h) {
                                const T d = cf[idx] - cf[idx + static_cast<int64_t>(w) * kk];
                                penalty += static_cast<double>(lam) * d * d;
                                dcf[idx] += 2 * lam * d;
                                dcf[idx + static_cast<int64_t>(w) * kk] -= 2 * lam * d;
                            }
                        }
            }
        }
        if (penalty_out) *penalty_out = penalty;

        std::vector<T> dlogits_pm;
        if (simplex) {
            dlogits_pm.resize(dcoeffs.size());
            softmax_backward_per_pixel(coeffs.data(), dcoeffs.data(), dlogits_pm.data(),
                                       static_cast<int64_t>(n) * pixels, kk);
        } else {
            dlogits_pm = std::move(dcoeffs);
        }

        TensorT<T> dlogits(n, kk, h, w);
        for (int in = 0; in < n; ++in) {
            const T* src = dlogits_pm.data() + static_cast<size_t>(in) * pixels * kk;
            for (int o = 0; o < kk; ++o) {
                T* dst = dlogits.plane(in, o);
                for (int64_t p = 0; p < pixels; ++p) dst[p] = src[p * kk + o];
            }
        }
        return dlogits;
    }
};

// mean absolute difference and its subgradient (sign(0) = 0)
template <class T>
double l1_loss_kernel(const TensorT<T>& pred, const TensorT<T>& target, TensorT<T>* grad) {
    const T inv_n = T(1) / static_cast<T>(pred.size());
    double loss = 0.0;
    if (grad) *grad = TensorT<T>(pred.n, pred.c, pred.h, pred.w);
    for (size_t i = 0; i < pred.v.size(); ++i) {
        const T d = pred.v[i] - target.v[i];
        loss += std::fabs(static_cast<double>(d));
        if (grad) grad->v[i] = d > T(0) ? inv_n : (d < T(0) ? -inv_n : T(0));
    }
    return loss / static_cast<double>(pred.size());
}

}  // namespace pff::detail
