#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pff/errors.hpp"
#include "pff/filter_flow.hpp"
#include "pff/parallel.hpp"
#include "pff/rng.hpp"
#include "pff/tensor.hpp"

namespace pff {

enum class HeadMode { filter_flow, direct_image };

// Two-stream predictor layout. The deep stream is a chain of conv-bn-relu
// blocks with identity skips over block pairs, max-pooling after the layers
// in pool_after and nearest-neighbor upsampling after the layers in
// upsample_after; the shallow stream runs at full resolution. Streams merge
// by channel concatenation into 1x1 conv blocks and the head convolution.
struct NetConfig {
    int in_channels = 1;
    int k = 7;                        // predicted filter extent (head emits k*k)
    HeadMode head = HeadMode::filter_flow;
    // deblurring pipes head logits through softmax; jpeg/sr keep them free-form
    FlowConstraint flow_constraint = FlowConstraint::simplex;
    int deep_layers = 10;
    int deep_channels = 32;
    std::vector<int> pool_after = {2, 4};
    std::vector<int> upsample_after = {6, 8};
    int shallow_layers = 3;
    int shallow_channels = 16;
    int fusion_layers = 2;
    float bn_momentum = 0.1f;
    float bn_epsilon = 1e-5f;
    // filter-flow heads start near the identity operator: head weights are
    // He-initialized then scaled down, and the center-tap bias is set so the
    // initial filter carries ~head_identity_weight at the center (bias in
    // weight units for free heads, in logit units via the softmax inverse
    // for simplex heads). Scale 1 / weight 0 restores plain He behavior.
    float head_init_scale = 0.05f;
    float head_identity_weight = 0.95f;
    uint64_t init_seed = 0;
    bool identity_stub = false;       // bypasses the net with the delta filter

    int head_channels() const {
        return head == HeadMode::filter_flow ? k * k : in_channels;
    }
    // input dims must be divisible by this
    int pool_factor() const { return 1 << pool_after.size(); }
    void validate() const;

    std::string to_kv() const;
    static NetConfig from_kv(const std::string& text);
};

template <class T>
struct ParamRef {
    std::string name;
    std::vector<int> shape;
    std::vector<T>* value = nullptr;
    std::vector<T>* grad = nullptr;  // null for bn running statistics
};

// Named gradient snapshot, shape-congruent with the parameter list.
struct Gradients {
    std::vector<std::string> names;
    std::vector<std::vector<float>> tensors;
};

namespace detail {

template <class T>
struct Conv2dT {
    int in_c = 0, out_c = 0, ks = 1;
    std::vector<T> w, b, gw, gb;
    TensorT<T> x_cache;

    void init(int in_channels, int out_channels, int ksize, Rng& rng, double scale = 1.0) {
        in_c = in_channels;
        out_c = out_channels;
        ks = ksize;
        w.resize(static_cast<size_t>(out_c) * in_c * ks * ks);
        b.assign(out_c, T(0));
        gw.assign(w.size(), T(0));
        gb.assign(out_c, T(0));
        const double stddev = scale * std::sqrt(2.0 / (static_cast<double>(in_c) * ks * ks));
        for (auto& v : w) v = static_cast<T>(rng.normal() * stddev);
    }

    TensorT<T> forward(const TensorT<T>& x) {
        x_cache = x;
        const int r = (ks - 1) / 2;
        const int h = x.h, wd = x.w;
        TensorT<T> y(x.n, out_c, h, wd);
        parallel_for(0, static_cast<int64_t>(x.n) * out_c, [&](int64_t idx) {
            const int in = static_cast<int>(idx / out_c);
            const int oc = static_cast<int>(idx % out_c);
            T* yp = y.plane(in, oc);
            std::fill(yp, yp + static_cast<size_t>(h) * wd, b[oc]);
            for (int ic = 0; ic < in_c; ++ic) {
                const T* xp = x.plane(in, ic);
                for (int ky = 0; ky < ks; ++ky) {
                    for (int kx = 0; kx < ks; ++kx) {
                        const T wgt = w[((static_cast<size_t>(oc) * in_c + ic) * ks + ky) * ks + kx];
                        if (wgt == T(0)) continue;
                        const int oy0 = std::max(0, r - ky);
                        const int oy1 = std::min(h, h + r - ky);
                        const int ox0 = std::max(0, r - kx);
                        const int ox1 = std::min(wd, wd + r - kx);
                        for (int y0 = oy0; y0 < oy1; ++y0) {
                            T* yr = yp + static_cast<size_t>(y0) * wd;
                            const T* xr = xp + static_cast<size_t>(y0 + ky - r) * wd + (kx - r);
                            for (int x0 = ox0; x0 < ox1; ++x0) yr[x0] += wgt * xr[x0];
                        }
                    }
                }
            }
        });
        return y;
    }

    TensorT<T> backward(const TensorT<T>& up) {
        const TensorT<T>& x = x_cache;
        const int r = (ks - 1) / 2;
        const int h = x.h, wd = x.w;
        // weight and bias gradients, one worker per output channel
        parallel_for(0, out_c, [&](int64_t oc) {
            T bacc = 0;
            for (int in = 0; in < x.n; ++in) {
                const T* u = up.plane(in, static_cast<int>(oc));
                for (int64_t i = 0; i < static_cast<int64_t>(h) * wd; ++i) bacc += u[i];
            }
            gb[oc] += bacc;
            for (int ic = 0; ic < in_c; ++ic) {
                for (int ky = 0; ky < ks; ++ky) {
                    for (int kx = 0; kx < ks; ++kx) {
                        T acc = 0;
                        for (int in = 0; in < x.n; ++in) {
                            const T* u = up.plane(in, static_cast<int>(oc));
                            const T* xp = x.plane(in, ic);
                            const int oy0 = std::max(0, r - ky);
                            const int oy1 = std::min(h, h + r - ky);
                            const int ox0 = std::max(0, r - kx);
                            const int ox1 = std::min(wd, wd + r - kx);
                            for (int y0 = oy0; y0 < oy1; ++y0) {
                                const T* ur = u + static_cast<size_t>(y0) * wd;
                                const T* xr = xp + static_cast<size_t>(y0 + ky - r) * wd + (kx - r);
                                for (int x0 = ox0; x0 < ox1; ++x0) acc += ur[x0] * xr[x0];
                            }
                        }
                        gw[((static_cast<size_t>(oc) * in_c + ic) * ks + ky) * ks + kx] += acc;
                    }
                }
            }
        });
        // input gradient, one worker per (sample, input channel)
        TensorT<T> dx(x.n, in_c, h, wd);
        parallel_for(0, static_cast<int64_t>(x.n) * in_c, [&](int64_t idx) {
            const int in = static_cast<int>(idx / in_c);
            const int ic = static_cast<int>(idx % in_c);
            T* dp = dx.plane(in, ic);
            for (int oc = 0; oc < out_c; ++oc) {
                const T* u = up.plane(in, oc);
                for (int ky = 0; ky < ks; ++ky) {
                    for (int kx = 0; kx < ks; ++kx) {
                        const T wgt = w[((static_cast<size_t>(oc) * in_c + ic) * ks + ky) * ks + kx];
                        if (wgt == T(0)) continue;
                        // dx(sy,sx) += w * up(sy-ky+r, sx-kx+r)
                        const int sy0 = std::max(0, ky - r);
                        const int sy1 = std::min(h, h + ky - r);
                        const int sx0 = std::max(0, kx - r);
                        const int sx1 = std::min(wd, wd + kx - r);
                        for (int sy = sy0; sy < sy1; ++sy) {
                            T* dr = dp + static_cast<size_t>(sy) * wd;
                            const T* ur = u + static_cast<size_t>(sy - ky + r) * wd - (kx - r);
                            for (int sx = sx0; sx < sx1; ++sx) dr[sx] += wgt * ur[sx];
                        }
                    }
                }
            }
        });
        return dx;
    }
};

template <class T>
struct BatchNormT {
    int c = 0;
    T momentum = T(0.1), epsilon = T(1e-5);
    std::vector<T> gamma, beta, running_mean, running_var;
    std::vector<T> ggamma, gbeta;
    // forward cache
    TensorT<T> xhat;
    std::vector<T> inv_std;
    bool train_cached = false;

    void init(int channels, T mom, T eps) {
        c = channels;
        momentum = mom;
        epsilon = eps;
        gamma.assign(c, T(1));
        beta.assign(c, T(0));
        running_mean.assign(c, T(0));
        running_var.assign(c, T(1));
        ggamma.assign(c, T(0));
        gbeta.assign(c, T(0));
    }

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        train_cached = train;
        xhat = TensorT<T>(x.n, x.c, x.h, x.w);
        inv_std.assign(c, T(0));
        TensorT<T> y(x.n, x.c, x.h, x.w);
        const int64_t plane = static_cast<int64_t>(x.h) * x.w;
        const T m = static_cast<T>(x.n * plane);
        parallel_for(0, c, [&](int64_t ic) {
            T mean, var;
            if (train) {
                T s = 0, s2 = 0;
                for (int in = 0; in < x.n; ++in) {
                    const T* p = x.plane(in, static_cast<int>(ic));
                    for (int64_t i = 0; i < plane; ++i) {
                        s += p[i];
                        s2 += p[i] * p[i];
                    }
                }
                mean = s / m;
                var = s2 / m - mean * mean;
                if (var < 0) var = 0;
                running_mean[ic] = (T(1) - momentum) * running_mean[ic] + momentum * mean;
                running_var[ic] = (T(1) - momentum) * running_var[ic] + momentum * var;
            } else {
                mean = running_mean[ic];
                var = running_var[ic];
            }
            const T istd = T(1) / std::sqrt(var + epsilon);
            inv_std[ic] = istd;
            for (int in = 0; in < x.n; ++in) {
                const T* p = x.plane(in, static_cast<int>(ic));
                T* xh = xhat.plane(in, static_cast<int>(ic));
                T* yp = y.plane(in, static_cast<int>(ic));
                for (int64_t i = 0; i < plane; ++i) {
                    xh[i] = (p[i] - mean) * istd;
                    yp[i] = gamma[ic] * xh[i] + beta[ic];
                }
            }
        });
        return y;
    }

    TensorT<T> backward(const TensorT<T>& up) {
        TensorT<T> dx(up.n, up.c, up.h, up.w);
        const int64_t plane = static_cast<int64_t>(up.h) * up.w;
        const T m = static_cast<T>(up.n * plane);
        parallel_for(0, c, [&](int64_t ic) {
            T sum_u = 0, sum_uxh = 0;
            for (int in = 0; in < up.n; ++in) {
                const T* u = up.plane(in, static_cast<int>(ic));
                const T* xh = xhat.plane(in, static_cast<int>(ic));
                for (int64_t i = 0; i < plane; ++i) {
                    sum_u += u[i];
                    sum_uxh += u[i] * xh[i];
                }
            }
            gbeta[ic] += sum_u;
            ggamma[ic] += sum_uxh;
            const T g = gamma[ic] * inv_std[ic];
            if (train_cached) {
                const T mu = sum_u / m;
                const T muxh = sum_uxh / m;
                for (int in = 0; in < up.n; ++in) {
                    const T* u = up.plane(in, static_cast<int>(ic));
                    const T* xh = xhat.plane(in, static_cast<int>(ic));
                    T* d = dx.plane(in, static_cast<int>(ic));
                    for (int64_t i = 0; i < plane; ++i) d[i] = g * (u[i] - mu - xh[i] * muxh);
                }
            } else {
                for (int in = 0; in < up.n; ++in) {
                    const T* u = up.plane(in, static_cast<int>(ic));
                    T* d = dx.plane(in, static_cast<int>(ic));
                    for (int64_t i = 0; i < plane; ++i) d[i] = g * u[i];
                }
            }
        });
        return dx;
    }
};

template <class T>
struct ReluT {
    TensorT<T> x_cache;
    TensorT<T> forward(const TensorT<T>& x) {
        x_cache = x;
        TensorT<T> y = x;
        for (auto& v : y.v) v = v > T(0) ? v : T(0);
        return y;
    }
    TensorT<T> backward(const TensorT<T>& up) {
        TensorT<T> dx = up;
        for (size_t i = 0; i < dx.v.size(); ++i)
            if (!(x_cache.v[i] > T(0))) dx.v[i] = T(0);
        return dx;
    }
};

// 2x2 max pooling, stride 2; gradient routes to the argmax (first win on ties)
template <class T>
struct MaxPool2T {
    std::vector<int32_t> argmax;
    int in_h = 0, in_w = 0;

    TensorT<T> forward(const TensorT<T>& x) {
        if (x.h % 2 || x.w % 2) throw FormatError("maxpool: odd input dims");
        in_h = x.h;
        in_w = x.w;
        TensorT<T> y(x.n, x.c, x.h / 2, x.w / 2);
        argmax.assign(y.size(), 0);
        int64_t out_i = 0;
        for (int in = 0; in < x.n; ++in)
            for (int ic = 0; ic < x.c; ++ic) {
                const T* p = x.plane(in, ic);
                T* yp = y.plane(in, ic);
                for (int yy = 0; yy < y.h; ++yy)
                    for (int xx = 0; xx < y.w; ++xx) {
                        const int base = (2 * yy) * x.w + 2 * xx;
                        int best = base;
                        T bv = p[base];
                        const int cand[3] = {base + 1, base + x.w, base + x.w + 1};
                        for (int q = 0; q < 3; ++q)
                            if (p[cand[q]] > bv) {
                                bv = p[cand[q]];
                                best = cand[q];
                            }
                        yp[static_cast<size_t>(yy) * y.w + xx] = bv;
                        argmax[out_i++] = best;
                    }
            }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& up) {
        TensorT<T> dx(up.n, up.c, in_h, in_w);
        int64_t out_i = 0;
        for (int in = 0; in < up.n; ++in)
            for (int ic = 0; ic < up.c; ++ic) {
                T* d = dx.plane(in, ic);
                const T* u = up.plane(in, ic);
                for (int64_t i = 0; i < static_cast<int64_t>(up.h) * up.w; ++i)
                    d[argmax[out_i++]] += u[i];
            }
        return dx;
    }
};

template <class T>
struct UpsampleNearest2T {
    int in_h = 0, in_w = 0;
    TensorT<T> forward(const TensorT<T>& x) {
        in_h = x.h;
        in_w = x.w;
        TensorT<T> y(x.n, x.c, x.h * 2, x.w * 2);
        for (int in = 0; in < x.n; ++in)
            for (int ic = 0; ic < x.c; ++ic) {
                const T* p = x.plane(in, ic);
                T* yp = y.plane(in, ic);
                for (int yy = 0; yy < y.h; ++yy)
                    for (int xx = 0; xx < y.w; ++xx)
                        yp[static_cast<size_t>(yy) * y.w + xx] =
                            p[static_cast<size_t>(yy / 2) * x.w + xx / 2];
            }
        return y;
    }
    TensorT<T> backward(const TensorT<T>& up) {
        TensorT<T> dx(up.n, up.c, in_h, in_w);
        for (int in = 0; in < up.n; ++in)
            for (int ic = 0; ic < up.c; ++ic) {
                T* d = dx.plane(in, ic);
                const T* u = up.plane(in, ic);
                for (int yy = 0; yy < up.h; ++yy)
                    for (int xx = 0; xx < up.w; ++xx)
                        d[static_cast<size_t>(yy / 2) * in_w + xx / 2] +=
                            u[static_cast<size_t>(yy) * up.w + xx];
            }
        return dx;
    }
};

// conv -> bn -> relu
template <class T>
struct BlockT {
    Conv2dT<T> conv;
    BatchNormT<T> bn;
    ReluT<T> relu;

    void init(int in_c, int out_c, int ks, const NetConfig& cfg, Rng& rng) {
        conv.init(in_c, out_c, ks, rng);
        bn.init(out_c, static_cast<T>(cfg.bn_momentum), static_cast<T>(cfg.bn_epsilon));
    }
    TensorT<T> forward(const TensorT<T>& x, bool train) {
        return relu.forward(bn.forward(conv.forward(x), train));
    }
    TensorT<T> backward(const TensorT<T>& up) {
        return conv.backward(bn.backward(relu.backward(up)));
    }
};

}  // namespace detail

// The trainable two-stream filter predictor. One instance is exclusive-use
// during forward/backward (layers cache activations); eval-mode forward on
// a const network is safe from multiple threads only via separate copies.
template <class T>
class NetworkT {
public:
    explicit NetworkT(const NetConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        if (cfg_.identity_stub) return;
        Rng rng(cfg_.init_seed);
        deep_.resize(cfg_.deep_layers);
        for (int i = 0; i < cfg_.deep_layers; ++i)
            deep_[i].init(i == 0 ? cfg_.in_channels : cfg_.deep_channels, cfg_.deep_channels, 3,
                          cfg_, rng);
        pools_.resize(cfg_.pool_after.size());
        ups_.resize(cfg_.upsample_after.size());
        shallow_.resize(cfg_.shallow_layers);
        for (int i = 0; i < cfg_.shallow_layers; ++i)
            shallow_[i].init(i == 0 ? cfg_.in_channels : cfg_.shallow_channels,
                             cfg_.shallow_channels, 3, cfg_, rng);
        fusion_.resize(cfg_.fusion_layers);
        for (int i = 0; i < cfg_.fusion_layers; ++i)
            fusion_[i].init(i == 0 ? cfg_.deep_channels + cfg_.shallow_channels
                                   : cfg_.deep_channels,
                            cfg_.deep_channels, 1, cfg_, rng);
        const bool flow_head = cfg_.head == HeadMode::filter_flow;
        head_.init(cfg_.fusion_layers > 0 ? cfg_.deep_channels
                                          : cfg_.deep_channels + cfg_.shallow_channels,
                   cfg_.head_channels(), 1, rng,
                   flow_head ? static_cast<double>(cfg_.head_init_scale) : 1.0);
        if (flow_head && cfg_.head_identity_weight > 0.f) {
            const double w = std::min(0.999, static_cast<double>(cfg_.head_identity_weight));
            const int kk = cfg_.k * cfg_.k;
            const double bias = cfg_.flow_constraint == FlowConstraint::simplex
                                    ? std::log(w / (1.0 - w) * (kk - 1))  // softmax inverse
                                    : w;
            head_.b[(kk - 1) / 2] = static_cast<T>(bias);
        }
    }

    const NetConfig& config() const { return cfg_; }

    // logits, same spatial dims as the input
    TensorT<T> forward(const TensorT<T>& x, bool train) {
        if (cfg_.identity_stub)
            throw std::logic_error("identity stub has no forward pass");
        if (x.c != cfg_.in_channels) throw FormatError("forward: channel mismatch");
        if (x.h % cfg_.pool_factor() || x.w % cfg_.pool_factor())
            throw FormatError("forward: input dims must be divisible by " +
                              std::to_string(cfg_.pool_factor()));
        if (x.h < cfg_.pool_factor() || x.w < cfg_.pool_factor())
            throw FormatError("forward: input too small for the pooling schedule");

        // deep stream; identity skips span block pairs (1,2), (3,4), ...
        const int pairs = cfg_.deep_layers >= 3 ? (cfg_.deep_layers - 1) / 2 : 0;
        skip_saved_.assign(pairs, TensorT<T>());
        skip_used_.assign(pairs, 0);
        TensorT<T> t = x;
        int pool_i = 0, up_i = 0;
        for (int i = 0; i < cfg_.deep_layers; ++i) {
            if (i % 2 == 1 && (i - 1) / 2 < pairs) skip_saved_[(i - 1) / 2] = t;
            t = deep_[i].forward(t, train);
            if (i % 2 == 0 && i > 0 && (i - 2) / 2 < pairs) {
                const int p = (i - 2) / 2;
                // shape mismatch means a pool/upsample fell inside the pair: no skip
                if (skip_saved_[p].same_shape(t)) {
                    for (size_t q = 0; q < t.v.size(); ++q) t.v[q] += skip_saved_[p].v[q];
                    skip_used_[p] = 1;
                }
            }
            if (pool_i < static_cast<int>(cfg_.pool_after.size()) &&
                cfg_.pool_after[pool_i] == i) {
                t = pools_[pool_i].forward(t);
                ++pool_i;
            }
            if (up_i < static_cast<int>(cfg_.upsample_after.size()) &&
                cfg_.upsample_after[up_i] == i) {
                t = ups_[up_i].forward(t);
                ++up_i;
            }
        }

        // shallow stream, full resolution
        TensorT<T> s = x;
        for (auto& blk : shallow_) s = blk.forward(s, train);

        // fuse by channel concat
        TensorT<T> f(x.n, t.c + s.c, x.h, x.w);
        concat_deep_c_ = t.c;
        for (int in = 0; in < x.n; ++in) {
            for (int ic = 0; ic < t.c; ++ic)
                std::copy(t.plane(in, ic), t.plane(in, ic) + static_cast<size_t>(x.h) * x.w,
                          f.plane(in, ic));
            for (int ic = 0; ic < s.c; ++ic)
                std::copy(s.plane(in, ic), s.plane(in, ic) + static_cast<size_t>(x.h) * x.w,
                          f.plane(in, t.c + ic));
        }
        for (auto& blk : fusion_) f = blk.forward(f, train);
        return head_.forward(f);
    }

    // exact reverse of forward; returns the input-image gradient
    TensorT<T> backward(const TensorT<T>& upstream) {
        TensorT<T> g = head_.backward(upstream);
        for (int i = static_cast<int>(fusion_.size()) - 1; i >= 0; --i)
            g = fusion_[i].backward(g);

        // split the concat
        TensorT<T> gd(g.n, concat_deep_c_, g.h, g.w);
        TensorT<T> gs(g.n, g.c - concat_deep_c_, g.h, g.w);
        for (int in = 0; in < g.n; ++in) {
            for (int ic = 0; ic < gd.c; ++ic)
                std::copy(g.plane(in, ic), g.plane(in, ic) + static_cast<size_t>(g.h) * g.w,
                          gd.plane(in, ic));
            for (int ic = 0; ic < gs.c; ++ic)
                std::copy(g.plane(in, gd.c + ic),
                          g.plane(in, gd.c + ic) + static_cast<size_t>(g.h) * g.w,
                          gs.plane(in, ic));
        }

        for (int i = static_cast<int>(shallow_.size()) - 1; i >= 0; --i)
            gs = shallow_[i].backward(gs);

        int pool_i = static_cast<int>(cfg_.pool_after.size()) - 1;
        int up_i = static_cast<int>(cfg_.upsample_after.size()) - 1;
        const int pairs = static_cast<int>(skip_used_.size());
        std::vector<TensorT<T>> skip_grad(pairs);
        for (int i = cfg_.deep_layers - 1; i >= 0; --i) {
            if (up_i >= 0 && cfg_.upsample_after[up_i] == i) {
                gd = ups_[up_i].backward(gd);
                --up_i;
            }
            if (pool_i >= 0 && cfg_.pool_after[pool_i] == i) {
                gd = pools_[pool_i].backward(gd);
                --pool_i;
            }
            if (i % 2 == 0 && i > 0 && (i - 2) / 2 < pairs && skip_used_[(i - 2) / 2])
                skip_grad[(i - 2) / 2] = gd;  // add node: same grad to both branches
            gd = deep_[i].backward(gd);
            if (i % 2 == 1 && (i - 1) / 2 < pairs && skip_used_[(i - 1) / 2]) {
                const auto& sg = skip_grad[(i - 1) / 2];
                for (size_t q = 0; q < gd.v.size(); ++q) gd.v[q] += sg.v[q];
            }
        }
        for (size_t q = 0; q < gd.v.size(); ++q) gd.v[q] += gs.v[q];
        return gd;
    }

    void zero_grad() {
        for (auto& p : params())
            if (p.grad) std::fill(p.grad->begin(), p.grad->end(), T(0));
    }

    // trainable parameters, deterministic order
    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        if (cfg_.identity_stub) return out;
        auto add_block = [&out](const std::string& prefix, detail::BlockT<T>& b) {
            out.push_back({prefix + ".conv.w",
                           {b.conv.out_c, b.conv.in_c, b.conv.ks, b.conv.ks},
                           &b.conv.w, &b.conv.gw});
            out.push_back({prefix + ".conv.b", {b.conv.out_c}, &b.conv.b, &b.conv.gb});
            out.push_back({prefix + ".bn.gamma", {b.bn.c}, &b.bn.gamma, &b.bn.ggamma});
            out.push_back({prefix + ".bn.beta", {b.bn.c}, &b.bn.beta, &b.bn.gbeta});
        };
        for (size_t i = 0; i < deep_.size(); ++i) add_block("deep." + std::to_string(i), deep_[i]);
        for (size_t i = 0; i < shallow_.size(); ++i)
            add_block("shallow." + std::to_string(i), shallow_[i]);
        for (size_t i = 0; i < fusion_.size(); ++i)
            add_block("fusion." + std::to_string(i), fusion_[i]);
        out.push_back({"head.conv.w",
                       {head_.out_c, head_.in_c, head_.ks, head_.ks}, &head_.w, &head_.gw});
        out.push_back({"head.conv.b", {head_.out_c}, &head_.b, &head_.gb});
        return out;
    }

    // bn running statistics: saved in checkpoints, not touched by the optimizer
    std::vector<ParamRef<T>> state_tensors() {
        std::vector<ParamRef<T>> out;
        if (cfg_.identity_stub) return out;
        auto add_block = [&out](const std::string& prefix, detail::BlockT<T>& b) {
            out.push_back({prefix + ".bn.running_mean", {b.bn.c}, &b.bn.running_mean, nullptr});
            out.push_back({prefix + ".bn.running_var", {b.bn.c}, &b.bn.running_var, nullptr});
        };
        for (size_t i = 0; i < deep_.size(); ++i) add_block("deep." + std::to_string(i), deep_[i]);
        for (size_t i = 0; i < shallow_.size(); ++i)
            add_block("shallow." + std::to_string(i), shallow_[i]);
        for (size_t i = 0; i < fusion_.size(); ++i)
            add_block("fusion." + std::to_string(i), fusion_[i]);
        return out;
    }

    Gradients collect_gradients();

private:
    NetConfig cfg_;
    std::vector<detail::BlockT<T>> deep_, shallow_, fusion_;
    std::vector<detail::MaxPool2T<T>> pools_;
    std::vector<detail::UpsampleNearest2T<T>> ups_;
    detail::Conv2dT<T> head_;
    // forward bookkeeping
    std::vector<TensorT<T>> skip_saved_;
    std::vector<uint8_t> skip_used_;
    int concat_deep_c_ = 0;
};

using Network = NetworkT<float>;

// He-initialized network per the config; seeded and deterministic.
inline Network build_network(const NetConfig& cfg) { return Network(cfg); }

template <class T>
Gradients NetworkT<T>::collect_gradients() {
    Gradients g;
    for (auto& p : params()) {
        g.names.push_back(p.name);
        g.tensors.emplace_back(p.grad->begin(), p.grad->end());
    }
    return g;
}

}  // namespace pff
