#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "pff/checkpoint.hpp"
#include "pff/detail/pipeline.hpp"
#include "pff/errors.hpp"
#include "pff/net.hpp"
#include "pff/rng.hpp"
#include "pff/trainer.hpp"
#include "testutil.hpp"

using namespace pff;
namespace fs = std::filesystem;

namespace {

// small double-precision config for finite-difference checks
NetConfig toy_config(HeadMode head = HeadMode::filter_flow) {
    NetConfig cfg;
    cfg.in_channels = 1;
    cfg.k = 3;
    cfg.head = head;
    cfg.deep_layers = 3;
    cfg.deep_channels = 4;
    cfg.pool_after = {0};
    cfg.upsample_after = {1};
    cfg.shallow_layers = 2;
    cfg.shallow_channels = 3;
    cfg.fusion_layers = 2;
    cfg.init_seed = 7;
    return cfg;
}

template <class T>
TensorT<T> random_tensor(int n, int c, int h, int w, Rng& rng, double lo = 0.0, double hi = 1.0) {
    TensorT<T> t(n, c, h, w);
    for (auto& v : t.v) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

// upstream-weighted scalar output sum(up .* f(x)) makes any layer a scalar
// function whose analytic input gradient is layer.backward(up)
template <class Layer, class T>
void check_layer_input_grad(Layer& layer, TensorT<T>& x, const TensorT<T>& up, double tol) {
    auto eval = [&]() {
        TensorT<T> y = layer.forward(x);
        double s = 0;
        for (size_t i = 0; i < y.v.size(); ++i) s += static_cast<double>(up.v[i]) * y.v[i];
        return s;
    };
    eval();
    const TensorT<T> dx = layer.backward(up);

    std::vector<double> xd(x.v.begin(), x.v.end());
    std::vector<double> analytic(dx.v.begin(), dx.v.end());
    auto eval_from_xd = [&]() {
        for (size_t i = 0; i < xd.size(); ++i) x.v[i] = static_cast<T>(xd[i]);
        return eval();
    };
    const auto r = testutil::finite_diff_check(xd, eval_from_xd, analytic);
    CHECK(r.max_rel < tol);
}

}  // namespace

TEST_CASE("conv2d gradients (input, weights, bias) pass finite differences") {
    Rng rng(21);
    detail::Conv2dT<double> conv;
    conv.init(2, 3, 3, rng);
    TensorT<double> x = random_tensor<double>(2, 2, 6, 6, rng);
    const TensorT<double> up = random_tensor<double>(2, 3, 6, 6, rng, -1.0, 1.0);

    check_layer_input_grad(conv, x, up, 1e-4);

    auto eval = [&]() {
        TensorT<double> y = conv.forward(x);
        double s = 0;
        for (size_t i = 0; i < y.v.size(); ++i) s += up.v[i] * y.v[i];
        return s;
    };
    std::fill(conv.gw.begin(), conv.gw.end(), 0.0);
    std::fill(conv.gb.begin(), conv.gb.end(), 0.0);
    eval();
    conv.backward(up);
    auto rw = testutil::finite_diff_check(conv.w, eval, conv.gw);
    CHECK(rw.max_rel < 1e-4);
    auto rb = testutil::finite_diff_check(conv.b, eval, conv.gb);
    CHECK(rb.max_rel < 1e-4);
}

TEST_CASE("batchnorm gradients in train mode pass finite differences") {
    Rng rng(22);
    detail::BatchNormT<double> bn;
    bn.init(3, 0.1, 1e-5);
    TensorT<double> x = random_tensor<double>(2, 3, 4, 4, rng);
    const TensorT<double> up = random_tensor<double>(2, 3, 4, 4, rng, -1.0, 1.0);

    // fresh running stats every eval so train-mode statistics stay a pure
    // function of the input
    detail::BatchNormT<double> probe;
    auto eval = [&]() {
        probe = bn;
        TensorT<double> y = probe.forward(x, true);
        double s = 0;
        for (size_t i = 0; i < y.v.size(); ++i) s += up.v[i] * y.v[i];
        return s;
    };
    eval();
    const TensorT<double> dx = probe.backward(up);

    std::vector<double> xd(x.v.begin(), x.v.end());
    std::vector<double> analytic(dx.v.begin(), dx.v.end());
    auto eval_from_xd = [&]() {
        for (size_t i = 0; i < xd.size(); ++i) x.v[i] = xd[i];
        return eval();
    };
    auto r = testutil::finite_diff_check(xd, eval_from_xd, analytic);
    CHECK(r.max_rel < 1e-4);

    // gamma/beta
    eval();
    probe.backward(up);
    std::vector<double> ggamma = probe.ggamma, gbeta = probe.gbeta;
    auto eval_gamma = [&]() {
        detail::BatchNormT<double> p2 = bn;
        TensorT<double> y = p2.forward(x, true);
        double s = 0;
        for (size_t i = 0; i < y.v.size(); ++i) s += up.v[i] * y.v[i];
        return s;
    };
    auto rg = testutil::finite_diff_check(bn.gamma, eval_gamma, ggamma);
    CHECK(rg.max_rel < 1e-4);
    auto rbta = testutil::finite_diff_check(bn.beta, eval_gamma, gbeta);
    CHECK(rbta.max_rel < 1e-4);
}

TEST_CASE("relu, maxpool and upsample gradients pass finite differences") {
    Rng rng(23);
    {
        detail::ReluT<double> relu;
        TensorT<double> x = random_tensor<double>(1, 2, 4, 4, rng, -1.0, 1.0);
        const TensorT<double> up = random_tensor<double>(1, 2, 4, 4, rng, -1.0, 1.0);
        check_layer_input_grad(relu, x, up, 1e-4);
    }
    {
        detail::MaxPool2T<double> pool;
        TensorT<double> x = random_tensor<double>(1, 2, 6, 6, rng);
        const TensorT<double> up = random_tensor<double>(1, 2, 3, 3, rng, -1.0, 1.0);
        check_layer_input_grad(pool, x, up, 1e-4);
    }
    {
        detail::UpsampleNearest2T<double> ups;
        TensorT<double> x = random_tensor<double>(1, 2, 3, 3, rng);
        const TensorT<double> up = random_tensor<double>(1, 2, 6, 6, rng, -1.0, 1.0);
        check_layer_input_grad(ups, x, up, 1e-4);
    }
}

TEST_CASE("softmax and apply_flow kernels pass finite differences") {
    Rng rng(24);
    const int h = 4, w = 4, k = 3, kk = 9, channels = 1;
    const int64_t pixels = h * w;

    // softmax
    std::vector<double> logits(pixels * kk), out(pixels * kk);
    for (auto& v : logits) v = rng.uniform(-2.0, 2.0);
    std::vector<double> up(pixels * kk);
    for (auto& v : up) v = rng.uniform(-1.0, 1.0);

    auto eval_softmax = [&]() {
        detail::softmax_per_pixel(logits.data(), out.data(), pixels, kk);
        double s = 0;
        for (size_t i = 0; i < out.size(); ++i) s += up[i] * out[i];
        return s;
    };
    eval_softmax();
    std::vector<double> dlogits(pixels * kk);
    detail::softmax_backward_per_pixel(out.data(), up.data(), dlogits.data(), pixels, kk);
    auto rs = testutil::finite_diff_check(logits, eval_softmax, dlogits);
    CHECK(rs.max_rel < 1e-4);

    // apply_flow wrt coefficients and image
    std::vector<double> coeffs(pixels * kk), img(pixels * channels), res(pixels * channels);
    for (auto& v : coeffs) v = rng.uniform(-1.0, 1.0);
    for (auto& v : img) v = rng.uniform();
    std::vector<double> up2(pixels * channels);
    for (auto& v : up2) v = rng.uniform(-1.0, 1.0);

    auto eval_apply = [&]() {
        detail::apply_flow_kernel(coeffs.data(), img.data(), res.data(), channels, h, w, k);
        double s = 0;
        for (size_t i = 0; i < res.size(); ++i) s += up2[i] * res[i];
        return s;
    };
    eval_apply();
    std::vector<double> dcoeffs(coeffs.size(), 0.0), dimg(img.size(), 0.0);
    detail::apply_flow_backward_kernel(coeffs.data(), img.data(), up2.data(), dcoeffs.data(),
                                       dimg.data(), channels, h, w, k);
    auto rc = testutil::finite_diff_check(coeffs, eval_apply, dcoeffs);
    CHECK(rc.max_rel < 1e-4);
    auto ri = testutil::finite_diff_check(img, eval_apply, dimg);
    CHECK(ri.max_rel < 1e-4);

    // the coefficient gradient of a delta upstream is the im2col patch
    std::fill(up2.begin(), up2.end(), 0.0);
    up2[1 * w + 2] = 1.0;  // pixel (1,2)
    std::fill(dcoeffs.begin(), dcoeffs.end(), 0.0);
    detail::apply_flow_backward_kernel(coeffs.data(), img.data(), up2.data(), dcoeffs.data(),
                                       static_cast<double*>(nullptr), channels, h, w, k);
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int o = (dy + 1) * 3 + (dx + 1);
            const double patch = img[std::clamp(1 + dy, 0, h - 1) * w + std::clamp(2 + dx, 0, w - 1)];
            CHECK(dcoeffs[(1 * w + 2) * kk + o] == doctest::Approx(patch).epsilon(1e-12));
        }
}

TEST_CASE("head emits k*k channels in flow mode, image channels in direct mode") {
    NetConfig cfg = toy_config();
    cfg.k = 5;
    Network net(cfg);
    Rng rng(25);
    Tensor x = random_tensor<float>(1, 1, 8, 8, rng);
    CHECK(net.forward(x, false).c == 25);

    NetConfig dcfg = toy_config(HeadMode::direct_image);
    dcfg.in_channels = 3;
    Network dnet(dcfg);
    Tensor x3 = random_tensor<float>(1, 3, 8, 8, rng);
    CHECK(dnet.forward(x3, false).c == 3);
}

TEST_CASE("same seed, same parameters; eval forward deterministic") {
    const NetConfig cfg = toy_config();
    Network a(cfg), b(cfg);
    auto pa = a.params(), pb = b.params();
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i].value == *pb[i].value);

    Rng rng(26);
    Tensor x = random_tensor<float>(1, 1, 8, 8, rng);
    const Tensor y1 = a.forward(x, false);
    const Tensor y2 = a.forward(x, false);
    CHECK(y1.v == y2.v);
}

TEST_CASE("output resolution equals input resolution across sizes") {
    const NetConfig cfg = toy_config();
    Network net(cfg);
    Rng rng(27);
    for (int size : {4, 8, 12, 20}) {
        Tensor x = random_tensor<float>(1, 1, size, size, rng);
        const Tensor y = net.forward(x, false);
        CHECK(y.h == size);
        CHECK(y.w == size);
    }
    Tensor odd = random_tensor<float>(1, 1, 6, 7, rng);
    CHECK_THROWS_AS(net.forward(odd, false), FormatError);
}

TEST_CASE("whole-network parameter gradients pass finite differences (double)") {
    NetConfig cfg = toy_config();
    NetworkT<double> net(cfg);
    Rng rng(28);
    TensorT<double> x = random_tensor<double>(1, 1, 8, 8, rng);
    const TensorT<double> up = random_tensor<double>(1, cfg.k * cfg.k, 8, 8, rng, -0.1, 0.1);

    auto eval = [&]() {
        TensorT<double> y = net.forward(x, true);
        double s = 0;
        for (size_t i = 0; i < y.v.size(); ++i) s += up.v[i] * y.v[i];
        return s;
    };
    net.zero_grad();
    eval();
    net.backward(up);

    // spot-check a subset of every parameter tensor (full FD over all
    // parameters runs in the acceptance suite)
    for (auto& p : net.params()) {
        std::vector<double> analytic = *p.grad;
        auto& vals = *p.value;
        const size_t stride = std::max<size_t>(1, vals.size() / 5);
        for (size_t i = 0; i < vals.size(); i += stride) {
            const double keep = vals[i];
            const double eps = 1e-4;
            vals[i] = keep + eps;
            const double fp = eval();
            vals[i] = keep - eps;
            const double fm = eval();
            vals[i] = keep;
            const double fd = (fp - fm) / (2 * eps);
            const double rel =
                std::fabs(fd - analytic[i]) / std::max(std::fabs(fd) + std::fabs(analytic[i]), 1e-3);
            INFO(p.name << "[" << i << "]");
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("zero upstream gives zero parameter gradients") {
    const NetConfig cfg = toy_config();
    Network net(cfg);
    Rng rng(29);
    Tensor x = random_tensor<float>(1, 1, 8, 8, rng);
    net.zero_grad();
    net.forward(x, true);
    Tensor up(1, cfg.k * cfg.k, 8, 8);
    net.backward(up);
    for (auto& p : net.params())
        for (float g : *p.grad) CHECK(g == 0.f);
}

TEST_CASE("checkpoint round trip is bit exact and complete") {
    NetConfig cfg = toy_config();
    Network net(cfg);
    TrainState st = TrainState::init(net, 5);
    st.step = 42;
    Rng rng(30);
    for (auto& m : st.m)
        for (auto& v : m) v = static_cast<float>(rng.uniform(-1, 1));

    const std::string path = (fs::temp_directory_path() / "pff_ckpt.bin").string();
    save_checkpoint(net, &st, path);
    LoadedCheckpoint lc = load_checkpoint(path);

    auto pa = net.params();
    auto pb = lc.net.params();
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].name == pb[i].name);
        CHECK(*pa[i].value == *pb[i].value);
    }
    REQUIRE(lc.state.has_value());
    CHECK(lc.state->step == 42);
    CHECK(lc.state->m == st.m);
    CHECK(lc.state->rng.state() == st.rng.state());

    // forward after reload agrees bitwise in eval mode
    Tensor x = random_tensor<float>(1, 1, 8, 8, rng);
    CHECK(net.forward(x, false).v == lc.net.forward(x, false).v);

    // every parameter appears exactly once
    std::vector<std::string> names;
    for (auto& p : pa) names.push_back(p.name);
    std::sort(names.begin(), names.end());
    CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
}

TEST_CASE("tampered checkpoint shape is rejected") {
    NetConfig cfg = toy_config();
    Network net(cfg);
    const std::string path = (fs::temp_directory_path() / "pff_ckpt2.bin").string();
    save_checkpoint(net, nullptr, path);

    // corrupt the first dim field of the first tensor
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = bytes.find("deep.0.conv.w");
    REQUIRE(pos != std::string::npos);
    uint32_t bad_dim = 999;
    std::memcpy(bytes.data() + pos + std::string("deep.0.conv.w").size() + 4, &bad_dim, 4);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
}
