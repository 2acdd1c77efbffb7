#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pff/analysis.hpp"
#include "pff/errors.hpp"
#include "pff/rng.hpp"
#include "testutil.hpp"

using namespace pff;

namespace {

FilterBank random_bank(int n, int k, uint64_t seed) {
    Rng rng(seed);
    FilterBank bank;
    bank.k = k;
    bank.n = n;
    bank.vecs.resize(static_cast<size_t>(n) * k * k);
    for (auto& v : bank.vecs) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return bank;
}

}  // namespace

TEST_CASE("K=1 recovers the mean; duplicated points recover exactly") {
    FilterBank bank = random_bank(40, 3, 1);
    const KmeansResult km = kmeans_filters(bank, 1, 0);
    for (int j = 0; j < bank.dim(); ++j) {
        double mean = 0;
        for (int i = 0; i < bank.n; ++i) mean += bank.row(i)[j];
        mean /= bank.n;
        CHECK(km.centroids[j] == doctest::Approx(mean).epsilon(1e-5));
    }
    double var_n = 0;
    for (int i = 0; i < bank.n; ++i)
        for (int j = 0; j < bank.dim(); ++j) {
            const double d = bank.row(i)[j] - km.centroids[j];
            var_n += d * d;
        }
    CHECK(km.inertia == doctest::Approx(var_n).epsilon(1e-6));

    // two well-separated duplicated points
    FilterBank two;
    two.k = 3;
    two.n = 6;
    two.vecs.assign(6 * 9, 0.f);
    for (int i = 0; i < 3; ++i) two.vecs[static_cast<size_t>(i) * 9] = 10.f;
    const KmeansResult km2 = kmeans_filters(two, 2, 7);
    CHECK(km2.inertia == doctest::Approx(0.0));
    CHECK(km2.assignments[0] == km2.assignments[1]);
    CHECK(km2.assignments[3] == km2.assignments[4]);
    CHECK(km2.assignments[0] != km2.assignments[3]);

    CHECK_THROWS_AS(kmeans_filters(two, 7, 0), FormatError);
}

TEST_CASE("inertia is non-increasing over Lloyd iterations, 20 seeded trials") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        FilterBank bank = random_bank(60, 3, seed + 100);
        const KmeansResult km = kmeans_filters(bank, 5, seed);
        REQUIRE(!km.inertia_history.empty());
        for (size_t i = 1; i < km.inertia_history.size(); ++i)
            CHECK(km.inertia_history[i] <= km.inertia_history[i - 1] + 1e-9);
    }
}

TEST_CASE("kmeans is deterministic under a fixed seed") {
    FilterBank bank = random_bank(50, 3, 5);
    const KmeansResult a = kmeans_filters(bank, 4, 11);
    const KmeansResult b = kmeans_filters(bank, 4, 11);
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("pca: orthonormal components, trace energies, reconstruction") {
    FilterBank bank = random_bank(30, 3, 9);
    const int dim = bank.dim();
    const int d = std::min(bank.n, dim);
    const PcaResult pca = pca_filters(bank, d);

    // orthonormality
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            double dot = 0;
            for (int j = 0; j < dim; ++j)
                dot += static_cast<double>(pca.components[a][j]) * pca.components[b][j];
            CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-6));
        }

    // energies non-increasing, in [0,1], summing to <= 1 + eps
    double sum = 0;
    for (size_t i = 0; i < pca.energy.size(); ++i) {
        CHECK(pca.energy[i] >= 0.0);
        CHECK(pca.energy[i] <= 1.0 + 1e-9);
        if (i) CHECK(pca.energy[i] <= pca.energy[i - 1] + 1e-12);
        sum += pca.energy[i];
    }
    CHECK(sum <= 1.0 + 1e-6);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));  // full rank here

    // full-rank reconstruction
    for (int i = 0; i < bank.n; ++i) {
        std::vector<double> rec(dim);
        for (int j = 0; j < dim; ++j) rec[j] = pca.mean[j];
        for (int c = 0; c < d; ++c) {
            double coef = 0;
            for (int j = 0; j < dim; ++j)
                coef += (bank.row(i)[j] - pca.mean[j]) * static_cast<double>(pca.components[c][j]);
            for (int j = 0; j < dim; ++j) rec[j] += coef * pca.components[c][j];
        }
        for (int j = 0; j < dim; ++j)
            CHECK(rec[j] == doctest::Approx(bank.row(i)[j]).epsilon(1e-5));
    }
}

TEST_CASE("pca on a rank-2 bank concentrates all energy in two components") {
    Rng rng(10);
    FilterBank bank;
    bank.k = 3;
    bank.n = 25;
    const int dim = 9;
    std::vector<float> u(dim), w(dim), base(dim);
    for (int j = 0; j < dim; ++j) {
        u[j] = static_cast<float>(rng.normal());
        w[j] = static_cast<float>(rng.normal());
        base[j] = static_cast<float>(rng.normal());
    }
    for (int i = 0; i < bank.n; ++i) {
        const float a = static_cast<float>(rng.uniform(-2, 2));
        const float b = static_cast<float>(rng.uniform(-2, 2));
        for (int j = 0; j < dim; ++j) bank.vecs.push_back(base[j] + a * u[j] + b * w[j]);
    }
    const PcaResult pca = pca_filters(bank, 4);
    CHECK(pca.energy[0] + pca.energy[1] == doctest::Approx(1.0).epsilon(1e-6));

    // adding a constant vector to every filter changes the mean only
    FilterBank shifted = bank;
    for (int i = 0; i < bank.n; ++i)
        for (int j = 0; j < dim; ++j) shifted.vecs[static_cast<size_t>(i) * dim + j] += 3.5f;
    const PcaResult pca2 = pca_filters(shifted, 4);
    for (int c = 0; c < 2; ++c) {
        double dot = 0;
        for (int j = 0; j < dim; ++j)
            dot += static_cast<double>(pca.components[c][j]) * pca2.components[c][j];
        CHECK(std::fabs(dot) == doctest::Approx(1.0).epsilon(1e-5));  // up to sign
        CHECK(pca2.energy[c] == doctest::Approx(pca.energy[c]).epsilon(1e-6));
    }
}

TEST_CASE("degenerate single-filter bank is flagged") {
    FilterBank bank = random_bank(1, 3, 11);
    const PcaResult pca = pca_filters(bank, 1);
    CHECK(pca.degenerate);
    CHECK(pca.energy[0] == 0.0);
}

TEST_CASE("energy fractions are invariant to bank order") {
    FilterBank bank = random_bank(20, 3, 12);
    FilterBank reversed = bank;
    for (int i = 0; i < bank.n; ++i)
        std::copy(bank.row(bank.n - 1 - i), bank.row(bank.n - 1 - i) + bank.dim(),
                  reversed.vecs.begin() + static_cast<size_t>(i) * bank.dim());
    const PcaResult a = pca_filters(bank, 5);
    const PcaResult b = pca_filters(reversed, 5);
    for (int i = 0; i < 5; ++i) CHECK(a.energy[i] == doctest::Approx(b.energy[i]).epsilon(1e-9));
}

TEST_CASE("flow colorization: white at rest, saturated hues, 180-degree flips") {
    FlowField zero;
    zero.height = 4;
    zero.width = 4;
    zero.vx.assign(16, 0.f);
    zero.vy.assign(16, 0.f);
    const Image white = colorize_flow(zero, 2.0);
    for (float v : white.data) CHECK(v == doctest::Approx(1.0));

    FlowField right = zero;
    right.vx.assign(16, 2.f);  // full magnitude along +x
    const Image hue = colorize_flow(right, 2.0);
    // all pixels share one fully saturated color
    for (int p = 1; p < 16; ++p) {
        CHECK(hue.data[p] == hue.data[0]);
        CHECK(hue.data[16 + p] == hue.data[16]);
        CHECK(hue.data[32 + p] == hue.data[32]);
    }
    float mn = 2.f, mx = -1.f;
    for (int c = 0; c < 3; ++c) {
        mn = std::min(mn, hue.data[static_cast<size_t>(c) * 16]);
        mx = std::max(mx, hue.data[static_cast<size_t>(c) * 16]);
    }
    CHECK(mx == doctest::Approx(1.0));
    CHECK(mn == doctest::Approx(0.0));

    FlowField left = zero;
    left.vx.assign(16, -2.f);
    const Image hue2 = colorize_flow(left, 2.0);
    // opposite direction lands on the opposite wheel position: different color
    bool differs = false;
    for (int c = 0; c < 3; ++c)
        if (std::fabs(hue2.data[static_cast<size_t>(c) * 16] -
                      hue.data[static_cast<size_t>(c) * 16]) > 0.5f)
            differs = true;
    CHECK(differs);
}

TEST_CASE("gather_filters reservoir subsampling is seeded and sized") {
    Rng rng(13);
    const FilterFlow flow = testutil::random_simplex_flow(10, 10, 3, rng);
    const FilterBank all = gather_filters(flow);
    CHECK(all.n == 100);
    const FilterBank sub1 = gather_filters(flow, 20, 5);
    const FilterBank sub2 = gather_filters(flow, 20, 5);
    CHECK(sub1.n == 20);
    CHECK(sub1.vecs == sub2.vecs);
}

TEST_CASE("loading factor maps: projections, Bessel bound, normalization") {
    Rng rng(14);
    const FilterFlow flow = testutil::random_simplex_flow(8, 8, 3, rng);
    const FilterBank bank = gather_filters(flow);
    const PcaResult pca = pca_filters(bank, 4);
    const LoadingMaps maps = loading_factor_maps(flow, pca, 4);
    REQUIRE(maps.maps.size() == 4);
    REQUIRE(maps.ranges.size() == 4);

    for (const auto& m : maps.maps)
        for (float v : m.data) {
            CHECK(v >= 0.f);
            CHECK(v <= 1.f);
        }

    // Bessel: sum of squared loadings <= squared centered norm, per pixel
    const int kk = 9;
    for (int p = 0; p < 64; ++p) {
        const float* f = flow.coeffs.data() + static_cast<size_t>(p) * kk;
        double norm2 = 0;
        for (int j = 0; j < kk; ++j) {
            const double c = f[j] - pca.mean[j];
            norm2 += c * c;
        }
        double load2 = 0;
        for (int c = 0; c < 4; ++c) {
            double dot = 0;
            for (int j = 0; j < kk; ++j)
                dot += (f[j] - pca.mean[j]) * static_cast<double>(pca.components[c][j]);
            load2 += dot * dot;
        }
        CHECK(load2 <= norm2 + 1e-9);
    }

    // a flow lying on mean + alpha * c1 loads only the first component
    FilterFlow synth(4, 4, 3, FlowConstraint::free);
    Rng rng2(15);
    std::vector<float> alphas;
    for (int p = 0; p < 16; ++p) {
        const float a = static_cast<float>(rng2.uniform(-1.0, 1.0));
        alphas.push_back(a);
        for (int j = 0; j < kk; ++j)
            synth.coeffs[static_cast<size_t>(p) * kk + j] = pca.mean[j] + a * pca.components[0][j];
    }
    const LoadingMaps smaps = loading_factor_maps(synth, pca, 2);
    // raw range of map 1 spans the alphas; map 2 is identically ~0
    CHECK(smaps.ranges[0].first ==
          doctest::Approx(*std::min_element(alphas.begin(), alphas.end())).epsilon(1e-4));
    CHECK(smaps.ranges[0].second ==
          doctest::Approx(*std::max_element(alphas.begin(), alphas.end())).epsilon(1e-4));
    CHECK(std::fabs(smaps.ranges[1].first) < 1e-5);
    CHECK(std::fabs(smaps.ranges[1].second) < 1e-5);

    PcaResult wrong = pca;
    wrong.mean.resize(4);
    CHECK_THROWS_AS(loading_factor_maps(flow, wrong, 1), FormatError);
}

TEST_CASE("colorize_assignments maps every pixel through its centroid") {
    Rng rng(16);
    const FilterFlow flow = testutil::random_simplex_flow(6, 6, 3, rng);
    const FilterBank bank = gather_filters(flow);
    const KmeansResult km = kmeans_filters(bank, 4, 3);
    const Image img = colorize_assignments(km.assignments, 6, 6, km);
    CHECK(img.channels == 3);
    CHECK(img.height == 6);
    // pixels in the same cluster share a color
    for (int p = 0; p < 36; ++p)
        for (int q = 0; q < 36; ++q)
            if (km.assignments[p] == km.assignments[q]) {
                CHECK(img.data[p] == img.data[q]);
                CHECK(img.data[36 + p] == img.data[36 + q]);
            }
}
