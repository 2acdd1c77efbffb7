#include "pff/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "pff/errors.hpp"
#include "pff/parallel.hpp"
#include "pff/rng.hpp"

namespace pff {

namespace {

double sq_dist(const float* a, const float* b, int dim) {
    double s = 0;
    for (int i = 0; i < dim; ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

FilterBank gather_filters(const FilterFlow& flow, int max_n, uint64_t seed) {
    return gather_filters(std::vector<FilterFlow>{flow}, max_n, seed);
}

FilterBank gather_filters(const std::vector<FilterFlow>& flows, int max_n, uint64_t seed) {
    if (flows.empty()) throw FormatError("gather_filters: no flows");
    FilterBank bank;
    bank.k = flows.front().k;
    const int kk = bank.k * bank.k;
    for (const auto& f : flows)
        if (f.k != bank.k) throw FormatError("gather_filters: mixed filter extents");

    Rng rng(seed);
    int64_t seen = 0;
    for (const auto& f : flows) {
        const int64_t pixels = static_cast<int64_t>(f.height) * f.width;
        for (int64_t p = 0; p < pixels; ++p) {
            const float* v = f.coeffs.data() + p * kk;
            ++seen;
            if (max_n <= 0 || bank.n < max_n) {
                bank.vecs.insert(bank.vecs.end(), v, v + kk);
                ++bank.n;
            } else {
                // reservoir: replace a random slot with probability max_n/seen
                const int64_t j = static_cast<int64_t>(rng.uniform() * static_cast<double>(seen));
                if (j < max_n)
                    std::copy(v, v + kk, bank.vecs.begin() + static_cast<size_t>(j) * kk);
            }
        }
    }
    return bank;
}

KmeansResult kmeans_filters(const FilterBank& bank, int K, uint64_t seed) {
    if (K < 1 || K > bank.n)
        throw FormatError("kmeans_filters: need 1 <= K <= n");
    const int dim = bank.dim();
    const int n = bank.n;
    Rng rng(seed);

    KmeansResult res;
    res.K = K;
    res.centroids.assign(static_cast<size_t>(K) * dim, 0.f);

    // k-means++ seeding
    std::vector<double> d2(n, std::numeric_limits<double>::max());
    {
        const int first = rng.uniform_int(0, n - 1);
        std::copy(bank.row(first), bank.row(first) + dim, res.centroids.begin());
        for (int c = 1; c < K; ++c) {
            double total = 0;
            for (int i = 0; i < n; ++i) {
                const double d = sq_dist(bank.row(i), &res.centroids[(c - 1) * static_cast<size_t>(dim)], dim);
                d2[i] = std::min(d2[i], d);
                total += d2[i];
            }
            int pick = 0;
            if (total > 0) {
                double target = rng.uniform() * total;
                for (int i = 0; i < n; ++i) {
                    target -= d2[i];
                    if (target <= 0) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = rng.uniform_int(0, n - 1);
            }
            std::copy(bank.row(pick), bank.row(pick) + dim,
                      res.centroids.begin() + static_cast<size_t>(c) * dim);
        }
    }

    res.assignments.assign(n, -1);
    std::vector<int> counts(K, 0);
    std::vector<double> sums(static_cast<size_t>(K) * dim, 0.0);
    std::vector<double> dist_to_assigned(n, 0.0);

    for (int iter = 0; iter < 300; ++iter) {
        res.iterations = iter + 1;
        // assignment, ties to the lowest index
        std::atomic<bool> changed{false};
        parallel_for(0, n, [&](int64_t i) {
            double best = std::numeric_limits<double>::max();
            int best_c = 0;
            for (int c = 0; c < K; ++c) {
                const double d =
                    sq_dist(bank.row(static_cast<int>(i)), &res.centroids[static_cast<size_t>(c) * dim], dim);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            dist_to_assigned[i] = best;
            if (res.assignments[i] != best_c) {
                res.assignments[i] = best_c;
                changed.store(true, std::memory_order_relaxed);
            }
        });
        double objective = 0;
        for (int i = 0; i < n; ++i) objective += dist_to_assigned[i];
        res.inertia_history.push_back(objective);
        if (!changed.load() && iter > 0) break;

        // update
        std::fill(counts.begin(), counts.end(), 0);
        std::fill(sums.begin(), sums.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            const int c = res.assignments[i];
            ++counts[c];
            const float* v = bank.row(i);
            double* s = &sums[static_cast<size_t>(c) * dim];
            for (int j = 0; j < dim; ++j) s[j] += v[j];
        }
        for (int c = 0; c < K; ++c) {
            if (counts[c] == 0) {
                // reseed to the farthest point
                int far_i = 0;
                double far_d = -1;
                for (int i = 0; i < n; ++i)
                    if (dist_to_assigned[i] > far_d) {
                        far_d = dist_to_assigned[i];
                        far_i = i;
                    }
                std::copy(bank.row(far_i), bank.row(far_i) + dim,
                          res.centroids.begin() + static_cast<size_t>(c) * dim);
                dist_to_assigned[far_i] = 0;  // avoid reseeding twice to the same point
            } else {
                float* ctr = &res.centroids[static_cast<size_t>(c) * dim];
                for (int j = 0; j < dim; ++j)
                    ctr[j] = static_cast<float>(sums[static_cast<size_t>(c) * dim + j] / counts[c]);
            }
        }
    }

    res.inertia = 0;
    for (int i = 0; i < n; ++i)
        res.inertia += sq_dist(bank.row(i), &res.centroids[static_cast<size_t>(res.assignments[i]) * dim], dim);
    return res;
}


namespace {

// cyclic Jacobi eigendecomposition of a symmetric matrix; eigenvalues land
// on the diagonal, V's columns are the eigenvectors
void jacobi_eigen(std::vector<double>& a, std::vector<double>& v, int n) {
    v.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;
    auto A = [&](int r, int c) -> double& { return a[static_cast<size_t>(r) * n + c]; };
    auto V = [&](int r, int c) -> double& { return v[static_cast<size_t>(r) * n + c]; };

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = A(i, p), aiq = A(i, q);
                    A(i, p) = c * aip - s * aiq;
                    A(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = A(p, i), aqi = A(q, i);
                    A(p, i) = c * api - s * aqi;
                    A(q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = V(i, p), viq = V(i, q);
                    V(i, p) = c * vip - s * viq;
                    V(i, q) = s * vip + c * viq;
                }
            }
        }
    }
}

}  // namespace

PcaResult pca_filters(const FilterBank& bank, int d) {
    const int dim = bank.dim();
    if (d < 1 || d > std::min(bank.n, dim))
        throw FormatError("pca_filters: need 1 <= d <= min(n, k*k)");

    PcaResult res;
    res.mean.assign(dim, 0.f);
    {
        std::vector<double> acc(dim, 0.0);
        for (int i = 0; i < bank.n; ++i) {
            const float* v = bank.row(i);
            for (int j = 0; j < dim; ++j) acc[j] += v[j];
        }
        for (int j = 0; j < dim; ++j) res.mean[j] = static_cast<float>(acc[j] / bank.n);
    }

    if (bank.n == 1) {
        res.degenerate = true;
        res.components.assign(1, std::vector<float>(dim, 0.f));
        res.components[0][0] = 1.f;  // arbitrary unit vector, zero energy
        res.energy.assign(1, 0.0);
        return res;
    }

    // covariance (biased); dim x dim
    std::vector<double> cov(static_cast<size_t>(dim) * dim, 0.0);
    for (int i = 0; i < bank.n; ++i) {
        const float* v = bank.row(i);
        for (int r = 0; r < dim; ++r) {
            const double vr = v[r] - res.mean[r];
            for (int c = r; c < dim; ++c)
                cov[static_cast<size_t>(r) * dim + c] += vr * (v[c] - res.mean[c]);
        }
    }
    double trace = 0;
    for (int r = 0; r < dim; ++r) {
        for (int c = r; c < dim; ++c) {
            cov[static_cast<size_t>(r) * dim + c] /= bank.n;
            cov[static_cast<size_t>(c) * dim + r] = cov[static_cast<size_t>(r) * dim + c];
        }
        trace += cov[static_cast<size_t>(r) * dim + r];
    }

    std::vector<double> vecs;
    jacobi_eigen(cov, vecs, dim);

    std::vector<std::pair<double, int>> order(dim);
    for (int i = 0; i < dim; ++i)
        order[i] = {cov[static_cast<size_t>(i) * dim + i], i};
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    for (int c = 0; c < d; ++c) {
        const int col = order[c].second;
        std::vector<float> comp(dim);
        for (int r = 0; r < dim; ++r)
            comp[r] = static_cast<float>(vecs[static_cast<size_t>(r) * dim + col]);
        res.components.push_back(std::move(comp));
        const double lam = std::max(0.0, order[c].first);
        res.energy.push_back(trace > 0 ? lam / trace : 0.0);
    }
    return res;
}

namespace {

// hue in [0, 360) -> rgb at full value with the given saturation
void hsv_to_rgb(double h, double s, float& r, float& g, float& b) {
    const double c = s;  // v = 1
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double rr = 0, gg = 0, bb = 0;
    if (hp < 1) { rr = c; gg = x; }
    else if (hp < 2) { rr = x; gg = c; }
    else if (hp < 3) { gg = c; bb = x; }
    else if (hp < 4) { gg = x; bb = c; }
    else if (hp < 5) { rr = x; bb = c; }
    else { rr = c; bb = x; }
    const double m = 1.0 - c;
    r = static_cast<float>(rr + m);
    g = static_cast<float>(gg + m);
    b = static_cast<float>(bb + m);
}

void wheel_color(double vx, double vy, double max_mag, float& r, float& g, float& b) {
    const double mag = std::sqrt(vx * vx + vy * vy);
    double sat = max_mag > 0 ? mag / max_mag : 0.0;
    if (sat > 1.0) sat = 1.0;
    double ang = std::atan2(vy, vx) * 180.0 / 3.14159265358979323846;
    if (ang < 0) ang += 360.0;
    hsv_to_rgb(ang, sat, r, g, b);
}

}  // namespace

Image colorize_flow(const FlowField& field, double max_mag) {
    Image out(3, field.height, field.width);
    const int64_t pixels = static_cast<int64_t>(field.height) * field.width;
    for (int64_t p = 0; p < pixels; ++p) {
        float r, g, b;
        wheel_color(field.vx[p], field.vy[p], max_mag, r, g, b);
        out.data[p] = r;
        out.data[pixels + p] = g;
        out.data[2 * pixels + p] = b;
    }
    return out;
}

Image colorize_assignments(const std::vector<int>& assignments, int height, int width,
                           const KmeansResult& km) {
    if (assignments.size() != static_cast<size_t>(height) * width)
        throw FormatError("colorize_assignments: assignment count != pixels");

    // 2-D PCA embedding of the centroids
    const int dim = static_cast<int>(km.centroids.size()) / std::max(1, km.K);

    std::vector<double> mean(dim, 0.0);
    for (int i = 0; i < km.K; ++i)
        for (int j = 0; j < dim; ++j) mean[j] += km.centroids[static_cast<size_t>(i) * dim + j];
    for (auto& v : mean) v /= std::max(1, km.K);

    // power iteration for the top two directions keeps this light; fall back
    // to axes for tiny K
    auto project = [&](const std::vector<double>& dir, int i) {
        double s = 0;
        for (int j = 0; j < dim; ++j)
            s += (km.centroids[static_cast<size_t>(i) * dim + j] - mean[j]) * dir[j];
        return s;
    };

    std::vector<std::vector<double>> dirs;
    {
        std::vector<std::vector<double>> centered(km.K, std::vector<double>(dim));
        for (int i = 0; i < km.K; ++i)
            for (int j = 0; j < dim; ++j)
                centered[i][j] = km.centroids[static_cast<size_t>(i) * dim + j] - mean[j];
        Rng rng(17);
        for (int c = 0; c < 2; ++c) {
            std::vector<double> dir(dim);
            for (auto& v : dir) v = rng.normal();
            for (int it = 0; it < 100; ++it) {
                // project out previous direction
                for (const auto& prev : dirs) {
                    double dot = 0;
                    for (int j = 0; j < dim; ++j) dot += dir[j] * prev[j];
                    for (int j = 0; j < dim; ++j) dir[j] -= dot * prev[j];
                }
                std::vector<double> next(dim, 0.0);
                for (int i = 0; i < km.K; ++i) {
                    double dot = 0;
                    for (int j = 0; j < dim; ++j) dot += centered[i][j] * dir[j];
                    for (int j = 0; j < dim; ++j) next[j] += dot * centered[i][j];
                }
                double norm = 0;
                for (double v : next) norm += v * v;
                norm = std::sqrt(norm);
                if (norm < 1e-30) break;
                for (auto& v : next) v /= norm;
                dir = std::move(next);
            }
            dirs.push_back(std::move(dir));
        }
    }

    std::vector<double> ex(km.K), ey(km.K);
    double max_mag = 0;
    for (int i = 0; i < km.K; ++i) {
        ex[i] = project(dirs[0], i);
        ey[i] = project(dirs[1], i);
        max_mag = std::max(max_mag, std::sqrt(ex[i] * ex[i] + ey[i] * ey[i]));
    }

    Image out(3, height, width);
    const int64_t pixels = static_cast<int64_t>(height) * width;
    for (int64_t p = 0; p < pixels; ++p) {
        const int c = assignments[p];
        float r, g, b;
        wheel_color(ex[c], ey[c], max_mag, r, g, b);
        out.data[p] = r;
        out.data[pixels + p] = g;
        out.data[2 * pixels + p] = b;
    }
    return out;
}

LoadingMaps loading_factor_maps(const FilterFlow& flow, const PcaResult& pca, int top) {
    const int kk = flow.taps();
    if (static_cast<int>(pca.mean.size()) != kk)
        throw FormatError("loading_factor_maps: PCA dimension != k*k");
    if (top < 1 || top > static_cast<int>(pca.components.size()))
        throw FormatError("loading_factor_maps: bad component count");

    LoadingMaps out;
    const int64_t pixels = static_cast<int64_t>(flow.height) * flow.width;
    for (int c = 0; c < top; ++c) {
        const auto& comp = pca.components[c];
        std::vector<float> raw(pixels);
        float lo = std::numeric_limits<float>::max(), hi = -lo;
        for (int64_t p = 0; p < pixels; ++p) {
            const float* f = flow.coeffs.data() + p * kk;
            double dot = 0;
            for (int j = 0; j < kk; ++j) dot += (f[j] - pca.mean[j]) * comp[j];
            raw[p] = static_cast<float>(dot);
            lo = std::min(lo, raw[p]);
            hi = std::max(hi, raw[p]);
        }
        Image map(1, flow.height, flow.width);
        const float span = hi - lo;
        for (int64_t p = 0; p < pixels; ++p)
            map.data[p] = span > 0 ? (raw[p] - lo) / span : 0.5f;
        out.maps.push_back(std::move(map));
        out.ranges.emplace_back(lo, hi);
    }
    return out;
}

}  // namespace pff
