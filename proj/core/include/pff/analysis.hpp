#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pff/filter_flow.hpp"
#include "pff/image.hpp"

namespace pff {

// A pile of per-pixel filters gathered from one or more flows, one
// k*k-dimensional vector per row.
struct FilterBank {
    int k = 0;
    int n = 0;
    std::vector<float> vecs;  // n * k*k, row-major

    int dim() const { return k * k; }
    const float* row(int i) const { return vecs.data() + static_cast<size_t>(i) * dim(); }
};

// All filters of a flow, optionally reservoir-subsampled to max_n (seeded).
FilterBank gather_filters(const FilterFlow& flow, int max_n = 0, uint64_t seed = 0);
FilterBank gather_filters(const std::vector<FilterFlow>& flows, int max_n = 0, uint64_t seed = 0);

struct KmeansResult {
    int K = 0;
    std::vector<float> centroids;  // K * dim
    std::vector<int> assignments;  // n
    double inertia = 0.0;          // sum of squared distances to assigned centroid
    int iterations = 0;
    // objective after each assignment step; non-increasing by construction
    std::vector<double> inertia_history;
};

// k-means++ seeding then Lloyd iterations until the assignment fixpoint or
// 300 rounds; empty clusters reseed to the farthest point; nearest-centroid
// ties break toward the lowest index. Deterministic under a fixed seed.
KmeansResult kmeans_filters(const FilterBank& bank, int K, uint64_t seed);

struct PcaResult {
    std::vector<float> mean;                  // dim
    std::vector<std::vector<float>> components;  // d orthonormal vectors
    std::vector<double> energy;               // fraction of variance, non-increasing
    bool degenerate = false;                  // n == 1: no variance at all
};

// Mean-centered covariance eigendecomposition (cyclic Jacobi), top d
// components; energy fractions are eigenvalue / trace.
PcaResult pca_filters(const FilterBank& bank, int d);

// Optical-flow color wheel: hue = atan2(vy, vx), saturation = |v|/max_mag
// clamped to 1, value = 1. Zero motion renders white.
Image colorize_flow(const FlowField& field, double max_mag);

// Centroid-mode colorization: each pixel's assigned centroid is mapped
// through a 2-D PCA embedding of the centroids onto the same wheel.
Image colorize_assignments(const std::vector<int>& assignments, int height, int width,
                           const KmeansResult& km);

struct LoadingMaps {
    std::vector<Image> maps;                       // min-max normalized per map
    std::vector<std::pair<float, float>> ranges;   // raw (lo, hi) per map
};

// Per-pixel projections of (filter - mean) onto each of the top components.
LoadingMaps loading_factor_maps(const FilterFlow& flow, const PcaResult& pca, int top);

}  // namespace pff
