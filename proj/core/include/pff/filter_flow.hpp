#pragma once

#include <string>
#include <vector>

#include "pff/image.hpp"

namespace pff {

enum class FlowConstraint : uint32_t { free = 0, simplex = 1 };

// The spatially-varying linear filter: one k x k kernel per output pixel.
// coeffs[(y*width + x)*k*k + o] with o = (dy+r)*k + (dx+r) enumerating
// offsets row-major from (-r,-r) to (r,r), r = (k-1)/2.
//
// Under the simplex constraint every pixel's taps are non-negative and sum
// to one, so the operator conserves local brightness.
struct FilterFlow {
    int height = 0;
    int width = 0;
    int k = 0;
    FlowConstraint constraint = FlowConstraint::free;
    std::vector<float> coeffs;

    FilterFlow() = default;
    FilterFlow(int h, int w, int k_, FlowConstraint c)
        : height(h), width(w), k(k_), constraint(c),
          coeffs(static_cast<size_t>(h) * w * k_ * k_, 0.f) {}

    int radius() const { return (k - 1) / 2; }
    int taps() const { return k * k; }
    float* pixel(int y, int x) {
        return coeffs.data() + (static_cast<size_t>(y) * width + x) * taps();
    }
    const float* pixel(int y, int x) const {
        return coeffs.data() + (static_cast<size_t>(y) * width + x) * taps();
    }
};

// Per-pixel displacement summary of a flow (first moment of the filter).
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> vx, vy;
    // set when the source filters were free-form and |weights| had to be
    // normalized into a distribution before taking the moment
    bool from_free = false;
};

// Every pixel holds the delta filter at offset (0,0).
FilterFlow identity_flow(int h, int w, int k);

// Per-pixel softmax over the k*k taps (max-subtracted). Input layout must
// match FilterFlow; the result carries the simplex constraint.
FilterFlow normalize_simplex(const FilterFlow& raw);

// out(y,x) = sum over offsets of coeffs * img(y+dy, x+dx), replicate padding,
// the same filter applied to every color channel.
Image apply_flow(const FilterFlow& flow, const Image& img);

// Reference oracle: materializes each row of the (HW)x(HW) operator matrix
// and multiplies the vectorized image. Guarded to images <= 64x64.
Image apply_flow_bruteforce(const FilterFlow& flow, const Image& img);

// One dense operator-matrix row (length HW) for output pixel (y, x);
// exposed for tests that check row sums.
std::vector<double> bruteforce_matrix_row(const FilterFlow& flow, int y, int x);

// Expected flow vector per pixel: (vx,vy)(i,j) = sum_o w_o * (dx,dy).
// Free-constraint flows are first normalized by |w| / sum|w|.
FlowField expected_flow(const FilterFlow& flow);

// "PFF1" container: magic, then little-endian u32 {height,width,k,constraint},
// then height*width*k*k little-endian f32 coefficients. Bit-exact round trip.
void write_flow(const FilterFlow& flow, const std::string& path);
FilterFlow read_flow(const std::string& path);

}  // namespace pff
