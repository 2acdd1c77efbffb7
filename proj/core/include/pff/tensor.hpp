#pragma once

#include <cstdint>
#include <vector>

namespace pff {

// Dense NCHW tensor. Float is the production scalar; the double
// instantiation backs finite-difference gradient checks.
template <class T>
struct TensorT {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    TensorT() = default;
    TensorT(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

    T& at(int in, int ic, int iy, int ix) {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    T at(int in, int ic, int iy, int ix) const {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }

    T* plane(int in, int ic) { return v.data() + (static_cast<size_t>(in) * c + ic) * h * w; }
    const T* plane(int in, int ic) const {
        return v.data() + (static_cast<size_t>(in) * c + ic) * h * w;
    }

    size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }
    bool same_shape(const TensorT& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

using Tensor = TensorT<float>;

}  // namespace pff
