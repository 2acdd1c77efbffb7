#pragma once

#include "pff/image.hpp"

namespace pff {

// Separable bicubic resampling with the Keys kernel (a = -0.5).
//
// Output coordinates map to input coordinates by x = (u + 0.5)/scale - 0.5,
// weights are renormalized to sum 1 and source indices clamp at the borders,
// which matches the common reference resizer. When `antialias` is set and the
// axis shrinks, the kernel is stretched by 1/scale so the support covers one
// output sample worth of input.
Image resize_bicubic(const Image& img, double scale, bool antialias);

// Same, with explicit output dimensions.
Image resize_bicubic(const Image& img, int out_h, int out_w, bool antialias);

}  // namespace pff
