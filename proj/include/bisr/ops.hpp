#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bisr/image.hpp"

namespace bisr {

/// Sampling phase of the stride-s grid: keeps rows == y (mod s), cols == x (mod s).
struct Offset {
    int y = 0;
    int x = 0;
};

/// Sliding cross-correlation with periodic boundary extension, per channel:
///   out(c, y, x) = sum_{a,b} kern(a, b) * in(c, y + a - r, x + b - r)   (indices mod h, w)
/// The kernel is not flipped. Every module uses this convention for the
/// degradation model.
Image conv2d_circular(const Image& x, const Kernel& kern);

/// Adjoint of conv2d_circular: correlation with the point-reflected kernel.
Image conv2d_circular_adjoint(const Image& x, const Kernel& kern);

Image downsample(const Image& x, int s, Offset offset = {});

/// Places y on the stride-s grid at `offset`, zeros elsewhere. Adjoint of downsample.
Image zero_upsample(const Image& y, int s, Offset offset = {});

/// C x h x w  ->  C*s*s x h/s x w/s. Output channel c*s*s + i*s + j holds the
/// sub-grid with row phase i and column phase j.
Image pixel_unshuffle(const Image& x, int s);

/// Inverse of pixel_unshuffle.
Image pixel_shuffle(const Image& x, int s);

/// Circularly padded im2col: one (h*w) x (a*a) matrix per channel, row p lists
/// the a x a patch centered on pixel p in row-major patch order.
std::vector<Eigen::MatrixXd> im2col(const Image& x, int block);

/// Keys cubic interpolation (a = -0.5) with replicated edges. Output pixel (Y, X)
/// samples the input at (Y/s, X/s), so every s-th output sample is an input knot.
Image bicubic_upsample(const Image& y, int s);

Image clip(const Image& x, double lo, double hi);

}  // namespace bisr
