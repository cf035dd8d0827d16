#pragma once

#include <span>

#include "bisr/image.hpp"

namespace bisr {

/// Unnormalized forward DFT of an h x w real plane.
Spectrum fft2(std::span<const double> plane, int height, int width);

/// Inverse DFT scaled by 1/(h*w), so ifft2(fft2(x)) == x. Returns the real part.
std::vector<double> ifft2(const Spectrum& spectrum);

/// Transfer function of conv2d_circular with `kern` on an h x w grid: the
/// point-reflected kernel is embedded with its center at (0, 0) and transformed,
/// so that ifft2(psf2otf(kern) * fft2(x)) == conv2d_circular(x, kern).
Spectrum psf2otf(const Kernel& kern, int height, int width);

}  // namespace bisr
