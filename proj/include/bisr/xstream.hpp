#pragma once

#include "bisr/image.hpp"

namespace bisr {

/// Exact minimizer of
///   1/2 ||(kern * X) downsampled_s - y||^2 + alpha_x/2 ||X - x_prev||^2
/// under periodic boundaries, per channel, in the Fourier domain. For s > 1 the
/// downsampling couples the s x s aliased frequencies; the system is reduced by
/// averaging the spectrum over its s x s distinct blocks.
Image solve_x_data(const Image& y, const Kernel& kern, const Image& x_prev, double alpha_x, int s);

/// Image sub-objective value at x.
double x_objective(const Image& y, const Kernel& kern, const Image& x, const Image& x_prev, double alpha_x, int s);

/// Gradient of the image sub-objective at x (used for optimality checks).
Image x_objective_gradient(const Image& y, const Kernel& kern, const Image& x, const Image& x_prev, double alpha_x,
                           int s);

}  // namespace bisr
