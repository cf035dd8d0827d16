#pragma once

#include <Eigen/Dense>

#include "bisr/image.hpp"

// Reference implementations that define correctness for the fast paths. None of
// them call into ops, fft, kstream or xstream.
namespace bisr::oracles {

/// Largest h*w*k^2 the explicit im2col oracles accept.
inline constexpr double kMaxPatchEntries = 1e8;

/// Naive circular cross-correlation with explicit index wrapping.
Image conv_direct(const Image& x, const Kernel& kern);

/// Sum over channels of Xc^T Ms^T Ms Xc with Xc the explicit circular im2col
/// matrix and Ms an explicit sparse row-selection matrix (offset (0, 0)).
Eigen::MatrixXd gram_bruteforce(const Image& x, int k, int s);

/// Sum over channels of Xc^T Ms^T vec(y_c).
Eigen::VectorXd rhs_bruteforce(const Image& x, const Image& y, int k, int s);

/// Scalars held by the explicit im2col matrices of gram_bruteforce (C*h*w*k^2).
std::size_t im2col_storage_scalars(const Image& x, int k);

/// A[p][q] by a plain loop over sampled pixels; independent of gram_bruteforce.
double gram_entry_loop(const Image& x, int k, int s, int p, int q);

/// Minimizer of the image sub-objective from explicit operator matrices: a
/// dense Cholesky solve of the normal equations when h*w <= 4096, conjugate
/// gradients on the sparse operators (relative residual 1e-10) otherwise.
Image solve_x_oracle(const Image& y, const Kernel& kern, const Image& x_prev, double alpha_x, int s);

}  // namespace bisr::oracles
