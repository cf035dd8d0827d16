#pragma once

#include <Eigen/Dense>

#include "bisr/image.hpp"

namespace bisr {

/// Reduced normal equations of the kernel data term, summed over channels:
///   A = sum_c Xc^T Ms^T Ms Xc,   b = sum_c Xc^T Ms^T vec(y_c),
/// where Xc is the circular im2col matrix of channel c and Ms keeps the
/// stride-s grid at offset (0, 0). Indices follow vec(K) = row-major taps.
struct GramSystem {
    int k = 0;
    int s = 1;
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
};

/// A without materializing any (h*w) x k^2 matrix. Peak scratch is one
/// pixel-unshuffled copy of a channel, one (2k-1)^2 correlation map and A.
/// All scratch goes through memory::TrackingAllocator.
Eigen::MatrixXd build_gram_fast(const Image& x, int k, int s);

/// b by correlating x against the zero-upsampled observation.
Eigen::VectorXd build_rhs_fast(const Image& x, const Image& y, int k, int s);

GramSystem build_gram_system(const Image& x, const Image& y, int k, int s);

struct KSolveInfo {
    double ridge = 0.0;   // conditioning floor actually added to the diagonal
    double rcond = 0.0;   // reciprocal condition estimate of the factorized matrix
    int escalations = 0;
};

/// Relative conditioning floor: ridge = kRidgeRelative * trace(A) / k^2.
inline constexpr double kRidgeRelative = 1e-10;

/// Closed-form kernel data step:
///   argmin_K 1/2 ||(K * x) downsampled - y||^2 + alpha_k/2 ||K - k_prev||^2
/// solved as (A + (alpha_k + ridge) I) k = b + alpha_k vec(k_prev) by Cholesky.
/// The ridge is escalated x100 up to twice before SingularSystemError.
Kernel solve_k_data(const Image& y, const Kernel& k_prev, const Image& x, double alpha_k,
                    KSolveInfo* info = nullptr);

/// Same step from an already assembled Gram system.
Kernel solve_k_system(const GramSystem& system, const Kernel& k_prev, double alpha_k,
                      KSolveInfo* info = nullptr);

/// Kernel sub-objective value 1/2 ||(K * x) down - y||^2 + alpha_k/2 ||K - k_prev||^2.
double k_objective(const Image& y, const Kernel& kern, const Image& x, const Kernel& k_prev, double alpha_k);

}  // namespace bisr
