#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bisr/image.hpp"

namespace bisr {

struct DegradationSpec {
    Kernel kernel;
    int scale = 2;
    double sigma255 = 0.0;  // noise std on the 0-255 scale
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Y = downsample(conv2d_circular(x, K), s) + n with n ~ N(0, (sigma255/255)^2)
/// drawn from Rng(seed, stream). No clipping.
Image degrade(const Image& x_hr, const DegradationSpec& spec);

/// Rotated anisotropic Gaussian sampled on the k x k grid around the center tap,
/// normalized to unit sum. sigma_x acts along the rotated column axis.
Kernel gen_gaussian_kernel(int k, double sigma_x, double sigma_y, double theta);

/// Nonnegative unit-sum random kernel: an i.i.d. exponential field, blurred
/// (periodically, on the k x k grid) by a Gaussian of width `smoothness`,
/// shaped by a random anisotropic Gaussian envelope. smoothness == 0 skips the blur.
Kernel gen_random_kernel(int k, std::uint64_t seed, double smoothness);

/// The envelope gen_random_kernel applies for a given seed.
Kernel random_kernel_envelope(int k, std::uint64_t seed);

enum class KernelFamily { GaussIso, GaussAniso, RandomNonparametric };

KernelFamily parse_kernel_family(const std::string& name);
std::string to_string(KernelFamily family);

struct KernelPoolSpec {
    KernelFamily family = KernelFamily::GaussIso;
    int k = 11;
    int count = 1;
    std::uint64_t seed = 0;
    double sigma_min = 0.7;
    double sigma_max = 2.5;
    double theta_max = 3.141592653589793;
    double smoothness = 1.0;
};

/// Kernel i of the pool depends only on (spec, i).
std::vector<Kernel> gen_kernel_pool(const KernelPoolSpec& spec);

/// Piecewise-smooth test image with sharp edges: shaded background, random
/// rectangles and ellipses, and a faint oriented texture. Values in [0, 1].
Image gen_synthetic_image(int channels, int height, int width, std::uint64_t seed);

// Kernel text format: first line k, then k lines of k decimals, then optional
// comment lines starting with '#'.
void write_kernel(std::ostream& os, const Kernel& kern, const std::vector<std::string>& comments = {});
Kernel read_kernel(std::istream& is);
void save_kernel(const std::string& path, const Kernel& kern, const std::vector<std::string>& comments = {});
Kernel load_kernel(const std::string& path);

}  // namespace bisr
