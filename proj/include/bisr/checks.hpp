#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace bisr {

/// Fast Gram system vs the explicit im2col oracle over a parameter grid. Cells
/// with k > min(h, w) or h, w not divisible by s are skipped.
struct GramGridSpec {
    std::vector<int> heights{8, 12, 16, 24, 32};
    std::vector<int> widths{8, 12, 16, 24, 32};
    std::vector<int> kernels{1, 3, 5, 7, 11};
    std::vector<int> scales{1, 2, 3, 4};
    std::vector<int> channels{1, 3};
    int trials = 100;
    std::uint64_t seed = 1;
    double tolerance = 1e-9;
    bool perturb = false;  // corrupt the fast result; the check must then fail
};

/// Fast image step vs the operator-matrix oracle, plus the first-order
/// condition at the returned point: ||grad|| <= grad_tolerance * ||grad at 0||.
struct XGridSpec {
    std::vector<int> sizes{8, 12, 16};
    std::vector<int> kernels{3, 5};
    std::vector<int> scales{1, 2};
    std::vector<int> channels{1, 3};
    int trials = 50;
    std::uint64_t seed = 2;
    double tolerance = 1e-6;
    double grad_tolerance = 1e-6;
    bool perturb = false;
};

struct GridReport {
    std::size_t cells = 0;
    std::size_t trials = 0;
    double worst_primary = 0.0;    // Gram: A error; image step: solution error
    double worst_secondary = 0.0;  // Gram: b error; image step: gradient ratio
    std::string worst_primary_cell;
    std::string worst_secondary_cell;
    bool passed = false;
    double seconds = 0.0;
};

GridReport run_gram_grid(const GramGridSpec& spec);
GridReport run_x_grid(const XGridSpec& spec);

/// One row of the storage benchmark.
struct BenchRow {
    int height = 0;
    int width = 0;
    int k = 0;
    int s = 0;
    bool measured = true;
    std::size_t im2col_scalars = 0;    // explicit patch matrix of the oracle
    std::size_t brute_peak_scalars = 0;
    std::size_t fast_peak_scalars = 0;
    double ratio = 0.0;             // im2col_scalars / fast_peak_scalars
    double law_prediction = 0.0;    // h*w / k^2
    double bound_scalars = 0.0;     // s^2*h*w + k^4
    double fast_seconds = 0.0;
    double brute_seconds = 0.0;
};

/// Measures peak tracked allocation of both Gram paths on a random image.
BenchRow bench_gram(int height, int width, int k, int s, std::uint64_t seed);
/// Law-only row for sizes too large to run the oracle.
BenchRow predict_gram(int height, int width, int k, int s);

}  // namespace bisr
