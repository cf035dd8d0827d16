#include "bisr/checks.hpp"

#include <chrono>
#include <cmath>

#include "bisr/kstream.hpp"
#include "bisr/memory.hpp"
#include "bisr/oracles.hpp"
#include "bisr/rng.hpp"
#include "bisr/xstream.hpp"

namespace bisr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Image random_image(int c, int h, int w, Rng& rng) {
    Image img(c, h, w);
    for (double& v : img.data()) v = rng.uniform();
    return img;
}

Kernel random_unit_kernel(int k, Rng& rng) {
    Kernel kern(k);
    for (double& v : kern.data()) v = rng.uniform(0.05, 1.0);
    const double sum = kern.sum();
    for (double& v : kern.data()) v /= sum;
    return kern;
}

double image_norm(const Image& x) { return std::sqrt(squared_norm(x)); }

std::string cell_name(int c, int h, int w, int k, int s) {
    return "C=" + std::to_string(c) + " h=" + std::to_string(h) + " w=" + std::to_string(w) +
           " k=" + std::to_string(k) + " s=" + std::to_string(s);
}

void track_worst(double err, const std::string& cell, double& worst, std::string& worst_cell) {
    if (!(err <= worst)) {  // NaN counts as worst
        worst = err;
        worst_cell = cell;
    }
}

}  // namespace

GridReport run_gram_grid(const GramGridSpec& spec) {
    const auto t0 = Clock::now();
    GridReport rep;
    std::uint64_t cell_index = 0;
    for (int c : spec.channels)
        for (int h : spec.heights)
            for (int w : spec.widths)
                for (int k : spec.kernels)
                    for (int s : spec.scales) {
                        if (k > std::min(h, w) || h % s != 0 || w % s != 0) continue;
                        ++rep.cells;
                        const std::string cell = cell_name(c, h, w, k, s);
                        Rng rng(spec.seed, cell_index++);
                        for (int t = 0; t < spec.trials; ++t) {
                            const Image x = random_image(c, h, w, rng);
                            const Image y = random_image(c, h / s, w / s, rng);
                            Eigen::MatrixXd a = build_gram_fast(x, k, s);
                            Eigen::VectorXd b = build_rhs_fast(x, y, k, s);
                            if (spec.perturb) {
                                a(0, 0) += 1e-6 * a.norm();
                                b(0) += 1e-6 * b.norm();
                            }
                            const Eigen::MatrixXd a_ref = oracles::gram_bruteforce(x, k, s);
                            const Eigen::VectorXd b_ref = oracles::rhs_bruteforce(x, y, k, s);
                            track_worst((a - a_ref).norm() / a_ref.norm(), cell, rep.worst_primary,
                                        rep.worst_primary_cell);
                            track_worst((b - b_ref).norm() / b_ref.norm(), cell, rep.worst_secondary,
                                        rep.worst_secondary_cell);
                            ++rep.trials;
                        }
                    }
    rep.passed = rep.trials > 0 && rep.worst_primary <= spec.tolerance && rep.worst_secondary <= spec.tolerance;
    rep.seconds = seconds_since(t0);
    return rep;
}

GridReport run_x_grid(const XGridSpec& spec) {
    const auto t0 = Clock::now();
    GridReport rep;
    std::uint64_t cell_index = 0;
    for (int c : spec.channels)
        for (int n : spec.sizes)
            for (int k : spec.kernels)
                for (int s : spec.scales) {
                    if (k > n || n % s != 0) continue;
                    ++rep.cells;
                    const std::string cell = cell_name(c, n, n, k, s);
                    Rng rng(spec.seed, cell_index++);
                    for (int t = 0; t < spec.trials; ++t) {
                        const Image x_prev = random_image(c, n, n, rng);
                        const Image y = random_image(c, n / s, n / s, rng);
                        const Kernel kern = random_unit_kernel(k, rng);
                        const double alpha = std::pow(10.0, rng.uniform(-3.0, 0.0));
                        Image x = solve_x_data(y, kern, x_prev, alpha, s);
                        if (spec.perturb) x.data()[0] += 1e-4 * image_norm(x);
                        const Image x_ref = oracles::solve_x_oracle(y, kern, x_prev, alpha, s);
                        Image diff = x;
                        for (std::size_t i = 0; i < diff.size(); ++i) diff.data()[i] -= x_ref.data()[i];
                        track_worst(image_norm(diff) / image_norm(x_ref), cell, rep.worst_primary,
                                    rep.worst_primary_cell);
                        const Image zero(c, n, n);
                        const double scale = image_norm(x_objective_gradient(y, kern, zero, x_prev, alpha, s));
                        const double grad = image_norm(x_objective_gradient(y, kern, x, x_prev, alpha, s));
                        track_worst(grad / scale, cell, rep.worst_secondary, rep.worst_secondary_cell);
                        ++rep.trials;
                    }
                }
    rep.passed =
        rep.trials > 0 && rep.worst_primary <= spec.tolerance && rep.worst_secondary <= spec.grad_tolerance;
    rep.seconds = seconds_since(t0);
    return rep;
}

BenchRow predict_gram(int height, int width, int k, int s) {
    BenchRow row;
    row.height = height;
    row.width = width;
    row.k = k;
    row.s = s;
    row.measured = false;
    row.im2col_scalars = static_cast<std::size_t>(height) * width * k * k;
    row.law_prediction = static_cast<double>(height) * width / (static_cast<double>(k) * k);
    row.bound_scalars = static_cast<double>(s) * s * height * width + std::pow(static_cast<double>(k), 4);
    return row;
}

BenchRow bench_gram(int height, int width, int k, int s, std::uint64_t seed) {
    BenchRow row = predict_gram(height, width, k, s);
    row.measured = true;
    Rng rng(seed);
    const Image x = random_image(1, height, width, rng);
    {
        memory::PeakScope scope;
        const auto t0 = Clock::now();
        const Eigen::MatrixXd a = build_gram_fast(x, k, s);
        row.fast_seconds = seconds_since(t0);
        row.fast_peak_scalars = scope.peak_scalars();
    }
    {
        memory::PeakScope scope;
        const auto t0 = Clock::now();
        const Eigen::MatrixXd a = oracles::gram_bruteforce(x, k, s);
        row.brute_seconds = seconds_since(t0);
        row.brute_peak_scalars = scope.peak_scalars();
    }
    row.im2col_scalars = oracles::im2col_storage_scalars(x, k);
    row.ratio = row.fast_peak_scalars > 0
                    ? static_cast<double>(row.im2col_scalars) / static_cast<double>(row.fast_peak_scalars)
                    : 0.0;
    return row;
}

}  // namespace bisr
