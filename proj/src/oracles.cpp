#include "bisr/oracles.hpp"

#include <Eigen/Sparse>

#include <string>
#include <vector>

#include "bisr/error.hpp"
#include "bisr/memory.hpp"

namespace bisr::oracles {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

int wrap(int i, int n) { return ((i % n) + n) % n; }

void guard(int h, int w, int k) {
    const double entries = static_cast<double>(h) * w * k * k;
    if (entries > kMaxPatchEntries) {
        throw SizeGuardError("oracle refuses h*w*k^2 = " + std::to_string(entries) + " > 1e8");
    }
}

void check_args(const Image& x, int k, int s) {
    if (s < 1 || k < 1 || k % 2 == 0) throw ParameterError("oracle: need odd k >= 1 and s >= 1");
    if (x.height() % s || x.width() % s) throw DimensionError("oracle: image not divisible by scale");
    if (k > std::min(x.height(), x.width())) throw DimensionError("oracle: kernel larger than image");
    guard(x.height(), x.width(), k);
}

// Row-selection matrix of the stride-s grid at offset (0, 0).
SparseMatrix selection_matrix(int h, int w, int s) {
    const int hs = h / s, ws = w / s;
    SparseMatrix m(static_cast<Eigen::Index>(hs) * ws, static_cast<Eigen::Index>(h) * w);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(hs) * ws);
    for (int u = 0; u < hs; ++u)
        for (int v = 0; v < ws; ++v) t.emplace_back(u * ws + v, (u * s) * w + v * s, 1.0);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

// Matrix of circular cross-correlation with kern on an h x w grid.
SparseMatrix correlation_matrix(const Kernel& kern, int h, int w) {
    const int k = kern.size(), r = (k - 1) / 2;
    SparseMatrix m(static_cast<Eigen::Index>(h) * w, static_cast<Eigen::Index>(h) * w);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(h) * w * k * k);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    t.emplace_back(y * w + x, wrap(y + a - r, h) * w + wrap(x + b - r, w), kern.at(a, b));
    m.setFromTriplets(t.begin(), t.end());  // duplicates (k > h) are summed
    return m;
}

// Explicit circular im2col matrix of one channel, column-major (h*w) x k^2.
memory::TrackedVector<double> patch_matrix(const Image& x, int c, int k) {
    const int h = x.height(), w = x.width(), r = (k - 1) / 2;
    const std::size_t rows = static_cast<std::size_t>(h) * w;
    memory::TrackedVector<double> m(rows * k * k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            double* col = m.data() + static_cast<std::size_t>(a * k + b) * rows;
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx)
                    col[static_cast<std::size_t>(y) * w + xx] = x.at(c, wrap(y + a - r, h), wrap(xx + b - r, w));
        }
    return m;
}

}  // namespace

Image conv_direct(const Image& x, const Kernel& kern) {
    const int h = x.height(), w = x.width(), k = kern.size(), r = (k - 1) / 2;
    if (k > std::min(h, w)) throw DimensionError("conv_direct: kernel larger than image");
    Image out(x.channels(), h, w);
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                double acc = 0.0;
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b) acc += kern.at(a, b) * x.at(c, wrap(y + a - r, h), wrap(xx + b - r, w));
                out.at(c, y, xx) = acc;
            }
    return out;
}

std::size_t im2col_storage_scalars(const Image& x, int k) {
    return static_cast<std::size_t>(x.channels()) * x.height() * x.width() * k * k;
}

Eigen::MatrixXd gram_bruteforce(const Image& x, int k, int s) {
    check_args(x, k, s);
    const int h = x.height(), w = x.width(), n = k * k;
    const SparseMatrix ms = selection_matrix(h, w, s);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    // All channels' im2col matrices are materialized together, as the plain
    // least-squares formulation would.
    std::vector<memory::TrackedVector<double>> patches;
    for (int c = 0; c < x.channels(); ++c) patches.push_back(patch_matrix(x, c, k));
    for (const auto& p : patches) {
        const Eigen::Map<const Eigen::MatrixXd> xc(p.data(), static_cast<Eigen::Index>(h) * w, n);
        const Eigen::MatrixXd sampled = ms * xc;
        a.noalias() += sampled.transpose() * sampled;
    }
    return a;
}

Eigen::VectorXd rhs_bruteforce(const Image& x, const Image& y, int k, int s) {
    check_args(x, k, s);
    const int h = x.height(), w = x.width(), n = k * k;
    if (y.channels() != x.channels() || y.height() * s != h || y.width() * s != w) {
        throw DimensionError("rhs_bruteforce: observation shape mismatch");
    }
    const SparseMatrix ms = selection_matrix(h, w, s);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < x.channels(); ++c) {
        const auto p = patch_matrix(x, c, k);
        const Eigen::Map<const Eigen::MatrixXd> xc(p.data(), static_cast<Eigen::Index>(h) * w, n);
        const Eigen::Map<const Eigen::VectorXd> yc(y.plane(c).data(), static_cast<Eigen::Index>(y.plane_size()));
        const Eigen::VectorXd lifted = ms.transpose() * yc;
        b.noalias() += xc.transpose() * lifted;
    }
    return b;
}

double gram_entry_loop(const Image& x, int k, int s, int p, int q) {
    const int h = x.height(), w = x.width(), r = (k - 1) / 2;
    const int pa = p / k - r, pb = p % k - r, qa = q / k - r, qb = q % k - r;
    double acc = 0.0;
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < h; y += s)
            for (int xx = 0; xx < w; xx += s)
                acc += x.at(c, wrap(y + pa, h), wrap(xx + pb, w)) * x.at(c, wrap(y + qa, h), wrap(xx + qb, w));
    return acc;
}

Image solve_x_oracle(const Image& y, const Kernel& kern, const Image& x_prev, double alpha_x, int s) {
    if (!(alpha_x > 0.0)) throw ParameterError("solve_x_oracle: alpha_X must be > 0");
    const int h = x_prev.height(), w = x_prev.width();
    if (y.channels() != x_prev.channels() || y.height() * s != h || y.width() * s != w) {
        throw DimensionError("solve_x_oracle: shape mismatch");
    }
    guard(h, w, kern.size());
    const Eigen::Index n = static_cast<Eigen::Index>(h) * w;
    const SparseMatrix op = selection_matrix(h, w, s) * correlation_matrix(kern, h, w);
    const SparseMatrix opt = op.transpose();

    Image out(x_prev.channels(), h, w);
    for (int c = 0; c < x_prev.channels(); ++c) {
        const Eigen::Map<const Eigen::VectorXd> yc(y.plane(c).data(), static_cast<Eigen::Index>(y.plane_size()));
        const Eigen::Map<const Eigen::VectorXd> xp(x_prev.plane(c).data(), n);
        const Eigen::VectorXd rhs = opt * yc + alpha_x * xp;
        Eigen::VectorXd sol;
        if (n <= 4096) {
            Eigen::MatrixXd normal = Eigen::MatrixXd(opt * op);
            normal.diagonal().array() += alpha_x;
            sol = normal.llt().solve(rhs);
        } else {
            // Plain CG on (op^T op + alpha I).
            sol = xp;
            Eigen::VectorXd res = rhs - (opt * (op * sol) + alpha_x * sol);
            Eigen::VectorXd dir = res;
            double rr = res.squaredNorm();
            const double stop = 1e-20 * rhs.squaredNorm();
            for (Eigen::Index it = 0; it < 10 * n && rr > stop; ++it) {
                const Eigen::VectorXd adir = opt * (op * dir) + alpha_x * dir;
                const double step = rr / dir.dot(adir);
                sol += step * dir;
                res -= step * adir;
                const double rr_next = res.squaredNorm();
                dir = res + (rr_next / rr) * dir;
                rr = rr_next;
            }
        }
        std::copy(sol.data(), sol.data() + n, out.plane(c).begin());
    }
    return out;
}

}  // namespace bisr::oracles
