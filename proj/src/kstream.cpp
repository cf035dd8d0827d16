#include "bisr/kstream.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bisr/error.hpp"
#include "bisr/memory.hpp"
#include "bisr/ops.hpp"

namespace bisr {

namespace {

using memory::TrackedVector;

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int floor_mod(int a, int b) { return ((a % b) + b) % b; }

void check_gram_args(const Image& x, int k, int s) {
    if (s < 1) throw ParameterError("gram: scale factor must be >= 1");
    if (k < 1 || k % 2 == 0) throw DimensionError("gram: kernel size must be odd, got " + std::to_string(k));
    if (x.height() % s != 0 || x.width() % s != 0) {
        throw DimensionError("gram: image " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                             " not divisible by scale " + std::to_string(s));
    }
    if (k > std::min(x.height(), x.width())) {
        throw DimensionError("gram: kernel size " + std::to_string(k) + " exceeds image size");
    }
}

// Pixel-unshuffled view of one channel: phase (i, j) occupies the contiguous
// block (i*s + j) of size hs*ws, same layout as pixel_unshuffle.
struct Unshuffled {
    int s, hs, ws;
    TrackedVector<double> data;

    Unshuffled(std::span<const double> plane, int h, int w, int scale)
        : s(scale), hs(h / scale), ws(w / scale), data(static_cast<std::size_t>(h) * w) {
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) {
                double* dst = phase(i, j);
                for (int u = 0; u < hs; ++u)
                    for (int v = 0; v < ws; ++v)
                        dst[static_cast<std::size_t>(u) * ws + v] =
                            plane[static_cast<std::size_t>(u * s + i) * w + (v * s + j)];
            }
    }

    double* phase(int i, int j) { return data.data() + static_cast<std::size_t>(i * s + j) * hs * ws; }
    const double* phase(int i, int j) const {
        return data.data() + static_cast<std::size_t>(i * s + j) * hs * ws;
    }
};

// sum_{u,v} lhs(u, v) * rhs((u + sy) mod hs, (v + sx) mod ws) over hs x ws planes.
double shifted_dot(const double* lhs, const double* rhs, int hs, int ws, int sy, int sx) {
    sy = floor_mod(sy, hs);
    sx = floor_mod(sx, ws);
    const int head = ws - sx;  // columns before the wrap
    double acc = 0.0;
    for (int u = 0; u < hs; ++u) {
        const double* l = lhs + static_cast<std::size_t>(u) * ws;
        const double* r = rhs + static_cast<std::size_t>((u + sy) % hs) * ws;
        double row = 0.0;
        for (int v = 0; v < head; ++v) row += l[v] * r[v + sx];
        for (int v = head; v < ws; ++v) row += l[v] * r[v - head];
        acc += row;
    }
    return acc;
}

// Correlation of the dilation pattern with phase `base` against the image at a
// full-resolution lag, expressed on the unshuffled planes: the partner phase
// is (base + lag) mod s and the sub-grid shift floor((base + lag) / s).
double pattern_correlation(const Unshuffled& u, const double* lhs, int base_y, int base_x, int lag_y, int lag_x) {
    const int ty = base_y + lag_y, tx = base_x + lag_x;
    const double* rhs = u.phase(floor_mod(ty, u.s), floor_mod(tx, u.s));
    return shifted_dot(lhs, rhs, u.hs, u.ws, floor_div(ty, u.s), floor_div(tx, u.s));
}

void accumulate_channel_gram(std::span<const double> plane, int h, int w, int k, int s, TrackedVector<double>& a) {
    const int r = (k - 1) / 2, n = k * k, span = 2 * k - 1;
    const Unshuffled u(plane, h, w, s);
    TrackedVector<double> merged(static_cast<std::size_t>(span) * span);

    for (int pi = 0; pi < s; ++pi)
        for (int pj = 0; pj < s; ++pj) {
            // Rows p = (ta, tb) of A whose sample phase is (pi, pj).
            bool any = false;
            for (int ta = 0; ta < k && !any; ++ta)
                for (int tb = 0; tb < k && !any; ++tb)
                    any = floor_mod(ta - r, s) == pi && floor_mod(tb - r, s) == pj;
            if (!any) continue;

            // Merged map for this pattern: merged[m][n] holds the correlation at
            // lag (k-1-m, k-1-n), so the k x k block of merged at (ta, tb),
            // read backwards, is row (ta, tb) of A.
            const double* lhs = u.phase(pi, pj);
            for (int m = 0; m < span; ++m)
                for (int q = 0; q < span; ++q)
                    merged[static_cast<std::size_t>(m) * span + q] =
                        pattern_correlation(u, lhs, pi, pj, k - 1 - m, k - 1 - q);

            for (int ta = 0; ta < k; ++ta) {
                if (floor_mod(ta - r, s) != pi) continue;
                for (int tb = 0; tb < k; ++tb) {
                    if (floor_mod(tb - r, s) != pj) continue;
                    double* row = a.data() + static_cast<std::size_t>(ta * k + tb) * n;
                    // im2col block at (ta, tb), row-flipped.
                    for (int bm = 0; bm < k; ++bm)
                        for (int bn = 0; bn < k; ++bn) {
                            const int col = (k - 1 - bm) * k + (k - 1 - bn);
                            row[col] += merged[static_cast<std::size_t>(ta + bm) * span + (tb + bn)];
                        }
                }
            }
        }
}

}  // namespace

Eigen::MatrixXd build_gram_fast(const Image& x, int k, int s) {
    check_gram_args(x, k, s);
    const int n = k * k;
    TrackedVector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int c = 0; c < x.channels(); ++c) accumulate_channel_gram(x.plane(c), x.height(), x.width(), k, s, a);

    Eigen::MatrixXd out(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            out(p, q) = 0.5 * (a[static_cast<std::size_t>(p) * n + q] + a[static_cast<std::size_t>(q) * n + p]);
    return out;
}

Eigen::VectorXd build_rhs_fast(const Image& x, const Image& y, int k, int s) {
    check_gram_args(x, k, s);
    if (y.channels() != x.channels() || y.height() * s != x.height() || y.width() * s != x.width()) {
        throw DimensionError("rhs: observation shape does not match image / scale");
    }
    const int r = (k - 1) / 2;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k * k);
    for (int c = 0; c < x.channels(); ++c) {
        const Unshuffled u(x.plane(c), x.height(), x.width(), s);
        // The zero-upsampled observation has a single nonzero phase, (0, 0),
        // which is y itself; only that group contributes to the correlation.
        const double* obs = y.plane(c).data();
        for (int ta = 0; ta < k; ++ta)
            for (int tb = 0; tb < k; ++tb)
                b(ta * k + tb) += pattern_correlation(u, obs, 0, 0, ta - r, tb - r);
    }
    return b;
}

GramSystem build_gram_system(const Image& x, const Image& y, int k, int s) {
    GramSystem sys;
    sys.k = k;
    sys.s = s;
    sys.a = build_gram_fast(x, k, s);
    sys.b = build_rhs_fast(x, y, k, s);
    return sys;
}

Kernel solve_k_system(const GramSystem& system, const Kernel& k_prev, double alpha_k, KSolveInfo* info) {
    if (!(alpha_k >= 0.0) || !std::isfinite(alpha_k)) throw ParameterError("solve_k: alpha_K must be finite and >= 0");
    const int k = system.k, n = k * k;
    if (k_prev.size() != k) throw DimensionError("solve_k: previous kernel size mismatch");

    const Eigen::Map<const Eigen::VectorXd> prev(k_prev.data().data(), n);
    const Eigen::VectorXd rhs = system.b + alpha_k * prev;
    const double trace = system.a.trace();
    double ridge = kRidgeRelative * (trace > 0.0 ? trace : 1.0) / n;

    double rcond = 0.0;
    for (int attempt = 0; attempt <= 2; ++attempt) {
        Eigen::MatrixXd m = system.a;
        m.diagonal().array() += alpha_k + ridge;
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() == Eigen::Success) {
            rcond = llt.rcond();
            if (rcond > 0.0 && std::isfinite(rcond)) {
                const Eigen::VectorXd sol = llt.solve(rhs);
                if (sol.allFinite()) {
                    if (info) *info = {ridge, rcond, attempt};
                    return Kernel(k, std::vector<double>(sol.data(), sol.data() + n));
                }
            }
        }
        if (attempt < 2) ridge *= 100.0;
    }
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    throw SingularSystemError("solve_k: Gram system not positive definite after ridge escalation (condition ~ " +
                                  std::to_string(cond) + ")",
                              cond);
}

Kernel solve_k_data(const Image& y, const Kernel& k_prev, const Image& x, double alpha_k, KSolveInfo* info) {
    if (y.channels() != x.channels()) throw DimensionError("solve_k: channel mismatch");
    if (y.height() < 1 || x.height() % y.height() != 0) throw DimensionError("solve_k: incompatible shapes");
    const int s = x.height() / y.height();
    return solve_k_system(build_gram_system(x, y, k_prev.size(), s), k_prev, alpha_k, info);
}

double k_objective(const Image& y, const Kernel& kern, const Image& x, const Kernel& k_prev, double alpha_k) {
    const int s = x.height() / y.height();
    const Image pred = downsample(conv2d_circular(x, kern), s);
    double data = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - y.data()[i];
        data += d * d;
    }
    double prox = 0.0;
    for (std::size_t i = 0; i < kern.taps(); ++i) {
        const double d = kern.data()[i] - k_prev.data()[i];
        prox += d * d;
    }
    return 0.5 * data + 0.5 * alpha_k * prox;
}

}  // namespace bisr
