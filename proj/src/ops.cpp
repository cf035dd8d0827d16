#include "bisr/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "bisr/error.hpp"

namespace bisr {

namespace {

// Row/column lookup tables for circular indexing: table[i + r] = (i mod n) for
// i in [-r, n + r).
std::vector<int> wrap_table(int n, int r) {
    std::vector<int> t(static_cast<std::size_t>(n + 2 * r));
    for (int i = -r; i < n + r; ++i) t[i + r] = ((i % n) + n) % n;
    return t;
}

void check_kernel_fits(const Image& x, const Kernel& kern, const char* op) {
    if (kern.size() > std::min(x.height(), x.width())) {
        throw DimensionError(std::string(op) + ": kernel size " + std::to_string(kern.size()) +
                             " exceeds image " + std::to_string(x.height()) + "x" +
                             std::to_string(x.width()));
    }
}

void check_scale(int s, const char* op) {
    if (s < 1) throw ParameterError(std::string(op) + ": scale factor must be >= 1");
}

double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

// Separable tap positions/weights for one output coordinate.
struct CubicTaps {
    std::array<int, 4> index;
    std::array<double, 4> weight;
};

std::vector<CubicTaps> cubic_taps(int n_in, int s) {
    std::vector<CubicTaps> taps(static_cast<std::size_t>(n_in) * s);
    for (int o = 0; o < n_in * s; ++o) {
        const int base = o / s;
        const double frac = static_cast<double>(o % s) / s;
        CubicTaps& t = taps[o];
        for (int m = 0; m < 4; ++m) {
            const int i = base - 1 + m;
            t.index[m] = std::clamp(i, 0, n_in - 1);
            t.weight[m] = cubic_weight(frac - (m - 1));
        }
    }
    return taps;
}

}  // namespace

Image conv2d_circular(const Image& x, const Kernel& kern) {
    check_kernel_fits(x, kern, "conv2d_circular");
    const int h = x.height(), w = x.width(), k = kern.size(), r = kern.radius();
    const auto rows = wrap_table(h, r);
    const auto cols = wrap_table(w, r);
    Image out(x.channels(), h, w);
    for (int c = 0; c < x.channels(); ++c) {
        const auto in = x.plane(c);
        auto dst = out.plane(c);
        for (int y = 0; y < h; ++y) {
            double* orow = dst.data() + static_cast<std::size_t>(y) * w;
            for (int a = 0; a < k; ++a) {
                const double* irow = in.data() + static_cast<std::size_t>(rows[y + a]) * w;
                for (int b = 0; b < k; ++b) {
                    const double kv = kern.at(a, b);
                    if (kv == 0.0) continue;
                    for (int xx = 0; xx < w; ++xx) orow[xx] += kv * irow[cols[xx + b]];
                }
            }
        }
    }
    return out;
}

Image conv2d_circular_adjoint(const Image& x, const Kernel& kern) {
    const int k = kern.size();
    Kernel flipped(k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) flipped.at(a, b) = kern.at(k - 1 - a, k - 1 - b);
    return conv2d_circular(x, flipped);
}

Image downsample(const Image& x, int s, Offset offset) {
    check_scale(s, "downsample");
    if (x.height() % s != 0 || x.width() % s != 0) {
        throw DimensionError("downsample: image " + std::to_string(x.height()) + "x" +
                             std::to_string(x.width()) + " not divisible by " + std::to_string(s));
    }
    if (offset.y < 0 || offset.y >= s || offset.x < 0 || offset.x >= s) {
        throw ParameterError("downsample: offset must lie in [0, s)");
    }
    const int ho = x.height() / s, wo = x.width() / s;
    Image out(x.channels(), ho, wo);
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < ho; ++y)
            for (int xx = 0; xx < wo; ++xx) out.at(c, y, xx) = x.at(c, y * s + offset.y, xx * s + offset.x);
    return out;
}

Image zero_upsample(const Image& y, int s, Offset offset) {
    check_scale(s, "zero_upsample");
    if (offset.y < 0 || offset.y >= s || offset.x < 0 || offset.x >= s) {
        throw ParameterError("zero_upsample: offset must lie in [0, s)");
    }
    Image out(y.channels(), y.height() * s, y.width() * s);
    for (int c = 0; c < y.channels(); ++c)
        for (int yy = 0; yy < y.height(); ++yy)
            for (int xx = 0; xx < y.width(); ++xx)
                out.at(c, yy * s + offset.y, xx * s + offset.x) = y.at(c, yy, xx);
    return out;
}

Image pixel_unshuffle(const Image& x, int s) {
    check_scale(s, "pixel_unshuffle");
    if (x.height() % s != 0 || x.width() % s != 0) {
        throw DimensionError("pixel_unshuffle: spatial size not divisible by scale");
    }
    const int ho = x.height() / s, wo = x.width() / s;
    Image out(x.channels() * s * s, ho, wo);
    for (int c = 0; c < x.channels(); ++c)
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) {
                const int oc = c * s * s + i * s + j;
                for (int y = 0; y < ho; ++y)
                    for (int xx = 0; xx < wo; ++xx) out.at(oc, y, xx) = x.at(c, y * s + i, xx * s + j);
            }
    return out;
}

Image pixel_shuffle(const Image& x, int s) {
    check_scale(s, "pixel_shuffle");
    if (x.channels() % (s * s) != 0) {
        throw DimensionError("pixel_shuffle: channel count not divisible by s^2");
    }
    const int co = x.channels() / (s * s);
    Image out(co, x.height() * s, x.width() * s);
    for (int c = 0; c < co; ++c)
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) {
                const int ic = c * s * s + i * s + j;
                for (int y = 0; y < x.height(); ++y)
                    for (int xx = 0; xx < x.width(); ++xx) out.at(c, y * s + i, xx * s + j) = x.at(ic, y, xx);
            }
    return out;
}

std::vector<Eigen::MatrixXd> im2col(const Image& x, int block) {
    if (block < 1 || block % 2 == 0) throw ParameterError("im2col: block size must be odd");
    const int h = x.height(), w = x.width(), r = (block - 1) / 2;
    const auto rows = wrap_table(h, r);
    const auto cols = wrap_table(w, r);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(x.channels());
    for (int c = 0; c < x.channels(); ++c) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(h) * w, block * block);
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                const Eigen::Index p = static_cast<Eigen::Index>(y) * w + xx;
                for (int a = 0; a < block; ++a)
                    for (int b = 0; b < block; ++b) m(p, a * block + b) = x.at(c, rows[y + a], cols[xx + b]);
            }
        out.push_back(std::move(m));
    }
    return out;
}

Image bicubic_upsample(const Image& y, int s) {
    if (s < 1 || s > 4) throw ParameterError("bicubic_upsample: scale must be in {1,2,3,4}");
    if (s == 1) return y;
    const int h = y.height(), w = y.width();
    const auto ty = cubic_taps(h, s);
    const auto tx = cubic_taps(w, s);
    Image rows_done(y.channels(), h, w * s);
    for (int c = 0; c < y.channels(); ++c)
        for (int yy = 0; yy < h; ++yy)
            for (int xo = 0; xo < w * s; ++xo) {
                double acc = 0.0;
                for (int m = 0; m < 4; ++m) acc += tx[xo].weight[m] * y.at(c, yy, tx[xo].index[m]);
                rows_done.at(c, yy, xo) = acc;
            }
    Image out(y.channels(), h * s, w * s);
    for (int c = 0; c < y.channels(); ++c)
        for (int yo = 0; yo < h * s; ++yo)
            for (int xo = 0; xo < w * s; ++xo) {
                double acc = 0.0;
                for (int m = 0; m < 4; ++m) acc += ty[yo].weight[m] * rows_done.at(c, ty[yo].index[m], xo);
                out.at(c, yo, xo) = acc;
            }
    return out;
}

Image clip(const Image& x, double lo, double hi) {
    Image out = x;
    for (double& v : out.data()) v = std::clamp(v, lo, hi);
    return out;
}

}  // namespace bisr
