#include "bisr/xstream.hpp"

#include <cmath>
#include <string>

#include "bisr/error.hpp"
#include "bisr/fft.hpp"
#include "bisr/ops.hpp"

namespace bisr {

namespace {

void check_x_args(const Image& y, const Kernel& kern, const Image& x_prev, int s) {
    if (s < 1) throw ParameterError("solve_x: scale must be >= 1");
    if (y.channels() != x_prev.channels() || y.height() * s != x_prev.height() || y.width() * s != x_prev.width()) {
        throw DimensionError("solve_x: observation " + std::to_string(y.height()) + "x" + std::to_string(y.width()) +
                             " incompatible with estimate " + std::to_string(x_prev.height()) + "x" +
                             std::to_string(x_prev.width()) + " at scale " + std::to_string(s));
    }
    if (kern.size() > std::min(x_prev.height(), x_prev.width())) {
        throw DimensionError("solve_x: kernel larger than image");
    }
}

// (1/s^2) * sum over the s x s aliases of each low-resolution frequency.
Spectrum block_mean(const Spectrum& z, int s) {
    const int hs = z.height / s, ws = z.width / s;
    Spectrum out(hs, ws);
    const double inv = 1.0 / (s * s);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            for (int u = 0; u < hs; ++u)
                for (int v = 0; v < ws; ++v) out.at(u, v) += z.at(u + i * hs, v + j * ws);
    for (auto& c : out.data) c *= inv;
    return out;
}

}  // namespace

Image solve_x_data(const Image& y, const Kernel& kern, const Image& x_prev, double alpha_x, int s) {
    if (!(alpha_x > 0.0) || !std::isfinite(alpha_x)) throw ParameterError("solve_x: alpha_X must be finite and > 0");
    check_x_args(y, kern, x_prev, s);
    const int h = x_prev.height(), w = x_prev.width(), hs = h / s, ws = w / s;
    const Spectrum otf = psf2otf(kern, h, w);

    Spectrum gain(h, w);  // |H|^2
    for (std::size_t i = 0; i < gain.data.size(); ++i) gain.data[i] = std::norm(otf.data[i]);
    const Spectrum gain_lr = block_mean(gain, s);

    const Image y_up = zero_upsample(y, s);
    Image out(x_prev.channels(), h, w);
    for (int c = 0; c < x_prev.channels(); ++c) {
        const Spectrum fy = fft2(y_up.plane(c), h, w);
        const Spectrum fx = fft2(x_prev.plane(c), h, w);
        // Right-hand side of the normal equations: H^* D^T y + alpha x_prev.
        Spectrum rhs(h, w);
        Spectrum blurred(h, w);
        for (std::size_t i = 0; i < rhs.data.size(); ++i) {
            rhs.data[i] = std::conj(otf.data[i]) * fy.data[i] + alpha_x * fx.data[i];
            blurred.data[i] = otf.data[i] * rhs.data[i];
        }
        Spectrum ratio = block_mean(blurred, s);
        for (std::size_t i = 0; i < ratio.data.size(); ++i) ratio.data[i] /= alpha_x + gain_lr.data[i].real();

        Spectrum sol(h, w);
        for (int u = 0; u < h; ++u)
            for (int v = 0; v < w; ++v)
                sol.at(u, v) = (rhs.at(u, v) - std::conj(otf.at(u, v)) * ratio.at(u % hs, v % ws)) / alpha_x;
        const auto plane = ifft2(sol);
        std::copy(plane.begin(), plane.end(), out.plane(c).begin());
    }
    return out;
}

double x_objective(const Image& y, const Kernel& kern, const Image& x, const Image& x_prev, double alpha_x, int s) {
    const Image pred = downsample(conv2d_circular(x, kern), s);
    double data = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - y.data()[i];
        data += d * d;
    }
    double prox = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.data()[i] - x_prev.data()[i];
        prox += d * d;
    }
    return 0.5 * data + 0.5 * alpha_x * prox;
}

Image x_objective_gradient(const Image& y, const Kernel& kern, const Image& x, const Image& x_prev, double alpha_x,
                           int s) {
    Image resid = downsample(conv2d_circular(x, kern), s);
    for (std::size_t i = 0; i < resid.size(); ++i) resid.data()[i] -= y.data()[i];
    Image grad = conv2d_circular_adjoint(zero_upsample(resid, s), kern);
    for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += alpha_x * (x.data()[i] - x_prev.data()[i]);
    return grad;
}

}  // namespace bisr
