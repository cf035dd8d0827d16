#include "bisr/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "bisr/error.hpp"

namespace bisr {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::vector<double> gaussian_window() {
    std::vector<double> w(kWindow * kWindow);
    const int r = kWindow / 2;
    double sum = 0.0;
    for (int y = 0; y < kWindow; ++y)
        for (int x = 0; x < kWindow; ++x) {
            const double d2 = (y - r) * (y - r) + (x - r) * (x - r);
            sum += w[y * kWindow + x] = std::exp(-d2 / (2.0 * kWindowSigma * kWindowSigma));
        }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace

Image prepare_for_metrics(const Image& x, const MetricOptions& opt) {
    Image src = x;
    if (opt.luma && x.channels() == 3) {
        Image y(1, x.height(), x.width());
        for (int r = 0; r < x.height(); ++r)
            for (int c = 0; c < x.width(); ++c)
                y.at(0, r, c) = 0.299 * x.at(0, r, c) + 0.587 * x.at(1, r, c) + 0.114 * x.at(2, r, c);
        src = std::move(y);
    }
    if (opt.shave <= 0) return src;
    const int h = src.height() - 2 * opt.shave, w = src.width() - 2 * opt.shave;
    if (h < 1 || w < 1) throw DimensionError("metrics: shave removes the whole image");
    Image out(src.channels(), h, w);
    for (int c = 0; c < src.channels(); ++c)
        for (int r = 0; r < h; ++r)
            for (int col = 0; col < w; ++col) out.at(c, r, col) = src.at(c, r + opt.shave, col + opt.shave);
    return out;
}

double psnr(const Image& a, const Image& b, const MetricOptions& opt) {
    if (!a.same_shape(b)) throw DimensionError("psnr: shape mismatch");
    const Image pa = prepare_for_metrics(a, opt), pb = prepare_for_metrics(b, opt);
    double se = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = pa.data()[i] - pb.data()[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(pa.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse / (opt.peak * opt.peak));
}

double ssim(const Image& a, const Image& b, const MetricOptions& opt) {
    if (!a.same_shape(b)) throw DimensionError("ssim: shape mismatch");
    const Image pa = prepare_for_metrics(a, opt), pb = prepare_for_metrics(b, opt);
    const int h = pa.height(), w = pa.width();
    if (h < kWindow || w < kWindow) throw DimensionError("ssim: image smaller than the 11x11 window");
    const double c1 = (0.01 * opt.peak) * (0.01 * opt.peak);
    const double c2 = (0.03 * opt.peak) * (0.03 * opt.peak);
    const auto win = gaussian_window();

    double total = 0.0;
    for (int c = 0; c < pa.channels(); ++c) {
        double channel_sum = 0.0;
        for (int y = 0; y + kWindow <= h; ++y)
            for (int x = 0; x + kWindow <= w; ++x) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int u = 0; u < kWindow; ++u)
                    for (int v = 0; v < kWindow; ++v) {
                        const double g = win[u * kWindow + v];
                        const double va = pa.at(c, y + u, x + v), vb = pb.at(c, y + u, x + v);
                        ma += g * va;
                        mb += g * vb;
                        saa += g * va * va;
                        sbb += g * vb * vb;
                        sab += g * va * vb;
                    }
                const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
                channel_sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                               ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            }
        total += channel_sum / (static_cast<double>(h - kWindow + 1) * (w - kWindow + 1));
    }
    return total / pa.channels();
}

double kernel_psnr(const Kernel& estimate, const Kernel& truth) {
    if (estimate.size() != truth.size()) throw DimensionError("kernel_psnr: size mismatch");
    double se = 0.0;
    for (std::size_t i = 0; i < truth.taps(); ++i) {
        const double d = estimate.data()[i] - truth.data()[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(truth.taps());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

}  // namespace bisr
