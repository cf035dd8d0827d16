#include "bisr/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bisr/error.hpp"
#include "bisr/fft.hpp"

namespace bisr {

Kernel classical_kernel_prior(const Kernel& k_in, double /*beta_k*/, bool unit_sum) {
    Kernel out = k_in;
    for (double& v : out.data()) v = std::max(v, 0.0);
    if (!unit_sum) return out;
    const double mass = out.sum();
    if (mass <= 1e-12) return Kernel::flat(k_in.size());
    for (double& v : out.data()) v /= mass;
    return out;
}

Image classical_image_prior(const Image& x_in, double beta_x, double tau) {
    if (!(beta_x > 0.0) || !std::isfinite(beta_x)) throw ParameterError("image prior: beta_X must be > 0");
    if (tau < 0.0) throw ParameterError("image prior: tau must be >= 0");
    const int h = x_in.height(), w = x_in.width();
    // Eigenvalues of the periodic 5-point Laplacian.
    std::vector<double> lap(static_cast<std::size_t>(h) * w);
    for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v)
            lap[static_cast<std::size_t>(u) * w + v] = 4.0 - 2.0 * std::cos(2.0 * std::numbers::pi * u / h) -
                                                        2.0 * std::cos(2.0 * std::numbers::pi * v / w);
    Image out(x_in.channels(), h, w);
    for (int c = 0; c < x_in.channels(); ++c) {
        Spectrum f = fft2(x_in.plane(c), h, w);
        // DC stays untouched so the mean is preserved exactly.
        for (std::size_t i = 1; i < f.data.size(); ++i) f.data[i] *= beta_x / (beta_x + tau * lap[i]);
        const auto plane = ifft2(f);
        std::copy(plane.begin(), plane.end(), out.plane(c).begin());
    }
    return out;
}

Kernel ProjectionKernelPrior::apply(const Kernel& k_in, double beta_k) const {
    return classical_kernel_prior(k_in, beta_k, unit_sum_);
}

Image TikhonovImagePrior::apply(const Image& x_in, double beta_x) const {
    return classical_image_prior(x_in, beta_x, tau_);
}

NetworkKernelPrior::NetworkKernelPrior(std::shared_ptr<const Network> net) : net_(std::move(net)) {
    if (!net_) throw ParameterError("kernel prior: null network");
    if (net_->input_channels() != (net_->beta_input() ? 2 : 1) || net_->output_channels() != 1) {
        throw FormatError("kernel prior network must map 1 kernel channel (+beta) to 1 channel");
    }
}

Kernel NetworkKernelPrior::apply(const Kernel& k_in, double beta_k) const {
    const int k = k_in.size();
    Tensor in(net_->input_channels(), k, k);
    std::copy(k_in.data().begin(), k_in.data().end(), in.data.begin());
    if (net_->beta_input()) std::fill(in.data.begin() + k * k, in.data.end(), beta_k);
    const Tensor out = net_->forward(in);
    if (out.channels != 1 || out.height != k || out.width != k) {
        throw DimensionError("kernel prior network changed the kernel shape");
    }
    return Kernel(k, out.data);
}

NetworkImagePrior::NetworkImagePrior(std::shared_ptr<const Network> net) : net_(std::move(net)) {
    if (!net_) throw ParameterError("image prior: null network");
}

Image NetworkImagePrior::apply(const Image& x_in, double beta_x) const {
    const int extra = net_->beta_input() ? 1 : 0;
    if (x_in.channels() + extra != net_->input_channels()) {
        throw DimensionError("image prior network expects " + std::to_string(net_->input_channels() - extra) +
                             " image channels");
    }
    Tensor in(net_->input_channels(), x_in.height(), x_in.width());
    std::copy(x_in.data().begin(), x_in.data().end(), in.data.begin());
    if (extra) std::fill(in.data.begin() + static_cast<std::ptrdiff_t>(x_in.size()), in.data.end(), beta_x);
    Tensor out = net_->forward(in);
    if (out.channels != x_in.channels() || out.height != x_in.height() || out.width != x_in.width()) {
        throw DimensionError("image prior network changed the image shape");
    }
    return Image(out.channels, out.height, out.width, std::move(out.data));
}

}  // namespace bisr
