#pragma once

#include <memory>
#include <string>

#include "bisr/image.hpp"
#include "bisr/network.hpp"

namespace bisr {

/// Proximal operator on the kernel estimate, weighted by beta_K.
class KernelPrior {
public:
    virtual ~KernelPrior() = default;
    virtual Kernel apply(const Kernel& k_in, double beta_k) const = 0;
    virtual std::string name() const = 0;
};

/// Proximal operator on the image estimate, weighted by beta_X.
class ImagePrior {
public:
    virtual ~ImagePrior() = default;
    virtual Image apply(const Image& x_in, double beta_x) const = 0;
    virtual std::string name() const = 0;
};

/// Clamp negatives to zero, optionally renormalize to unit sum. A kernel whose
/// clamped mass is <= 1e-12 becomes the flat kernel.
Kernel classical_kernel_prior(const Kernel& k_in, double beta_k, bool unit_sum = true);

/// argmin_X tau/2 ||grad X||^2 + beta_x/2 ||X - x_in||^2 with periodic forward
/// differences, solved in the Fourier domain.
Image classical_image_prior(const Image& x_in, double beta_x, double tau = 1.0);

class ProjectionKernelPrior final : public KernelPrior {
public:
    explicit ProjectionKernelPrior(bool unit_sum = true) : unit_sum_(unit_sum) {}
    Kernel apply(const Kernel& k_in, double beta_k) const override;
    std::string name() const override { return "classical-projection"; }

private:
    bool unit_sum_;
};

class TikhonovImagePrior final : public ImagePrior {
public:
    explicit TikhonovImagePrior(double tau = 1.0) : tau_(tau) {}
    Image apply(const Image& x_in, double beta_x) const override;
    std::string name() const override { return "classical-tikhonov"; }
    double tau() const noexcept { return tau_; }

private:
    double tau_;
};

/// Kernel prior backed by a NET_K (or custom single-output) network. beta is
/// appended as a constant channel when the network declares a beta input.
class NetworkKernelPrior final : public KernelPrior {
public:
    explicit NetworkKernelPrior(std::shared_ptr<const Network> net);
    Kernel apply(const Kernel& k_in, double beta_k) const override;
    std::string name() const override { return "network:" + to_string(net_->architecture()); }

private:
    std::shared_ptr<const Network> net_;
};

class NetworkImagePrior final : public ImagePrior {
public:
    explicit NetworkImagePrior(std::shared_ptr<const Network> net);
    Image apply(const Image& x_in, double beta_x) const override;
    std::string name() const override { return "network:" + to_string(net_->architecture()); }

private:
    std::shared_ptr<const Network> net_;
};

}  // namespace bisr
