#pragma once

#include "bisr/image.hpp"

namespace bisr {

struct MetricOptions {
    double peak = 1.0;
    int shave = 0;      // border pixels dropped on every side before comparing
    bool luma = false;  // compare ITU-R BT.601 luma of 3-channel images
};

/// -10 log10(MSE / peak^2); +infinity when the images are identical.
double psnr(const Image& a, const Image& b, const MetricOptions& opt = {});

/// Mean local SSIM over all valid 11 x 11 windows (Gaussian weights, sigma 1.5),
/// averaged over channels.
double ssim(const Image& a, const Image& b, const MetricOptions& opt = {});

/// Peak-1 PSNR of raw kernel taps; +infinity when equal.
double kernel_psnr(const Kernel& estimate, const Kernel& truth);

/// Applies shave and luma conversion.
Image prepare_for_metrics(const Image& x, const MetricOptions& opt);

}  // namespace bisr
