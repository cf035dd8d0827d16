#include "bisr/image.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "bisr/error.hpp"

namespace bisr {

namespace {

void check_image_shape(int c, int h, int w) {
    if (c < 1 || h < 1 || w < 1) {
        throw DimensionError("image shape must be positive, got " + std::to_string(c) + "x" +
                             std::to_string(h) + "x" + std::to_string(w));
    }
}

void check_kernel_size(int k) {
    if (k < 1 || k % 2 == 0) {
        throw DimensionError("kernel size must be odd and positive, got " + std::to_string(k));
    }
}

}  // namespace

Image::Image(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
    check_image_shape(channels, height, width);
    data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Image::Image(int channels, int height, int width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    check_image_shape(channels, height, width);
    if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
        throw DimensionError("image data length does not match C*h*w");
    }
}

bool Image::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Kernel::Kernel(int size, double fill) : size_(size) {
    check_kernel_size(size);
    data_.assign(static_cast<std::size_t>(size) * size, fill);
}

Kernel::Kernel(int size, std::vector<double> data) : size_(size), data_(std::move(data)) {
    check_kernel_size(size);
    if (data_.size() != static_cast<std::size_t>(size) * size) {
        throw DimensionError("kernel data length does not match k*k");
    }
}

Kernel Kernel::delta(int size) {
    Kernel k(size, 0.0);
    k.at(k.radius(), k.radius()) = 1.0;
    return k;
}

Kernel Kernel::flat(int size) {
    return Kernel(size, 1.0 / (static_cast<double>(size) * size));
}

double Kernel::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double dot(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw DimensionError("dot: shape mismatch");
    return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

double squared_norm(const Image& a) { return dot(a, a); }

}  // namespace bisr
