#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace bisr {

/// Planar multi-channel raster in unit scale (1.0 = white). Channel-major,
/// row-major within a channel.
class Image {
public:
    Image() = default;
    Image(int channels, int height, int width, double fill = 0.0);
    Image(int channels, int height, int width, std::vector<double> data);

    int channels() const noexcept { return channels_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t plane_size() const noexcept {
        return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
    }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
    double at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

    std::span<double> plane(int c) noexcept {
        return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
    }
    std::span<const double> plane(int c) const noexcept {
        return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept {
        return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
    }

    bool all_finite() const noexcept;

private:
    std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * height_ + static_cast<std::size_t>(y)) * width_ +
               static_cast<std::size_t>(x);
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Square single-channel blur kernel with odd side length. Tap (r, c) with
/// r, c in [0, size) sits at spatial offset (r - size/2, c - size/2).
class Kernel {
public:
    Kernel() = default;
    explicit Kernel(int size, double fill = 0.0);
    Kernel(int size, std::vector<double> data);

    static Kernel delta(int size);
    static Kernel flat(int size);

    int size() const noexcept { return size_; }
    int radius() const noexcept { return (size_ - 1) / 2; }
    std::size_t taps() const noexcept { return data_.size(); }

    double& at(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * size_ + c]; }
    double at(int r, int c) const noexcept { return data_[static_cast<std::size_t>(r) * size_ + c]; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    double sum() const noexcept;

private:
    int size_ = 0;
    std::vector<double> data_;
};

/// Full complex 2-D spectrum of one image plane.
struct Spectrum {
    int height = 0;
    int width = 0;
    std::vector<std::complex<double>> data;

    Spectrum() = default;
    Spectrum(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w) {}

    std::complex<double>& at(int y, int x) noexcept {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    const std::complex<double>& at(int y, int x) const noexcept {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

double dot(const Image& a, const Image& b);
double squared_norm(const Image& a);

}  // namespace bisr
