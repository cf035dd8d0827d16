#include "bisr/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "bisr/error.hpp"

namespace bisr {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void transform(std::vector<std::complex<double>>& buffer, int height, int width, int sign) {
    auto* data = reinterpret_cast<fftw_complex*>(buffer.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_2d(height, width, data, data, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

}  // namespace

Spectrum fft2(std::span<const double> plane, int height, int width) {
    if (height < 1 || width < 1 || plane.size() != static_cast<std::size_t>(height) * width) {
        throw DimensionError("fft2: plane size does not match h*w");
    }
    Spectrum out(height, width);
    std::copy(plane.begin(), plane.end(), out.data.begin());
    transform(out.data, height, width, FFTW_FORWARD);
    return out;
}

std::vector<double> ifft2(const Spectrum& spectrum) {
    if (spectrum.data.size() != static_cast<std::size_t>(spectrum.height) * spectrum.width) {
        throw DimensionError("ifft2: spectrum size does not match h*w");
    }
    auto buffer = spectrum.data;
    transform(buffer, spectrum.height, spectrum.width, FFTW_BACKWARD);
    const double scale = 1.0 / (static_cast<double>(spectrum.height) * spectrum.width);
    std::vector<double> out(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) out[i] = buffer[i].real() * scale;
    return out;
}

Spectrum psf2otf(const Kernel& kern, int height, int width) {
    const int k = kern.size(), r = kern.radius();
    if (k > std::min(height, width)) throw DimensionError("psf2otf: kernel larger than grid");
    // Correlation tap at offset (a - r, b - r) is convolution tap at (r - a, r - b).
    std::vector<double> canvas(static_cast<std::size_t>(height) * width, 0.0);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            const int y = ((r - a) % height + height) % height;
            const int x = ((r - b) % width + width) % width;
            canvas[static_cast<std::size_t>(y) * width + x] += kern.at(a, b);
        }
    return fft2(canvas, height, width);
}

}  // namespace bisr
