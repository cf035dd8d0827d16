#include <doctest.h>

#include <numeric>

#include "bisr/error.hpp"
#include "bisr/fft.hpp"
#include "bisr/ops.hpp"
#include "bisr/oracles.hpp"
#include "test_util.hpp"

using namespace bisr;
using namespace bisr::testing;

TEST_CASE("conv2d_circular: delta kernel is the identity") {
    Rng rng(1);
    const Image x = random_image(3, 7, 9, rng);
    for (int k : {1, 3, 5, 7}) CHECK(max_abs_diff(conv2d_circular(x, Kernel::delta(k)), x) == 0.0);
}

TEST_CASE("conv2d_circular: constants survive unit-sum kernels") {
    Rng rng(2);
    const Image x(2, 8, 8, 0.37);
    const Image out = conv2d_circular(x, random_kernel(5, rng));
    CHECK(max_abs_diff(out, x) <= 1e-15);
}

TEST_CASE("conv2d_circular: matches the direct oracle") {
    Rng rng(3);
    const Image x = random_image(1, 6, 6, rng);
    const Kernel kern = random_kernel(3, rng, false);
    CHECK(rel_err(conv2d_circular(x, kern), oracles::conv_direct(x, kern)) <= 1e-12);
    for (int h : {8, 12, 16})
        for (int k : {1, 3, 5, 7}) {
            const Image xi = random_image(2, h, h + 4, rng);
            const Kernel ki = random_kernel(k, rng, false);
            CHECK(rel_err(conv2d_circular(xi, ki), oracles::conv_direct(xi, ki)) <= 1e-12);
        }
}

TEST_CASE("conv2d_circular: cross-correlation orientation") {
    // A kernel with one tap at (0, 0) reads the pixel up-left of the output.
    Kernel kern(3, 0.0);
    kern.at(0, 0) = 1.0;
    const Image x = ramp(4, 4);
    const Image out = conv2d_circular(x, kern);
    CHECK(out.at(0, 1, 1) == x.at(0, 0, 0));
    CHECK(out.at(0, 0, 0) == x.at(0, 3, 3));
}

TEST_CASE("conv2d_circular: errors") {
    CHECK_THROWS_AS(conv2d_circular(Image(1, 4, 4), Kernel::flat(5)), DimensionError);
}

TEST_CASE("conv2d_circular_adjoint is the adjoint") {
    Rng rng(4);
    const Image x = random_image(2, 8, 12, rng), y = random_image(2, 8, 12, rng);
    const Kernel kern = random_kernel(5, rng, false);
    const double lhs = dot(conv2d_circular(x, kern), y), rhs = dot(x, conv2d_circular_adjoint(y, kern));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
}

TEST_CASE("downsample") {
    const Image x = ramp(4, 4);
    CHECK(max_abs_diff(downsample(x, 1), x) == 0.0);
    const Image d = downsample(x, 2);
    REQUIRE(d.height() == 2);
    CHECK(d.data() == std::vector<double>{0, 2, 8, 10});
    CHECK(downsample(x, 2, {1, 0}).data() == std::vector<double>{4, 6, 12, 14});
    CHECK_THROWS_AS(downsample(Image(1, 5, 4), 2), DimensionError);
}

TEST_CASE("zero_upsample mirrors downsample") {
    const Image y = ramp(2, 2);
    CHECK(max_abs_diff(zero_upsample(y, 1), y) == 0.0);
    const Image u = zero_upsample(y, 2);
    CHECK(u.data() == std::vector<double>{0, 0, 1, 0, 0, 0, 0, 0, 2, 0, 3, 0, 0, 0, 0, 0});
    CHECK(max_abs_diff(downsample(u, 2), y) == 0.0);
}

TEST_CASE("downsample / zero_upsample adjointness") {
    Rng rng(5);
    for (int s : {1, 2, 3, 4})
        for (int oy = 0; oy < s; ++oy) {
            const Offset off{oy, s - 1 - oy};
            const Image x = random_image(3, 12, 24, rng);
            const Image y = random_image(3, 12 / s, 24 / s, rng);
            const double lhs = dot(downsample(x, s, off), y), rhs = dot(x, zero_upsample(y, s, off));
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
        }
}

TEST_CASE("pixel_unshuffle enumeration") {
    const Image u = pixel_unshuffle(ramp(4, 4), 2);
    REQUIRE(u.channels() == 4);
    CHECK(u.data() == std::vector<double>{0, 2, 8, 10, 1, 3, 9, 11, 4, 6, 12, 14, 5, 7, 13, 15});
}

TEST_CASE("pixel_shuffle round trip") {
    Rng rng(6);
    const Image x = random_image(3, 8, 8, rng);
    CHECK(pixel_shuffle(pixel_unshuffle(x, 2), 2).data() == x.data());
    CHECK(pixel_unshuffle(x, 1).data() == x.data());
    const Image x3 = random_image(2, 9, 12, rng);
    CHECK(pixel_shuffle(pixel_unshuffle(x3, 3), 3).data() == x3.data());
    CHECK_THROWS_AS(pixel_unshuffle(Image(1, 6, 5), 2), DimensionError);
    CHECK_THROWS_AS(pixel_shuffle(Image(3, 2, 2), 2), DimensionError);
}

TEST_CASE("im2col") {
    Rng rng(7);
    const Image x = random_image(2, 4, 4, rng);
    const auto a1 = im2col(x, 1);
    REQUIRE(a1.size() == 2);
    for (int c = 0; c < 2; ++c)
        for (int p = 0; p < 16; ++p) CHECK(a1[c](p, 0) == x.data()[c * 16 + p]);

    const auto cst = im2col(Image(1, 5, 5, 0.25), 3);
    CHECK((cst[0].array() == 0.25).all());

    // Index-enumeration oracle.
    const auto a3 = im2col(x, 3);
    for (int c = 0; c < 2; ++c)
        for (int py = 0; py < 4; ++py)
            for (int px = 0; px < 4; ++px)
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        const int yy = (py + a - 1 + 4) % 4, xx = (px + b - 1 + 4) % 4;
                        CHECK(a3[c](py * 4 + px, a * 3 + b) == x.at(c, yy, xx));
                    }
    CHECK_THROWS_AS(im2col(x, 2), ParameterError);
}

TEST_CASE("im2col rows dotted with the kernel give the convolution") {
    Rng rng(8);
    const Image x = random_image(1, 9, 7, rng);
    const Kernel kern = random_kernel(5, rng, false);
    const auto cols = im2col(x, 5);
    const Eigen::Map<const Eigen::VectorXd> kv(kern.data().data(), 25);
    const Eigen::VectorXd out = cols[0] * kv;
    const Image ref = conv2d_circular(x, kern);
    for (int p = 0; p < 63; ++p) CHECK(std::abs(out(p) - ref.data()[p]) <= 1e-12 * std::abs(ref.data()[p]) + 1e-15);
}

TEST_CASE("fft2 / ifft2") {
    Rng rng(9);
    const Image x = random_image(1, 8, 12, rng);
    const Spectrum f = fft2(x.plane(0), 8, 12);
    const auto back = ifft2(f);
    CHECK(max_abs_diff(back, x.data()) <= 1e-12);
    double energy = 0.0;
    for (const auto& z : f.data) energy += std::norm(z);
    CHECK(std::abs(energy / 96.0 - squared_norm(x)) <= 1e-12 * squared_norm(x));
}

TEST_CASE("psf2otf") {
    const Spectrum d = psf2otf(Kernel::delta(5), 8, 8);
    for (const auto& z : d.data) CHECK(std::abs(z - std::complex<double>(1.0, 0.0)) <= 1e-15);

    Rng rng(10);
    for (int k : {1, 3, 5, 7, 11})
        for (int h : {8, 12, 16})
            for (int w : {8, 12, 16}) {
                if (k > std::min(h, w)) continue;
                const Image x = random_image(1, h, w, rng);
                const Kernel kern = random_kernel(k, rng, false);
                Spectrum f = fft2(x.plane(0), h, w);
                const Spectrum otf = psf2otf(kern, h, w);
                for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] *= otf.data[i];
                const Image got(1, h, w, ifft2(f));
                CHECK(rel_err(got, oracles::conv_direct(x, kern)) <= 1e-10);
            }
    CHECK_THROWS_AS(psf2otf(Kernel::flat(9), 8, 8), DimensionError);
}

TEST_CASE("bicubic_upsample") {
    Rng rng(11);
    const Image y = random_image(2, 5, 6, rng);
    CHECK(max_abs_diff(bicubic_upsample(y, 1), y) == 0.0);
    const Image c = bicubic_upsample(Image(1, 4, 4, 0.6), 3);
    CHECK(max_abs_diff(c, Image(1, 12, 12, 0.6)) <= 1e-15);
    for (int s : {2, 3, 4}) CHECK(max_abs_diff(downsample(bicubic_upsample(y, s), s), y) <= 1e-15);

    // Degree-1 reproduction away from the replicated edges.
    Image r(1, 1, 8);
    for (int x = 0; x < 8; ++x) r.at(0, 0, x) = 0.1 * x + 0.2;
    const Image u = bicubic_upsample(r, 2);
    for (int x = 2; x < 12; ++x) CHECK(std::abs(u.at(0, 0, x) - (0.05 * x + 0.2)) <= 1e-14);
    CHECK_THROWS_AS(bicubic_upsample(y, 5), ParameterError);
}

TEST_CASE("clip") {
    Image x(1, 1, 3);
    x.data() = {-0.5, 0.5, 1.5};
    CHECK(clip(x, 0.0, 1.0).data() == std::vector<double>{0.0, 0.5, 1.0});
}
