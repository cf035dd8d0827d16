#include <doctest.h>

#include <sstream>

#include "bisr/degradation.hpp"
#include "bisr/error.hpp"
#include "bisr/ops.hpp"
#include "test_util.hpp"

using namespace bisr;
using namespace bisr::testing;

namespace {

double correlation(const Kernel& a, const Kernel& b) {
    const double n = static_cast<double>(a.taps());
    double ma = a.sum() / n, mb = b.sum() / n, sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.taps(); ++i) {
        const double da = a.data()[i] - ma, db = b.data()[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

void check_unit_nonneg(const Kernel& k) {
    CHECK(std::abs(k.sum() - 1.0) <= 1e-12);
    CHECK(*std::min_element(k.data().begin(), k.data().end()) >= 0.0);
}

}  // namespace

TEST_CASE("degrade: delta, s = 1, no noise is the identity") {
    Rng rng(1);
    const Image x = random_image(3, 8, 10, rng);
    DegradationSpec d;
    d.kernel = Kernel::delta(5);
    d.scale = 1;
    CHECK(degrade(x, d).data() == x.data());
}

TEST_CASE("degrade: constant stays constant") {
    Rng rng(2);
    DegradationSpec d;
    d.kernel = random_kernel(7, rng);
    d.scale = 2;
    const Image y = degrade(Image(1, 16, 16, 0.42), d);
    CHECK(max_abs_diff(y, Image(1, 8, 8, 0.42)) <= 1e-15);
}

TEST_CASE("degrade: LR (0,0) is the circular box mean at HR (0,0)") {
    const Image x = ramp(4, 4);
    DegradationSpec d;
    d.kernel = Kernel::flat(3);
    d.scale = 2;
    const Image y = degrade(x, d);
    double acc = 0.0;
    for (int r : {3, 0, 1})
        for (int c : {3, 0, 1}) acc += x.at(0, r, c);
    CHECK(std::abs(y.at(0, 0, 0) - acc / 9.0) <= 1e-14);
}

TEST_CASE("degrade: linear without noise") {
    Rng rng(3);
    const Image x1 = random_image(2, 12, 12, rng), x2 = random_image(2, 12, 12, rng);
    DegradationSpec d;
    d.kernel = random_kernel(5, rng);
    d.scale = 3;
    Image mix = x1;
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = 0.7 * x1.data()[i] - 1.3 * x2.data()[i];
    const Image y = degrade(mix, d), y1 = degrade(x1, d), y2 = degrade(x2, d);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(std::abs(y.data()[i] - (0.7 * y1.data()[i] - 1.3 * y2.data()[i])) <= 1e-12);
}

TEST_CASE("degrade: noise statistics, no clipping") {
    DegradationSpec d;
    d.kernel = Kernel::delta(1);
    d.scale = 1;
    d.sigma255 = 7.65;
    d.seed = 17;
    const Image y = degrade(Image(1, 1024, 1024, 0.0), d);
    double m = 0.0, sq = 0.0;
    for (double v : y.data()) {
        m += v;
        sq += v * v;
    }
    const double n = static_cast<double>(y.size());
    const double sd = std::sqrt(sq / n - (m / n) * (m / n));
    CHECK(sd >= 0.0294);
    CHECK(sd <= 0.0306);
    CHECK(*std::min_element(y.data().begin(), y.data().end()) < 0.0);
}

TEST_CASE("degrade: determinism and streams") {
    Rng rng(4);
    const Image x = random_image(1, 16, 16, rng);
    DegradationSpec d;
    d.kernel = random_kernel(3, rng);
    d.sigma255 = 2.55;
    d.seed = 5;
    CHECK(degrade(x, d).data() == degrade(x, d).data());
    DegradationSpec e = d;
    e.stream = 1;
    CHECK(degrade(x, d).data() != degrade(x, e).data());
}

TEST_CASE("degrade: errors") {
    DegradationSpec d;
    d.kernel = Kernel::flat(3);
    d.scale = 2;
    CHECK_THROWS_AS(degrade(Image(1, 9, 8), d), DimensionError);
    d.scale = 5;
    CHECK_THROWS_AS(degrade(Image(1, 10, 10), d), ParameterError);
    d.scale = 2;
    d.sigma255 = -1;
    CHECK_THROWS_AS(degrade(Image(1, 8, 8), d), ParameterError);
}

TEST_CASE("gen_gaussian_kernel") {
    const Kernel iso = gen_gaussian_kernel(11, 1.7, 1.7, 0.3);
    for (int r = 0; r < 11; ++r)
        for (int c = 0; c < 11; ++c) CHECK(std::abs(iso.at(r, c) - iso.at(c, 10 - r)) <= 1e-12);

    Rng rng(6);
    for (int t = 0; t < 50; ++t) {
        const int k = 2 * static_cast<int>(rng.below(7)) + 1;
        const double sx = rng.uniform(0.3, 4.0), sy = rng.uniform(0.3, 4.0);
        const Kernel g = gen_gaussian_kernel(k, sx, sy, rng.uniform(0.0, 3.14));
        check_unit_nonneg(g);
        if (std::max(sx, sy) <= k / 4.0) {
            const double center = g.at(k / 2, k / 2);
            CHECK(center == *std::max_element(g.data().begin(), g.data().end()));
        }
    }
    CHECK_THROWS_AS(gen_gaussian_kernel(5, 0.0, 1.0, 0.0), ParameterError);
}

TEST_CASE("gen_gaussian_kernel: sigma_x runs along the rotated column axis") {
    const Kernel g = gen_gaussian_kernel(11, 3.0, 0.8, 0.0);
    CHECK(g.at(5, 8) > g.at(8, 5));
}

TEST_CASE("gen_random_kernel") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Kernel a = gen_random_kernel(11, seed, 1.0);
        check_unit_nonneg(a);
        CHECK(a.data() == gen_random_kernel(11, seed, 1.0).data());
        CHECK(correlation(gen_random_kernel(11, seed, 1e6), random_kernel_envelope(11, seed)) >= 0.99);
        check_unit_nonneg(gen_random_kernel(11, seed, 0.0));
    }
    CHECK(gen_random_kernel(11, 1, 1.0).data() != gen_random_kernel(11, 2, 1.0).data());
    CHECK_THROWS_AS(gen_random_kernel(5, 1, -1.0), ParameterError);
}

TEST_CASE("kernel pools") {
    for (auto fam : {KernelFamily::GaussIso, KernelFamily::GaussAniso, KernelFamily::RandomNonparametric}) {
        KernelPoolSpec p;
        p.family = fam;
        p.count = 12;
        p.seed = 9;
        const auto pool = gen_kernel_pool(p);
        REQUIRE(pool.size() == 12);
        for (const Kernel& k : pool) check_unit_nonneg(k);
        CHECK(parse_kernel_family(to_string(fam)) == fam);
        // Kernel i is independent of the pool size.
        p.count = 3;
        CHECK(gen_kernel_pool(p)[2].data() == pool[2].data());
    }
    KernelPoolSpec iso;
    iso.count = 5;
    for (const Kernel& k : gen_kernel_pool(iso))
        for (int r = 0; r < 11; ++r)
            for (int c = 0; c < 11; ++c) CHECK(std::abs(k.at(r, c) - k.at(c, r)) <= 1e-15);
    CHECK_THROWS_AS(parse_kernel_family("motion"), ParameterError);
}

TEST_CASE("gen_synthetic_image") {
    const Image a = gen_synthetic_image(3, 32, 40, 4);
    CHECK(a.channels() == 3);
    CHECK(*std::min_element(a.data().begin(), a.data().end()) >= 0.0);
    CHECK(*std::max_element(a.data().begin(), a.data().end()) <= 1.0);
    CHECK(a.data() == gen_synthetic_image(3, 32, 40, 4).data());
    CHECK(a.data() != gen_synthetic_image(3, 32, 40, 5).data());
}

TEST_CASE("kernel text format round trip") {
    Rng rng(7);
    const Kernel k = random_kernel(5, rng, false);
    std::stringstream ss;
    write_kernel(ss, k, {"family test", "seed 7"});
    const std::string text = ss.str();
    CHECK(text.rfind("5\n", 0) == 0);
    CHECK(text.find("# seed 7") != std::string::npos);
    const Kernel back = read_kernel(ss);
    CHECK(back.data() == k.data());
}

TEST_CASE("kernel text format errors") {
    auto parse = [](const std::string& s) {
        std::istringstream is(s);
        return read_kernel(is);
    };
    CHECK(parse("1\n0.5\n# note\n").at(0, 0) == 0.5);
    CHECK_THROWS_AS(parse(""), FormatError);
    CHECK_THROWS_AS(parse("2\n1 2\n3 4\n"), FormatError);
    CHECK_THROWS_AS(parse("3\n1 2 3\n4 5 6\n"), FormatError);
    CHECK_THROWS_AS(parse("1\n1 2\n"), FormatError);
    CHECK_THROWS_AS(parse("1\nx\n"), FormatError);
    CHECK_THROWS_AS(parse("1\nnan\n"), FormatError);
}
