#include <doctest.h>

#include "bisr/degradation.hpp"
#include "bisr/error.hpp"
#include "bisr/kstream.hpp"
#include "bisr/unfolder.hpp"
#include "test_util.hpp"

using namespace bisr;
using namespace bisr::testing;

namespace {

Network constant_hypernet(double a_x, double a_k, double b_x, double b_k) {
    Layer l;
    l.kind = LayerKind::FullyConnected;
    l.in = 2;
    l.out = 4;
    l.weights.assign(8, 0.0);
    l.biases = {a_x, a_k, b_x, b_k};
    return Network(Architecture::Custom, 2, false, {l});
}

}  // namespace

TEST_CASE("defaults") {
    const UnfoldConfig cfg;
    CHECK(cfg.stages == 6);
    CHECK(cfg.lambda == 10.0);
    CHECK(cfg.k == 11);
    CHECK(cfg.schedule.sigma_floor == 1e-3);
}

TEST_CASE("fixed schedule") {
    const UnfoldConfig cfg;
    double prev_k = 0, prev_x = 0;
    for (int t = 1; t <= 6; ++t) {
        const StageHyperParams hp = fixed_schedule(t, 6, 0.0, 2, 10.0, cfg.schedule);
        CHECK(hp.alpha_k > prev_k);
        CHECK(hp.alpha_x > prev_x);
        prev_k = hp.alpha_k;
        prev_x = hp.alpha_x;
        CHECK(hp.beta_k == doctest::Approx(hp.alpha_k / 1e-6 / 10.0).epsilon(1e-12));
    }
    ScheduleParams unit;
    unit.mu_k_start = unit.mu_k_end = unit.mu_x_start = unit.mu_x_end = 1.0;
    const StageHyperParams one = fixed_schedule(3, 6, 0.0, 2, 10.0, unit);
    CHECK(one.beta_k == doctest::Approx(0.1));
    CHECK(one.beta_x == doctest::Approx(0.1));
    CHECK(one.alpha_k == doctest::Approx(1e-6));
    const StageHyperParams noisy = fixed_schedule(3, 6, 7.65, 2, 10.0, unit);
    CHECK(noisy.alpha_x == doctest::Approx(0.03 * 0.03));
    CHECK(fixed_schedule(6, 6, 0.0, 2, 10.0, cfg.schedule).alpha_k ==
          doctest::Approx(cfg.schedule.mu_k_end * 1e-6));
    CHECK_THROWS_AS(fixed_schedule(7, 6, 0.0, 2, 10.0), ParameterError);
    CHECK_THROWS_AS(fixed_schedule(1, 6, 0.0, 2, 0.0), ParameterError);
}

TEST_CASE("one stage recovers a delta kernel at s = 1") {
    Rng rng(1);
    const Image y = random_image(1, 32, 32, rng);
    UnfoldConfig cfg;
    cfg.stages = 1;
    cfg.s = 1;
    const UnfoldResult r = run_udke(y, cfg);
    CHECK(r.kernel.at(5, 5) >= 0.9);
}

TEST_CASE("constant observation gives constant image and flat kernel") {
    UnfoldConfig cfg;
    const UnfoldResult r = run_udke(Image(1, 16, 16, 0.4), cfg);
    CHECK(max_abs_diff(r.image, Image(1, 32, 32, 0.4)) <= 1e-9);
    CHECK(max_abs_diff(r.kernel, Kernel::flat(11)) <= 1e-9);
}

TEST_CASE("trace, block descent and determinism") {
    Rng rng(2);
    const Image hr = gen_synthetic_image(1, 48, 48, 3);
    DegradationSpec d;
    d.kernel = gen_gaussian_kernel(11, 1.6, 1.1, 0.4);
    const Image y = degrade(hr, d);
    UnfoldConfig cfg;
    cfg.keep_images = true;
    const UnfoldResult r = run_udke(y, cfg);
    REQUIRE(r.trace.stages.size() == 6);
    for (const StageRecord& s : r.trace.stages) {
        CHECK(s.image.has_value());
        CHECK(s.k_objective_new <= s.k_objective_prev * (1 + 1e-9));
        CHECK(s.x_objective_new <= s.x_objective_prev * (1 + 1e-9));
        CHECK(*std::min_element(s.kernel.data().begin(), s.kernel.data().end()) >= 0.0);
    }
    CHECK(r.trace.stages.back().kernel.data() == r.kernel.data());
    const UnfoldResult again = run_udke(y, cfg);
    CHECK(again.image.data() == r.image.data());
    CHECK(again.kernel.data() == r.kernel.data());
}

TEST_CASE("data residual shrinks over the run") {
    KernelPoolSpec ps;
    ps.family = KernelFamily::GaussAniso;
    ps.count = 200;
    ps.seed = 99;
    const auto pool = gen_kernel_pool(ps);
    int ok = 0;
    for (int i = 0; i < 200; ++i) {
        DegradationSpec d;
        d.kernel = pool[i];
        const Image y = degrade(gen_synthetic_image(1, 48, 48, 1000 + i), d);
        const UnfoldResult r = run_udke(y, UnfoldConfig{});
        ok += r.trace.stages.back().residual <= r.trace.stages.front().residual;
    }
    CHECK(ok >= 190);
}

TEST_CASE("HypaNet output ordering and layouts") {
    const Network net = constant_hypernet(0.5, 2.0, 3.0, 4.0);
    const HyperNetwork per_stage(std::vector<Network>(6, net));
    const StageHyperParams hp = per_stage.predict(2, 6, 2, 0.0);
    CHECK(hp.alpha_x == 0.5);
    CHECK(hp.alpha_k == 2.0);
    CHECK(hp.beta_x == 3.0);
    CHECK(hp.beta_k == 4.0);

    Layer wide;
    wide.kind = LayerKind::FullyConnected;
    wide.in = 2;
    wide.out = 8;
    wide.weights.assign(16, 0.0);
    wide.biases = {1, 2, 3, 4, 5, 6, 7, 8};
    const HyperNetwork sliced(std::vector<Network>{Network(Architecture::Custom, 2, false, {wide})});
    CHECK(sliced.predict(2, 2, 2, 0.0).alpha_x == 5.0);
    CHECK(sliced.predict(2, 2, 2, 0.0).beta_k == 8.0);

    Layer staged;
    staged.kind = LayerKind::FullyConnected;
    staged.in = 3;
    staged.out = 4;
    staged.weights.assign(12, 0.0);
    staged.weights[2] = 1.0;  // alpha_x = t
    staged.biases = {0, 1, 1, 1};
    const HyperNetwork indexed(std::vector<Network>{Network(Architecture::Custom, 3, false, {staged})});
    CHECK(indexed.predict(3, 6, 2, 0.0).alpha_x == 3.0);

    CHECK_THROWS_AS(HyperNetwork(std::vector<Network>(3, net)).predict(1, 6, 2, 0.0), FormatError);
    CHECK_THROWS_AS(HyperNetwork({}), ParameterError);
}

TEST_CASE("errors carry the stage index") {
    Priors priors;
    priors.hypernet = std::make_shared<HyperNetwork>(std::vector<Network>(6, constant_hypernet(-1.0, 1.0, 1.0, 1.0)));
    Rng rng(4);
    try {
        run_udke(random_image(1, 16, 16, rng), UnfoldConfig{}, priors);
        FAIL("expected ParameterError");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).rfind("stage 1: ", 0) == 0);
    }
}

TEST_CASE("config validation") {
    UnfoldConfig cfg;
    cfg.stages = 0;
    CHECK_THROWS_AS(validate(cfg), ParameterError);
    cfg = {};
    cfg.k = 4;
    CHECK_THROWS_AS(validate(cfg), ParameterError);
    cfg = {};
    cfg.s = 5;
    CHECK_THROWS_AS(validate(cfg), ParameterError);
    cfg = {};
    CHECK_THROWS_AS(run_udke(Image(1, 4, 4), cfg), DimensionError);
}
