// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "bisr/checks.hpp"
#include "bisr/cli.hpp"
#include "bisr/degradation.hpp"
#include "bisr/kstream.hpp"
#include "bisr/metrics.hpp"
#include "bisr/network.hpp"
#include "bisr/ops.hpp"
#include "bisr/unfolder.hpp"
#include "net_oracle.hpp"
#include "test_util.hpp"

using namespace bisr;
using namespace bisr::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

constexpr double kGramTol = 1e-9;
constexpr double kGramSeconds = 300.0;
constexpr double kKernelRecoveryTol = 1e-6;
constexpr double kWellConditioned = 1e8;
constexpr double kXTol = 1e-6;
constexpr double kEndToEndFraction = 0.9;
constexpr double kEndToEndSeconds = 120.0;
constexpr double kDescentTol = 1e-9;
constexpr double kMemoryRatio = 25.0;
constexpr double kNetTol = 1e-5;

Outcome gram_equivalence() {
    GramGridSpec spec;  // full grid, 100 trials per cell
    spec.tolerance = kGramTol;
    const GridReport r = run_gram_grid(spec);
    const bool pass = r.passed && r.worst_primary <= kGramTol && r.worst_secondary <= kGramTol &&
                      r.seconds <= kGramSeconds;
    return {pass, fmt("%zu cells x %d trials, worst A %.2e (%s), worst b %.2e (%s), %.1f s", r.cells, spec.trials,
                      r.worst_primary, r.worst_primary_cell.c_str(), r.worst_secondary,
                      r.worst_secondary_cell.c_str(), r.seconds)};
}

Outcome kernel_recovery() {
    Rng rng(2024);
    int checked = 0, skipped = 0;
    double worst = 0.0;
    bool pass = true;
    for (int k : {3, 5, 7}) {
        for (int s : {1, 2}) {
            for (int trial = 0; trial < 50; ++trial) {
                const Image x = random_image(1, 32, 32, rng);
                const Kernel truth = random_kernel(k, rng);
                const Image y = downsample(conv2d_circular(x, truth), s);
                const Eigen::MatrixXd a = build_gram_fast(x, k, s);
                const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
                const double cond = ev(ev.size() - 1) / std::max(ev(0), std::numeric_limits<double>::min());
                const Kernel est = solve_k_data(y, Kernel::flat(k), x, 0.0);
                if (cond > kWellConditioned) {
                    ++skipped;
                    continue;
                }
                ++checked;
                const double err = max_abs_diff(est, truth);
                worst = std::max(worst, err);
                pass = pass && err <= kKernelRecoveryTol;
            }
        }
    }
    return {pass && checked > 0,
            fmt("%d well-conditioned trials (%d skipped), worst max-abs %.2e", checked, skipped, worst)};
}

Outcome x_optimality() {
    XGridSpec spec;  // sizes up to 16, k in {3,5}, s in {1,2}, 50 trials
    spec.tolerance = kXTol;
    spec.grad_tolerance = kXTol;
    const GridReport r = run_x_grid(spec);
    return {r.passed && r.worst_primary <= kXTol && r.worst_secondary <= kXTol,
            fmt("%zu cells x %d trials, worst rel %.2e (%s), worst grad ratio %.2e (%s)", r.cells, spec.trials,
                r.worst_primary, r.worst_primary_cell.c_str(), r.worst_secondary,
                r.worst_secondary_cell.c_str())};
}

struct EndToEnd {
    Outcome improvement;
    Outcome descent;
};

EndToEnd end_to_end() {
    constexpr int kCases = 20;
    KernelPoolSpec ps;
    ps.family = KernelFamily::GaussAniso;
    ps.k = 11;
    ps.count = kCases;
    ps.seed = 7;
    const std::vector<Kernel> pool = gen_kernel_pool(ps);
    const UnfoldConfig cfg;  // T = 6, lambda = 10, s = 2, sigma = 0
    int image_ok = 0, kernel_ok = 0, stages = 0, descent_ok = 0;
    double worst_rise = 0.0, solve_seconds = 0.0;
    for (int i = 0; i < kCases; ++i) {
        const Image hr = gen_synthetic_image(1, 64, 64, 100 + i);
        DegradationSpec d;
        d.kernel = pool[i];
        d.scale = cfg.s;
        const Image y = degrade(hr, d);
        const auto t0 = Clock::now();
        const UnfoldResult r = run_udke(y, cfg);
        solve_seconds += seconds_since(t0);
        image_ok += psnr(r.image, hr) >= psnr(bicubic_upsample(y, cfg.s), hr);
        kernel_ok += kernel_psnr(r.kernel, pool[i]) > kernel_psnr(Kernel::flat(cfg.k), pool[i]);
        for (const StageRecord& s : r.trace.stages) {
            const double rk = (s.k_objective_new - s.k_objective_prev) / std::max(std::abs(s.k_objective_prev), 1e-300);
            const double rx = (s.x_objective_new - s.x_objective_prev) / std::max(std::abs(s.x_objective_prev), 1e-300);
            worst_rise = std::max({worst_rise, rk, rx});
            descent_ok += rk <= kDescentTol && rx <= kDescentTol;
            ++stages;
        }
    }
    const int need = static_cast<int>(std::ceil(kEndToEndFraction * kCases));
    EndToEnd out;
    out.improvement = {image_ok >= need && kernel_ok >= need && solve_seconds <= kEndToEndSeconds,
                       fmt("image PSNR >= bicubic %d/%d, kernel PSNR > flat %d/%d, %.1f s", image_ok, kCases,
                           kernel_ok, kCases, solve_seconds)};
    out.descent = {descent_ok == stages,
                   fmt("%d/%d stages non-increasing, worst relative rise %.2e", descent_ok, stages, worst_rise)};
    return out;
}

Outcome memory_law() {
    cli::BenchOptions opt;
    opt.sizes = {256};
    opt.k = 11;
    opt.s = 2;
    std::ostringstream log;
    const nlohmann::json j = cli::cmd_bench(opt, log);
    double ratio = 0.0, law256 = 0.0, law_big = 0.0;
    for (const auto& row : j.at("rows")) {
        if (row.at("h") == 256 && row.at("w") == 256 && row.at("k") == 11) {
            ratio = row.at("ratio").get<double>();
            law256 = row.at("law_prediction").get<double>();
        }
        if (row.at("h") == 2048 && row.at("w") == 1024 && row.at("measured") == false) {
            law_big = row.at("law_prediction").get<double>();
        }
    }
    const bool pass = ratio >= kMemoryRatio && std::abs(law256 - 256.0 * 256.0 / 121.0) <= 1e-9 &&
                      std::abs(law_big - 2048.0 * 1024.0 / 121.0) <= 1e-9 && law_big >= 17000.0;
    return {pass, fmt("256x256 measured ratio %.1f (law %.1f), 2048x1024 predicted %.1f", ratio, law256, law_big)};
}

Outcome net_runtime() {
    const fs::path dir = fs::temp_directory_path() / "bisr_acceptance_net";
    fs::create_directories(dir);
    save_networks({randomized(make_net_k(), 77, 0.3)}, (dir / "netk.json").string(), (dir / "netk.bin").string());
    const Network net = load_network((dir / "netk.json").string());
    Rng rng(78);
    Tensor in(net.input_channels(), 11, 11);
    for (double& v : in.data) v = rng.uniform(-1.0, 1.0);
    const double diff = max_rel_diff(net.forward(in), oracle_forward(net, in));

    bool zero = true;
    for (double v : make_net_k().forward(in).data) zero = zero && v == 0.0;

    Layer l;
    l.kind = LayerKind::Conv;
    l.in = l.out = 2;
    l.size = 3;
    l.padding = 1;
    l.weights.assign(l.weight_count(), 0.0);
    l.biases.assign(l.bias_count(), 0.0);
    for (int c = 0; c < 2; ++c) l.weights[((c * 2 + c) * 3 + 1) * 3 + 1] = 1.0;
    const bool delta = Network(Architecture::Custom, 2, false, {l}).forward(in).data == in.data;
    return {diff <= kNetTol && zero && delta,
            fmt("random NET_K rel diff %.2e, zero-weight %s, delta-filter %s", diff, zero ? "exact" : "broken",
                delta ? "exact" : "broken")};
}

Outcome metric_consistency() {
    Rng rng(5);
    const Image a = random_image(3, 24, 24, rng), b = random_image(3, 24, 24, rng);
    const double inf = std::numeric_limits<double>::infinity();
    bool ok = psnr(a, a) == inf && psnr(a, b) == psnr(b, a) && psnr(a, b) < inf;
    ok = ok && std::abs(psnr(Image(1, 8, 8, 0.5), Image(1, 8, 8, 0.6)) - 20.0) <= 1e-9;
    ok = ok && ssim(a, a) == 1.0 && ssim(a, b) < 1.0 && ssim(a, b) >= -1.0;
    const Kernel g = gen_gaussian_kernel(11, 2.0, 2.0, 0.0);
    ok = ok && kernel_psnr(g, g) == inf;
    const double band = kernel_psnr(Kernel::flat(11), g);
    ok = ok && band >= 40.0 && band <= 60.0;
    return {ok, fmt("identities %s, flat vs Gaussian(sigma 2) %.2f dB", ok ? "hold" : "violated", band)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };
    auto guarded = [](const std::function<Outcome()>& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("exception: ") + e.what()};
        }
    };
    report(1, "Gram oracle equivalence", guarded(gram_equivalence));
    report(2, "kernel recovery on consistent data", guarded(kernel_recovery));
    report(3, "image-step optimality", guarded(x_optimality));
    EndToEnd e2e;
    try {
        e2e = end_to_end();
    } catch (const std::exception& e) {
        e2e.improvement = e2e.descent = {false, std::string("exception: ") + e.what()};
    }
    report(4, "end-to-end improvement", e2e.improvement);
    report(5, "block descent", e2e.descent);
    report(6, "memory law", guarded(memory_law));
    report(7, "network runtime", guarded(net_runtime));
    report(8, "metric consistency", guarded(metric_consistency));
    return failures == 0 ? 0 : 1;
}
