#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "bisr/checks.hpp"
#include "bisr/cli.hpp"
#include "bisr/metrics.hpp"
#include "bisr/network.hpp"
#include "bisr/png_io.hpp"

namespace fs = std::filesystem;

namespace bisr::cli {

namespace {

using Clock = std::chrono::steady_clock;

void write_text(const std::string& path, const std::string& text) {
    if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw FormatError("failed writing '" + path + "'");
}

void require(bool ok, const std::string& what) {
    if (!ok) throw UsageError(what);
}

void require_file(const std::string& path, const std::string& what) {
    require(!path.empty(), what + " is required");
    require(fs::is_regular_file(path), what + " '" + path + "' not found");
}

struct LoadedPriors {
    Priors priors;
    nlohmann::json notes;
};

LoadedPriors load_priors(const EstimateOptions& opt) {
    LoadedPriors out;
    out.priors.image = std::make_shared<TikhonovImagePrior>(opt.tau);
    nlohmann::json weights = nlohmann::json::object();
    if (!opt.netk.empty()) {
        require_file(opt.netk, "NET_K manifest");
        out.priors.kernel = std::make_shared<NetworkKernelPrior>(std::make_shared<Network>(load_network(opt.netk)));
        weights["netk"] = opt.netk;
    }
    if (!opt.netx.empty()) {
        require_file(opt.netx, "NET_X manifest");
        out.priors.image = std::make_shared<NetworkImagePrior>(std::make_shared<Network>(load_network(opt.netx)));
        weights["netx"] = opt.netx;
    }
    if (!opt.hypanet.empty()) {
        require_file(opt.hypanet, "HYPANET manifest");
        out.priors.hypernet = std::make_shared<HyperNetwork>(load_networks(opt.hypanet));
        weights["hypanet"] = opt.hypanet;
    }
    const bool classical = weights.empty();
    out.notes = {{"path", classical ? "classical" : "network"},
                 {"kernel_prior", out.priors.kernel->name()},
                 {"image_prior", out.priors.image->name()},
                 {"hyperparameters", out.priors.hypernet ? "hypanet" : "fixed-schedule"},
                 {"weights", weights}};
    if (opt.netk.empty() || opt.netx.empty()) {
        out.notes["note"] = "no network weights for one or both priors; classical prior used in their place";
    }
    if (out.priors.image->name() == "classical-tikhonov") out.notes["tau"] = opt.tau;
    return out;
}

Image modcrop(const Image& x, int s) {
    const int h = x.height() - x.height() % s, w = x.width() - x.width() % s;
    if (h == x.height() && w == x.width()) return x;
    Image out(x.channels(), h, w);
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) out.at(c, y, xx) = x.at(c, y, xx);
    return out;
}

Image quantized(const Image& x) {
    Image out = x;
    for (double& v : out.data()) v = quantize_u8(v) / 255.0;
    return out;
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<std::string> list_with_extension(const std::string& dir, const std::string& ext) {
    require(fs::is_directory(dir), "directory '" + dir + "' not found");
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string e = entry.path().extension().string();
        std::transform(e.begin(), e.end(), e.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (e == ext) out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

nlohmann::json stage_json(int t, const StageRecord& r) {
    return {{"stage", t},
            {"alpha_k", r.hyper.alpha_k},
            {"alpha_x", r.hyper.alpha_x},
            {"beta_k", r.hyper.beta_k},
            {"beta_x", r.hyper.beta_x},
            {"residual", r.residual},
            {"k_objective_prev", r.k_objective_prev},
            {"k_objective_new", r.k_objective_new},
            {"x_objective_prev", r.x_objective_prev},
            {"x_objective_new", r.x_objective_new},
            {"ridge", r.ridge}};
}

std::vector<std::string> comment_lines(const nlohmann::json& j) { return {"bisr-config " + j.dump()}; }

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const SingularSystemError*>(&e)) return kExitSolver;
    if (dynamic_cast<const Error*>(&e)) return kExitUsage;
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return kExitUsage;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitUsage;
    return kExitSolver;
}

nlohmann::json config_json(const UnfoldConfig& cfg) {
    return {{"T", cfg.stages},
            {"k", cfg.k},
            {"s", cfg.s},
            {"sigma255", cfg.sigma255},
            {"lambda", cfg.lambda},
            {"schedule",
             {{"mu_k_start", cfg.schedule.mu_k_start},
              {"mu_k_end", cfg.schedule.mu_k_end},
              {"mu_x_start", cfg.schedule.mu_x_start},
              {"mu_x_end", cfg.schedule.mu_x_end},
              {"sigma_floor", cfg.schedule.sigma_floor}}}};
}

nlohmann::json pool_json(const KernelPoolSpec& pool) {
    return {{"family", to_string(pool.family)}, {"k", pool.k},
            {"count", pool.count},              {"seed", pool.seed},
            {"sigma_min", pool.sigma_min},      {"sigma_max", pool.sigma_max},
            {"theta_max", pool.theta_max},      {"smoothness", pool.smoothness}};
}

std::vector<std::string> list_pngs(const std::string& dir) { return list_with_extension(dir, ".png"); }

void cmd_gen_kernels(const GenKernelsOptions& opt, std::ostream& log) {
    require(!opt.out_dir.empty(), "--out is required");
    require(opt.pool.count >= 1, "--count must be >= 1");
    require(opt.pool.k >= 1 && opt.pool.k % 2 == 1, "--k must be odd and positive");
    const std::vector<Kernel> pool = gen_kernel_pool(opt.pool);
    fs::create_directories(opt.out_dir);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "_%04zu.txt", i);
        const std::string path = (fs::path(opt.out_dir) / (opt.prefix + name)).string();
        nlohmann::json cfg = pool_json(opt.pool);
        cfg["index"] = i;
        save_kernel(path, pool[i], comment_lines(cfg));
    }
    log << "wrote " << pool.size() << " " << to_string(opt.pool.family) << " kernels (k=" << opt.pool.k
        << ", seed=" << opt.pool.seed << ") to " << opt.out_dir << '\n';
}

void cmd_degrade(const DegradeOptions& opt, std::ostream& log) {
    require_file(opt.input, "--input");
    require_file(opt.kernel, "--kernel");
    require(!opt.output.empty(), "--output is required");
    const Image hr = read_png(opt.input);
    DegradationSpec spec;
    spec.kernel = load_kernel(opt.kernel);
    spec.scale = opt.scale;
    spec.sigma255 = opt.sigma255;
    spec.seed = opt.seed;
    if (hr.height() % opt.scale != 0 || hr.width() % opt.scale != 0) {
        throw DimensionError("input size " + std::to_string(hr.height()) + "x" + std::to_string(hr.width()) +
                             " is not divisible by s=" + std::to_string(opt.scale));
    }
    const Image lr = degrade(hr, spec);
    const nlohmann::json sidecar = {{"input", opt.input},   {"kernel", opt.kernel}, {"s", opt.scale},
                                    {"sigma255", opt.sigma255}, {"seed", opt.seed},     {"stream", spec.stream},
                                    {"export", "clip to [0,1], floor(255 v + 0.5)"}};
    write_png(lr, opt.output, {{"bisr-config", sidecar.dump()}});
    write_text(opt.sidecar.empty() ? opt.output + ".json" : opt.sidecar, sidecar.dump(2) + "\n");
    log << "degraded " << opt.input << " -> " << opt.output << " (" << lr.height() << "x" << lr.width() << ")\n";
}

nlohmann::json cmd_estimate(const EstimateOptions& opt, std::ostream& log) {
    require_file(opt.input, "--input");
    require(!opt.output.empty(), "--output is required");
    validate(opt.config);
    const LoadedPriors loaded = load_priors(opt);
    const Image y = read_png(opt.input);
    const auto t0 = Clock::now();
    const UnfoldResult res = run_udke(y, opt.config, loaded.priors);
    const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();

    nlohmann::json residuals = nlohmann::json::array();
    nlohmann::json stages = nlohmann::json::array();
    for (std::size_t t = 0; t < res.trace.stages.size(); ++t) {
        residuals.push_back(res.trace.stages[t].residual);
        stages.push_back(stage_json(static_cast<int>(t) + 1, res.trace.stages[t]));
    }
    nlohmann::json trace = {{"config", config_json(opt.config)},
                            {"priors", loaded.notes},
                            {"input", opt.input},
                            {"output", opt.output},
                            {"initial_residual", res.trace.initial_residual},
                            {"residuals", residuals},
                            {"stages", stages},
                            {"seconds", seconds}};
    const std::string kernel_out = opt.kernel_out.empty() ? opt.output + ".kernel.txt" : opt.kernel_out;
    const std::string trace_out = opt.trace_out.empty() ? opt.output + ".trace.json" : opt.trace_out;
    trace["kernel_output"] = kernel_out;
    nlohmann::json echo = {{"config", trace["config"]}, {"priors", loaded.notes}, {"input", opt.input}};
    write_png(res.image, opt.output, {{"bisr-config", echo.dump()}});
    save_kernel(kernel_out, res.kernel, comment_lines(echo));
    write_text(trace_out, trace.dump(2) + "\n");
    log << "estimated " << opt.output << " in " << seconds << " s, final residual "
        << (residuals.empty() ? res.trace.initial_residual : residuals.back().get<double>()) << '\n';
    return trace;
}

EvaluationReport cmd_evaluate(const EvaluateOptions& opt, std::ostream& log) {
    require(!opt.hr_dir.empty(), "--hr is required");
    require(opt.jobs >= 1, "--jobs must be >= 1");
    require(opt.shave >= 0, "--shave must be >= 0");
    const UnfoldConfig& cfg = opt.estimate.config;
    validate(cfg);
    const std::vector<std::string> images = list_pngs(opt.hr_dir);
    require(!images.empty(), "no PNG images in '" + opt.hr_dir + "'");
    if (!opt.lr_dir.empty()) require(fs::is_directory(opt.lr_dir), "directory '" + opt.lr_dir + "' not found");

    std::vector<Kernel> pool;
    KernelPoolSpec pool_spec = opt.pool;
    if (!opt.kernel_dir.empty()) {
        for (const std::string& p : list_with_extension(opt.kernel_dir, ".txt")) pool.push_back(load_kernel(p));
        require(!pool.empty(), "no kernel files in '" + opt.kernel_dir + "'");
    } else if (opt.lr_dir.empty()) {
        pool_spec.count = static_cast<int>(images.size());
        pool = gen_kernel_pool(pool_spec);
    }
    const LoadedPriors loaded = load_priors(opt.estimate);
    if (!opt.save_dir.empty()) fs::create_directories(opt.save_dir);

    MetricOptions mopt;
    mopt.luma = opt.luma;
    mopt.shave = opt.shave;

    EvaluationReport report;
    report.seed = opt.seed;
    report.config = {{"unfold", config_json(cfg)},
                     {"priors", loaded.notes},
                     {"hr_dir", opt.hr_dir},
                     {"lr_dir", opt.lr_dir},
                     {"kernels", opt.kernel_dir.empty() ? nlohmann::json(pool_json(pool_spec))
                                                        : nlohmann::json(opt.kernel_dir)},
                     {"luma", opt.luma},
                     {"shave", opt.shave},
                     {"metrics_on", "8-bit quantized prediction"}};
    report.rows.resize(images.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < images.size(); i = next++) {
            try {
                const Image hr = modcrop(read_png(images[i]), cfg.s);
                const Kernel* truth = pool.empty() ? nullptr : &pool[i % pool.size()];
                Image y;
                if (!opt.lr_dir.empty()) {
                    const std::string lr_path = (fs::path(opt.lr_dir) / fs::path(images[i]).filename()).string();
                    require_file(lr_path, "LR image");
                    y = read_png(lr_path);
                    if (y.height() * cfg.s != hr.height() || y.width() * cfg.s != hr.width()) {
                        throw DimensionError(lr_path + ": LR size does not match HR / s");
                    }
                } else {
                    DegradationSpec d;
                    d.kernel = *truth;
                    d.scale = cfg.s;
                    d.sigma255 = cfg.sigma255;
                    d.seed = opt.seed;
                    d.stream = i;
                    y = degrade(hr, d);
                }
                const auto t0 = Clock::now();
                const UnfoldResult res = run_udke(y, cfg, loaded.priors);
                ImageRow row;
                row.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
                row.name = fs::path(images[i]).filename().string();
                const Image pred = quantized(res.image);
                row.psnr = psnr(pred, hr, mopt);
                row.ssim = ssim(pred, hr, mopt);
                if (truth && truth->size() == res.kernel.size()) row.kernel_psnr = kernel_psnr(res.kernel, *truth);
                if (!opt.save_dir.empty()) {
                    const fs::path base = fs::path(opt.save_dir) / stem(images[i]);
                    const nlohmann::json echo = {{"config", report.config}, {"seed", opt.seed}, {"index", i}};
                    write_png(res.image, base.string() + "_sr.png", {{"bisr-config", echo.dump()}});
                    save_kernel(base.string() + "_kernel.txt", res.kernel, comment_lines(echo));
                }
                report.rows[i] = std::move(row);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = images.size();
            }
        }
    };
    const int jobs = std::min<int>(opt.jobs, static_cast<int>(images.size()));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    report.aggregate();
    if (!opt.out_json.empty()) write_text(opt.out_json, to_json(report).dump(2) + "\n");
    if (!opt.out_csv.empty()) write_text(opt.out_csv, to_csv(report));
    log << "evaluated " << report.rows.size() << " images: mean PSNR " << report.mean_psnr << " dB, SSIM "
        << report.mean_ssim;
    if (report.mean_kernel_psnr) log << ", kernel PSNR " << *report.mean_kernel_psnr << " dB";
    log << '\n';
    return report;
}

bool cmd_oracle_check(const OracleCheckOptions& opt, std::ostream& log) {
    require(opt.gram_trials >= 1 && opt.x_trials >= 1, "trial counts must be >= 1");
    GramGridSpec g;
    g.trials = opt.gram_trials;
    g.seed = opt.seed;
    g.perturb = opt.perturb;
    XGridSpec x;
    x.trials = opt.x_trials;
    x.seed = opt.seed + 1;
    x.perturb = opt.perturb;

    const GridReport gr = run_gram_grid(g);
    log << "gram grid: " << gr.cells << " cells x " << g.trials << " trials = " << gr.trials << " systems"
        << (opt.perturb ? " (perturbed)" : "") << '\n';
    log << "  worst A rel err " << gr.worst_primary << " [" << gr.worst_primary_cell << "]\n";
    log << "  worst b rel err " << gr.worst_secondary << " [" << gr.worst_secondary_cell << "]\n";
    log << "  tolerance " << g.tolerance << ": " << (gr.passed ? "PASS" : "FAIL") << '\n';

    const GridReport xr = run_x_grid(x);
    log << "image-step grid: " << xr.cells << " cells x " << x.trials << " trials = " << xr.trials << " solves"
        << (opt.perturb ? " (perturbed)" : "") << '\n';
    log << "  worst rel err " << xr.worst_primary << " [" << xr.worst_primary_cell << "]\n";
    log << "  worst gradient ratio " << xr.worst_secondary << " [" << xr.worst_secondary_cell << "]\n";
    log << "  tolerance " << x.tolerance << " / " << x.grad_tolerance << ": " << (xr.passed ? "PASS" : "FAIL")
        << '\n';
    return gr.passed && xr.passed;
}

nlohmann::json cmd_bench(const BenchOptions& opt, std::ostream& log) {
    require(!opt.sizes.empty(), "--sizes must not be empty");
    std::vector<BenchRow> rows;
    for (int n : opt.sizes) {
        require(n >= opt.k && n % opt.s == 0, "size " + std::to_string(n) + " incompatible with k and s");
        rows.push_back(bench_gram(n, n, opt.k, opt.s, opt.seed));
    }
    rows.push_back(bench_gram(16, 16, 1, 1, opt.seed));
    rows.push_back(predict_gram(2048, 1024, opt.k, opt.s));

    nlohmann::json out = {{"k", opt.k}, {"s", opt.s}, {"seed", opt.seed}, {"law", "h*w/k^2"}};
    nlohmann::json jrows = nlohmann::json::array();
    char line[256];
    std::snprintf(line, sizeof line, "%6s %6s %3s %2s %14s %12s %10s %10s %10s %10s\n", "h", "w", "k", "s",
                  "im2col", "fast_peak", "ratio", "law", "fast_s", "brute_s");
    log << line;
    for (const BenchRow& r : rows) {
        nlohmann::json j = {{"h", r.height},
                            {"w", r.width},
                            {"k", r.k},
                            {"s", r.s},
                            {"measured", r.measured},
                            {"im2col_scalars", r.im2col_scalars},
                            {"law_prediction", r.law_prediction},
                            {"bound_scalars", r.bound_scalars}};
        if (r.measured) {
            j["brute_peak_scalars"] = r.brute_peak_scalars;
            j["fast_peak_scalars"] = r.fast_peak_scalars;
            j["ratio"] = r.ratio;
            j["fast_seconds"] = r.fast_seconds;
            j["brute_seconds"] = r.brute_seconds;
            std::snprintf(line, sizeof line, "%6d %6d %3d %2d %14zu %12zu %10.1f %10.1f %10.4f %10.4f\n", r.height,
                          r.width, r.k, r.s, r.im2col_scalars, r.fast_peak_scalars, r.ratio, r.law_prediction,
                          r.fast_seconds, r.brute_seconds);
        } else {
            j["note"] = "prediction only, not measured at desk scale";
            std::snprintf(line, sizeof line, "%6d %6d %3d %2d %14zu %12s %10s %10.1f  (not measured at desk scale)\n",
                          r.height, r.width, r.k, r.s, r.im2col_scalars, "-", "-", r.law_prediction);
        }
        log << line;
        jrows.push_back(j);
    }
    out["rows"] = jrows;
    if (!opt.out_json.empty()) write_text(opt.out_json, out.dump(2) + "\n");
    return out;
}

}  // namespace bisr::cli
