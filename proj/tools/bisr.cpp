#include <iostream>

#include <CLI11.hpp>

#include "bisr/cli.hpp"

using namespace bisr;

namespace {

void add_unfold_flags(CLI::App* cmd, cli::EstimateOptions& e) {
    UnfoldConfig& c = e.config;
    cmd->add_option("--stages,-T", c.stages, "Number of unfolded stages")->capture_default_str();
    cmd->add_option("--k", c.k, "Kernel size (odd)")->capture_default_str();
    cmd->add_option("--scale,-s", c.s, "Scale factor")->capture_default_str();
    cmd->add_option("--sigma", c.sigma255, "Noise level on the 0-255 scale")->capture_default_str();
    cmd->add_option("--lambda", c.lambda, "Prior ratio lambda (beta = mu / lambda)")->capture_default_str();
    cmd->add_option("--mu-k", c.schedule.mu_k_start, "Kernel-step penalty at stage 1")->capture_default_str();
    cmd->add_option("--mu-k-end", c.schedule.mu_k_end, "Kernel-step penalty at stage T")->capture_default_str();
    cmd->add_option("--mu-x", c.schedule.mu_x_start, "Image-step penalty at stage 1")->capture_default_str();
    cmd->add_option("--mu-x-end", c.schedule.mu_x_end, "Image-step penalty at stage T")->capture_default_str();
    cmd->add_option("--tau", e.tau, "Gradient weight of the classical image prior")->capture_default_str();
    cmd->add_option("--netk", e.netk, "NET_K weight manifest");
    cmd->add_option("--netx", e.netx, "NET_X weight manifest");
    cmd->add_option("--hypanet", e.hypanet, "HYPANET weight manifest");
}

void add_pool_flags(CLI::App* cmd, KernelPoolSpec& p, std::string& family) {
    cmd->add_option("--family", family, "gauss-iso | gauss-aniso | random-nonparametric")->capture_default_str();
    cmd->add_option("--sigma-min", p.sigma_min)->capture_default_str();
    cmd->add_option("--sigma-max", p.sigma_max)->capture_default_str();
    cmd->add_option("--theta-max", p.theta_max)->capture_default_str();
    cmd->add_option("--smoothness", p.smoothness, "Blur of the random family")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind super-resolution by unfolded kernel and image estimation"};
    app.require_subcommand(1);

    cli::GenKernelsOptions gk;
    std::string gk_family = "gauss-aniso";
    auto* gen = app.add_subcommand("gen-kernels", "Write a deterministic blur-kernel pool");
    gen->add_option("--out,-o", gk.out_dir, "Output directory")->required();
    gen->add_option("--count,-n", gk.pool.count)->capture_default_str();
    gen->add_option("--k", gk.pool.k)->capture_default_str();
    gen->add_option("--seed", gk.pool.seed)->capture_default_str();
    gen->add_option("--prefix", gk.prefix)->capture_default_str();
    add_pool_flags(gen, gk.pool, gk_family);

    cli::DegradeOptions dg;
    auto* deg = app.add_subcommand("degrade", "Blur, downsample and add noise to an HR PNG");
    deg->add_option("--input,-i", dg.input)->required();
    deg->add_option("--kernel", dg.kernel)->required();
    deg->add_option("--output,-o", dg.output)->required();
    deg->add_option("--sidecar", dg.sidecar, "Spec JSON (default <output>.json)");
    deg->add_option("--scale,-s", dg.scale)->capture_default_str();
    deg->add_option("--sigma", dg.sigma255, "Noise level on the 0-255 scale")->capture_default_str();
    deg->add_option("--seed", dg.seed)->capture_default_str();

    cli::EstimateOptions es;
    auto* est = app.add_subcommand("estimate", "Estimate HR image and kernel from an LR PNG");
    est->add_option("--input,-i", es.input)->required();
    est->add_option("--output,-o", es.output)->required();
    est->add_option("--kernel-out", es.kernel_out, "Default <output>.kernel.txt");
    est->add_option("--trace", es.trace_out, "Default <output>.trace.json");
    add_unfold_flags(est, es);

    cli::EvaluateOptions ev;
    std::string ev_family = "gauss-aniso";
    ev.pool.seed = 0;
    auto* eva = app.add_subcommand("evaluate", "Run estimation over a directory and report metrics");
    eva->add_option("--hr", ev.hr_dir, "Directory of HR PNGs")->required();
    eva->add_option("--lr", ev.lr_dir, "Directory of matching LR PNGs");
    eva->add_option("--kernels", ev.kernel_dir, "Directory of kernel files (ground truth)");
    eva->add_option("--pool-seed", ev.pool.seed, "Seed of the generated kernel pool")->capture_default_str();
    add_pool_flags(eva, ev.pool, ev_family);
    eva->add_option("--json", ev.out_json, "Report JSON path");
    eva->add_option("--csv", ev.out_csv, "Report CSV path");
    eva->add_option("--save", ev.save_dir, "Write SR images and kernels here");
    eva->add_option("--seed", ev.seed, "Noise seed")->capture_default_str();
    eva->add_option("--jobs,-j", ev.jobs, "Images processed in parallel")->capture_default_str();
    eva->add_flag("--luma", ev.luma, "Compare BT.601 luma");
    eva->add_option("--shave", ev.shave, "Border pixels excluded from metrics")->capture_default_str();
    add_unfold_flags(eva, ev.estimate);

    cli::OracleCheckOptions oc;
    auto* ora = app.add_subcommand("oracle-check", "Compare fast solvers against the reference oracles");
    ora->add_option("--trials", oc.gram_trials, "Trials per Gram grid cell")->capture_default_str();
    ora->add_option("--x-trials", oc.x_trials, "Trials per image-step grid cell")->capture_default_str();
    ora->add_option("--seed", oc.seed)->capture_default_str();
    ora->add_flag("--perturb", oc.perturb, "Inject an error into the fast results");

    cli::BenchOptions bo;
    auto* ben = app.add_subcommand("bench", "Measure Gram construction memory and time");
    ben->add_option("--sizes", bo.sizes, "Square sizes h = w")->delimiter(',')->capture_default_str();
    ben->add_option("--k", bo.k)->capture_default_str();
    ben->add_option("--scale,-s", bo.s)->capture_default_str();
    ben->add_option("--seed", bo.seed)->capture_default_str();
    ben->add_option("--json", bo.out_json);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::kExitOk : cli::kExitUsage;
    }

    try {
        if (*gen) {
            gk.pool.family = parse_kernel_family(gk_family);
            cli::cmd_gen_kernels(gk, std::cout);
        } else if (*deg) {
            cli::cmd_degrade(dg, std::cout);
        } else if (*est) {
            cli::cmd_estimate(es, std::cout);
        } else if (*eva) {
            ev.pool.family = parse_kernel_family(ev_family);
            ev.pool.k = ev.estimate.config.k;
            cli::cmd_evaluate(ev, std::cout);
        } else if (*ora) {
            return cli::cmd_oracle_check(oc, std::cout) ? cli::kExitOk : cli::kExitSolver;
        } else if (*ben) {
            cli::cmd_bench(bo, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::exit_code_for(e);
    }
    return cli::kExitOk;
}
