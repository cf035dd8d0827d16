#include "bisr/unfolder.hpp"

#include <cmath>
#include <string>

#include "bisr/error.hpp"
#include "bisr/kstream.hpp"
#include "bisr/ops.hpp"
#include "bisr/xstream.hpp"

namespace bisr {

namespace {

double log_interp(double start, double end, int t, int stages) {
    if (stages == 1) return start;
    const double f = static_cast<double>(t - 1) / (stages - 1);
    return std::exp(std::log(start) + f * (std::log(end) - std::log(start)));
}

[[noreturn]] void rethrow_with_stage(int t) {
    const std::string prefix = "stage " + std::to_string(t) + ": ";
    try {
        throw;
    } catch (const SingularSystemError& e) {
        throw SingularSystemError(prefix + e.what(), e.condition_estimate());
    } catch (const DimensionError& e) {
        throw DimensionError(prefix + e.what());
    } catch (const ParameterError& e) {
        throw ParameterError(prefix + e.what());
    } catch (const Error& e) {
        throw Error(prefix + e.what());
    }
}

}  // namespace

StageHyperParams fixed_schedule(int t, int stages, double sigma255, int /*s*/, double lambda,
                                const ScheduleParams& p) {
    if (stages < 1 || t < 1 || t > stages) throw ParameterError("fixed_schedule: stage index out of range");
    if (!(lambda > 0.0)) throw ParameterError("fixed_schedule: lambda must be > 0");
    const double sigma = std::max(sigma255 / 255.0, p.sigma_floor);
    const double mu_k = log_interp(p.mu_k_start, p.mu_k_end, t, stages);
    const double mu_x = log_interp(p.mu_x_start, p.mu_x_end, t, stages);
    return {mu_k * sigma * sigma, mu_x * sigma * sigma, mu_k / lambda, mu_x / lambda};
}

HyperNetwork::HyperNetwork(std::vector<Network> nets) : nets_(std::move(nets)) {
    if (nets_.empty()) throw ParameterError("HyperNetwork: no networks");
    for (const Network& n : nets_) {
        if (n.architecture() != Architecture::HypaNet && n.architecture() != Architecture::Custom) {
            throw FormatError("HyperNetwork: expected HYPANET weights");
        }
    }
}

StageHyperParams HyperNetwork::predict(int t, int stages, int s, double sigma255) const {
    const double sigma = sigma255 / 255.0;
    const Network* net = nullptr;
    int slot = 0;
    if (nets_.size() == static_cast<std::size_t>(stages)) {
        net = &nets_[t - 1];
    } else if (nets_.size() == 1) {
        net = &nets_.front();
        if (net->output_channels() == 4 * stages && net->input_channels() == 2) slot = t - 1;
        else if (net->output_channels() != 4 || net->input_channels() != 3) {
            throw FormatError("HyperNetwork: single network must emit 4*T outputs or take a stage input");
        }
    } else {
        throw FormatError("HyperNetwork: " + std::to_string(nets_.size()) + " weight sets for " +
                          std::to_string(stages) + " stages");
    }
    Tensor in(net->input_channels(), 1, 1);
    in.data[0] = s;
    in.data[1] = sigma;
    if (net->input_channels() == 3) in.data[2] = t;
    const Tensor out = net->forward(in);
    if (static_cast<int>(out.data.size()) < 4 * (slot + 1)) throw DimensionError("HyperNetwork: output too short");
    const double* v = out.data.data() + 4 * slot;
    return {v[1], v[0], v[3], v[2]};
}

void validate(const UnfoldConfig& cfg) {
    if (cfg.stages < 1) throw ParameterError("stages must be >= 1");
    if (cfg.k < 1 || cfg.k % 2 == 0) throw ParameterError("kernel size must be odd and positive");
    if (cfg.s < 1 || cfg.s > 4) throw ParameterError("scale must be in {1,2,3,4}");
    if (cfg.sigma255 < 0.0) throw ParameterError("noise level must be >= 0");
    if (!(cfg.lambda > 0.0)) throw ParameterError("lambda must be > 0");
}

double data_residual(const Image& y, const Kernel& kern, const Image& x, int s) {
    const Image pred = downsample(conv2d_circular(x, kern), s);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - y.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

UnfoldResult run_udke(const Image& y, const UnfoldConfig& cfg, const Priors& priors) {
    validate(cfg);
    if (!priors.kernel || !priors.image) throw ParameterError("run_udke: both priors are required");
    if (cfg.k > std::min(y.height(), y.width()) * cfg.s) throw DimensionError("run_udke: kernel larger than image");

    UnfoldResult result;
    Image x = bicubic_upsample(y, cfg.s);
    Kernel kern = Kernel::flat(cfg.k);
    result.trace.initial_residual = data_residual(y, kern, x, cfg.s);

    for (int t = 1; t <= cfg.stages; ++t) {
        try {
            const StageHyperParams hp = priors.hypernet ? priors.hypernet->predict(t, cfg.stages, cfg.s, cfg.sigma255)
                                                        : fixed_schedule(t, cfg.stages, cfg.sigma255, cfg.s,
                                                                         cfg.lambda, cfg.schedule);
            StageRecord rec;
            rec.hyper = hp;

            KSolveInfo info;
            const GramSystem sys = build_gram_system(x, y, cfg.k, cfg.s);
            const Kernel k_data = solve_k_system(sys, kern, hp.alpha_k, &info);
            rec.ridge = info.ridge;
            rec.k_objective_prev = k_objective(y, kern, x, kern, hp.alpha_k);
            rec.k_objective_new = k_objective(y, k_data, x, kern, hp.alpha_k);
            kern = priors.kernel->apply(k_data, hp.beta_k);

            const Image x_data = solve_x_data(y, kern, x, hp.alpha_x, cfg.s);
            rec.x_objective_prev = x_objective(y, kern, x, x, hp.alpha_x, cfg.s);
            rec.x_objective_new = x_objective(y, kern, x_data, x, hp.alpha_x, cfg.s);
            x = priors.image->apply(x_data, hp.beta_x);

            rec.kernel = kern;
            rec.residual = data_residual(y, kern, x, cfg.s);
            if (cfg.keep_images) rec.image = x;
            result.trace.stages.push_back(std::move(rec));
        } catch (const Error&) {
            rethrow_with_stage(t);
        }
    }
    result.image = std::move(x);
    result.kernel = std::move(kern);
    return result;
}

}  // namespace bisr
