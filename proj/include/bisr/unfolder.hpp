#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bisr/image.hpp"
#include "bisr/network.hpp"
#include "bisr/priors.hpp"

namespace bisr {

/// Per-stage weights: alpha_* scale the proximal terms of the two data steps,
/// beta_* are the prior strengths.
struct StageHyperParams {
    double alpha_k = 0.0;
    double alpha_x = 0.0;
    double beta_k = 0.0;
    double beta_x = 0.0;
};

/// Log-spaced penalty schedule used when no HypaNet weights are loaded.
struct ScheduleParams {
    // Tuned on synthetic Gaussian-blur cases at s = 2. Smaller mu_k lets the
    // kernel step collapse to a delta while X_0 is still the bicubic guess.
    double mu_k_start = 1e6;
    double mu_k_end = 1e7;
    double mu_x_start = 5e4;
    double mu_x_end = 1e5;
    double sigma_floor = 1e-3;  // unit-scale noise floor so alpha stays positive at sigma = 0
};

/// Stage t in [1, T]: mu log-spaced from start to end, alpha = mu * max(sigma, floor)^2
/// with sigma on the unit scale (sigma255 / 255), beta = mu / lambda. A single
/// stage uses the start values.
StageHyperParams fixed_schedule(int t, int stages, double sigma255, int s, double lambda,
                                const ScheduleParams& params = {});

/// HypaNet weights: either one network per stage with 4 outputs, one network
/// with 4*T outputs sliced per stage, or one network whose third input is the
/// stage index. Inputs are (s, sigma255 / 255[, t]); outputs are ordered
/// (alpha_X, alpha_K, beta_X, beta_K).
class HyperNetwork {
public:
    explicit HyperNetwork(std::vector<Network> nets);
    StageHyperParams predict(int t, int stages, int s, double sigma255) const;

private:
    std::vector<Network> nets_;
};

struct Priors {
    std::shared_ptr<const KernelPrior> kernel = std::make_shared<ProjectionKernelPrior>();
    std::shared_ptr<const ImagePrior> image = std::make_shared<TikhonovImagePrior>();
    std::shared_ptr<const HyperNetwork> hypernet;  // null: fixed schedule
};

struct UnfoldConfig {
    int stages = 6;
    int k = 11;
    int s = 2;
    double sigma255 = 0.0;
    double lambda = 10.0;
    ScheduleParams schedule;
    bool keep_images = false;  // store X_t in the trace
};

struct StageRecord {
    StageHyperParams hyper;
    Kernel kernel;                 // K_t after the kernel prior
    std::optional<Image> image;    // X_t after the image prior, when keep_images
    double residual = 0.0;         // ||(K_t * X_t) down - y||
    double k_objective_prev = 0.0; // kernel sub-objective at K_{t-1}
    double k_objective_new = 0.0;  // ... at K'_t
    double x_objective_prev = 0.0; // image sub-objective at X_{t-1}
    double x_objective_new = 0.0;  // ... at X'_t
    double ridge = 0.0;
};

struct UnfoldTrace {
    std::vector<StageRecord> stages;
    double initial_residual = 0.0;  // with X_0 and K_0
};

struct UnfoldResult {
    Image image;
    Kernel kernel;
    UnfoldTrace trace;
};

/// Runs the T-stage alternation: X_0 = bicubic(y), K_0 = flat; per stage the
/// kernel data step, kernel prior, image data step, image prior.
UnfoldResult run_udke(const Image& y, const UnfoldConfig& cfg, const Priors& priors = {});

/// Validates cfg; throws ParameterError.
void validate(const UnfoldConfig& cfg);

double data_residual(const Image& y, const Kernel& kern, const Image& x, int s);

}  // namespace bisr
