#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bisr/degradation.hpp"
#include "bisr/error.hpp"
#include "bisr/unfolder.hpp"

namespace bisr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolver = 1;
inline constexpr int kExitUsage = 2;

/// Bad arguments or missing inputs.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Maps an exception from a command to its exit code.
int exit_code_for(const std::exception& e) noexcept;

struct GenKernelsOptions {
    KernelPoolSpec pool;
    std::string out_dir;
    std::string prefix = "kernel";
};

struct DegradeOptions {
    std::string input;
    std::string kernel;
    std::string output;
    std::string sidecar;  // empty: <output>.json
    int scale = 2;
    double sigma255 = 0.0;
    std::uint64_t seed = 0;
};

struct EstimateOptions {
    std::string input;
    std::string output;
    std::string kernel_out;
    std::string trace_out;
    UnfoldConfig config;
    double tau = 1.0;          // Tikhonov weight of the classical image prior
    std::string netk;          // optional manifests
    std::string netx;
    std::string hypanet;
};

struct EvaluateOptions {
    std::string hr_dir;
    std::string lr_dir;       // optional: use these LR images instead of synthesizing
    std::string kernel_dir;   // optional: pool from files, else generated
    KernelPoolSpec pool;      // used when kernel_dir is empty; count is set per run
    std::string out_json;
    std::string out_csv;
    std::string save_dir;     // optional: write SR PNGs and kernels
    EstimateOptions estimate; // config, tau and network paths
    std::uint64_t seed = 0;   // noise seed; image i uses stream i
    int jobs = 1;
    bool luma = false;
    int shave = 0;
};

struct OracleCheckOptions {
    int gram_trials = 3;
    int x_trials = 3;
    std::uint64_t seed = 1;
    bool perturb = false;
};

struct BenchOptions {
    std::vector<int> sizes{64, 128, 256};
    int k = 11;
    int s = 2;
    std::uint64_t seed = 0;
    std::string out_json;
};

struct ImageRow {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
    std::optional<double> kernel_psnr;  // absent when no ground-truth kernel is known
    double seconds = 0.0;

    bool operator==(const ImageRow&) const = default;
};

struct EvaluationReport {
    std::vector<ImageRow> rows;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    std::optional<double> mean_kernel_psnr;
    double mean_seconds = 0.0;
    nlohmann::json config;
    std::uint64_t seed = 0;

    /// Recomputes the aggregate means from rows.
    void aggregate();
    bool operator==(const EvaluationReport&) const = default;
};

// Infinite values are written as the strings "inf" / "-inf".
nlohmann::json to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const nlohmann::json& j);
std::string to_csv(const EvaluationReport& r);
EvaluationReport report_from_csv(const std::string& csv);

void cmd_gen_kernels(const GenKernelsOptions& opt, std::ostream& log);
void cmd_degrade(const DegradeOptions& opt, std::ostream& log);
/// Returns the trace JSON that was written.
nlohmann::json cmd_estimate(const EstimateOptions& opt, std::ostream& log);
EvaluationReport cmd_evaluate(const EvaluateOptions& opt, std::ostream& log);
/// Returns true when every tolerance holds.
bool cmd_oracle_check(const OracleCheckOptions& opt, std::ostream& log);
nlohmann::json cmd_bench(const BenchOptions& opt, std::ostream& log);

/// Full config echo used in every output file.
nlohmann::json config_json(const UnfoldConfig& cfg);
nlohmann::json pool_json(const KernelPoolSpec& pool);

/// Sorted *.png files in dir.
std::vector<std::string> list_pngs(const std::string& dir);

}  // namespace bisr::cli
