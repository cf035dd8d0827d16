#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace bisr {

/// Dense C x H x W activation. Fully connected stages use H = W = 1.
struct Tensor {
    int channels = 0;
    int height = 1;
    int width = 1;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

enum class LayerKind { Conv, LeakyRelu, Relu, FullyConnected, SkipAdd, Softplus };

/// One node of a feed-forward graph. Weight layouts follow the common
/// convention: conv [out][in][size][size], transposed conv [in][out][size][size],
/// fully connected [out][in]; biases [out].
struct Layer {
    LayerKind kind = LayerKind::Relu;
    int in = 0;
    int out = 0;
    int size = 0;
    int stride = 1;
    int padding = 0;
    bool transpose = false;
    bool has_bias = true;
    double slope = 0.0;  // leaky relu
    int source = -1;     // skip-add: index of the layer whose output is added, -1 = network input
    std::vector<double> weights;
    std::vector<double> biases;

    std::size_t weight_count() const;
    std::size_t bias_count() const;
};

enum class Architecture { NetK, NetX, HypaNet, Custom };

std::string to_string(Architecture a);
Architecture parse_architecture(const std::string& name);

/// Immutable forward-only network. Construction validates channel consistency
/// and, for the registered architectures, the expected layer structure.
class Network {
public:
    Network(Architecture arch, int input_channels, bool beta_input, std::vector<Layer> layers);

    Architecture architecture() const noexcept { return arch_; }
    int input_channels() const noexcept { return input_channels_; }
    int output_channels() const noexcept { return output_channels_; }
    /// When true the last input channel (or feature) carries the prior weight beta.
    bool beta_input() const noexcept { return beta_input_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::size_t parameter_count() const;

    Tensor forward(const Tensor& input) const;

private:
    Architecture arch_;
    int input_channels_;
    int output_channels_ = 0;
    bool beta_input_;
    std::vector<Layer> layers_;
    std::vector<bool> keep_output_;
};

// Manifest + blob format: see docs/formats.md.
inline constexpr const char* kManifestFormat = "bisr-net/1";

/// Parses a manifest and its little-endian float32 blob. A manifest may hold
/// `stages` consecutive weight sets for the same layer list; one Network is
/// returned per set.
std::vector<Network> load_networks(const nlohmann::json& manifest, std::span<const std::byte> blob);
std::vector<Network> load_networks(const std::string& manifest_path);
Network load_network(const std::string& manifest_path);

/// Writes manifest JSON and blob; every network must share one layer list.
void save_networks(const std::vector<Network>& nets, const std::string& manifest_path, const std::string& blob_path);

// Registered layer lists with zero weights.
Network make_net_k(bool beta_input = true);
Network make_net_x(int image_channels, bool beta_input = true, int residual_units = 4);
Network make_hypanet(int inputs = 2, int hidden = 64, int outputs = 4);

/// Copy of `net` with every weight and bias drawn uniformly from [-scale, scale]
/// and rounded to float32.
Network randomized(const Network& net, std::uint64_t seed, double scale);

}  // namespace bisr
