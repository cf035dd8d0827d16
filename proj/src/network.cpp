#include "bisr/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "bisr/error.hpp"
#include "bisr/rng.hpp"

namespace bisr {

using nlohmann::json;

std::size_t Layer::weight_count() const {
    switch (kind) {
        case LayerKind::Conv: return static_cast<std::size_t>(in) * out * size * size;
        case LayerKind::FullyConnected: return static_cast<std::size_t>(in) * out;
        default: return 0;
    }
}

std::size_t Layer::bias_count() const {
    if (!has_bias) return 0;
    return kind == LayerKind::Conv || kind == LayerKind::FullyConnected ? static_cast<std::size_t>(out) : 0;
}

std::string to_string(Architecture a) {
    switch (a) {
        case Architecture::NetK: return "NET_K";
        case Architecture::NetX: return "NET_X";
        case Architecture::HypaNet: return "HYPANET";
        case Architecture::Custom: return "CUSTOM";
    }
    return "CUSTOM";
}

Architecture parse_architecture(const std::string& name) {
    if (name == "NET_K") return Architecture::NetK;
    if (name == "NET_X") return Architecture::NetX;
    if (name == "HYPANET") return Architecture::HypaNet;
    if (name == "CUSTOM") return Architecture::Custom;
    throw FormatError("unknown architecture '" + name + "'");
}

namespace {

[[noreturn]] void reject(const std::string& arch, const std::string& why) {
    throw FormatError(arch + ": " + why);
}

bool is_conv(const Layer& l, int in, int out, int size, int stride, bool transpose) {
    return l.kind == LayerKind::Conv && l.in == in && l.out == out && l.size == size && l.stride == stride &&
           l.transpose == transpose;
}

void validate_net_k(const std::vector<Layer>& layers, int input_channels) {
    const std::string arch = "NET_K";
    if (layers.size() != 10) reject(arch, "expected 3 blocks of [conv, leaky-relu, conv] and a trailing relu");
    int in = input_channels;
    for (int block = 0; block < 3; ++block) {
        const Layer& c1 = layers[block * 3];
        const Layer& act = layers[block * 3 + 1];
        const Layer& c2 = layers[block * 3 + 2];
        const int out = block == 2 ? 1 : 16;
        if (!is_conv(c1, in, 16, 3, 1, false) || c1.padding != 1) reject(arch, "block conv must be 3x3, 16 channels");
        if (act.kind != LayerKind::LeakyRelu || std::abs(act.slope - 0.01) > 1e-12) {
            reject(arch, "block activation must be leaky-relu with slope 0.01");
        }
        if (!is_conv(c2, 16, out, 3, 1, false) || c2.padding != 1) reject(arch, "block conv must be 3x3, 16 channels");
        in = out;
    }
    if (layers.back().kind != LayerKind::Relu) reject(arch, "missing trailing relu");
}

void validate_net_x(const std::vector<Layer>& layers, int input_channels, int output_channels, bool beta_input) {
    const std::string arch = "NET_X";
    std::vector<int> down_out, up_out;
    int skips = 0;
    for (const Layer& l : layers) {
        if (l.kind == LayerKind::Conv && !l.transpose && l.stride == 2) down_out.push_back(l.out);
        if (l.kind == LayerKind::Conv && l.transpose) up_out.push_back(l.out);
        if (l.kind == LayerKind::SkipAdd) ++skips;
        if (l.kind == LayerKind::FullyConnected) reject(arch, "fully connected layers are not allowed");
    }
    if (layers.empty() || layers.front().kind != LayerKind::Conv || layers.front().out != 64) {
        reject(arch, "head convolution must produce 64 channels");
    }
    if (down_out != std::vector<int>{128, 256, 512}) reject(arch, "need 3 strided downsampling convs to 128/256/512");
    if (up_out != std::vector<int>{256, 128, 64}) reject(arch, "need 3 transposed convs to 256/128/64");
    if (skips < 28) reject(arch, "need at least 28 skip connections (7 blocks x 4 residual units)");
    if (output_channels != input_channels - (beta_input ? 1 : 0)) {
        reject(arch, "output channels must equal image channels");
    }
}

void validate_hypanet(const std::vector<Layer>& layers, int input_channels) {
    const std::string arch = "HYPANET";
    if (layers.size() != 4 || layers[0].kind != LayerKind::FullyConnected || layers[1].kind != LayerKind::Relu ||
        layers[2].kind != LayerKind::FullyConnected || layers[3].kind != LayerKind::Softplus) {
        reject(arch, "expected [fc, relu, fc, softplus]");
    }
    if (input_channels != 2 && input_channels != 3) reject(arch, "inputs must be (s, sigma) or (s, sigma, stage)");
    if (layers[2].out % 4 != 0) reject(arch, "output width must be a multiple of 4");
}

double softplus(double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); }

Tensor conv_forward(const Layer& l, const Tensor& in) {
    const int k = l.size, p = l.padding, st = l.stride;
    if (!l.transpose) {
        const int ho = (in.height + 2 * p - k) / st + 1, wo = (in.width + 2 * p - k) / st + 1;
        if (ho < 1 || wo < 1 || in.height + 2 * p < k || in.width + 2 * p < k) {
            throw DimensionError("conv: input too small for kernel");
        }
        Tensor out(l.out, ho, wo);
        for (int oc = 0; oc < l.out; ++oc) {
            double* dst = out.data.data() + static_cast<std::size_t>(oc) * ho * wo;
            if (l.has_bias) std::fill(dst, dst + static_cast<std::size_t>(ho) * wo, l.biases[oc]);
            for (int ic = 0; ic < l.in; ++ic)
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        const double wv = l.weights[((static_cast<std::size_t>(oc) * l.in + ic) * k + ky) * k + kx];
                        if (wv == 0.0) continue;
                        for (int y = 0; y < ho; ++y) {
                            const int iy = y * st - p + ky;
                            if (iy < 0 || iy >= in.height) continue;
                            const double* src = in.data.data() + (static_cast<std::size_t>(ic) * in.height + iy) * in.width;
                            double* row = dst + static_cast<std::size_t>(y) * wo;
                            for (int x = 0; x < wo; ++x) {
                                const int ix = x * st - p + kx;
                                if (ix >= 0 && ix < in.width) row[x] += wv * src[ix];
                            }
                        }
                    }
        }
        return out;
    }
    const int ho = (in.height - 1) * st - 2 * p + k, wo = (in.width - 1) * st - 2 * p + k;
    if (ho < 1 || wo < 1) throw DimensionError("transposed conv: empty output");
    Tensor out(l.out, ho, wo);
    for (int oc = 0; oc < l.out; ++oc) {
        if (!l.has_bias) continue;
        std::fill(out.data.begin() + static_cast<std::ptrdiff_t>(oc) * ho * wo,
                  out.data.begin() + static_cast<std::ptrdiff_t>(oc + 1) * ho * wo, l.biases[oc]);
    }
    for (int ic = 0; ic < l.in; ++ic)
        for (int oc = 0; oc < l.out; ++oc)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = l.weights[((static_cast<std::size_t>(ic) * l.out + oc) * k + ky) * k + kx];
                    if (wv == 0.0) continue;
                    for (int y = 0; y < in.height; ++y) {
                        const int oy = y * st - p + ky;
                        if (oy < 0 || oy >= ho) continue;
                        for (int x = 0; x < in.width; ++x) {
                            const int ox = x * st - p + kx;
                            if (ox >= 0 && ox < wo) out.at(oc, oy, ox) += wv * in.at(ic, y, x);
                        }
                    }
                }
    return out;
}

Tensor fc_forward(const Layer& l, const Tensor& in) {
    if (static_cast<int>(in.data.size()) != l.in) throw DimensionError("fc: input width mismatch");
    Tensor out(l.out, 1, 1);
    for (int o = 0; o < l.out; ++o) {
        double acc = l.has_bias ? l.biases[o] : 0.0;
        for (int i = 0; i < l.in; ++i) acc += l.weights[static_cast<std::size_t>(o) * l.in + i] * in.data[i];
        out.data[o] = acc;
    }
    return out;
}

json layer_to_json(const Layer& l) {
    switch (l.kind) {
        case LayerKind::Conv:
            return {{"type", "conv"}, {"in", l.in},         {"out", l.out},          {"size", l.size},
                    {"stride", l.stride}, {"padding", l.padding}, {"transpose", l.transpose}, {"bias", l.has_bias}};
        case LayerKind::FullyConnected: return {{"type", "fc"}, {"in", l.in}, {"out", l.out}, {"bias", l.has_bias}};
        case LayerKind::LeakyRelu: return {{"type", "leaky_relu"}, {"slope", l.slope}};
        case LayerKind::Relu: return {{"type", "relu"}};
        case LayerKind::Softplus: return {{"type", "softplus"}};
        case LayerKind::SkipAdd: return {{"type", "skip_add"}, {"source", l.source}};
    }
    return {};
}

Layer layer_from_json(const json& j) {
    Layer l;
    const std::string type = j.at("type").get<std::string>();
    if (type == "conv") {
        l.kind = LayerKind::Conv;
        l.in = j.at("in").get<int>();
        l.out = j.at("out").get<int>();
        l.size = j.at("size").get<int>();
        l.stride = j.value("stride", 1);
        l.padding = j.value("padding", 0);
        l.transpose = j.value("transpose", false);
        l.has_bias = j.value("bias", true);
    } else if (type == "fc") {
        l.kind = LayerKind::FullyConnected;
        l.in = j.at("in").get<int>();
        l.out = j.at("out").get<int>();
        l.has_bias = j.value("bias", true);
    } else if (type == "leaky_relu") {
        l.kind = LayerKind::LeakyRelu;
        l.slope = j.value("slope", 0.01);
    } else if (type == "relu") {
        l.kind = LayerKind::Relu;
    } else if (type == "softplus") {
        l.kind = LayerKind::Softplus;
    } else if (type == "skip_add") {
        l.kind = LayerKind::SkipAdd;
        l.source = j.at("source").get<int>();
    } else {
        throw FormatError("unknown layer kind '" + type + "'");
    }
    return l;
}

float read_le_float(const std::byte* p) {
    std::uint32_t bits = 0;
    for (int i = 3; i >= 0; --i) bits = (bits << 8) | std::to_integer<std::uint32_t>(p[i]);
    return std::bit_cast<float>(bits);
}

void append_le_float(std::vector<char>& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

}  // namespace

Network::Network(Architecture arch, int input_channels, bool beta_input, std::vector<Layer> layers)
    : arch_(arch), input_channels_(input_channels), beta_input_(beta_input), layers_(std::move(layers)) {
    if (input_channels_ < 1) throw FormatError("network: input channel count must be positive");
    if (layers_.empty()) throw FormatError("network: no layers");

    // Channel propagation; fully connected layers see the flattened width.
    std::vector<int> out_ch(layers_.size());
    int ch = input_channels_;
    keep_output_.assign(layers_.size(), false);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        if (l.weights.size() != l.weight_count() || l.biases.size() != l.bias_count()) {
            throw FormatError("network: layer " + std::to_string(i) + " weight count does not match its shape");
        }
        for (double v : l.weights)
            if (!std::isfinite(v)) throw FormatError("network: non-finite weight in layer " + std::to_string(i));
        for (double v : l.biases)
            if (!std::isfinite(v)) throw FormatError("network: non-finite bias in layer " + std::to_string(i));
        switch (l.kind) {
            case LayerKind::Conv:
            case LayerKind::FullyConnected:
                if (l.in != ch) {
                    throw FormatError("network: layer " + std::to_string(i) + " expects " + std::to_string(l.in) +
                                      " channels, receives " + std::to_string(ch));
                }
                if (l.out < 1) throw FormatError("network: layer " + std::to_string(i) + " has no outputs");
                if (l.kind == LayerKind::Conv && (l.size < 1 || l.stride < 1 || l.padding < 0)) {
                    throw FormatError("network: layer " + std::to_string(i) + " has invalid conv geometry");
                }
                ch = l.out;
                break;
            case LayerKind::SkipAdd: {
                if (l.source < -1 || l.source >= static_cast<int>(i)) {
                    throw FormatError("network: skip_add at " + std::to_string(i) + " references a later layer");
                }
                const int src_ch = l.source < 0 ? input_channels_ : out_ch[l.source];
                if (src_ch != ch) throw FormatError("network: skip_add at " + std::to_string(i) + " channel mismatch");
                if (l.source >= 0) keep_output_[l.source] = true;
                break;
            }
            default: break;
        }
        out_ch[i] = ch;
    }
    output_channels_ = ch;

    switch (arch_) {
        case Architecture::NetK: validate_net_k(layers_, input_channels_); break;
        case Architecture::NetX: validate_net_x(layers_, input_channels_, output_channels_, beta_input_); break;
        case Architecture::HypaNet: validate_hypanet(layers_, input_channels_); break;
        case Architecture::Custom: break;
    }
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += l.weight_count() + l.bias_count();
    return n;
}

Tensor Network::forward(const Tensor& input) const {
    if (input.channels != input_channels_ && !(layers_.front().kind == LayerKind::FullyConnected &&
                                               static_cast<int>(input.data.size()) == input_channels_)) {
        throw DimensionError("network: input has " + std::to_string(input.channels) + " channels, expected " +
                             std::to_string(input_channels_));
    }
    std::vector<Tensor> saved(layers_.size());
    Tensor cur = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        switch (l.kind) {
            case LayerKind::Conv: cur = conv_forward(l, cur); break;
            case LayerKind::FullyConnected: cur = fc_forward(l, cur); break;
            case LayerKind::Relu:
                for (double& v : cur.data) v = std::max(v, 0.0);
                break;
            case LayerKind::LeakyRelu:
                for (double& v : cur.data) v = v >= 0.0 ? v : l.slope * v;
                break;
            case LayerKind::Softplus:
                for (double& v : cur.data) v = softplus(v);
                break;
            case LayerKind::SkipAdd: {
                const Tensor& src = l.source < 0 ? input : saved[l.source];
                if (src.data.size() != cur.data.size() || src.height != cur.height || src.width != cur.width) {
                    throw DimensionError("network: skip_add spatial shape mismatch at layer " + std::to_string(i));
                }
                for (std::size_t j = 0; j < cur.data.size(); ++j) cur.data[j] += src.data[j];
                break;
            }
        }
        if (keep_output_[i]) saved[i] = cur;
    }
    return cur;
}

std::vector<Network> load_networks(const json& manifest, std::span<const std::byte> blob) {
    try {
        if (manifest.value("format", std::string{}) != kManifestFormat) {
            throw FormatError("manifest: format must be '" + std::string(kManifestFormat) + "'");
        }
        const Architecture arch = parse_architecture(manifest.at("architecture").get<std::string>());
        const int input_channels = manifest.at("input_channels").get<int>();
        const bool beta_input = manifest.value("beta_input", false);
        const int stages = manifest.value("stages", 1);
        const std::size_t stage_floats = manifest.at("stage_floats").get<std::size_t>();
        if (stages < 1) throw FormatError("manifest: stages must be >= 1");
        if (blob.size() != static_cast<std::size_t>(stages) * stage_floats * 4) {
            throw FormatError("manifest: blob holds " + std::to_string(blob.size()) + " bytes, expected " +
                              std::to_string(static_cast<std::size_t>(stages) * stage_floats * 4));
        }

        std::vector<Layer> shape;
        std::vector<std::pair<std::size_t, std::size_t>> offsets;
        std::size_t declared = 0;
        for (const json& jl : manifest.at("layers")) {
            Layer l = layer_from_json(jl);
            const std::size_t wo = jl.value("weight_offset", std::size_t{0});
            const std::size_t bo = jl.value("bias_offset", std::size_t{0});
            if (wo + l.weight_count() > stage_floats || bo + l.bias_count() > stage_floats) {
                throw FormatError("manifest: layer weights exceed the stage blob (truncated blob?)");
            }
            declared += l.weight_count() + l.bias_count();
            offsets.emplace_back(wo, bo);
            shape.push_back(std::move(l));
        }
        if (declared != stage_floats) {
            throw FormatError("manifest: layers declare " + std::to_string(declared) + " floats, stage_floats is " +
                              std::to_string(stage_floats));
        }

        std::vector<Network> nets;
        for (int st = 0; st < stages; ++st) {
            const std::byte* base = blob.data() + static_cast<std::size_t>(st) * stage_floats * 4;
            std::vector<Layer> layers = shape;
            for (std::size_t i = 0; i < layers.size(); ++i) {
                Layer& l = layers[i];
                l.weights.resize(l.weight_count());
                l.biases.resize(l.bias_count());
                for (std::size_t j = 0; j < l.weights.size(); ++j)
                    l.weights[j] = read_le_float(base + (offsets[i].first + j) * 4);
                for (std::size_t j = 0; j < l.biases.size(); ++j)
                    l.biases[j] = read_le_float(base + (offsets[i].second + j) * 4);
            }
            nets.emplace_back(arch, input_channels, beta_input, std::move(layers));
        }
        return nets;
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
}

std::vector<Network> load_networks(const std::string& manifest_path) {
    std::ifstream ms(manifest_path);
    if (!ms) throw FormatError("cannot open manifest '" + manifest_path + "'");
    json manifest;
    try {
        ms >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("manifest '" + manifest_path + "': " + e.what());
    }
    const std::filesystem::path blob_path =
        std::filesystem::path(manifest_path).parent_path() / manifest.at("blob").get<std::string>();
    std::ifstream bs(blob_path, std::ios::binary);
    if (!bs) throw FormatError("cannot open blob '" + blob_path.string() + "'");
    std::vector<char> raw((std::istreambuf_iterator<char>(bs)), std::istreambuf_iterator<char>());
    return load_networks(manifest, std::as_bytes(std::span(raw)));
}

Network load_network(const std::string& manifest_path) {
    auto nets = load_networks(manifest_path);
    if (nets.size() != 1) throw FormatError("manifest '" + manifest_path + "' holds several stages");
    return std::move(nets.front());
}

void save_networks(const std::vector<Network>& nets, const std::string& manifest_path, const std::string& blob_path) {
    if (nets.empty()) throw ParameterError("save_networks: nothing to save");
    const Network& first = nets.front();
    json layers = json::array();
    std::size_t offset = 0;
    for (const Layer& l : first.layers()) {
        json jl = layer_to_json(l);
        if (l.weight_count() + l.bias_count() > 0) {
            jl["weight_offset"] = offset;
            offset += l.weight_count();
            jl["bias_offset"] = offset;
            offset += l.bias_count();
        }
        layers.push_back(std::move(jl));
    }
    std::vector<char> blob;
    for (const Network& net : nets) {
        if (net.layers().size() != first.layers().size()) throw ParameterError("save_networks: layer lists differ");
        for (const Layer& l : net.layers()) {
            for (double v : l.weights) append_le_float(blob, v);
            for (double v : l.biases) append_le_float(blob, v);
        }
    }
    const json manifest = {{"format", kManifestFormat},
                           {"architecture", to_string(first.architecture())},
                           {"input_channels", first.input_channels()},
                           {"beta_input", first.beta_input()},
                           {"stages", nets.size()},
                           {"stage_floats", offset},
                           {"blob", std::filesystem::path(blob_path).filename().string()},
                           {"layers", layers}};
    std::ofstream ms(manifest_path);
    if (!ms) throw FormatError("cannot write manifest '" + manifest_path + "'");
    ms << manifest.dump(2) << '\n';
    std::ofstream bs(blob_path, std::ios::binary);
    if (!bs) throw FormatError("cannot write blob '" + blob_path + "'");
    bs.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

namespace {

Layer conv_layer(int in, int out, int size, int stride, int padding, bool transpose = false) {
    Layer l;
    l.kind = LayerKind::Conv;
    l.in = in;
    l.out = out;
    l.size = size;
    l.stride = stride;
    l.padding = padding;
    l.transpose = transpose;
    l.weights.assign(l.weight_count(), 0.0);
    l.biases.assign(l.bias_count(), 0.0);
    return l;
}

Layer simple_layer(LayerKind kind, double slope = 0.0) {
    Layer l;
    l.kind = kind;
    l.slope = slope;
    return l;
}

Layer skip_layer(int source) {
    Layer l;
    l.kind = LayerKind::SkipAdd;
    l.source = source;
    return l;
}

Layer fc_layer(int in, int out) {
    Layer l;
    l.kind = LayerKind::FullyConnected;
    l.in = in;
    l.out = out;
    l.weights.assign(l.weight_count(), 0.0);
    l.biases.assign(l.bias_count(), 0.0);
    return l;
}

}  // namespace

Network make_net_k(bool beta_input) {
    std::vector<Layer> layers;
    int in = beta_input ? 2 : 1;
    for (int block = 0; block < 3; ++block) {
        layers.push_back(conv_layer(in, 16, 3, 1, 1));
        layers.push_back(simple_layer(LayerKind::LeakyRelu, 0.01));
        layers.push_back(conv_layer(16, block == 2 ? 1 : 16, 3, 1, 1));
        in = 16;
    }
    layers.push_back(simple_layer(LayerKind::Relu));
    return Network(Architecture::NetK, beta_input ? 2 : 1, beta_input, std::move(layers));
}

Network make_net_x(int image_channels, bool beta_input, int residual_units) {
    std::vector<Layer> layers;
    auto last = [&] { return static_cast<int>(layers.size()) - 1; };
    auto residual_block = [&](int ch) {
        for (int u = 0; u < residual_units; ++u) {
            const int entry = last();
            layers.push_back(conv_layer(ch, ch, 3, 1, 1));
            layers.push_back(simple_layer(LayerKind::Relu));
            layers.push_back(conv_layer(ch, ch, 3, 1, 1));
            layers.push_back(skip_layer(entry));
        }
    };
    const int in = image_channels + (beta_input ? 1 : 0);
    layers.push_back(conv_layer(in, 64, 3, 1, 1));
    const int head = last();
    residual_block(64);
    const int enc1 = last();
    layers.push_back(conv_layer(64, 128, 2, 2, 0));
    residual_block(128);
    const int enc2 = last();
    layers.push_back(conv_layer(128, 256, 2, 2, 0));
    residual_block(256);
    const int enc3 = last();
    layers.push_back(conv_layer(256, 512, 2, 2, 0));
    residual_block(512);
    layers.push_back(conv_layer(512, 256, 2, 2, 0, true));
    layers.push_back(skip_layer(enc3));
    residual_block(256);
    layers.push_back(conv_layer(256, 128, 2, 2, 0, true));
    layers.push_back(skip_layer(enc2));
    residual_block(128);
    layers.push_back(conv_layer(128, 64, 2, 2, 0, true));
    layers.push_back(skip_layer(enc1));
    residual_block(64);
    layers.push_back(skip_layer(head));
    layers.push_back(conv_layer(64, image_channels, 3, 1, 1));
    return Network(Architecture::NetX, in, beta_input, std::move(layers));
}

Network make_hypanet(int inputs, int hidden, int outputs) {
    std::vector<Layer> layers;
    layers.push_back(fc_layer(inputs, hidden));
    layers.push_back(simple_layer(LayerKind::Relu));
    layers.push_back(fc_layer(hidden, outputs));
    layers.push_back(simple_layer(LayerKind::Softplus));
    return Network(Architecture::HypaNet, inputs, false, std::move(layers));
}

Network randomized(const Network& net, std::uint64_t seed, double scale) {
    Rng rng(seed);
    std::vector<Layer> layers = net.layers();
    for (Layer& l : layers) {
        for (double& v : l.weights) v = static_cast<float>(rng.uniform(-scale, scale));
        for (double& v : l.biases) v = static_cast<float>(rng.uniform(-scale, scale));
    }
    return Network(net.architecture(), net.input_channels(), net.beta_input(), std::move(layers));
}

}  // namespace bisr
