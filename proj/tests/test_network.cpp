#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "bisr/error.hpp"
#include "bisr/network.hpp"
#include "bisr/rng.hpp"
#include "net_oracle.hpp"

using namespace bisr;
using namespace bisr::testing;
namespace fs = std::filesystem;

namespace {

Tensor random_tensor(int c, int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(c, h, w);
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bisr_net_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Layer conv(int in, int out, int size, int stride, int pad, bool transpose = false) {
    Layer l;
    l.kind = LayerKind::Conv;
    l.in = in;
    l.out = out;
    l.size = size;
    l.stride = stride;
    l.padding = pad;
    l.transpose = transpose;
    l.weights.assign(l.weight_count(), 0.0);
    l.biases.assign(l.bias_count(), 0.0);
    return l;
}

}  // namespace

TEST_CASE("NET_K with zero weights outputs zero") {
    const Network net = make_net_k();
    CHECK(net.input_channels() == 2);
    const Tensor out = net.forward(random_tensor(2, 11, 11, 1));
    CHECK(out.channels == 1);
    CHECK(out.height == 11);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("delta-filter conv is the identity") {
    Layer l = conv(3, 3, 3, 1, 1);
    for (int c = 0; c < 3; ++c) l.weights[((c * 3 + c) * 3 + 1) * 3 + 1] = 1.0;
    const Network net(Architecture::Custom, 3, false, {l});
    const Tensor in = random_tensor(3, 5, 7, 2);
    CHECK(net.forward(in).data == in.data);
}

TEST_CASE("random NET_K matches the direct-summation oracle") {
    const Network net = randomized(make_net_k(), 3, 0.3);
    const Tensor in = random_tensor(2, 11, 11, 4);
    CHECK(max_rel_diff(net.forward(in), oracle_forward(net, in)) <= 1e-5);
}

TEST_CASE("strided and transposed convs match the oracle") {
    std::vector<Layer> layers{conv(2, 4, 3, 2, 1), conv(4, 2, 2, 2, 0, true), conv(2, 3, 3, 1, 0), conv(3, 2, 4, 3, 1, true)};
    Rng rng(5);
    for (Layer& l : layers) {
        for (double& v : l.weights) v = static_cast<float>(rng.uniform(-1, 1));
        for (double& v : l.biases) v = static_cast<float>(rng.uniform(-1, 1));
    }
    const Network net(Architecture::Custom, 2, false, layers);
    const Tensor in = random_tensor(2, 9, 8, 6);
    const Tensor out = net.forward(in);
    const Tensor ref = oracle_forward(net, in);
    REQUIRE(out.height == ref.height);
    REQUIRE(out.width == ref.width);
    CHECK(max_rel_diff(out, ref) <= 1e-12);
}

TEST_CASE("NET_X registered structure and forward") {
    const Network zero = make_net_x(1, true, 4);
    int skips = 0, down = 0, up = 0;
    for (const Layer& l : zero.layers()) {
        skips += l.kind == LayerKind::SkipAdd;
        down += l.kind == LayerKind::Conv && l.stride == 2 && !l.transpose;
        up += l.kind == LayerKind::Conv && l.transpose;
    }
    CHECK(down == 3);
    CHECK(up == 3);
    CHECK(skips >= 28);
    CHECK(zero.output_channels() == 1);

    const Network net = randomized(make_net_x(1, true, 4), 7, 0.05);
    const Tensor in = random_tensor(2, 8, 8, 8);
    CHECK(max_rel_diff(net.forward(in), oracle_forward(net, in)) <= 1e-5);
}

TEST_CASE("HYPANET output is positive") {
    const Network net = randomized(make_hypanet(2, 64, 24), 9, 0.5);
    Tensor in(2, 1, 1);
    in.data = {2.0, 0.01};
    const Tensor out = net.forward(in);
    CHECK(out.data.size() == 24);
    for (double v : out.data) CHECK(v > 0.0);
    CHECK(max_rel_diff(out, oracle_forward(net, in)) <= 1e-12);
    CHECK_THROWS_AS(make_hypanet(2, 8, 5), FormatError);
    CHECK_THROWS_AS(make_hypanet(4, 8, 4), FormatError);
}

TEST_CASE("forward is deterministic") {
    const Network net = randomized(make_net_k(), 10, 0.3);
    const Tensor in = random_tensor(2, 11, 11, 11);
    CHECK(net.forward(in).data == net.forward(in).data);
}

TEST_CASE("construction validates structure") {
    Layer bad = conv(2, 3, 3, 1, 1);
    bad.weights.pop_back();
    CHECK_THROWS_AS(Network(Architecture::Custom, 2, false, {bad}), FormatError);
    CHECK_THROWS_AS(Network(Architecture::Custom, 3, false, {conv(2, 3, 3, 1, 1)}), FormatError);
    Layer nan = conv(1, 1, 1, 1, 0);
    nan.weights[0] = std::nan("");
    CHECK_THROWS_AS(Network(Architecture::Custom, 1, false, {nan}), FormatError);
    Layer skip;
    skip.kind = LayerKind::SkipAdd;
    skip.source = 0;
    CHECK_THROWS_AS(Network(Architecture::Custom, 1, false, {skip}), FormatError);
    CHECK_THROWS_AS(Network(Architecture::NetK, 2, true, {conv(2, 16, 3, 1, 1)}), FormatError);
    CHECK_THROWS_AS(make_net_k().forward(random_tensor(3, 11, 11, 0)), DimensionError);
}

TEST_CASE("manifest round trip, multi-stage") {
    const fs::path dir = scratch_dir("roundtrip");
    const std::vector<Network> nets{randomized(make_hypanet(2, 8, 4), 1, 1.0), randomized(make_hypanet(2, 8, 4), 2, 1.0)};
    save_networks(nets, (dir / "h.json").string(), (dir / "h.bin").string());
    const auto back = load_networks((dir / "h.json").string());
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].architecture() == Architecture::HypaNet);
        for (std::size_t j = 0; j < nets[i].layers().size(); ++j) {
            CHECK(back[i].layers()[j].weights == nets[i].layers()[j].weights);
            CHECK(back[i].layers()[j].biases == nets[i].layers()[j].biases);
        }
    }
    CHECK_THROWS_AS(load_network((dir / "h.json").string()), FormatError);
    CHECK(fs::file_size(dir / "h.bin") == 2 * back[0].parameter_count() * 4);
}

TEST_CASE("blob is little-endian float32") {
    Layer l;
    l.kind = LayerKind::FullyConnected;
    l.in = 1;
    l.out = 1;
    l.weights = {1.0};
    l.biases = {-2.0};
    const fs::path dir = scratch_dir("endian");
    save_networks({Network(Architecture::Custom, 1, false, {l})}, (dir / "n.json").string(), (dir / "n.bin").string());
    std::ifstream is(dir / "n.bin", std::ios::binary);
    unsigned char bytes[8];
    is.read(reinterpret_cast<char*>(bytes), 8);
    const unsigned char expect[8] = {0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
    CHECK(std::memcmp(bytes, expect, 8) == 0);
}

TEST_CASE("manifest errors") {
    const fs::path dir = scratch_dir("errors");
    save_networks({randomized(make_net_k(), 1, 0.1)}, (dir / "k.json").string(), (dir / "k.bin").string());
    std::ifstream ms(dir / "k.json");
    nlohmann::json manifest;
    ms >> manifest;
    std::ifstream bs(dir / "k.bin", std::ios::binary);
    std::vector<char> raw((std::istreambuf_iterator<char>(bs)), std::istreambuf_iterator<char>());
    const auto blob = std::as_bytes(std::span(raw));

    CHECK(load_networks(manifest, blob).size() == 1);
    CHECK_THROWS_AS(load_networks(manifest, blob.first(blob.size() - 4)), FormatError);
    nlohmann::json unknown = manifest;
    unknown["layers"][1]["type"] = "maxpool";
    CHECK_THROWS_AS(load_networks(unknown, blob), FormatError);
    nlohmann::json shape = manifest;
    shape["layers"][0]["out"] = 8;
    CHECK_THROWS_AS(load_networks(shape, blob), FormatError);
    nlohmann::json format = manifest;
    format["format"] = "other";
    CHECK_THROWS_AS(load_networks(format, blob), FormatError);
    nlohmann::json arch = manifest;
    arch["architecture"] = "RESNET";
    CHECK_THROWS_AS(load_networks(arch, blob), FormatError);
    CHECK_THROWS_AS(load_networks((dir / "missing.json").string()), FormatError);
}
