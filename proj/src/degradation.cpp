#include "bisr/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "bisr/error.hpp"
#include "bisr/ops.hpp"
#include "bisr/rng.hpp"

namespace bisr {

namespace {

void normalize(Kernel& k) {
    const double s = k.sum();
    for (double& v : k.data()) v /= s;
}

// Rng stream ids inside one random-kernel seed.
constexpr std::uint64_t kFieldStream = 0;
constexpr std::uint64_t kEnvelopeStream = 1;

}  // namespace

Image degrade(const Image& x_hr, const DegradationSpec& spec) {
    if (spec.scale < 1 || spec.scale > 4) throw ParameterError("degrade: scale must be in {1,2,3,4}");
    if (spec.sigma255 < 0.0) throw ParameterError("degrade: noise level must be >= 0");
    Image y = downsample(conv2d_circular(x_hr, spec.kernel), spec.scale);
    if (spec.sigma255 > 0.0) {
        const double sigma = spec.sigma255 / 255.0;
        Rng rng(spec.seed, spec.stream);
        for (double& v : y.data()) v += sigma * rng.normal();
    }
    return y;
}

Kernel gen_gaussian_kernel(int k, double sigma_x, double sigma_y, double theta) {
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) {
        throw ParameterError("gen_gaussian_kernel: widths must be positive");
    }
    Kernel out(k);
    const int r = out.radius();
    const double c = std::cos(theta), s = std::sin(theta);
    for (int row = 0; row < k; ++row)
        for (int col = 0; col < k; ++col) {
            const double dx = col - r, dy = row - r;
            const double u = c * dx + s * dy;
            const double v = -s * dx + c * dy;
            out.at(row, col) = std::exp(-0.5 * (u * u / (sigma_x * sigma_x) + v * v / (sigma_y * sigma_y)));
        }
    normalize(out);
    return out;
}

Kernel random_kernel_envelope(int k, std::uint64_t seed) {
    Rng rng(seed, kEnvelopeStream);
    const double lo = std::max(0.5, k / 8.0), hi = std::max(lo, k / 4.0);
    const double sx = rng.uniform(lo, hi);
    const double sy = rng.uniform(lo, hi);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    return gen_gaussian_kernel(k, sx, sy, theta);
}

Kernel gen_random_kernel(int k, std::uint64_t seed, double smoothness) {
    if (smoothness < 0.0) throw ParameterError("gen_random_kernel: smoothness must be >= 0");
    Kernel field(k);
    Rng rng(seed, kFieldStream);
    for (double& v : field.data()) v = rng.exponential();

    Kernel blurred = field;
    if (smoothness > 0.0) {
        // Periodic Gaussian blur on the k x k grid; as smoothness grows the
        // weights flatten and the field tends to its mean.
        const int r = field.radius();
        std::vector<double> w1(static_cast<std::size_t>(k));
        for (int d = -r; d <= r; ++d) w1[d + r] = std::exp(-0.5 * d * d / (smoothness * smoothness));
        double norm = 0.0;
        for (double v : w1) norm += v;
        for (double& v : w1) v /= norm;
        Kernel tmp(k);
        for (int row = 0; row < k; ++row)
            for (int col = 0; col < k; ++col) {
                double acc = 0.0;
                for (int d = -r; d <= r; ++d) acc += w1[d + r] * field.at(row, ((col + d) % k + k) % k);
                tmp.at(row, col) = acc;
            }
        for (int row = 0; row < k; ++row)
            for (int col = 0; col < k; ++col) {
                double acc = 0.0;
                for (int d = -r; d <= r; ++d) acc += w1[d + r] * tmp.at(((row + d) % k + k) % k, col);
                blurred.at(row, col) = acc;
            }
    }

    const Kernel envelope = random_kernel_envelope(k, seed);
    Kernel out(k);
    for (std::size_t i = 0; i < out.taps(); ++i) out.data()[i] = blurred.data()[i] * envelope.data()[i];
    normalize(out);
    return out;
}

KernelFamily parse_kernel_family(const std::string& name) {
    if (name == "gauss-iso") return KernelFamily::GaussIso;
    if (name == "gauss-aniso") return KernelFamily::GaussAniso;
    if (name == "random-nonparametric" || name == "random") return KernelFamily::RandomNonparametric;
    throw ParameterError("unknown kernel family '" + name + "'");
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::GaussIso: return "gauss-iso";
        case KernelFamily::GaussAniso: return "gauss-aniso";
        case KernelFamily::RandomNonparametric: return "random-nonparametric";
    }
    return "unknown";
}

std::vector<Kernel> gen_kernel_pool(const KernelPoolSpec& spec) {
    if (spec.count < 0) throw ParameterError("kernel pool count must be >= 0");
    if (!(spec.sigma_min > 0.0) || spec.sigma_max < spec.sigma_min) {
        throw ParameterError("kernel pool sigma range must satisfy 0 < min <= max");
    }
    std::vector<Kernel> pool;
    pool.reserve(spec.count);
    for (int i = 0; i < spec.count; ++i) {
        Rng rng(spec.seed, static_cast<std::uint64_t>(i));
        switch (spec.family) {
            case KernelFamily::GaussIso: {
                const double sigma = rng.uniform(spec.sigma_min, spec.sigma_max);
                pool.push_back(gen_gaussian_kernel(spec.k, sigma, sigma, 0.0));
                break;
            }
            case KernelFamily::GaussAniso: {
                const double sx = rng.uniform(spec.sigma_min, spec.sigma_max);
                const double sy = rng.uniform(spec.sigma_min, spec.sigma_max);
                const double theta = rng.uniform(0.0, spec.theta_max);
                pool.push_back(gen_gaussian_kernel(spec.k, sx, sy, theta));
                break;
            }
            case KernelFamily::RandomNonparametric:
                pool.push_back(gen_random_kernel(spec.k, rng.next_u64(), spec.smoothness));
                break;
        }
    }
    return pool;
}

Image gen_synthetic_image(int channels, int height, int width, std::uint64_t seed) {
    Rng rng(seed, 0);
    Image img(channels, height, width);
    const double gy = rng.uniform(-0.3, 0.3), gx = rng.uniform(-0.3, 0.3);
    std::vector<double> base(static_cast<std::size_t>(channels));
    for (double& b : base) b = rng.uniform(0.3, 0.7);
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                img.at(c, y, x) = base[c] + gy * (y / double(height) - 0.5) + gx * (x / double(width) - 0.5);

    const int shapes = 6 + static_cast<int>(rng.below(6));
    std::vector<double> color(static_cast<std::size_t>(channels));
    for (int n = 0; n < shapes; ++n) {
        const bool ellipse = rng.uniform() < 0.5;
        const double cy = rng.uniform(0.0, height), cx = rng.uniform(0.0, width);
        const double ry = rng.uniform(0.08, 0.3) * height, rx = rng.uniform(0.08, 0.3) * width;
        const double lum = rng.uniform(0.05, 0.95);
        for (double& v : color) v = std::clamp(lum + rng.uniform(-0.15, 0.15), 0.0, 1.0);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double dy = (y - cy) / ry, dx = (x - cx) / rx;
                const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                if (!inside) continue;
                for (int c = 0; c < channels; ++c) img.at(c, y, x) = color[c];
            }
    }

    const double freq = rng.uniform(0.15, 0.6), angle = rng.uniform(0.0, std::numbers::pi);
    const double amp = rng.uniform(0.02, 0.06);
    const double fy = freq * std::sin(angle), fx = freq * std::cos(angle);
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                double& v = img.at(c, y, x);
                v = std::clamp(v + amp * std::sin(fy * y + fx * x), 0.0, 1.0);
            }
    return img;
}

void write_kernel(std::ostream& os, const Kernel& kern, const std::vector<std::string>& comments) {
    const int k = kern.size();
    os << k << '\n';
    os << std::setprecision(17);
    for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c) {
            if (c) os << ' ';
            os << kern.at(r, c);
        }
        os << '\n';
    }
    for (const auto& line : comments) os << "# " << line << '\n';
}

Kernel read_kernel(std::istream& is) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;
        lines.push_back(line);
    }
    if (lines.empty()) throw FormatError("kernel file: missing size line");
    int k = 0;
    {
        std::istringstream head(lines[0]);
        if (!(head >> k) || k < 1 || k % 2 == 0) throw FormatError("kernel file: size must be an odd positive integer");
        std::string rest;
        if (head >> rest) throw FormatError("kernel file: unexpected tokens after size");
    }
    if (static_cast<int>(lines.size()) != k + 1) {
        throw FormatError("kernel file: expected " + std::to_string(k) + " rows, got " + std::to_string(lines.size() - 1));
    }
    Kernel out(k);
    for (int r = 0; r < k; ++r) {
        std::istringstream row(lines[r + 1]);
        for (int c = 0; c < k; ++c) {
            double v = 0.0;
            if (!(row >> v)) throw FormatError("kernel file: row " + std::to_string(r) + " is short");
            if (!std::isfinite(v)) throw FormatError("kernel file: non-finite tap");
            out.at(r, c) = v;
        }
        std::string rest;
        if (row >> rest) throw FormatError("kernel file: row " + std::to_string(r) + " is long");
    }
    return out;
}

void save_kernel(const std::string& path, const Kernel& kern, const std::vector<std::string>& comments) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    write_kernel(os, kern, comments);
    if (!os) throw FormatError("failed writing '" + path + "'");
}

Kernel load_kernel(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open kernel file '" + path + "'");
    return read_kernel(is);
}

}  // namespace bisr
