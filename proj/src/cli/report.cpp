#include <cmath>
#include <limits>
#include <sstream>

#include "bisr/cli.hpp"

namespace bisr::cli {

namespace {

nlohmann::json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double parse_number(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw FormatError("report: expected a number, got " + j.dump());
}

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? number(*v) : nlohmann::json(nullptr);
}

std::optional<double> parse_optional(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return parse_number(j);
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double csv_parse_number(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw FormatError("report csv: bad number '" + s + "'");
    }
    if (used != s.size()) throw FormatError("report csv: bad number '" + s + "'");
    return v;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (quoted) throw FormatError("report csv: unterminated quote");
    out.push_back(cur);
    return out;
}

constexpr const char* kReportFormat = "bisr-report/1";
constexpr const char* kCsvHeader = "name,psnr,ssim,kernel_psnr,seconds";

}  // namespace

void EvaluationReport::aggregate() {
    mean_psnr = mean_ssim = mean_seconds = 0.0;
    mean_kernel_psnr.reset();
    if (rows.empty()) return;
    double kp = 0.0;
    std::size_t kn = 0;
    for (const ImageRow& r : rows) {
        mean_psnr += r.psnr;
        mean_ssim += r.ssim;
        mean_seconds += r.seconds;
        if (r.kernel_psnr) {
            kp += *r.kernel_psnr;
            ++kn;
        }
    }
    const double n = static_cast<double>(rows.size());
    mean_psnr /= n;
    mean_ssim /= n;
    mean_seconds /= n;
    if (kn > 0) mean_kernel_psnr = kp / static_cast<double>(kn);
}

nlohmann::json to_json(const EvaluationReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const ImageRow& row : r.rows) {
        rows.push_back({{"name", row.name},
                        {"psnr", number(row.psnr)},
                        {"ssim", number(row.ssim)},
                        {"kernel_psnr", optional_number(row.kernel_psnr)},
                        {"seconds", number(row.seconds)}});
    }
    return {{"format", kReportFormat},
            {"seed", r.seed},
            {"config", r.config},
            {"rows", rows},
            {"aggregate",
             {{"psnr", number(r.mean_psnr)},
              {"ssim", number(r.mean_ssim)},
              {"kernel_psnr", optional_number(r.mean_kernel_psnr)},
              {"seconds", number(r.mean_seconds)}}}};
}

EvaluationReport report_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kReportFormat) throw FormatError("report: unknown format");
        EvaluationReport r;
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config = j.at("config");
        for (const auto& row : j.at("rows")) {
            r.rows.push_back({row.at("name").get<std::string>(), parse_number(row.at("psnr")),
                              parse_number(row.at("ssim")), parse_optional(row.at("kernel_psnr")),
                              parse_number(row.at("seconds"))});
        }
        const auto& agg = j.at("aggregate");
        r.mean_psnr = parse_number(agg.at("psnr"));
        r.mean_ssim = parse_number(agg.at("ssim"));
        r.mean_kernel_psnr = parse_optional(agg.at("kernel_psnr"));
        r.mean_seconds = parse_number(agg.at("seconds"));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report: ") + e.what());
    }
}

std::string to_csv(const EvaluationReport& r) {
    std::ostringstream os;
    os << "# seed " << r.seed << '\n';
    os << "# config " << r.config.dump() << '\n';
    os << kCsvHeader << '\n';
    auto line = [&](const std::string& name, double p, double s, const std::optional<double>& kp, double t) {
        os << csv_field(name) << ',' << csv_number(p) << ',' << csv_number(s) << ','
           << (kp ? csv_number(*kp) : std::string()) << ',' << csv_number(t) << '\n';
    };
    for (const ImageRow& row : r.rows) line(row.name, row.psnr, row.ssim, row.kernel_psnr, row.seconds);
    line("#mean", r.mean_psnr, r.mean_ssim, r.mean_kernel_psnr, r.mean_seconds);
    return os.str();
}

EvaluationReport report_from_csv(const std::string& csv) {
    EvaluationReport r;
    std::istringstream is(csv);
    std::string line;
    bool header = false, mean = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("# seed ", 0) == 0) {
            r.seed = std::stoull(line.substr(7));
            continue;
        }
        if (line.rfind("# config ", 0) == 0) {
            try {
                r.config = nlohmann::json::parse(line.substr(9));
            } catch (const nlohmann::json::exception& e) {
                throw FormatError(std::string("report csv: bad config: ") + e.what());
            }
            continue;
        }
        if (!header) {
            if (line != kCsvHeader) throw FormatError("report csv: unexpected header '" + line + "'");
            header = true;
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw FormatError("report csv: expected 5 fields in '" + line + "'");
        const std::optional<double> kp = f[3].empty() ? std::nullopt : std::optional(csv_parse_number(f[3]));
        if (f[0] == "#mean") {
            r.mean_psnr = csv_parse_number(f[1]);
            r.mean_ssim = csv_parse_number(f[2]);
            r.mean_kernel_psnr = kp;
            r.mean_seconds = csv_parse_number(f[4]);
            mean = true;
        } else {
            r.rows.push_back({f[0], csv_parse_number(f[1]), csv_parse_number(f[2]), kp, csv_parse_number(f[4])});
        }
    }
    if (!header || !mean) throw FormatError("report csv: missing header or mean row");
    return r;
}

}  // namespace bisr::cli
