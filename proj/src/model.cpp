#include "rcmle/model.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

namespace rcmle {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double MixtureTruth::pdf(double b0, double b1) const {
    constexpr double inv_2pi = 1.0 / (2.0 * std::numbers::pi);
    double value = 0.0;
    for (int c = 0; c < 2; ++c) {
        const double d0 = b0 - means[c][0];
        const double d1 = b1 - means[c][1];
        value += weights[c] * inv_2pi * std::exp(-0.5 * (d0 * d0 + d1 * d1));
    }
    return value;
}

namespace {
constexpr std::uint64_t kStreamCoefficients = 0x636f6566ULL;  // "coef"
constexpr std::uint64_t kStreamDesign = 0x64736774ULL;        // "dsgt"
} // namespace

GeneratedData generate(const Scenario& scenario, long n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("generate: n must be >= 1");
    Rng rng_coef(mix_seed(seed, kStreamCoefficients));
    Rng rng_design(mix_seed(seed, kStreamDesign));

    GeneratedData data;
    data.observations.reserve(static_cast<std::size_t>(n));
    data.coefficients.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        const int comp = rng_coef.uniform() < scenario.truth.weights[0] ? 0 : 1;
        const double b0 = scenario.truth.means[comp][0] + rng_coef.normal();
        const double b1 = scenario.truth.means[comp][1] + rng_coef.normal();
        const double x1 = scenario.design == Design::Unbounded
                              ? rng_design.normal()
                              : rng_design.uniform(-0.8, 0.8);
        Observation obs;
        obs.y = b0 + b1 * x1;
        obs.x = {1.0, x1};
        data.observations.push_back(std::move(obs));
        data.coefficients.push_back({b0, b1});
    }
    return data;
}

std::vector<double> true_density(const MixtureTruth& truth, const Grid2D& grid) {
    std::vector<double> values(static_cast<std::size_t>(grid.num_cells()));
    for (int j = 0; j < grid.num_cells(); ++j) {
        const auto c = grid.center(j);
        values[static_cast<std::size_t>(j)] = truth.pdf(c[0], c[1]);
    }
    return values;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

bool parse_double(const std::string& text, double& out) {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    out = std::strtod(begin, &end);
    if (end == begin || errno == ERANGE) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0' && std::isfinite(out);
}

} // namespace

CsvResult load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty input file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line);
    auto column_of = [&](const std::string& name) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return c;
        throw ConfigError("column '" + name + "' not found in " + path);
    };
    const std::size_t y_col = column_of(schema.response);
    std::vector<std::size_t> x_cols;
    for (const std::string& name : schema.regressors)
        x_cols.push_back(column_of(name));

    CsvResult result;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);

        Observation obs;
        if (schema.intercept) obs.x.push_back(1.0);
        bool ok = fields.size() > y_col && parse_double(fields[y_col], obs.y);
        for (std::size_t c : x_cols) {
            double v = 0.0;
            ok = ok && fields.size() > c && parse_double(fields[c], v);
            if (ok) obs.x.push_back(v);
        }
        if (!ok) {
            result.warnings.push_back("row " + std::to_string(row) +
                                      ": missing or non-numeric field, skipped");
            continue;
        }
        result.observations.push_back(std::move(obs));
    }
    if (result.observations.empty())
        throw std::runtime_error("no valid data rows in " + path);
    return result;
}

} // namespace rcmle
