#ifndef RCMLE_MODEL_HPP
#define RCMLE_MODEL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcmle/geometry.hpp"
#include "rcmle/types.hpp"

namespace rcmle {

// ---------------------------------------------------------------------------
// Random number generation
//
// Hand-rolled so datasets are bit-reproducible across standard libraries and
// platforms. Distinct streams are derived by mixing a base seed with stream
// tags (splitmix64), which makes Monte Carlo runs order-independent.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Mixes a seed with stream tags into a stream seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag_a,
                              std::uint64_t tag_b = 0) {
    std::uint64_t s = seed ^ (0x517cc1b727220a95ULL * (tag_a + 1));
    s = splitmix64(s);
    s ^= 0xd1b54a32d192ed03ULL * (tag_b + 1);
    return splitmix64(s);
}

/// xoshiro256++ seeded via splitmix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        for (auto& word : state_) word = splitmix64(seed);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller (caches the spare deviate).
    double normal();

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Simulation scenarios
// ---------------------------------------------------------------------------

/// Two-component bivariate normal mixture used as the simulation truth:
/// equal weights, means (-1.5,-1.5) and (1.5,1.5), identity covariance.
struct MixtureTruth {
    std::array<double, 2> weights{0.5, 0.5};
    std::array<std::array<double, 2>, 2> means{{{-1.5, -1.5}, {1.5, 1.5}}};
    // identity covariance per component

    double pdf(double b0, double b1) const;
};

enum class Design { Unbounded, Bounded };

/// Data-generating scenario for the intercept model y = b0 + b1 * x1.
/// Unbounded: x1 ~ N(0,1). Bounded: x1 ~ Uniform[-0.8, 0.8].
struct Scenario {
    Design design = Design::Unbounded;
    MixtureTruth truth;
};

struct GeneratedData {
    std::vector<Observation> observations;
    std::vector<std::array<double, 2>> coefficients;  // latent (b0, b1) per row
};

/// Draws n i.i.d. observations. Pure function of (scenario, n, seed);
/// coefficient and design draws use independent streams.
GeneratedData generate(const Scenario& scenario, long n, std::uint64_t seed);

/// Mixture pdf at the cell centers (not renormalized to the window).
std::vector<double> true_density(const MixtureTruth& truth, const Grid2D& grid);

// ---------------------------------------------------------------------------
// CSV input
// ---------------------------------------------------------------------------

struct CsvSchema {
    std::string response;
    std::vector<std::string> regressors;
    bool intercept = true;
};

struct CsvResult {
    std::vector<Observation> observations;
    std::vector<std::string> warnings;  // one per rejected row, with row number
};

/// Reads comma-separated UTF-8 data with a header row. Rows with missing or
/// non-numeric fields are skipped and reported in warnings.
CsvResult load_csv(const std::string& path, const CsvSchema& schema);

} // namespace rcmle

#endif
