#ifndef RCMLE_SIMULATION_HPP
#define RCMLE_SIMULATION_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rcmle/kernel.hpp"
#include "rcmle/lepskii.hpp"
#include "rcmle/model.hpp"
#include "rcmle/objective.hpp"
#include "rcmle/solver.hpp"

namespace rcmle {

/// Integrated squared error sum_j (fhat_j - f_j)^2 * cell_area.
double ise(const DensityEstimate& estimate, std::span<const double> truth_values);

struct RmleStudyOptions {
    RegularizerKind kind = RegularizerKind::L2;
    double c_l = 1.0;
    double ratio = 1.5;
    int path_length = 12;
    LepskiiOptions lepskii;
    SolveOptions solve;
};

struct KernelStudyOptions {
    std::vector<double> h_grid;  // empty: default geometric grid on [0.05, 2]
    Taper taper = Taper::Cosine;
};

struct StudyConfig {
    Scenario scenario;
    std::vector<long> sample_sizes{500, 1000, 1500, 3000, 10000};
    int runs = 20;
    bool run_rmle = true;
    bool run_kernel = false;
    Grid2D grid;  // default: see default_study_grid()
    std::uint64_t seed = 1;
    RmleStudyOptions rmle;
    KernelStudyOptions kernel;
    int workers = 1;
};

/// [-4.5, 4.5]^2 with 19 x 19 cells.
Grid2D default_study_grid();

struct RunRecord {
    int run = 0;
    double ise = 0.0;
    double parameter = 0.0;  // selected alpha (rmle) or bandwidth (kernel)
    bool converged = false;
    int iterations = 0;
    bool failed = false;
    std::string error;
};

struct EstimatorStats {
    std::string estimator;  // "rmle" or "kernel"
    long n = 0;
    std::vector<RunRecord> runs;
    double mise = 0.0;
    double var_ise = 0.0;  // unbiased sample variance; 0 for a single run
    bool single_run = false;
    int failed_runs = 0;
};

struct SimulationReport {
    std::vector<EstimatorStats> blocks;  // ordered (estimator, n)
    double wall_time_sec = 0.0;
};

/// Runs the Monte Carlo study. Deterministic given the config: run r at
/// sample size n draws from the stream mix_seed(seed, n, r), so results do
/// not depend on execution order or worker count.
SimulationReport run_study(const StudyConfig& config);

std::string report_to_json(const SimulationReport& report,
                           const StudyConfig& config);

/// Plain-text table: one row per n, MISE and Variance (ISE) per estimator.
std::string report_to_table(const SimulationReport& report);

} // namespace rcmle

#endif
