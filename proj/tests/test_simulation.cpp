#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rcmle/simulation.hpp"

using namespace rcmle;

TEST_CASE("ise identity, baseline constant, and quadratic scaling") {
    const Grid2D grid = default_study_grid();
    const MixtureTruth truth;
    const std::vector<double> truth_values = true_density(truth, grid);

    DensityEstimate exact;
    exact.grid = grid;
    exact.values = truth_values;
    CHECK(ise(exact, truth_values) == 0.0);

    DensityEstimate uniform;
    uniform.grid = grid;
    uniform.values.assign(static_cast<std::size_t>(grid.num_cells()), 1.0 / 81.0);
    double expected = 0.0;
    for (double v : truth_values)
        expected += (1.0 / 81.0 - v) * (1.0 / 81.0 - v) * grid.cell_area;
    const double baseline = ise(uniform, truth_values);
    CHECK(baseline == doctest::Approx(expected).epsilon(1e-12));
    CHECK(baseline > 0.0);

    // scaling the deviation by c scales ISE by c^2
    DensityEstimate scaled;
    scaled.grid = grid;
    scaled.values.resize(truth_values.size());
    const double c = 3.0;
    for (std::size_t j = 0; j < truth_values.size(); ++j)
        scaled.values[j] = truth_values[j] + c * (1.0 / 81.0 - truth_values[j]);
    CHECK(ise(scaled, truth_values) ==
          doctest::Approx(c * c * baseline).epsilon(1e-12));

    DensityEstimate wrong;
    wrong.grid = grid;
    wrong.values.assign(4, 0.0);
    CHECK_THROWS(ise(wrong, truth_values));
}

TEST_CASE("single-run study reports one ISE per estimator with zero variance") {
    StudyConfig config;
    config.grid = default_study_grid();
    config.sample_sizes = {500};
    config.runs = 1;
    config.run_rmle = true;
    config.run_kernel = true;
    config.seed = 11;
    config.rmle.path_length = 4;  // desk-scale path
    config.rmle.solve.max_iters = 400;

    const SimulationReport report = run_study(config);
    REQUIRE(report.blocks.size() == 2);
    for (const EstimatorStats& block : report.blocks) {
        CHECK(block.runs.size() == 1);
        CHECK(block.var_ise == 0.0);
        CHECK(block.single_run);
        CHECK(block.mise >= 0.0);
    }
}

TEST_CASE("identical configs give identical reports") {
    StudyConfig config;
    config.grid = default_study_grid();
    config.sample_sizes = {300, 500};
    config.runs = 2;
    config.run_rmle = true;
    config.seed = 99;
    config.rmle.path_length = 3;
    config.rmle.solve.max_iters = 300;

    const SimulationReport a = run_study(config);
    const SimulationReport b = run_study(config);
    CHECK(report_to_json(a, config) == report_to_json(b, config));

    // per-run results are independent of the worker count
    config.workers = 4;
    const SimulationReport c = run_study(config);
    CHECK(report_to_json(a, config) == report_to_json(c, config));
}

TEST_CASE("aggregates recompute exactly from the stored per-run values") {
    StudyConfig config;
    config.grid = default_study_grid();
    config.sample_sizes = {400};
    config.runs = 4;
    config.run_rmle = true;
    config.seed = 3;
    config.rmle.path_length = 3;
    config.rmle.solve.max_iters = 300;

    const SimulationReport report = run_study(config);
    REQUIRE(report.blocks.size() == 1);
    const EstimatorStats& block = report.blocks[0];
    double mean = 0.0;
    for (const RunRecord& rec : block.runs) mean += rec.ise;
    mean /= static_cast<double>(block.runs.size());
    CHECK(block.mise == mean);
    double ss = 0.0;
    for (const RunRecord& rec : block.runs) ss += (rec.ise - mean) * (rec.ise - mean);
    CHECK(block.var_ise == ss / static_cast<double>(block.runs.size() - 1));
}

TEST_CASE("table layout has one row per n and a column pair per estimator") {
    StudyConfig config;
    config.grid = default_study_grid();
    config.sample_sizes = {300, 500};
    config.runs = 1;
    config.run_rmle = true;
    config.run_kernel = true;
    config.seed = 21;
    config.rmle.path_length = 3;
    config.rmle.solve.max_iters = 200;
    config.kernel.h_grid = geometric_grid(0.1, 1.5, 8);

    const SimulationReport report = run_study(config);
    const std::string table = report_to_table(report);
    // header + 2 sample sizes
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
    CHECK(table.find("rmle MISE") != std::string::npos);
    CHECK(table.find("kernel MISE") != std::string::npos);
    CHECK(table.find("300") != std::string::npos);
    CHECK(table.find("500") != std::string::npos);
}

TEST_CASE("config validation") {
    StudyConfig config;
    config.grid = default_study_grid();
    config.runs = 0;
    CHECK_THROWS_AS(run_study(config), ConfigError);
    config.runs = 1;
    config.sample_sizes = {500, 300};
    CHECK_THROWS_AS(run_study(config), ConfigError);
    config.sample_sizes = {300};
    config.run_rmle = false;
    config.run_kernel = false;
    CHECK_THROWS_AS(run_study(config), ConfigError);
}
