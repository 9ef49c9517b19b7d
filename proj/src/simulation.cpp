#include "rcmle/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace rcmle {

double ise(const DensityEstimate& estimate, std::span<const double> truth_values) {
    if (estimate.values.size() != truth_values.size())
        throw std::runtime_error("ise: grid size mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < truth_values.size(); ++j) {
        const double d = estimate.values[j] - truth_values[j];
        s += d * d;
    }
    return s * estimate.grid.cell_area;
}

Grid2D default_study_grid() {
    return build_grid({-4.5, -4.5}, {4.5, 4.5}, {19, 19});
}

namespace {

struct Task {
    std::size_t n_index;
    int run;
};

} // namespace

SimulationReport run_study(const StudyConfig& config) {
    if (config.runs < 1) throw ConfigError("study: runs must be >= 1");
    if (config.sample_sizes.empty())
        throw ConfigError("study: sample_sizes must be nonempty");
    for (std::size_t i = 0; i + 1 < config.sample_sizes.size(); ++i)
        if (config.sample_sizes[i] >= config.sample_sizes[i + 1])
            throw ConfigError("study: sample_sizes must be positive increasing");
    if (config.sample_sizes.front() < 1)
        throw ConfigError("study: sample_sizes must be positive");
    if (!config.run_rmle && !config.run_kernel)
        throw ConfigError("study: estimators must include rmle and/or kernel");

    const auto start = std::chrono::steady_clock::now();
    const std::vector<double> truth = true_density(config.scenario.truth, config.grid);
    const std::vector<double> h_grid = config.kernel.h_grid.empty()
                                           ? geometric_grid(0.05, 2.0, 25)
                                           : config.kernel.h_grid;
    const FilterKernel filter = FilterKernel::build(config.kernel.taper);

    // Result slots indexed by (sample size, run); filled by workers.
    const std::size_t n_sizes = config.sample_sizes.size();
    const std::size_t runs = static_cast<std::size_t>(config.runs);
    std::vector<std::vector<RunRecord>> rmle_records(n_sizes,
                                                     std::vector<RunRecord>(runs));
    std::vector<std::vector<RunRecord>> kernel_records(n_sizes,
                                                       std::vector<RunRecord>(runs));

    std::vector<Task> tasks;
    for (std::size_t ni = 0; ni < n_sizes; ++ni)
        for (int r = 0; r < config.runs; ++r) tasks.push_back({ni, r});

    auto execute = [&](const Task& task) {
        const long n = config.sample_sizes[task.n_index];
        const std::uint64_t run_seed =
            mix_seed(config.seed, static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(task.run));
        const GeneratedData data = generate(config.scenario, n, run_seed);

        if (config.run_rmle) {
            RunRecord rec;
            rec.run = task.run;
            try {
                const LineOperator op = build_operator(config.grid, data.observations);
                const AlphaPath path =
                    alpha_path(n, config.rmle.c_l, config.rmle.ratio,
                               config.rmle.path_length);
                const PathSolveFn solve_fn =
                    [&](double alpha, const DensityEstimate* warm) {
                        SolveOptions opts = config.rmle.solve;
                        if (warm) opts.initial = warm->values;
                        return solve(op, {config.rmle.kind, alpha}, config.grid,
                                     opts);
                    };
                const LepskiiResult sel = select(path, solve_fn, config.rmle.lepskii);
                rec.ise = ise(sel.selected(), truth);
                rec.parameter = sel.selected_alpha(path);
                const SolveReport& rep =
                    sel.reports[static_cast<std::size_t>(sel.selected_index - 1)];
                rec.converged = rep.converged;
                for (const SolveReport& r : sel.reports) rec.iterations += r.iterations;
            } catch (const std::exception& ex) {
                rec.failed = true;
                rec.error = ex.what();
            }
            rmle_records[task.n_index][static_cast<std::size_t>(task.run)] = rec;
        }
        if (config.run_kernel) {
            RunRecord rec;
            rec.run = task.run;
            try {
                const OracleBandwidth oracle = oracle_bandwidth(
                    data.observations, config.grid, truth, h_grid, filter);
                rec.ise = oracle.ise;
                rec.parameter = oracle.h;
                rec.converged = true;
            } catch (const std::exception& ex) {
                rec.failed = true;
                rec.error = ex.what();
            }
            kernel_records[task.n_index][static_cast<std::size_t>(task.run)] = rec;
        }
    };

    const int workers = std::max(config.workers, 1);
    if (workers == 1) {
        for (const Task& task : tasks) execute(task);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < tasks.size();
                     i = next.fetch_add(1))
                    execute(tasks[i]);
            });
        for (std::thread& t : pool) t.join();
    }

    SimulationReport report;
    auto aggregate = [&](const std::string& name,
                         const std::vector<std::vector<RunRecord>>& records) {
        for (std::size_t ni = 0; ni < n_sizes; ++ni) {
            EstimatorStats stats;
            stats.estimator = name;
            stats.n = config.sample_sizes[ni];
            stats.runs = records[ni];
            std::vector<double> values;
            for (const RunRecord& rec : stats.runs) {
                if (rec.failed)
                    ++stats.failed_runs;
                else
                    values.push_back(rec.ise);
            }
            if (values.size() * 2 < stats.runs.size())
                throw std::runtime_error(
                    "study: more than half of the " + name + " runs at n=" +
                    std::to_string(stats.n) + " failed; aborting (first error: " +
                    stats.runs.front().error + ")");
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            stats.mise = mean;
            if (values.size() >= 2) {
                double ss = 0.0;
                for (double v : values) ss += (v - mean) * (v - mean);
                stats.var_ise = ss / static_cast<double>(values.size() - 1);
            } else {
                stats.single_run = true;
            }
            report.blocks.push_back(std::move(stats));
        }
    };
    if (config.run_rmle) aggregate("rmle", rmle_records);
    if (config.run_kernel) aggregate("kernel", kernel_records);

    report.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return report;
}

std::string report_to_json(const SimulationReport& report,
                           const StudyConfig& config) {
    nlohmann::ordered_json doc;
    doc["scenario"] =
        config.scenario.design == Design::Unbounded ? "unbounded" : "bounded";
    doc["runs"] = config.runs;
    doc["seed"] = config.seed;
    doc["grid"] = {{"lo", config.grid.lo},
                   {"hi", config.grid.hi},
                   {"cells", config.grid.k}};
    doc["blocks"] = nlohmann::ordered_json::array();
    for (const EstimatorStats& block : report.blocks) {
        nlohmann::ordered_json b;
        b["estimator"] = block.estimator;
        b["n"] = block.n;
        b["mise"] = block.mise;
        b["var_ise"] = block.var_ise;
        b["single_run"] = block.single_run;
        b["failed_runs"] = block.failed_runs;
        b["runs"] = nlohmann::ordered_json::array();
        for (const RunRecord& rec : block.runs) {
            nlohmann::ordered_json r;
            r["run"] = rec.run;
            r["ise"] = rec.ise;
            r["parameter"] = rec.parameter;
            r["converged"] = rec.converged;
            r["iterations"] = rec.iterations;
            if (rec.failed) r["error"] = rec.error;
            b["runs"].push_back(std::move(r));
        }
        doc["blocks"].push_back(std::move(b));
    }
    return doc.dump(2) + "\n";
}

std::string report_to_table(const SimulationReport& report) {
    // Layout: one row per n, (MISE, Variance (ISE)) per estimator.
    std::vector<std::string> estimators;
    std::vector<long> sizes;
    for (const EstimatorStats& block : report.blocks) {
        if (std::find(estimators.begin(), estimators.end(), block.estimator) ==
            estimators.end())
            estimators.push_back(block.estimator);
        if (std::find(sizes.begin(), sizes.end(), block.n) == sizes.end())
            sizes.push_back(block.n);
    }
    auto block_for = [&](const std::string& est, long n) -> const EstimatorStats* {
        for (const EstimatorStats& block : report.blocks)
            if (block.estimator == est && block.n == n) return &block;
        return nullptr;
    };

    std::ostringstream out;
    out << "n";
    for (const std::string& est : estimators)
        out << "\t" << est << " MISE\t" << est << " Variance (ISE)";
    out << "\n";
    char buf[64];
    for (long n : sizes) {
        out << n;
        for (const std::string& est : estimators) {
            const EstimatorStats* block = block_for(est, n);
            if (!block) {
                out << "\t-\t-";
                continue;
            }
            std::snprintf(buf, sizeof buf, "%.3e", block->mise);
            out << "\t" << buf;
            std::snprintf(buf, sizeof buf, "%.3e", block->var_ise);
            out << "\t" << buf;
        }
        out << "\n";
    }
    return out.str();
}

} // namespace rcmle
