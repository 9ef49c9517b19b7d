// CLI front end: estimate densities from CSV data, run simulation studies,
// run the kernel baseline, and replay a previous run from its manifest.
#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rcmle/kernel.hpp"
#include "rcmle/lepskii.hpp"
#include "rcmle/model.hpp"
#include "rcmle/simulation.hpp"
#include "rcmle/solver.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace rcmle;

namespace {

constexpr const char* kArtifactVersion = "1";

// --------------------------------------------------------------------------
// Small helpers
// --------------------------------------------------------------------------

std::string fnv1a_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read input file: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016" PRIx64, h);
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    out << text;
}

void write_density_csv(const std::string& path, const DensityEstimate& est) {
    std::string text = "b0,b1,f\n";
    char row[128];
    for (int j = 0; j < est.grid.num_cells(); ++j) {
        const auto c = est.grid.center(j);
        std::snprintf(row, sizeof(row), "%.17g,%.17g,%.17g\n", c[0], c[1],
                      est.values[static_cast<std::size_t>(j)]);
        text += row;
    }
    write_text(path, text);
}

Grid2D grid_from_config(const ordered_json& g) {
    return build_grid({g["min"][0].get<double>(), g["min"][1].get<double>()},
                      {g["max"][0].get<double>(), g["max"][1].get<double>()},
                      {g["cells"][0].get<int>(), g["cells"][1].get<int>()});
}

// Expands a 1-or-2-element flag value to one value per axis.
template <typename T>
std::array<T, 2> per_axis(const std::vector<T>& v, const char* flag) {
    if (v.size() == 1) return {v[0], v[0]};
    if (v.size() == 2) return {v[0], v[1]};
    throw ConfigError(std::string(flag) + " takes one or two values");
}

ordered_json grid_config(const std::vector<double>& gmin,
                         const std::vector<double>& gmax,
                         const std::vector<int>& cells) {
    const auto lo = per_axis(gmin, "--grid-min");
    const auto hi = per_axis(gmax, "--grid-max");
    const auto k = per_axis(cells, "--grid-cells");
    return ordered_json{{"min", {lo[0], lo[1]}},
                        {"max", {hi[0], hi[1]}},
                        {"cells", {k[0], k[1]}}};
}

int default_workers() {
    if (const char* env = std::getenv("RC_RMLE_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

ordered_json solver_json(const SolveReport& report) {
    return ordered_json{{"iterations", report.iterations},
                        {"converged", report.converged},
                        {"final_objective", report.final_objective},
                        {"final_kkt", report.final_kkt},
                        {"clamp_count", report.clamp_count}};
}

ordered_json peak_json(const DensityEstimate& est) {
    int arg = 0;
    for (int j = 1; j < est.grid.num_cells(); ++j)
        if (est.values[static_cast<std::size_t>(j)] >
            est.values[static_cast<std::size_t>(arg)])
            arg = j;
    const auto c = est.grid.center(arg);
    return ordered_json{{"cell", arg},
                        {"b0", c[0]},
                        {"b1", c[1]},
                        {"f", est.values[static_cast<std::size_t>(arg)]}};
}

struct RunOutcome {
    std::map<std::string, std::string> input_digests;
    std::vector<std::string> outputs;  // paths relative to output_dir
};

void write_manifest(const std::string& subcommand, const ordered_json& config,
                    const RunOutcome& outcome) {
    ordered_json manifest;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["subcommand"] = subcommand;
    manifest["seed"] = config.contains("seed") ? config["seed"]
                                               : ordered_json(nullptr);
    manifest["config"] = config;
    manifest["inputs"] = ordered_json::object();
    for (const auto& [path, digest] : outcome.input_digests)
        manifest["inputs"][path] = digest;
    manifest["outputs"] = outcome.outputs;
    const fs::path dir(config["output_dir"].get<std::string>());
    write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

fs::path prepare_output_dir(const ordered_json& config) {
    const fs::path dir(config["output_dir"].get<std::string>());
    fs::create_directories(dir);
    return dir;
}

// --------------------------------------------------------------------------
// estimate: penalized MLE on CSV data
// --------------------------------------------------------------------------

RunOutcome run_estimate(const ordered_json& cfg) {
    RunOutcome outcome;
    const fs::path dir = prepare_output_dir(cfg);
    const std::string input = cfg["input"].get<std::string>();
    outcome.input_digests[input] = fnv1a_digest(input);

    CsvSchema schema;
    schema.response = cfg["response"].get<std::string>();
    schema.regressors = cfg["regressors"].get<std::vector<std::string>>();
    schema.intercept = cfg["intercept"].get<bool>();
    const CsvResult csv = load_csv(input, schema);
    for (const std::string& w : csv.warnings)
        std::cerr << "warning: " << input << ": " << w << "\n";

    const Grid2D grid = grid_from_config(cfg["grid"]);
    const LineOperator op = build_operator(grid, csv.observations);
    if (op.n_retained() == 0)
        throw std::runtime_error("no observation line intersects the grid");

    const RegularizerKind kind =
        regularizer_from_name(cfg["regularizer"].get<std::string>());
    SolveOptions solve_opts;
    solve_opts.max_iters = cfg["max_iters"].get<int>();

    ordered_json report;
    report["n_rows"] = csv.observations.size() + csv.warnings.size();
    report["n_used"] = op.n_retained();
    report["dropped_observations"] = op.dropped_count;
    report["skipped_rows"] = csv.warnings;
    report["regularizer"] = regularizer_name(kind);

    DensityEstimate estimate;
    if (cfg["lepskii"].get<bool>()) {
        const AlphaPath path =
            alpha_path(op.n_retained(), cfg["cl"].get<double>(),
                       cfg["ratio"].get<double>(), cfg["path_len"].get<int>());
        const PathSolveFn fit = [&](double alpha, const DensityEstimate* warm) {
            SolveOptions opts = solve_opts;
            if (warm) opts.initial = warm->values;
            return solve(op, {kind, alpha}, grid, opts);
        };
        const LepskiiResult result = select(path, fit);
        estimate = result.selected();
        report["alpha"] = result.selected_alpha(path);
        report["lepskii"] = ordered_json{
            {"selected_index", result.selected_index},
            {"alphas", path.alphas},
            {"thresholds", result.thresholds},
            {"sigma_scale", result.sigma_scale},
            {"no_admissible_beyond_first", result.no_admissible_beyond_first}};
        report["solver"] = solver_json(
            result.reports[static_cast<std::size_t>(result.selected_index - 1)]);
    } else {
        const double alpha = cfg["alpha"].get<double>();
        const SolveResult result = solve(op, {kind, alpha}, grid, solve_opts);
        estimate = result.estimate;
        report["alpha"] = alpha;
        report["solver"] = solver_json(result.report);
    }

    const ObjectiveValue obj =
        objective(op, {kind, report["alpha"].get<double>()}, grid,
                  estimate.values);
    report["objective"] =
        ordered_json{{"total", obj.total}, {"nll", obj.nll},
                     {"penalty", obj.penalty}};
    report["peak"] = peak_json(estimate);

    write_density_csv((dir / "density.csv").string(), estimate);
    write_text((dir / "report.json").string(), report.dump(2) + "\n");
    outcome.outputs = {"density.csv", "report.json"};
    return outcome;
}

// --------------------------------------------------------------------------
// simulate: Monte Carlo study
// --------------------------------------------------------------------------

Design design_from_name(const std::string& name) {
    if (name == "unbounded") return Design::Unbounded;
    if (name == "bounded") return Design::Bounded;
    throw ConfigError("--scenario must be 'unbounded' or 'bounded'");
}

RunOutcome run_simulate(const ordered_json& cfg) {
    RunOutcome outcome;
    const fs::path dir = prepare_output_dir(cfg);

    StudyConfig config;
    config.scenario.design =
        design_from_name(cfg["scenario"].get<std::string>());
    config.sample_sizes = cfg["n"].get<std::vector<long>>();
    config.runs = cfg["runs"].get<int>();
    config.run_rmle = false;
    config.run_kernel = false;
    for (const auto& name : cfg["estimators"]) {
        if (name == "rmle")
            config.run_rmle = true;
        else if (name == "kernel")
            config.run_kernel = true;
        else
            throw ConfigError("--estimators entries must be 'rmle' or 'kernel'");
    }
    config.grid = grid_from_config(cfg["grid"]);
    config.seed = cfg["seed"].get<std::uint64_t>();
    config.rmle.kind =
        regularizer_from_name(cfg["regularizer"].get<std::string>());
    config.rmle.c_l = cfg["cl"].get<double>();
    config.rmle.ratio = cfg["ratio"].get<double>();
    config.rmle.path_length = cfg["path_len"].get<int>();
    config.rmle.solve.max_iters = cfg["max_iters"].get<int>();
    config.kernel.taper = taper_from_name(cfg["taper"].get<std::string>());
    config.workers = cfg["workers"].get<int>();

    const SimulationReport report = run_study(config);
    write_text((dir / "report.json").string(), report_to_json(report, config));
    write_text((dir / "report.txt").string(), report_to_table(report));
    outcome.outputs = {"report.json", "report.txt"};
    return outcome;
}

// --------------------------------------------------------------------------
// baseline: kernel back-projection estimate
// --------------------------------------------------------------------------

RunOutcome run_baseline(const ordered_json& cfg) {
    RunOutcome outcome;
    const fs::path dir = prepare_output_dir(cfg);
    const Grid2D grid = grid_from_config(cfg["grid"]);
    const FilterKernel filter =
        FilterKernel::build(taper_from_name(cfg["taper"].get<std::string>()));
    const bool oracle = cfg["oracle"].get<bool>();

    ordered_json report;
    std::vector<Observation> observations;
    std::vector<double> truth;
    if (!cfg["input"].is_null()) {
        if (oracle)
            throw ConfigError(
                "--oracle requires a synthetic --scenario truth, not --input");
        const std::string input = cfg["input"].get<std::string>();
        outcome.input_digests[input] = fnv1a_digest(input);
        CsvSchema schema;
        schema.response = cfg["response"].get<std::string>();
        schema.regressors = cfg["regressors"].get<std::vector<std::string>>();
        schema.intercept = cfg["intercept"].get<bool>();
        const CsvResult csv = load_csv(input, schema);
        for (const std::string& w : csv.warnings)
            std::cerr << "warning: " << input << ": " << w << "\n";
        observations = csv.observations;
        report["input"] = input;
    } else {
        Scenario scenario;
        scenario.design = design_from_name(cfg["scenario"].get<std::string>());
        const long n = cfg["n"].get<long>();
        observations =
            generate(scenario, n, cfg["seed"].get<std::uint64_t>()).observations;
        truth = true_density(scenario.truth, grid);
        report["scenario"] = cfg["scenario"];
        report["n"] = n;
    }
    report["taper"] = cfg["taper"];

    std::vector<Line2D> lines;
    lines.reserve(observations.size());
    for (const Observation& obs : observations)
        lines.push_back(line_from_observation(obs.y, obs.x));
    const AngleDensity angles = AngleDensity::fit(lines);

    DensityEstimate estimate;
    if (oracle) {
        const std::vector<double> h_grid = geometric_grid(0.05, 2.0, 25);
        const OracleBandwidth best =
            oracle_bandwidth(observations, grid, truth, h_grid, filter);
        estimate = kernel_estimate(observations, grid, best.h, filter, angles);
        report["bandwidth"] = best.h;
        report["ise"] = best.ise;
        report["h_grid"] = h_grid;
        report["ise_per_h"] = best.ise_per_h;
    } else {
        const double h = cfg["bandwidth"].get<double>();
        if (!(h > 0.0)) throw ConfigError("--bandwidth must be positive");
        estimate = kernel_estimate(observations, grid, h, filter, angles);
        report["bandwidth"] = h;
        if (!truth.empty()) report["ise"] = ise(estimate, truth);
    }
    report["peak"] = peak_json(estimate);

    write_density_csv((dir / "density.csv").string(), estimate);
    write_text((dir / "report.json").string(), report.dump(2) + "\n");
    outcome.outputs = {"density.csv", "report.json"};
    return outcome;
}

// --------------------------------------------------------------------------
// replay: rerun a previous invocation from its manifest
// --------------------------------------------------------------------------

int dispatch(const std::string& subcommand, const ordered_json& cfg) {
    RunOutcome outcome;
    if (subcommand == "estimate")
        outcome = run_estimate(cfg);
    else if (subcommand == "simulate")
        outcome = run_simulate(cfg);
    else if (subcommand == "baseline")
        outcome = run_baseline(cfg);
    else
        throw std::runtime_error("unknown subcommand in manifest: " + subcommand);
    write_manifest(subcommand, cfg, outcome);
    return 0;
}

int run_replay(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot read manifest: " + manifest_path);
    ordered_json manifest;
    in >> manifest;
    for (const auto& [path, digest] : manifest["inputs"].items())
        if (fnv1a_digest(path) != digest.get<std::string>())
            throw std::runtime_error("input file changed since the original run: " +
                                     path);
    return dispatch(manifest["subcommand"].get<std::string>(),
                    manifest["config"]);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonparametric random-coefficient density estimation"};
    app.require_subcommand(1);

    // shared flag storage
    std::string input, response = "y", output_dir = ".";
    std::vector<std::string> regressors{"x1"};
    bool intercept = false;
    std::vector<double> gmin{-4.5}, gmax{4.5};
    std::vector<int> gcells{19};
    std::string regularizer_name_flag = "l2";
    double alpha = 0.0, cl = 1.0, ratio = 1.5;
    int path_len = 12, max_iters = 2000;
    bool lepskii = false;

    auto add_grid_flags = [&](CLI::App* cmd) {
        cmd->add_option("--grid-min", gmin, "Grid lower corner (1 or 2 values)")
            ->expected(1, 2)
            ->capture_default_str();
        cmd->add_option("--grid-max", gmax, "Grid upper corner (1 or 2 values)")
            ->expected(1, 2)
            ->capture_default_str();
        cmd->add_option("--grid-cells", gcells, "Cells per axis (1 or 2 values)")
            ->expected(1, 2)
            ->capture_default_str();
        cmd->add_option("-o,--output-dir", output_dir, "Output directory")
            ->capture_default_str();
    };
    auto add_csv_flags = [&](CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--input", input, "CSV input file");
        if (required) opt->required();
        cmd->add_option("--response", response, "Response column name")
            ->capture_default_str();
        cmd->add_option("--regressors", regressors,
                        "Regressor column names (comma separated)")
            ->delimiter(',')
            ->capture_default_str();
        cmd->add_flag("--intercept", intercept,
                      "Prepend a constant regressor (intercept model)");
    };

    CLI::App* est = app.add_subcommand("estimate",
                                       "Penalized MLE density estimate from CSV");
    add_csv_flags(est, true);
    add_grid_flags(est);
    est->add_option("--regularizer", regularizer_name_flag,
                    "Penalty: l2, h1, h2, or entropy")
        ->capture_default_str();
    auto* alpha_opt =
        est->add_option("--alpha", alpha, "Fixed regularization parameter");
    auto* lepskii_opt = est->add_flag(
        "--lepskii", lepskii, "Adaptive parameter selection (default)");
    est->add_option("--cl", cl, "Path scale c_L")->capture_default_str();
    est->add_option("--ratio", ratio, "Path ratio r")->capture_default_str();
    est->add_option("--path-len", path_len, "Path length")->capture_default_str();
    est->add_option("--max-iters", max_iters, "Solver iteration cap")
        ->capture_default_str();

    std::string scenario = "unbounded", estimators_flag, taper = "cosine";
    std::vector<long> sample_sizes{500, 1000, 1500, 3000, 10000};
    std::vector<std::string> estimators{"rmle"};
    int runs = 20, workers = 0;
    std::uint64_t seed = 1;
    long baseline_n = 10000;
    double bandwidth = 0.0;
    bool oracle = false;

    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo MISE study");
    sim->add_option("--scenario", scenario, "unbounded or bounded")
        ->capture_default_str();
    sim->add_option("--n", sample_sizes, "Sample sizes (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    sim->add_option("--runs", runs, "Monte Carlo repetitions")
        ->capture_default_str();
    sim->add_option("--estimators", estimators,
                    "Estimators: rmle, kernel (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    sim->add_option("--seed", seed, "Base seed")->capture_default_str();
    sim->add_option("--regularizer", regularizer_name_flag,
                    "Penalty: l2, h1, h2, or entropy")
        ->capture_default_str();
    sim->add_option("--cl", cl, "Path scale c_L")->capture_default_str();
    sim->add_option("--ratio", ratio, "Path ratio r")->capture_default_str();
    sim->add_option("--path-len", path_len, "Path length")->capture_default_str();
    sim->add_option("--max-iters", max_iters, "Solver iteration cap")
        ->capture_default_str();
    sim->add_option("--taper", taper, "Kernel taper: cosine or quadratic")
        ->capture_default_str();
    sim->add_option("--workers", workers,
                    "Worker threads (default: RC_RMLE_WORKERS or all cores)");
    add_grid_flags(sim);

    CLI::App* base = app.add_subcommand("baseline",
                                        "Kernel back-projection baseline");
    add_csv_flags(base, false);
    add_grid_flags(base);
    base->add_option("--scenario", scenario,
                     "Synthetic source: unbounded or bounded");
    base->add_option("--n", baseline_n, "Synthetic sample size")
        ->capture_default_str();
    base->add_option("--seed", seed, "Synthetic data seed")
        ->capture_default_str();
    auto* bw_opt = base->add_option("--bandwidth", bandwidth, "Kernel bandwidth");
    auto* oracle_opt = base->add_flag(
        "--oracle", oracle, "Minimum-ISE bandwidth against the scenario truth");
    base->add_option("--taper", taper, "Kernel taper: cosine or quadratic")
        ->capture_default_str();

    std::string manifest_path;
    CLI::App* rep = app.add_subcommand("replay",
                                       "Rerun a previous run from its manifest");
    rep->add_option("manifest", manifest_path, "Path to manifest.json")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (est->parsed()) {
            if (alpha_opt->count() > 0 && lepskii_opt->count() > 0)
                throw ConfigError("--alpha and --lepskii are mutually exclusive");
            const bool use_lepskii = alpha_opt->count() == 0;
            ordered_json cfg;
            cfg["input"] = input;
            cfg["response"] = response;
            cfg["regressors"] = regressors;
            cfg["intercept"] = intercept;
            cfg["grid"] = grid_config(gmin, gmax, gcells);
            cfg["regularizer"] = regularizer_name_flag;
            cfg["lepskii"] = use_lepskii;
            cfg["alpha"] = use_lepskii ? ordered_json(nullptr) : ordered_json(alpha);
            cfg["cl"] = cl;
            cfg["ratio"] = ratio;
            cfg["path_len"] = path_len;
            cfg["max_iters"] = max_iters;
            cfg["output_dir"] = output_dir;
            write_manifest("estimate", cfg, run_estimate(cfg));
        } else if (sim->parsed()) {
            ordered_json cfg;
            cfg["scenario"] = scenario;
            cfg["n"] = sample_sizes;
            cfg["runs"] = runs;
            cfg["estimators"] = estimators;
            cfg["seed"] = seed;
            cfg["grid"] = grid_config(gmin, gmax, gcells);
            cfg["regularizer"] = regularizer_name_flag;
            cfg["cl"] = cl;
            cfg["ratio"] = ratio;
            cfg["path_len"] = path_len;
            cfg["max_iters"] = max_iters;
            cfg["taper"] = taper;
            cfg["workers"] = workers >= 1 ? workers : default_workers();
            cfg["output_dir"] = output_dir;
            write_manifest("simulate", cfg, run_simulate(cfg));
        } else if (base->parsed()) {
            if (bw_opt->count() > 0 && oracle_opt->count() > 0)
                throw ConfigError("--bandwidth and --oracle are mutually exclusive");
            if (bw_opt->count() == 0 && oracle_opt->count() == 0)
                throw ConfigError("baseline requires --bandwidth or --oracle");
            ordered_json cfg;
            cfg["input"] =
                input.empty() ? ordered_json(nullptr) : ordered_json(input);
            cfg["response"] = response;
            cfg["regressors"] = regressors;
            cfg["intercept"] = intercept;
            cfg["scenario"] = scenario;
            cfg["n"] = baseline_n;
            cfg["seed"] = seed;
            cfg["grid"] = grid_config(gmin, gmax, gcells);
            cfg["oracle"] = oracle_opt->count() > 0;
            cfg["bandwidth"] = bw_opt->count() > 0 ? ordered_json(bandwidth)
                                                   : ordered_json(nullptr);
            cfg["taper"] = taper;
            cfg["output_dir"] = output_dir;
            write_manifest("baseline", cfg, run_baseline(cfg));
        } else if (rep->parsed()) {
            return run_replay(manifest_path);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
