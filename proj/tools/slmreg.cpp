// Command-line front end: simulate, estimate, spec-test, fit-artfima, mc, ckc.

#include <slmreg/slmreg.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using slmreg::io::Json;

namespace {

struct Run {
    std::vector<std::string> argv;
    Json inputs = Json::array();

    void add_input(const std::string& path) {
        const auto bytes = slmreg::io::read_file(path);
        inputs.push_back({{"path", path}, {"fnv1a64", slmreg::io::hex64(slmreg::io::fnv1a(bytes))}});
    }

    Json manifest(const std::string& command, Json details) const {
        return Json{{"tool", "slmreg 0.1.0"},
                    {"command", command},
                    {"argv", argv},
                    {"inputs", inputs},
                    {"details", std::move(details)}};
    }
};

void write(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    slmreg::io::write_file(path.string(), text);
}

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
    const auto comma = text.find(',');
    slmreg::detail::require(comma != std::string::npos, std::string(what) + " must be 'a,b'");
    const double a = slmreg::io::parse_double(text.substr(0, comma), 0, what);
    const double b = slmreg::io::parse_double(text.substr(comma + 1), 0, what);
    slmreg::detail::require(a < b, std::string(what) + " must satisfy a < b");
    return {a, b};
}

struct XY {
    std::vector<double> x;
    std::vector<double> y;
};

XY read_xy(const std::string& path, const std::string& xcol, const std::string& ycol) {
    const auto table = slmreg::io::read_csv(path);
    return {slmreg::io::numeric_column(table, xcol), slmreg::io::numeric_column(table, ycol)};
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
    std::string memory = "slm";
    double d = 0.4;
    double lambda = -1.0;
    std::string lambda_rule = "N^-1/5";
    std::size_t n = 1000;
    std::size_t burn_in = slmreg::kDefaultBurnIn;
    double rho = 0.5;
    double psi = 0.25;
    double sigma = 0.2;
    std::uint64_t seed = 1;
    std::string function = "sine";
    std::size_t sine_terms = slmreg::kDefaultSineTerms;
    std::string out = "simulation";
};

int run_simulate(const SimulateArgs& a, const Run& run) {
    const auto kind = slmreg::parse_memory_kind(a.memory);
    double lambda = 0.0;
    if (kind == slmreg::MemoryKind::SemiLongMemory) {
        lambda = a.lambda > 0.0 ? a.lambda : slmreg::parse_power_rule(a.lambda_rule)(static_cast<double>(a.n));
    }
    const double d = kind == slmreg::MemoryKind::ShortMemory ? 0.0 : a.d;
    const auto spec = slmreg::TemperedProcessSpec::make(kind, d, lambda, a.n, a.burn_in);
    slmreg::NoiseConfig noise{a.rho, a.psi, a.sigma, a.seed};
    noise.validate();
    slmreg::detail::require(a.function == "sine" || a.function == "zero", "function must be sine or zero");
    const auto f = a.function == "sine" ? slmreg::sine_series_function(a.sine_terms) : slmreg::zero_function();
    const auto path = slmreg::simulate_model(spec, noise, f);
    const fs::path dir(a.out);
    write(dir / "path.csv", slmreg::io::path_csv(path));
    const auto details = slmreg::io::path_manifest(path);
    write(dir / "manifest.json", run.manifest("simulate", details).dump(2) + "\n");
    std::cout << details.dump(2) << "\n";
    return 0;
}

// ---- estimate ------------------------------------------------------------

struct EstimateArgs {
    std::string input;
    std::string xcol = "x";
    std::string ycol = "y";
    double bandwidth = -1.0;
    std::string bandwidth_rule = "N^-1/3";
    std::string kernel = "epanechnikov";
    std::string grid = "0,1";
    std::size_t grid_points = 100;
    double alpha = 0.05;
    std::string out = "estimate";
};

int run_estimate(const EstimateArgs& a, Run& run) {
    run.add_input(a.input);
    const auto data = read_xy(a.input, a.xcol, a.ycol);
    const double h = a.bandwidth > 0.0 ? a.bandwidth
                                       : slmreg::parse_power_rule(a.bandwidth_rule)(static_cast<double>(data.x.size()));
    const auto [lo, hi] = parse_pair(a.grid, "--grid");
    const auto grid = slmreg::linspace(lo, hi, a.grid_points);
    const slmreg::Kernel kernel{slmreg::parse_kernel_kind(a.kernel)};
    const auto est = slmreg::nw_estimate(data.x, data.y, grid, h, kernel, a.alpha);
    const fs::path dir(a.out);
    write(dir / "estimate.csv", slmreg::io::estimate_csv(est));
    std::size_t undefined = 0;
    for (std::size_t i = 0; i < est.grid.size(); ++i) undefined += est.defined(i) ? 0 : 1;
    Json details{{"n", data.x.size()},
                 {"bandwidth", h},
                 {"kernel", a.kernel},
                 {"alpha", a.alpha},
                 {"grid", {{"lo", lo}, {"hi", hi}, {"points", a.grid_points}}},
                 {"undefined_points", undefined}};
    write(dir / "manifest.json", run.manifest("estimate", details).dump(2) + "\n");
    std::cout << details.dump(2) << "\n";
    return 0;
}

// ---- spec-test -----------------------------------------------------------

struct SpecTestArgs {
    std::string input;
    std::string xcol = "x";
    std::string ycol = "y";
    std::string family = "linear";
    std::string bandwidth_rule = "N^-1/3";
    std::string block_rule = "[N^0.5]";
    std::string memory = "slm";
    double d = 0.0;
    std::string lambda_rule = "N^-1/5";
    std::string kernel = "gaussian";
    std::string weight_support = "-100,100";
    std::size_t quad_cells = 2048;
    unsigned threads = 1;
    std::string out = "spec_test";
};

int run_spec_test_cmd(const SpecTestArgs& a, Run& run) {
    run.add_input(a.input);
    const auto data = read_xy(a.input, a.xcol, a.ycol);
    slmreg::StatisticSetup setup;
    setup.family = slmreg::ParametricFamily::from_name(a.family);
    setup.kernel = slmreg::Kernel{slmreg::parse_kernel_kind(a.kernel)};
    const auto [lo, hi] = parse_pair(a.weight_support, "--weight-support");
    setup.weight = slmreg::WeightFunction::indicator(lo, hi);
    slmreg::detail::require(a.quad_cells >= 2, "--quad-cells must be at least 2");
    setup.quad.cells = a.quad_cells;
    setup.memory = slmreg::parse_memory_kind(a.memory);
    setup.d = setup.memory == slmreg::MemoryKind::ShortMemory ? 0.0 : a.d;
    slmreg::SpecTestRules rules{slmreg::parse_power_rule(a.bandwidth_rule), slmreg::parse_power_rule(a.block_rule),
                                std::nullopt};
    if (setup.memory == slmreg::MemoryKind::SemiLongMemory) rules.tempering = slmreg::parse_power_rule(a.lambda_rule);
    const auto result = slmreg::run_spec_test(data.x, data.y, setup, rules, a.threads);
    const fs::path dir(a.out);
    const auto record = slmreg::io::to_json(result);
    write(dir / "result.json", record.dump(2) + "\n");
    Json details{{"family", a.family},
                 {"bandwidth_rule", a.bandwidth_rule},
                 {"block_rule", a.block_rule},
                 {"memory", a.memory},
                 {"d", setup.d},
                 {"lambda_rule", a.lambda_rule},
                 {"kernel", a.kernel},
                 {"weight_support", {lo, hi}},
                 {"quad_cells", a.quad_cells}};
    write(dir / "manifest.json", run.manifest("spec-test", details).dump(2) + "\n");
    Json summary{{"t_raw", result.t_raw},
                 {"t_normalized", result.t_normalized},
                 {"p_value", result.p_value},
                 {"block_size", result.block_size},
                 {"theta_hat", result.theta_hat}};
    std::cout << summary.dump(2) << "\n";
    return 0;
}

// ---- fit-artfima ---------------------------------------------------------

struct FitArgs {
    std::string input;
    std::string column = "x";
    bool log = false;
    std::string out = "fit";
};

int run_fit(const FitArgs& a, Run& run) {
    run.add_input(a.input);
    const auto table = slmreg::io::read_csv(a.input);
    auto series = slmreg::io::numeric_column(table, a.column);
    if (a.log) {
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (!(series[i] > 0.0)) {
                throw slmreg::ValidationError("line " + std::to_string(table.line_numbers[i]) +
                                              ": log requires positive values");
            }
            series[i] = std::log(series[i]);
        }
    }
    const auto artfima = slmreg::fit_artfima00(series);
    const auto arfima = slmreg::fit_arfima00(series);
    Json record{{"n", series.size()},
                {"artfima", slmreg::io::to_json(artfima)},
                {"arfima", slmreg::io::to_json(arfima)}};
    const fs::path dir(a.out);
    write(dir / "fit.json", record.dump(2) + "\n");
    write(dir / "manifest.json",
          run.manifest("fit-artfima", {{"column", a.column}, {"log", a.log}}).dump(2) + "\n");
    std::cout << record.dump(2) << "\n";
    return 0;
}

// ---- mc ------------------------------------------------------------------

struct McArgs {
    std::string study;
    std::string config;
    std::string out = "study";
    unsigned threads = slmreg::default_threads();
};

int run_mc(const McArgs& a, Run& run) {
    run.add_input(a.config);
    Json parsed;
    try {
        parsed = Json::parse(slmreg::io::read_file(a.config));
    } catch (const Json::parse_error& e) {
        throw slmreg::ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    const auto cfg = slmreg::mc::config_from_json(parsed);
    if (!a.study.empty() && slmreg::mc::parse_study_kind(a.study) != cfg.kind) {
        throw slmreg::ValidationError("--study " + a.study + " does not match the config's study '" +
                                      std::string(slmreg::mc::to_string(cfg.kind)) + "'");
    }
    const auto result = slmreg::mc::run_study(cfg, a.threads);
    const auto files = slmreg::mc::export_study(result, a.out);
    Json listing = Json::array();
    for (const auto& f : files) listing.push_back(f.string());
    std::cout << Json{{"study", std::string(slmreg::mc::to_string(cfg.kind))},
                      {"cells", result.cells.size()},
                      {"flags", result.flags},
                      {"files", listing}}
                     .dump(2)
              << "\n";
    write(fs::path(a.out) / "run.json", run.manifest("mc", {{"threads", a.threads}}).dump(2) + "\n");
    return 0;
}

// ---- ckc -----------------------------------------------------------------

struct CkcArgs {
    std::string input;
    std::string country;
    unsigned threads = 1;
    std::size_t quad_cells = 2048;
    std::string out = "ckc";
};

int run_ckc(const CkcArgs& a, Run& run) {
    run.add_input(a.input);
    const auto country = a.country.empty() ? fs::path(a.input).stem().string() : a.country;
    const auto series = slmreg::ingest_ckc_csv(a.input, country);
    slmreg::CkcOptions options;
    options.quad_cells = a.quad_cells;
    const auto report = slmreg::ckc_analysis(series, options, a.threads);
    const fs::path dir(a.out);
    const auto record = slmreg::to_json(report);
    write(dir / "report.json", record.dump(2) + "\n");
    write(dir / "p_values.csv", slmreg::ckc_p_value_csv(report));
    write(dir / "manifest.json", run.manifest("ckc", {{"country", country}, {"quad_cells", a.quad_cells}}).dump(2) + "\n");
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << record.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-long-memory cointegrating regression toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "slmreg 0.1.0");
    Run run;
    run.argv.assign(argv, argv + argc);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate (x, u, y) from the cointegrating model");
    simulate->add_option("--memory", sim.memory, "Regressor memory: slm|lm|short")->capture_default_str();
    simulate->add_option("--d", sim.d, "Memory parameter d")->capture_default_str();
    simulate->add_option("--lambda", sim.lambda, "Tempering parameter (overrides --lambda-rule)");
    simulate->add_option("--lambda-rule", sim.lambda_rule, "Tempering rule, e.g. N^-1/5")->capture_default_str();
    simulate->add_option("--n", sim.n, "Sample size")->capture_default_str();
    simulate->add_option("--burn-in", sim.burn_in, "Discarded warm-up length")->capture_default_str();
    simulate->add_option("--rho", sim.rho, "Innovation correlation")->capture_default_str();
    simulate->add_option("--psi", sim.psi, "AR(1) coefficient of the error")->capture_default_str();
    simulate->add_option("--sigma", sim.sigma, "Error scale")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    simulate->add_option("--function", sim.function, "Regression function: sine|zero")->capture_default_str();
    simulate->add_option("--sine-terms", sim.sine_terms, "Terms of the sine series")->capture_default_str();
    simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Nadaraya-Watson estimate with pointwise intervals");
    estimate->add_option("--input", est.input, "CSV with x and y columns")->required();
    estimate->add_option("--x-column", est.xcol, "Regressor column")->capture_default_str();
    estimate->add_option("--y-column", est.ycol, "Response column")->capture_default_str();
    estimate->add_option("--bandwidth", est.bandwidth, "Bandwidth (overrides --bandwidth-rule)");
    estimate->add_option("--bandwidth-rule", est.bandwidth_rule, "Bandwidth rule, e.g. N^-1/3")->capture_default_str();
    estimate->add_option("--kernel", est.kernel, "epanechnikov|gaussian")->capture_default_str();
    estimate->add_option("--grid", est.grid, "Grid range lo,hi")->capture_default_str();
    estimate->add_option("--grid-points", est.grid_points, "Number of grid points")->capture_default_str();
    estimate->add_option("--alpha", est.alpha, "Interval level alpha")->capture_default_str();
    estimate->add_option("--out", est.out, "Output directory")->capture_default_str();

    SpecTestArgs st;
    auto* spec_test = app.add_subcommand("spec-test", "Specification test with subsampling p-value");
    spec_test->add_option("--input", st.input, "CSV with x and y columns")->required();
    spec_test->add_option("--x-column", st.xcol, "Regressor column")->capture_default_str();
    spec_test->add_option("--y-column", st.ycol, "Response column")->capture_default_str();
    spec_test->add_option("--family", st.family, "linear|quadratic")->capture_default_str();
    spec_test->add_option("--bandwidth-rule", st.bandwidth_rule, "Bandwidth rule")->capture_default_str();
    spec_test->add_option("--block-rule", st.block_rule, "Block size rule, e.g. [4N^0.5]")->capture_default_str();
    spec_test->add_option("--memory", st.memory, "Normalisation: slm|lm|short")->capture_default_str();
    spec_test->add_option("--d", st.d, "Memory parameter d")->capture_default_str();
    spec_test->add_option("--lambda-rule", st.lambda_rule, "Tempering rule (slm)")->capture_default_str();
    spec_test->add_option("--kernel", st.kernel, "gaussian|epanechnikov")->capture_default_str();
    spec_test->add_option("--weight-support", st.weight_support, "Weight support a,b")->capture_default_str();
    spec_test->add_option("--quad-cells", st.quad_cells, "Quadrature cells")->capture_default_str();
    spec_test->add_option("--threads", st.threads, "Worker threads")->capture_default_str();
    spec_test->add_option("--out", st.out, "Output directory")->capture_default_str();

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit-artfima", "Whittle fits of ARTFIMA(0,d,lambda,0) and ARFIMA(0,d,0)");
    fit_cmd->add_option("--input", fit.input, "CSV file")->required();
    fit_cmd->add_option("--column", fit.column, "Series column")->capture_default_str();
    fit_cmd->add_flag("--log", fit.log, "Take logs first");
    fit_cmd->add_option("--out", fit.out, "Output directory")->capture_default_str();

    McArgs mc;
    auto* mc_cmd = app.add_subcommand("mc", "Run a Monte Carlo study from a JSON config");
    mc_cmd->add_option("--study", mc.study, "estimation|coverage|size (must match the config)");
    mc_cmd->add_option("--config", mc.config, "Study config JSON")->required();
    mc_cmd->add_option("--out", mc.out, "Output directory")->capture_default_str();
    mc_cmd->add_option("--threads", mc.threads, "Worker threads")->capture_default_str();

    CkcArgs ckc;
    auto* ckc_cmd = app.add_subcommand("ckc", "Carbon Kuznets Curve workflow on a year,gdp,co2 CSV");
    ckc_cmd->add_option("--input", ckc.input, "CSV with year,gdp,co2")->required();
    ckc_cmd->add_option("--country", ckc.country, "Label (default: file stem)");
    ckc_cmd->add_option("--threads", ckc.threads, "Worker threads")->capture_default_str();
    ckc_cmd->add_option("--quad-cells", ckc.quad_cells, "Quadrature cells")->capture_default_str();
    ckc_cmd->add_option("--out", ckc.out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*simulate) return run_simulate(sim, run);
        if (*estimate) return run_estimate(est, run);
        if (*spec_test) return run_spec_test_cmd(st, run);
        if (*fit_cmd) return run_fit(fit, run);
        if (*mc_cmd) return run_mc(mc, run);
        if (*ckc_cmd) return run_ckc(ckc, run);
    } catch (const slmreg::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const slmreg::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
