#pragma once

#include "slmreg/error.hpp"
#include "slmreg/io.hpp"
#include "slmreg/rules.hpp"
#include "slmreg/spec_test.hpp"
#include "slmreg/whittle.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace slmreg {

/// Annual per-capita GDP and CO2 for one country.
struct EmpiricalSeries {
    std::string country;
    std::vector<long> year;
    std::vector<double> gdp;
    std::vector<double> co2;

    std::size_t size() const { return year.size(); }

    std::vector<double> log_gdp() const { return logs(gdp); }
    std::vector<double> log_co2() const { return logs(co2); }

private:
    static std::vector<double> logs(const std::vector<double>& v) {
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(v[i]);
        return out;
    }
};

/// Parses `year,gdp,co2` text; errors name the offending line.
inline EmpiricalSeries parse_ckc_csv(std::string_view text, std::string country = {}) {
    const auto table = io::parse_csv(text);
    for (const char* name : {"year", "gdp", "co2"}) {
        if (!table.column(name)) throw ValidationError(std::string("missing column '") + name + "'");
    }
    const auto year_col = *table.column("year");
    EmpiricalSeries s;
    s.country = std::move(country);
    s.gdp = io::numeric_column(table, "gdp");
    s.co2 = io::numeric_column(table, "co2");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto line = std::to_string(table.line_numbers[r]);
        const double y = io::parse_double(table.rows[r][year_col], table.line_numbers[r], "year");
        if (y != std::floor(y)) throw ValidationError("line " + line + ": year must be an integer");
        s.year.push_back(static_cast<long>(y));
        if (!(s.gdp[r] > 0.0)) throw ValidationError("line " + line + ": gdp must be positive");
        if (!(s.co2[r] > 0.0)) throw ValidationError("line " + line + ": co2 must be positive");
        if (r > 0 && s.year[r] != s.year[r - 1] + 1) {
            throw ValidationError("line " + line + ": year " + std::to_string(s.year[r]) + " does not follow " +
                                  std::to_string(s.year[r - 1]));
        }
    }
    if (s.year.empty()) throw ValidationError("no data rows");
    return s;
}

inline EmpiricalSeries ingest_ckc_csv(const std::string& path, std::string country = {}) {
    return parse_ckc_csv(io::read_file(path), std::move(country));
}

inline std::string ckc_csv(const EmpiricalSeries& s) {
    std::string out = "year,gdp,co2\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(s.year[i]) + ',' + io::format_double(s.gdp[i]) + ',' + io::format_double(s.co2[i]) +
               '\n';
    }
    return out;
}

struct CkcCell {
    std::string hypothesis;  // H1 linear, H2 quadratic
    std::string bandwidth_rule;
    std::string block_rule;
    SpecTestResult test;
};

struct CkcReport {
    std::string country;
    std::size_t n = 0;
    ArtfimaFit gdp_artfima;
    ArtfimaFit gdp_arfima;
    ArtfimaFit co2_artfima;
    ArtfimaFit co2_arfima;
    std::vector<CkcCell> cells;
    std::vector<std::string> warnings;
};

struct CkcOptions {
    std::vector<std::string> bandwidth_rules{"1/sqrt(N)", "1/N"};
    std::vector<std::string> block_rules{"[2N^0.5]", "[4N^0.5]", "[6N^0.5]"};
    double weight_lo = -100.0;
    double weight_hi = 100.0;
    std::size_t quad_cells = 2048;
};

/// Whittle fits of both series, then the subsampling test of (log gdp, log co2)
/// for each hypothesis, bandwidth and block rule under the semi-long-memory
/// normalisation with the regressor's fitted d and lambda.
inline CkcReport ckc_analysis(const EmpiricalSeries& series, const CkcOptions& options = {}, unsigned threads = 1) {
    CkcReport report;
    report.country = series.country;
    report.n = series.size();
    detail::require(report.n >= 8, "series too short for the analysis");
    if (report.n < 30) report.warnings.push_back("n < 30: block rules may collapse to tiny blocks");
    const auto e = series.log_gdp();
    const auto z = series.log_co2();
    report.gdp_artfima = fit_artfima00(e);
    report.gdp_arfima = fit_arfima00(e);
    report.co2_artfima = fit_artfima00(z);
    report.co2_arfima = fit_arfima00(z);

    const double n = static_cast<double>(report.n);
    const double lambda = report.gdp_artfima.lambda_hat;
    // lambda_hat = N^{-a}; blocks use b^{-a}.
    const PowerRule tempering{1.0, std::log(lambda) / std::log(n)};

    for (const auto& family : {ParametricFamily::linear(), ParametricFamily::quadratic()}) {
        StatisticSetup setup;
        setup.family = family;
        setup.kernel = Kernel{KernelKind::Gaussian};
        setup.weight = WeightFunction::indicator(options.weight_lo, options.weight_hi);
        setup.quad.cells = options.quad_cells;
        setup.memory = MemoryKind::SemiLongMemory;
        setup.d = report.gdp_artfima.d_hat;
        for (const auto& hr : options.bandwidth_rules) {
            for (const auto& br : options.block_rules) {
                SpecTestRules rules{parse_power_rule(hr), parse_power_rule(br), tempering};
                auto scales = rules.resolve(report.n, setup.memory);
                scales.lambda = lambda;
                CkcCell cell{family.kind == FamilyKind::Linear ? "H1" : "H2", hr, br,
                             run_spec_test(e, z, setup, scales, threads)};
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

inline io::Json to_json(const CkcReport& r) {
    io::Json cells = io::Json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"hypothesis", c.hypothesis},
                         {"bandwidth_rule", c.bandwidth_rule},
                         {"block_rule", c.block_rule},
                         {"p_value", c.test.p_value},
                         {"t_normalized", c.test.t_normalized},
                         {"block_size", c.test.block_size},
                         {"theta_hat", c.test.theta_hat}});
    }
    return io::Json{{"country", r.country},
                    {"n", r.n},
                    {"whittle",
                     {{"log_gdp", {{"artfima", io::to_json(r.gdp_artfima)}, {"arfima", io::to_json(r.gdp_arfima)}}},
                      {"log_co2", {{"artfima", io::to_json(r.co2_artfima)}, {"arfima", io::to_json(r.co2_arfima)}}}}},
                    {"tests", cells},
                    {"warnings", r.warnings}};
}

/// p-value grid: hypothesis,bandwidth_rule,block_rule,block_size,p_value
inline std::string ckc_p_value_csv(const CkcReport& r) {
    std::string out = "hypothesis,bandwidth_rule,block_rule,block_size,p_value\n";
    for (const auto& c : r.cells) {
        out += c.hypothesis + ',' + c.bandwidth_rule + ',' + c.block_rule + ',' + std::to_string(c.test.block_size) +
               ',' + io::format_double(c.test.p_value) + '\n';
    }
    return out;
}

}  // namespace slmreg
