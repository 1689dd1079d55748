#pragma once

#include "slmreg/error.hpp"
#include "slmreg/kernel_regression.hpp"
#include "slmreg/process.hpp"
#include "slmreg/spec_test.hpp"
#include "slmreg/whittle.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace slmreg::io {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that round-trips the double ("%.17g").
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Compact form for labels and keys ("%g").
inline std::string format_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// FNV-1a 64-bit digest, used to fingerprint input files in manifests.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

}  // namespace detail

/// Comma-separated text with a header line; blank lines are skipped.
inline CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_row(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.header.size()) + " fields, found " +
                                  std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty()) throw ValidationError("CSV input is empty");
    return table;
}

inline CsvTable read_csv(const std::string& path) {
    return parse_csv(read_file(path));
}

inline double parse_double(const std::string& cell, std::size_t line, std::string_view column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::logic_error&) {
        throw ValidationError("line " + std::to_string(line) + ": column '" + std::string(column) +
                              "' is not a number: '" + cell + "'");
    }
}

inline std::vector<double> numeric_column(const CsvTable& table, std::string_view name) {
    const auto col = table.column(name);
    if (!col) throw ValidationError("missing column '" + std::string(name) + "'");
    std::vector<double> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out.push_back(parse_double(table.rows[r][*col], table.line_numbers[r], name));
    }
    return out;
}

// ---- SimulatedPath ------------------------------------------------------

inline std::string path_csv(const SimulatedPath& path) {
    std::string out = "k,x,u,y\n";
    for (std::size_t k = 0; k < path.x.size(); ++k) {
        out += std::to_string(k + 1);
        out += ',';
        out += format_double(path.x[k]);
        out += ',';
        out += format_double(path.u[k]);
        out += ',';
        out += format_double(path.y[k]);
        out += '\n';
    }
    return out;
}

inline Json to_json(const TemperedProcessSpec& spec) {
    return Json{{"d", spec.d},
                {"lambda", spec.lambda},
                {"n", spec.n},
                {"memory", std::string(to_string(spec.memory))},
                {"truncation", spec.truncation},
                {"burn_in", spec.burn_in}};
}

inline TemperedProcessSpec spec_from_json(const Json& j) {
    TemperedProcessSpec spec;
    spec.d = j.at("d").get<double>();
    spec.lambda = j.at("lambda").get<double>();
    spec.n = j.at("n").get<std::size_t>();
    spec.memory = parse_memory_kind(j.at("memory").get<std::string>());
    spec.burn_in = j.value("burn_in", kDefaultBurnIn);
    spec.truncation = j.contains("truncation") ? j.at("truncation").get<std::size_t>()
                                               : default_truncation(spec.memory, spec.lambda, spec.n, spec.burn_in);
    spec.validate();
    return spec;
}

inline Json to_json(const NoiseConfig& noise) {
    return Json{{"rho", noise.rho}, {"psi", noise.psi}, {"sigma", noise.sigma}, {"seed", noise.seed}};
}

inline NoiseConfig noise_from_json(const Json& j) {
    NoiseConfig noise;
    noise.rho = j.value("rho", 0.0);
    noise.psi = j.value("psi", 0.0);
    noise.sigma = j.value("sigma", 1.0);
    noise.seed = j.value("seed", std::uint64_t{0});
    noise.validate();
    return noise;
}

/// Run manifest stored next to a simulated path.
inline Json path_manifest(const SimulatedPath& path) {
    return Json{{"spec", to_json(path.spec)}, {"noise", to_json(path.noise)}, {"function", path.function_name}};
}

// ---- KernelEstimate -----------------------------------------------------

inline std::string estimate_csv(const KernelEstimate& est) {
    std::string out = "x,fhat,sigma2hat,local_mass,ci_lo,ci_hi\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (std::size_t i = 0; i < est.grid.size(); ++i) {
        out += format_double(est.grid[i]) + ',' + opt(est.fhat[i]) + ',' + opt(est.sigma2hat[i]) + ',' +
               format_double(est.local_mass[i]) + ',';
        if (est.ci[i]) {
            out += format_double(est.ci[i]->first) + ',' + format_double(est.ci[i]->second);
        } else {
            out += ',';
        }
        out += '\n';
    }
    return out;
}

// ---- SpecTestResult / ArtfimaFit ---------------------------------------

inline Json to_json(const SpecTestResult& r) {
    return Json{{"t_raw", r.t_raw},
                {"t_normalized", r.t_normalized},
                {"normalizer", r.normalizer},
                {"theta_hat", r.theta_hat},
                {"p_value", r.p_value},
                {"block_size", r.block_size},
                {"skipped_blocks", r.skipped_blocks},
                {"bandwidth", r.bandwidth},
                {"lambda", r.lambda},
                {"block_bandwidth", r.block_bandwidth},
                {"block_lambda", r.block_lambda},
                {"subsample_values", r.subsample_values}};
}

inline SpecTestResult spec_test_result_from_json(const Json& j) {
    SpecTestResult r;
    r.t_raw = j.at("t_raw").get<double>();
    r.t_normalized = j.at("t_normalized").get<double>();
    r.normalizer = j.at("normalizer").get<double>();
    r.theta_hat = j.at("theta_hat").get<std::vector<double>>();
    r.p_value = j.at("p_value").get<double>();
    r.block_size = j.at("block_size").get<std::size_t>();
    r.skipped_blocks = j.value("skipped_blocks", std::size_t{0});
    r.bandwidth = j.value("bandwidth", 0.0);
    r.lambda = j.value("lambda", 0.0);
    r.block_bandwidth = j.value("block_bandwidth", 0.0);
    r.block_lambda = j.value("block_lambda", 0.0);
    r.subsample_values = j.at("subsample_values").get<std::vector<double>>();
    return r;
}

inline Json to_json(const ArtfimaFit& fit) {
    return Json{{"model", fit.tempered ? "artfima(0,d,lambda,0)" : "arfima(0,d,0)"},
                {"d_hat", fit.d_hat},
                {"lambda_hat", fit.lambda_hat},
                {"sigma2_hat", fit.sigma2_hat},
                {"objective", fit.objective},
                {"mse", fit.mse},
                {"boundary", fit.boundary},
                {"grid_probes", fit.probes.size()}};
}

}  // namespace slmreg::io
