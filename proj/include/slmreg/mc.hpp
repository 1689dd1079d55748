#pragma once

#include "slmreg/error.hpp"
#include "slmreg/io.hpp"
#include "slmreg/kernel_regression.hpp"
#include "slmreg/parallel.hpp"
#include "slmreg/process.hpp"
#include "slmreg/rng.hpp"
#include "slmreg/rules.hpp"
#include "slmreg/spec_test.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slmreg::mc {

enum class StudyKind { Estimation, Coverage, Size };

inline std::string_view to_string(StudyKind kind) {
    switch (kind) {
        case StudyKind::Estimation: return "estimation";
        case StudyKind::Coverage: return "coverage";
        case StudyKind::Size: return "size";
    }
    return "?";
}

inline StudyKind parse_study_kind(std::string_view text) {
    if (text == "estimation") return StudyKind::Estimation;
    if (text == "coverage") return StudyKind::Coverage;
    if (text == "size") return StudyKind::Size;
    throw ValidationError("unknown study '" + std::string(text) + "' (expected estimation|coverage|size)");
}

/// A regressor design: long memory, or semi-long memory with lambda = rule(N).
/// At d = 0 every setting simulates the same short-memory random walk.
struct MemorySetting {
    std::string label;
    MemoryKind kind = MemoryKind::LongMemory;
    std::string lambda_rule;  // semi-long only, e.g. "N^-1/5"

    PowerRule tempering() const { return parse_power_rule(lambda_rule); }
};

struct StudyConfig {
    StudyKind kind = StudyKind::Estimation;
    std::size_t n = 1000;
    std::size_t replications = 2000;
    std::vector<double> d_values{0.0};
    std::vector<MemorySetting> memory_settings{{"LM", MemoryKind::LongMemory, ""}};
    std::vector<std::string> bandwidth_rules{"N^-1/3"};
    double rho = 0.5;
    double psi = 0.25;
    double sigma = 0.2;
    std::string function = "sine";  // sine | zero; the size study always uses theta = (0, 1)
    std::size_t sine_terms = kDefaultSineTerms;
    std::size_t burn_in = kDefaultBurnIn;
    KernelKind kernel = KernelKind::Epanechnikov;
    // estimation
    std::size_t grid_points = 100;
    double grid_lo = 0.0;
    double grid_hi = 1.0;
    // coverage
    std::vector<double> x_points{0.25, 0.5, 0.75, 0.95};
    double alpha = 0.05;
    // size
    std::vector<std::string> block_rules{"[0.5N^0.5]", "[N^0.5]", "[2N^0.5]", "[4N^0.5]"};
    std::vector<double> nominal_levels{0.01, 0.05, 0.10};
    double weight_lo = -100.0;
    double weight_hi = 100.0;
    std::size_t quad_cells = 2048;
    std::uint64_t master_seed = 20240601;

    void validate() const {
        slmreg::detail::require(n >= 10, "n must be at least 10");
        slmreg::detail::require(replications >= 1, "replications must be at least 1");
        slmreg::detail::require(!d_values.empty(), "d_values must be non-empty");
        slmreg::detail::require(!memory_settings.empty(), "memory_settings must be non-empty");
        slmreg::detail::require(!bandwidth_rules.empty(), "bandwidth_rules must be non-empty");
        slmreg::detail::require(std::abs(rho) <= 1.0, "rho must lie in [-1, 1]");
        slmreg::detail::require(std::abs(psi) < 1.0, "psi must satisfy |psi| < 1");
        slmreg::detail::require(sigma >= 0.0, "sigma must be non-negative");
        slmreg::detail::require(function == "sine" || function == "zero", "function must be sine or zero");
        for (const auto& m : memory_settings) {
            slmreg::detail::require(m.kind != MemoryKind::ShortMemory, "memory settings are lm or slm");
            if (m.kind == MemoryKind::SemiLongMemory) {
                const auto rule = m.tempering();
                // lambda -> 0 and N lambda -> infinity.
                slmreg::detail::require(rule.exponent < 0.0 && rule.exponent > -1.0,
                                "tempering rule must be N^-a with 0 < a < 1 (" + m.label + ")");
            }
        }
        for (double d : d_values) {
            slmreg::detail::require(d >= 0.0, "d values must be non-negative");
            for (const auto& m : memory_settings) {
                if (m.kind == MemoryKind::LongMemory && d > 0.0) {
                    slmreg::detail::require(d < 0.5, "long memory requires d < 1/2");
                }
            }
        }
        for (const auto& r : bandwidth_rules) {
            slmreg::detail::require(parse_power_rule(r)(static_cast<double>(n)) > 0.0, "bandwidth must be positive");
        }
        if (kind == StudyKind::Coverage) {
            slmreg::detail::require(!x_points.empty(), "coverage study needs x_points");
            slmreg::detail::require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
        }
        if (kind == StudyKind::Size) {
            slmreg::detail::require(!block_rules.empty(), "size study needs block rules");
            slmreg::detail::require(!nominal_levels.empty(), "size study needs nominal levels");
            for (double a : nominal_levels) slmreg::detail::require(a > 0.0 && a < 1.0, "nominal levels lie in (0, 1)");
            slmreg::detail::require(weight_lo < weight_hi, "weight support must satisfy lo < hi");
            slmreg::detail::require(quad_cells >= 2, "quad_cells must be at least 2");
        }
        if (kind == StudyKind::Estimation) {
            slmreg::detail::require(grid_points >= 1, "grid_points must be at least 1");
        }
    }

    /// Regressor spec for one (setting, d) pair.
    TemperedProcessSpec process_for(const MemorySetting& m, double d) const {
        if (d == 0.0) {
            return TemperedProcessSpec::make(MemoryKind::ShortMemory, 0.0, 0.0, n, burn_in);
        }
        if (m.kind == MemoryKind::LongMemory) {
            return TemperedProcessSpec::make(MemoryKind::LongMemory, d, 0.0, n, burn_in);
        }
        return TemperedProcessSpec::make(MemoryKind::SemiLongMemory, d, m.tempering()(static_cast<double>(n)), n,
                                         burn_in);
    }
};

struct CellKey {
    std::string criterion;
    std::string memory;
    std::string bandwidth;
    double d = 0.0;

    friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct Cell {
    CellKey key;
    double value = 0.0;
    double mc_error = 0.0;
};

/// Null-distribution draws of the full-sample normalised statistic.
struct HistogramRow {
    std::string memory;
    std::string bandwidth;
    double d = 0.0;
    std::size_t replication = 0;
    double t_normalized = 0.0;
};

struct StudyResult {
    StudyConfig config;
    std::vector<std::string> criteria;
    std::vector<Cell> cells;
    std::vector<HistogramRow> histogram;
    std::vector<std::string> flags;

    const Cell* find(std::string_view criterion, std::string_view memory, std::string_view bandwidth,
                     double d) const {
        for (const auto& c : cells) {
            if (c.key.criterion == criterion && c.key.memory == memory && c.key.bandwidth == bandwidth &&
                c.key.d == d) {
                return &c;
            }
        }
        return nullptr;
    }

    double value(std::string_view criterion, std::string_view memory, std::string_view bandwidth, double d) const {
        const auto* c = find(criterion, memory, bandwidth, d);
        if (!c) throw ValidationError("no such cell: " + std::string(criterion) + "/" + std::string(memory));
        return c->value;
    }
};

inline std::string coverage_criterion(double x) { return "coverage_x" + io::format_short(x); }
inline std::string length_criterion(double x) { return "length_x" + io::format_short(x); }
inline std::string size_criterion(double level, std::string_view block_rule) {
    std::string rule;
    for (char c : block_rule) {
        if (c != '[' && c != ']' && c != ' ' && c != '*') rule.push_back(c == '^' ? 'p' : c);
    }
    return "size_a" + io::format_short(level) + "_b" + rule;
}

namespace detail {

struct Setting {
    std::size_t memory_index;
    double d;
};

inline std::vector<Setting> settings_of(const StudyConfig& cfg) {
    std::vector<Setting> out;
    for (std::size_t m = 0; m < cfg.memory_settings.size(); ++m) {
        for (double d : cfg.d_values) out.push_back({m, d});
    }
    return out;
}

inline RegressionFunction study_function(const StudyConfig& cfg) {
    if (cfg.kind == StudyKind::Size) return polynomial_function({0.0, 1.0});
    return cfg.function == "zero" ? zero_function() : sine_series_function(cfg.sine_terms);
}

inline SimulatedPath draw(const StudyConfig& cfg, const Setting& s, std::size_t rep, const RegressionFunction& f) {
    NoiseConfig noise{cfg.rho, cfg.psi, cfg.sigma, replication_seed(cfg.master_seed, rep)};
    return simulate_model(cfg.process_for(cfg.memory_settings[s.memory_index], s.d), noise, f);
}

// Pairwise summation keeps reductions independent of accumulation order.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct Moments {
    std::size_t count = 0;
    double m1 = 0.0;  // mean e
    double m2 = 0.0;  // mean e^2
    double m4 = 0.0;  // mean e^4
    double var = 0.0; // unbiased variance
};

inline Moments moments_of(std::vector<double> samples) {
    samples.erase(std::remove_if(samples.begin(), samples.end(), [](double v) { return std::isnan(v); }),
                  samples.end());
    Moments m;
    m.count = samples.size();
    if (m.count == 0) return m;
    const auto cnt = static_cast<double>(m.count);
    m.m1 = pairwise_sum(samples) / cnt;
    std::vector<double> sq(samples.size());
    std::vector<double> dev(samples.size());
    std::vector<double> q(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        sq[i] = samples[i] * samples[i];
        q[i] = sq[i] * sq[i];
        dev[i] = (samples[i] - m.m1) * (samples[i] - m.m1);
    }
    m.m2 = pairwise_sum(sq) / cnt;
    m.m4 = pairwise_sum(q) / cnt;
    m.var = m.count > 1 ? pairwise_sum(dev) / (cnt - 1.0) : 0.0;
    return m;
}

inline double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace detail

/// Bias, Std and RMSE of f_hat on an equispaced grid, each averaged over the grid.
/// Bias is the grid average of |E f_hat(x) - f(x)|.
inline StudyResult run_estimation_study(const StudyConfig& cfg, unsigned threads = 1) {
    slmreg::detail::require(cfg.kind == StudyKind::Estimation, "config is not an estimation study");
    cfg.validate();
    const auto settings = detail::settings_of(cfg);
    const auto grid = linspace(cfg.grid_lo, cfg.grid_hi, cfg.grid_points);
    const auto f = detail::study_function(cfg);
    std::vector<double> truth(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) truth[i] = f(grid[i]);
    const Kernel kernel{cfg.kernel};
    const std::size_t nh = cfg.bandwidth_rules.size();
    const std::size_t per_rep = settings.size() * nh * grid.size();
    std::vector<double> bandwidths;
    for (const auto& r : cfg.bandwidth_rules) bandwidths.push_back(parse_power_rule(r)(static_cast<double>(cfg.n)));

    // errors[rep][setting][h][point], NaN where undefined
    std::vector<double> errors(cfg.replications * per_rep);
    parallel_for(cfg.replications, threads, [&](std::size_t rep) {
        for (std::size_t s = 0; s < settings.size(); ++s) {
            const auto path = detail::draw(cfg, settings[s], rep, f);
            for (std::size_t hi = 0; hi < nh; ++hi) {
                double* out = &errors[rep * per_rep + (s * nh + hi) * grid.size()];
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    const auto v = nw_value(path.x, path.y, grid[i], bandwidths[hi], kernel);
                    out[i] = v ? *v - truth[i] : std::numeric_limits<double>::quiet_NaN();
                }
            }
        }
    });

    StudyResult result;
    result.config = cfg;
    result.criteria = {"bias", "std", "rmse"};
    const auto reps = cfg.replications;
    for (const char* criterion : {"bias", "std", "rmse"}) {
        for (std::size_t s = 0; s < settings.size(); ++s) {
            for (std::size_t hi = 0; hi < nh; ++hi) {
                std::vector<double> values;
                std::vector<double> errs;
                std::size_t undefined = 0;
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    std::vector<double> samples(reps);
                    for (std::size_t r = 0; r < reps; ++r) samples[r] = errors[r * per_rep + (s * nh + hi) * grid.size() + i];
                    const auto m = detail::moments_of(samples);
                    undefined += reps - m.count;
                    if (m.count == 0) continue;
                    const double sd = std::sqrt(m.var);
                    const double rmse = std::sqrt(m.m2);
                    const auto cnt = static_cast<double>(m.count);
                    const std::string_view c = criterion;
                    if (c == "bias") {
                        values.push_back(std::abs(m.m1));
                        errs.push_back(sd / std::sqrt(cnt));
                    } else if (c == "std") {
                        values.push_back(sd);
                        errs.push_back(m.count > 1 ? sd / std::sqrt(2.0 * (cnt - 1.0)) : 0.0);
                    } else {
                        values.push_back(rmse);
                        const double spread = std::sqrt(std::max(0.0, m.m4 - m.m2 * m.m2) / cnt);
                        errs.push_back(rmse > 0.0 ? spread / (2.0 * rmse) : 0.0);
                    }
                }
                const auto& mem = cfg.memory_settings[settings[s].memory_index];
                CellKey key{criterion, mem.label, cfg.bandwidth_rules[hi], settings[s].d};
                result.cells.push_back({key, detail::mean_of(values), detail::mean_of(errs)});
                const double frac = static_cast<double>(undefined) / static_cast<double>(reps * grid.size());
                if (frac > 0.01 && std::string_view(criterion) == "bias") {
                    result.flags.push_back("undefined fraction " + io::format_short(frac) + " in " + mem.label + "/" +
                                           cfg.bandwidth_rules[hi] + "/d=" + io::format_short(settings[s].d));
                }
            }
        }
    }
    return result;
}

/// Empirical coverage and mean length of the self-normalised pointwise intervals.
inline StudyResult run_coverage_study(const StudyConfig& cfg, unsigned threads = 1) {
    slmreg::detail::require(cfg.kind == StudyKind::Coverage, "config is not a coverage study");
    cfg.validate();
    const auto settings = detail::settings_of(cfg);
    const auto f = detail::study_function(cfg);
    const Kernel kernel{cfg.kernel};
    const std::size_t nh = cfg.bandwidth_rules.size();
    const std::size_t nx = cfg.x_points.size();
    const std::size_t per_rep = settings.size() * nh * nx;
    std::vector<double> bandwidths;
    for (const auto& r : cfg.bandwidth_rules) bandwidths.push_back(parse_power_rule(r)(static_cast<double>(cfg.n)));

    std::vector<double> covered(cfg.replications * per_rep);
    std::vector<double> lengths(cfg.replications * per_rep);
    parallel_for(cfg.replications, threads, [&](std::size_t rep) {
        for (std::size_t s = 0; s < settings.size(); ++s) {
            const auto path = detail::draw(cfg, settings[s], rep, f);
            for (std::size_t hi = 0; hi < nh; ++hi) {
                for (std::size_t xi = 0; xi < nx; ++xi) {
                    const std::size_t slot = rep * per_rep + (s * nh + hi) * nx + xi;
                    const double at = cfg.x_points[xi];
                    const auto ci = confidence_interval(at, path.x, path.y, bandwidths[hi], kernel, cfg.alpha);
                    if (!ci) {
                        covered[slot] = lengths[slot] = std::numeric_limits<double>::quiet_NaN();
                        continue;
                    }
                    const double target = f(at);
                    covered[slot] = (ci->first <= target && target <= ci->second) ? 1.0 : 0.0;
                    lengths[slot] = ci->second - ci->first;
                }
            }
        }
    });

    StudyResult result;
    result.config = cfg;
    for (double x : cfg.x_points) {
        result.criteria.push_back(coverage_criterion(x));
        result.criteria.push_back(length_criterion(x));
    }
    for (std::size_t xi = 0; xi < nx; ++xi) {
        for (std::size_t s = 0; s < settings.size(); ++s) {
            for (std::size_t hi = 0; hi < nh; ++hi) {
                std::vector<double> cov(cfg.replications);
                std::vector<double> len(cfg.replications);
                for (std::size_t r = 0; r < cfg.replications; ++r) {
                    const std::size_t slot = r * per_rep + (s * nh + hi) * nx + xi;
                    cov[r] = covered[slot];
                    len[r] = lengths[slot];
                }
                const auto mc = detail::moments_of(cov);
                const auto ml = detail::moments_of(len);
                const auto& mem = cfg.memory_settings[settings[s].memory_index];
                const double d = settings[s].d;
                const double cnt = std::max<double>(1.0, static_cast<double>(mc.count));
                result.cells.push_back({{coverage_criterion(cfg.x_points[xi]), mem.label, cfg.bandwidth_rules[hi], d},
                                        mc.m1,
                                        std::sqrt(mc.m1 * (1.0 - mc.m1) / cnt)});
                result.cells.push_back({{length_criterion(cfg.x_points[xi]), mem.label, cfg.bandwidth_rules[hi], d},
                                        ml.m1,
                                        std::sqrt(ml.var / cnt)});
                const double frac = 1.0 - static_cast<double>(mc.count) / static_cast<double>(cfg.replications);
                if (frac > 0.01) {
                    result.flags.push_back("undefined fraction " + io::format_short(frac) + " at x=" +
                                           io::format_short(cfg.x_points[xi]) + " in " + mem.label + "/" +
                                           cfg.bandwidth_rules[hi] + "/d=" + io::format_short(d));
                }
            }
        }
    }
    return result;
}

/// Rejection frequencies of the subsampling test under H0: f(x) = x.
inline StudyResult run_size_study(const StudyConfig& cfg, unsigned threads = 1) {
    slmreg::detail::require(cfg.kind == StudyKind::Size, "config is not a size study");
    cfg.validate();
    const auto settings = detail::settings_of(cfg);
    const auto f = detail::study_function(cfg);
    const std::size_t nh = cfg.bandwidth_rules.size();
    const std::size_t nb = cfg.block_rules.size();
    const std::size_t nl = cfg.nominal_levels.size();
    const std::size_t per_rep_t = settings.size() * nh;
    const std::size_t per_rep_r = per_rep_t * nb * nl;

    std::vector<PowerRule> h_rules;
    for (const auto& r : cfg.bandwidth_rules) h_rules.push_back(parse_power_rule(r));
    std::vector<PowerRule> b_rules;
    for (const auto& r : cfg.block_rules) b_rules.push_back(parse_power_rule(r));

    std::vector<double> t_values(cfg.replications * per_rep_t);
    std::vector<double> rejections(cfg.replications * per_rep_r);
    parallel_for(cfg.replications, threads, [&](std::size_t rep) {
        for (std::size_t s = 0; s < settings.size(); ++s) {
            const auto path = detail::draw(cfg, settings[s], rep, f);
            StatisticSetup setup;
            setup.family = ParametricFamily::linear();
            setup.kernel = Kernel{cfg.kernel};
            setup.weight = WeightFunction::indicator(cfg.weight_lo, cfg.weight_hi);
            setup.quad.cells = cfg.quad_cells;
            setup.memory = path.spec.memory;
            setup.d = path.spec.d;
            std::optional<PowerRule> tempering;
            if (setup.memory == MemoryKind::SemiLongMemory) {
                tempering = cfg.memory_settings[settings[s].memory_index].tempering();
            }
            for (std::size_t hi = 0; hi < nh; ++hi) {
                const double h = h_rules[hi](static_cast<double>(cfg.n));
                const double lambda = tempering ? (*tempering)(static_cast<double>(cfg.n)) : 0.0;
                const auto theta = nls_fit(setup.family, path.x, path.y);
                const double t_raw = t_statistic(path.x, path.y, setup.family, theta, h, setup.kernel, setup.weight,
                                                 setup.quad);
                const double t_norm = normalized_statistic(t_raw, cfg.n, lambda, setup.d, h, setup.memory);
                t_values[rep * per_rep_t + s * nh + hi] = t_norm;
                for (std::size_t bi = 0; bi < nb; ++bi) {
                    const std::size_t b = std::clamp<std::size_t>(b_rules[bi].floor_at(cfg.n), 2, cfg.n);
                    const double h_b = h_rules[hi](static_cast<double>(b));
                    const double lambda_b = tempering ? (*tempering)(static_cast<double>(b)) : 0.0;
                    double* out = &rejections[rep * per_rep_r + ((s * nh + hi) * nb + bi) * nl];
                    try {
                        const auto dist = subsample_statistics(path.x, path.y, setup, b, h_b, lambda_b);
                        for (std::size_t li = 0; li < nl; ++li) {
                            out[li] = t_norm > subsample_quantile(dist.sorted, cfg.nominal_levels[li]) ? 1.0 : 0.0;
                        }
                    } catch (const NumericalError&) {
                        for (std::size_t li = 0; li < nl; ++li) out[li] = std::numeric_limits<double>::quiet_NaN();
                    }
                }
            }
        }
    });

    StudyResult result;
    result.config = cfg;
    for (double level : cfg.nominal_levels) {
        for (const auto& br : cfg.block_rules) result.criteria.push_back(size_criterion(level, br));
    }
    for (std::size_t li = 0; li < nl; ++li) {
        for (std::size_t bi = 0; bi < nb; ++bi) {
            for (std::size_t s = 0; s < settings.size(); ++s) {
                for (std::size_t hi = 0; hi < nh; ++hi) {
                    std::vector<double> rej(cfg.replications);
                    for (std::size_t r = 0; r < cfg.replications; ++r) {
                        rej[r] = rejections[r * per_rep_r + ((s * nh + hi) * nb + bi) * nl + li];
                    }
                    const auto m = detail::moments_of(rej);
                    const auto& mem = cfg.memory_settings[settings[s].memory_index];
                    const double cnt = std::max<double>(1.0, static_cast<double>(m.count));
                    result.cells.push_back({{size_criterion(cfg.nominal_levels[li], cfg.block_rules[bi]), mem.label,
                                             cfg.bandwidth_rules[hi], settings[s].d},
                                            m.m1,
                                            std::sqrt(m.m1 * (1.0 - m.m1) / cnt)});
                    if (m.count < cfg.replications && li == 0) {
                        result.flags.push_back(std::to_string(cfg.replications - m.count) +
                                               " replications aborted (block failures) in " + mem.label + "/" +
                                               cfg.bandwidth_rules[hi] + "/" + cfg.block_rules[bi]);
                    }
                }
            }
        }
    }
    for (std::size_t s = 0; s < settings.size(); ++s) {
        for (std::size_t hi = 0; hi < nh; ++hi) {
            for (std::size_t r = 0; r < cfg.replications; ++r) {
                result.histogram.push_back({cfg.memory_settings[settings[s].memory_index].label,
                                            cfg.bandwidth_rules[hi], settings[s].d, r,
                                            t_values[r * per_rep_t + s * nh + hi]});
            }
        }
    }
    return result;
}

inline StudyResult run_study(const StudyConfig& cfg, unsigned threads = 1) {
    switch (cfg.kind) {
        case StudyKind::Estimation: return run_estimation_study(cfg, threads);
        case StudyKind::Coverage: return run_coverage_study(cfg, threads);
        case StudyKind::Size: return run_size_study(cfg, threads);
    }
    throw ValidationError("unknown study kind");
}

// ---- configuration files ------------------------------------------------

inline io::Json to_json(const StudyConfig& c) {
    io::Json memory = io::Json::array();
    for (const auto& m : c.memory_settings) {
        io::Json entry{{"label", m.label}, {"kind", std::string(slmreg::to_string(m.kind))}};
        if (m.kind == MemoryKind::SemiLongMemory) entry["lambda_rule"] = m.lambda_rule;
        memory.push_back(entry);
    }
    io::Json j{{"study", std::string(to_string(c.kind))},
               {"n", c.n},
               {"replications", c.replications},
               {"d_values", c.d_values},
               {"memory_settings", memory},
               {"bandwidth_rules", c.bandwidth_rules},
               {"rho", c.rho},
               {"psi", c.psi},
               {"sigma", c.sigma},
               {"function", c.function},
               {"sine_terms", c.sine_terms},
               {"burn_in", c.burn_in},
               {"kernel", std::string(slmreg::to_string(c.kernel))},
               {"master_seed", c.master_seed}};
    switch (c.kind) {
        case StudyKind::Estimation:
            j["grid"] = {{"points", c.grid_points}, {"lo", c.grid_lo}, {"hi", c.grid_hi}};
            break;
        case StudyKind::Coverage:
            j["x_points"] = c.x_points;
            j["alpha"] = c.alpha;
            break;
        case StudyKind::Size:
            j["block_rules"] = c.block_rules;
            j["nominal_levels"] = c.nominal_levels;
            j["weight_support"] = {c.weight_lo, c.weight_hi};
            j["quad_cells"] = c.quad_cells;
            break;
    }
    return j;
}

/// Reads a study config; accepts a bare config or an exported manifest.
inline StudyConfig config_from_json(const io::Json& input) {
    const io::Json& j = input.contains("config") ? input.at("config") : input;
    StudyConfig c;
    try {
        c.kind = parse_study_kind(j.at("study").get<std::string>());
        if (c.kind == StudyKind::Size) {
            c.kernel = KernelKind::Gaussian;
            c.n = 500;
        }
        c.n = j.value("n", c.n);
        c.replications = j.value("replications", c.replications);
        c.d_values = j.value("d_values", c.d_values);
        if (j.contains("memory_settings")) {
            c.memory_settings.clear();
            for (const auto& m : j.at("memory_settings")) {
                MemorySetting ms;
                ms.kind = parse_memory_kind(m.at("kind").get<std::string>());
                ms.label = m.value("label", std::string(slmreg::to_string(ms.kind)));
                ms.lambda_rule = m.value("lambda_rule", std::string());
                c.memory_settings.push_back(ms);
            }
        }
        c.bandwidth_rules = j.value("bandwidth_rules", c.bandwidth_rules);
        c.rho = j.value("rho", c.rho);
        c.psi = j.value("psi", c.psi);
        c.sigma = j.value("sigma", c.sigma);
        c.function = j.value("function", c.function);
        c.sine_terms = j.value("sine_terms", c.sine_terms);
        c.burn_in = j.value("burn_in", c.burn_in);
        if (j.contains("kernel")) c.kernel = parse_kernel_kind(j.at("kernel").get<std::string>());
        c.master_seed = j.value("master_seed", c.master_seed);
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            c.grid_points = g.value("points", c.grid_points);
            c.grid_lo = g.value("lo", c.grid_lo);
            c.grid_hi = g.value("hi", c.grid_hi);
        }
        c.x_points = j.value("x_points", c.x_points);
        c.alpha = j.value("alpha", c.alpha);
        c.block_rules = j.value("block_rules", c.block_rules);
        c.nominal_levels = j.value("nominal_levels", c.nominal_levels);
        if (j.contains("weight_support")) {
            const auto ws = j.at("weight_support").get<std::vector<double>>();
            slmreg::detail::require(ws.size() == 2, "weight_support must be [lo, hi]");
            c.weight_lo = ws[0];
            c.weight_hi = ws[1];
        }
        c.quad_cells = j.value("quad_cells", c.quad_cells);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("invalid study config: ") + e.what());
    }
    c.validate();
    return c;
}

inline io::Json manifest(const StudyResult& r) {
    return io::Json{{"tool", "slmreg 0.1.0"}, {"config", to_json(r.config)}, {"flags", r.flags}};
}

/// One CSV per criterion (memory,bandwidth_rule,d,value,mc_error), the
/// manifest, and for size studies the histogram of full-sample statistics.
inline std::vector<std::filesystem::path> export_study(const StudyResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& criterion : r.criteria) {
        std::string csv = "memory,bandwidth_rule,d,value,mc_error\n";
        for (const auto& c : r.cells) {
            if (c.key.criterion != criterion) continue;
            csv += c.key.memory + ',' + c.key.bandwidth + ',' + io::format_short(c.key.d) + ',' +
                   io::format_double(c.value) + ',' + io::format_double(c.mc_error) + '\n';
        }
        const auto path = dir / (criterion + ".csv");
        io::write_file(path.string(), csv);
        written.push_back(path);
    }
    if (r.config.kind == StudyKind::Size) {
        std::string csv = "memory,bandwidth_rule,d,replication,t_normalized\n";
        for (const auto& h : r.histogram) {
            csv += h.memory + ',' + h.bandwidth + ',' + io::format_short(h.d) + ',' + std::to_string(h.replication) +
                   ',' + io::format_double(h.t_normalized) + '\n';
        }
        const auto path = dir / "histogram.csv";
        io::write_file(path.string(), csv);
        written.push_back(path);
    }
    const auto path = dir / "manifest.json";
    io::write_file(path.string(), manifest(r).dump(2) + "\n");
    written.push_back(path);
    return written;
}

}  // namespace slmreg::mc
