#include <slmreg/io.hpp>
#include <slmreg/spec_test.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace slmreg;

namespace {

struct Data {
    std::vector<double> x;
    std::vector<double> y;
};

Data linear_walk(std::size_t n, std::uint64_t seed, double noise, double curvature = 0.0) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> z;
    Data d;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += 0.5 * z(g);
        d.x.push_back(acc);
        d.y.push_back(1.0 + 0.5 * acc + curvature * acc * acc + noise * z(g));
    }
    return d;
}

double gauss(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2 * M_PI); }

// Normal equations for a line by Cramer's rule.
std::pair<double, double> cramer_line(const Data& d) {
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < d.x.size(); ++k) {
        n += 1;
        sx += d.x[k];
        sy += d.y[k];
        sxx += d.x[k] * d.x[k];
        sxy += d.x[k] * d.y[k];
    }
    const double det = n * sxx - sx * sx;
    return {(sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det};
}

// Fine Riemann sum of the statistic over the full weight support.
double riemann_t(const Data& d, std::span<const double> theta, double h, double lo, double hi, std::size_t cells) {
    const double w = (hi - lo) / static_cast<double>(cells);
    double total = 0;
    for (std::size_t i = 0; i < cells; ++i) {
        const double s = lo + (static_cast<double>(i) + 0.5) * w;
        double acc = 0;
        for (std::size_t k = 0; k < d.x.size(); ++k) {
            const double r = d.y[k] - (theta[0] + theta[1] * d.x[k]);
            acc += gauss((d.x[k] - s) / h) * r;
        }
        total += acc * acc;
    }
    return total * w;
}

StatisticSetup short_setup() {
    StatisticSetup s;
    s.memory = MemoryKind::ShortMemory;
    s.weight = WeightFunction::indicator(-20.0, 20.0);
    return s;
}

}  // namespace

TEST(NlsFit, ExactLinearFit) {
    std::vector<double> x{-1, 0, 1, 2, 3.5}, y;
    for (double v : x) y.push_back(2.0 - 3.0 * v);
    const auto theta = nls_fit(ParametricFamily::linear(), x, y);
    EXPECT_NEAR(theta[0], 2.0, 1e-12);
    EXPECT_NEAR(theta[1], -3.0, 1e-12);
}

TEST(NlsFit, ExactQuadraticFit) {
    std::vector<double> x{-2, -1, 0, 1, 2, 3}, y;
    for (double v : x) y.push_back(0.5 + v - 0.25 * v * v);
    const auto theta = nls_fit(ParametricFamily::quadratic(), x, y);
    EXPECT_NEAR(theta[0], 0.5, 1e-12);
    EXPECT_NEAR(theta[1], 1.0, 1e-12);
    EXPECT_NEAR(theta[2], -0.25, 1e-12);
}

TEST(NlsFit, MatchesNormalEquations) {
    const auto d = linear_walk(200, 3, 0.3);
    const auto theta = nls_fit(ParametricFamily::linear(), d.x, d.y);
    const auto [a, b] = cramer_line(d);
    EXPECT_NEAR(theta[0], a, 1e-9);
    EXPECT_NEAR(theta[1], b, 1e-9);
}

TEST(NlsFit, CustomFamilyByNelderMead) {
    const auto fam = ParametricFamily::custom("exp", 2, [](double x, std::span<const double> t) {
        return t[0] * std::exp(t[1] * x);
    });
    std::vector<double> x, y;
    for (int k = 0; k < 40; ++k) {
        x.push_back(-1.0 + 0.05 * k);
        y.push_back(1.5 * std::exp(0.7 * x.back()));
    }
    const auto theta = nls_fit(fam, x, y, {1.0, 0.0});
    EXPECT_NEAR(theta[0], 1.5, 1e-4);
    EXPECT_NEAR(theta[1], 0.7, 1e-4);
}

TEST(NlsFit, NonConvergenceReportsBestIterate) {
    const auto fam = ParametricFamily::custom("flat", 1, [](double x, std::span<const double> t) { return t[0] * x; });
    std::vector<double> x{1, 2, 3}, y{1, 2, 3};
    NlsOptions opts;
    opts.restarts = 0;
    opts.search.max_evals = 3;
    try {
        (void)nls_fit(fam, x, y, {10.0}, std::nullopt, opts);
        FAIL() << "expected NlsFailure";
    } catch (const NlsFailure& e) {
        EXPECT_EQ(e.best_iterate().size(), 1u);
    }
}

TEST(NlsFit, RankDeficientDesign) {
    std::vector<double> x{1, 1, 1, 1}, y{1, 2, 3, 4};
    EXPECT_THROW(nls_fit(ParametricFamily::linear(), x, y), NumericalError);
}

TEST(Statistic, ZeroForExactFit) {
    std::vector<double> x{-1, 0, 1, 2}, y;
    for (double v : x) y.push_back(0.1 + 7.0 * v);
    const auto theta = nls_fit(ParametricFamily::linear(), x, y);
    EXPECT_EQ(t_statistic(x, y, ParametricFamily::linear(), theta, 0.5, Kernel{KernelKind::Gaussian},
                          WeightFunction::indicator(-100, 100)),
              0.0);
}

TEST(Statistic, ZeroWeightGivesZero) {
    const auto d = linear_walk(50, 2, 0.5);
    const auto theta = nls_fit(ParametricFamily::linear(), d.x, d.y);
    EXPECT_EQ(t_statistic(d.x, d.y, ParametricFamily::linear(), theta, 0.5, Kernel{KernelKind::Gaussian},
                          WeightFunction::zero()),
              0.0);
    // weight support far from the data
    EXPECT_EQ(t_statistic(d.x, d.y, ParametricFamily::linear(), theta, 0.5, Kernel{KernelKind::Gaussian},
                          WeightFunction::indicator(1000, 1001)),
              0.0);
}

TEST(Statistic, MatchesFineRiemannSum) {
    const auto d = linear_walk(30, 5, 0.4, 0.2);
    const auto theta = nls_fit(ParametricFamily::linear(), d.x, d.y);
    const double h = 0.6;
    QuadratureOptions quad;
    quad.cells = 8192;
    const double lib = t_statistic(d.x, d.y, ParametricFamily::linear(), theta, h, Kernel{KernelKind::Gaussian},
                                   WeightFunction::indicator(-20, 20), quad);
    const double ref = riemann_t(d, theta, h, -20, 20, 81920);
    EXPECT_NEAR(lib, ref, 1e-6 * std::max(1.0, ref));
}

TEST(Statistic, QuadratureConverged) {
    const auto d = linear_walk(100, 6, 0.4, 0.1);
    const auto theta = nls_fit(ParametricFamily::linear(), d.x, d.y);
    QuadratureOptions a, b;
    a.cells = 2048;
    b.cells = 4096;
    const Kernel k{KernelKind::Gaussian};
    const auto w = WeightFunction::indicator(-100, 100);
    const double ta = t_statistic(d.x, d.y, ParametricFamily::linear(), theta, 0.3, k, w, a);
    const double tb = t_statistic(d.x, d.y, ParametricFamily::linear(), theta, 0.3, k, w, b);
    EXPECT_NEAR(ta, tb, 1e-6 * tb);
}

TEST(Statistic, EpanechnikovMatchesDirectEvaluation) {
    const auto d = linear_walk(40, 8, 0.4);
    std::vector<double> r(d.x.size());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = d.y[k] - 1.0 - 0.5 * d.x[k];
    QuadratureOptions quad;
    quad.cells = 4000;
    quad.clip_to_data = false;
    const double h = 0.5;
    const double lib =
        t_statistic_from_residuals(d.x, r, h, Kernel{KernelKind::Epanechnikov}, WeightFunction::indicator(-10, 10),
                                   quad);
    const double w = 20.0 / 4000;
    double ref = 0;
    for (int i = 0; i < 4000; ++i) {
        const double s = -10 + (i + 0.5) * w;
        double acc = 0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            const double u = (d.x[k] - s) / h;
            if (std::abs(u) <= 1) acc += 0.75 * (1 - u * u) * r[k];
        }
        ref += acc * acc * w;
    }
    EXPECT_NEAR(lib, ref, 1e-10 * std::max(1.0, ref));
}

TEST(Statistic, NormalizerArithmetic) {
    EXPECT_NEAR(statistic_normalizer(100, 0.5, 0.3, 1.0, MemoryKind::ShortMemory), 10.0, 1e-12);
    EXPECT_NEAR(statistic_normalizer(1000, 0.0, 0.0001, 1.0, MemoryKind::LongMemory), std::pow(1000.0, 0.4999), 1e-9);
    EXPECT_NEAR(statistic_normalizer(1000, 1.0, 0.3, 1.0, MemoryKind::SemiLongMemory), 31.622776601683793, 1e-9);
    EXPECT_NEAR(statistic_normalizer(1000, 1.0, 0.3, 0.2, MemoryKind::SemiLongMemory),
                statistic_normalizer(1000, 0.0, 0.0, 0.2, MemoryKind::ShortMemory), 1e-12);
    EXPECT_NEAR(statistic_normalizer(400, 0.25, 0.5, 0.1, MemoryKind::SemiLongMemory), 20 * 0.5 * 0.1, 1e-12);
    EXPECT_NEAR(statistic_normalizer(400, 0, 0.25, 0.1, MemoryKind::LongMemory), std::pow(400.0, 0.25) * 0.1, 1e-12);
    EXPECT_THROW(statistic_normalizer(400, 0, 0.25, 0.1, MemoryKind::SemiLongMemory), ValidationError);
    EXPECT_THROW(statistic_normalizer(400, 0, 0.6, 0.1, MemoryKind::LongMemory), ValidationError);
}

TEST(Residuals, RoundingFloor) {
    const auto fam = ParametricFamily::linear();
    std::vector<double> x{1.0, 2.0}, y{1e6 + 1e-6, 5.0};
    std::vector<double> theta{1e6 - 1.0, 1.0};
    const auto r = residuals(fam, x, y, theta);
    EXPECT_EQ(r[0], 0.0);
    EXPECT_NEAR(r[1], 5.0 - (1e6 + 1.0), 1e-6);
}

TEST(Subsampling, FullBlockReproducesStatistic) {
    const auto d = linear_walk(60, 7, 0.3, 0.05);
    const auto setup = short_setup();
    const double h = 0.4;
    const auto dist = subsample_statistics(d.x, d.y, setup, 60, h, 0.0);
    ASSERT_EQ(dist.sorted.size(), 1u);
    const auto theta = nls_fit(setup.family, d.x, d.y);
    const double t = t_statistic(d.x, d.y, setup.family, theta, h, setup.kernel, setup.weight, setup.quad) /
                     statistic_normalizer(60, 0, 0, h, setup.memory);
    EXPECT_DOUBLE_EQ(dist.sorted[0], t);
}

TEST(Subsampling, BlocksMatchIndependentRecompute) {
    const auto d = linear_walk(120, 11, 0.3, 0.05);
    auto setup = short_setup();
    setup.memory = MemoryKind::SemiLongMemory;
    setup.d = 0.3;
    const std::size_t b = 22;
    const double hb = std::pow(22.0, -1.0 / 3.0), lb = std::pow(22.0, -0.2);
    const auto dist = subsample_statistics(d.x, d.y, setup, b, hb, lb, 3);
    ASSERT_EQ(dist.by_block.size(), 99u);
    ASSERT_EQ(dist.sorted.size(), 99u);
    const double norm = std::sqrt(22.0) * std::pow(lb, 0.3) * hb;
    for (std::size_t t = 0; t < 99; ++t) {
        Data blk;
        blk.x.assign(d.x.begin() + t, d.x.begin() + t + b);
        blk.y.assign(d.y.begin() + t, d.y.begin() + t + b);
        const auto [a, s] = cramer_line(blk);
        const std::vector<double> theta{a, s};
        const double ref = riemann_t(blk, theta, hb, -20, 20, 40960) / norm;
        EXPECT_NEAR(dist.by_block[t], ref, 1e-5 * std::max(1.0, ref)) << "block " << t;
    }
    EXPECT_TRUE(std::is_sorted(dist.sorted.begin(), dist.sorted.end()));
}

TEST(Subsampling, ThreadCountDoesNotChangeValues) {
    const auto d = linear_walk(150, 12, 0.3);
    const auto setup = short_setup();
    const auto a = subsample_statistics(d.x, d.y, setup, 30, 0.4, 0.0, 1);
    const auto b = subsample_statistics(d.x, d.y, setup, 30, 0.4, 0.0, 4);
    EXPECT_EQ(a.sorted, b.sorted);
}

TEST(Subsampling, BlockSizeValidation) {
    const auto d = linear_walk(20, 1, 0.3);
    const auto setup = short_setup();
    EXPECT_THROW(subsample_statistics(d.x, d.y, setup, 1, 0.4, 0.0), ValidationError);
    EXPECT_THROW(subsample_statistics(d.x, d.y, setup, 21, 0.4, 0.0), ValidationError);
}

TEST(PValue, CountsAndMonotonicity) {
    const std::vector<double> v{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(subsample_p_value(v, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(subsample_p_value(v, 3.0), 3.0 / 5.0);
    EXPECT_DOUBLE_EQ(subsample_p_value(v, 4.5), 1.0 / 5.0);
    double prev = 2.0;
    for (double t = 0; t < 5; t += 0.25) {
        const double p = subsample_p_value(v, t);
        EXPECT_LE(p, prev);
        prev = p;
    }
}

TEST(PValue, DegenerateNullGivesOne) {
    std::vector<double> x, y;
    for (int k = 0; k < 50; ++k) {
        x.push_back(0.1 * k);
        y.push_back(2.0 + 3.0 * x.back());
    }
    auto setup = short_setup();
    const auto res = run_spec_test(x, y, setup, SpecTestScales{0.3, 0.0, 10, 0.5, 0.0});
    EXPECT_EQ(res.t_raw, 0.0);
    EXPECT_DOUBLE_EQ(res.p_value, 1.0);
}

TEST(Quantile, RankConvention) {
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i + 1;
    EXPECT_DOUBLE_EQ(subsample_quantile(v, 0.05), 95.0);
    EXPECT_DOUBLE_EQ(subsample_quantile(v, 0.01), 99.0);
    EXPECT_DOUBLE_EQ(subsample_quantile(v, 0.5), 50.0);
    EXPECT_THROW(subsample_quantile({}, 0.05), ValidationError);
}

TEST(SpecTest, InvariantToAddingTheNullModel) {
    auto d = linear_walk(120, 21, 0.3, 0.1);
    const auto setup = short_setup();
    const SpecTestScales sc{0.4, 0.0, 20, 0.6, 0.0};
    const auto a = run_spec_test(d.x, d.y, setup, sc);
    for (std::size_t k = 0; k < d.y.size(); ++k) d.y[k] += 4.0 - 2.0 * d.x[k];
    const auto b = run_spec_test(d.x, d.y, setup, sc);
    EXPECT_NEAR(a.t_normalized, b.t_normalized, 1e-8 * a.t_normalized);
    EXPECT_NEAR(a.p_value, b.p_value, 1e-12);
}

TEST(SpecTest, DetectsCurvatureUnderLinearNull) {
    const auto d = linear_walk(400, 31, 0.1, 0.5);
    const auto setup = short_setup();
    const SpecTestRules rules{PowerRule{1, -1.0 / 3.0}, PowerRule{1, 0.5}, std::nullopt};
    const auto res = run_spec_test(d.x, d.y, setup, rules);
    EXPECT_EQ(res.block_size, 20u);
    EXPECT_GT(res.t_normalized, 0.0);
    EXPECT_TRUE(res.rejects(0.05));
}

TEST(Rules, Parsing) {
    EXPECT_EQ(parse_power_rule("N^-1/3"), (PowerRule{1, -1.0 / 3.0}));
    EXPECT_EQ(parse_power_rule("1/N"), (PowerRule{1, -1}));
    EXPECT_EQ(parse_power_rule("1/sqrt(N)"), (PowerRule{1, -0.5}));
    EXPECT_EQ(parse_power_rule("[4N^0.5]"), (PowerRule{4, 0.5}));
    EXPECT_EQ(parse_power_rule("0.5*N^0.5"), (PowerRule{0.5, 0.5}));
    EXPECT_EQ(parse_power_rule("n^(-0.2)"), (PowerRule{1, -0.2}));
    EXPECT_EQ(parse_power_rule("0.1"), (PowerRule{0.1, 0}));
    EXPECT_THROW(parse_power_rule("N**2"), ValidationError);
    EXPECT_THROW(parse_power_rule(""), ValidationError);
    EXPECT_EQ((PowerRule{2, 0.5}).floor_at(100), 20u);
    EXPECT_EQ((PowerRule{0.5, 0.5}).floor_at(1000), 15u);
}

TEST(Rules, ResolveBlockScales) {
    const SpecTestRules rules{PowerRule{1, -0.2}, PowerRule{4, 0.5}, PowerRule{1, -0.1}};
    const auto s = rules.resolve(500, MemoryKind::SemiLongMemory);
    EXPECT_EQ(s.b, 89u);
    EXPECT_NEAR(s.h, std::pow(500.0, -0.2), 1e-15);
    EXPECT_NEAR(s.h_b, std::pow(89.0, -0.2), 1e-15);
    EXPECT_NEAR(s.lambda, std::pow(500.0, -0.1), 1e-15);
    EXPECT_NEAR(s.lambda_b, std::pow(89.0, -0.1), 1e-15);
    const SpecTestRules no_temper{PowerRule{1, -0.2}, PowerRule{4, 0.5}, std::nullopt};
    EXPECT_THROW(no_temper.resolve(500, MemoryKind::SemiLongMemory), ValidationError);
}

TEST(SpecTest, JsonRoundTrip) {
    const auto d = linear_walk(80, 41, 0.3, 0.1);
    const auto res = run_spec_test(d.x, d.y, short_setup(), SpecTestScales{0.4, 0.0, 16, 0.6, 0.0});
    const auto back = io::spec_test_result_from_json(io::Json::parse(io::to_json(res).dump()));
    EXPECT_EQ(back.t_raw, res.t_raw);
    EXPECT_EQ(back.p_value, res.p_value);
    EXPECT_EQ(back.theta_hat, res.theta_hat);
    EXPECT_EQ(back.subsample_values, res.subsample_values);
    EXPECT_EQ(back.block_size, res.block_size);
}
