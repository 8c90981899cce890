// Copyright 2026 The reupload Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "reup/analyze.hpp"
#include "reup/mitigation.hpp"

using namespace reup;
using Catch::Approx;

namespace {

NoisyBackend measured(unsigned shots, std::uint64_t seed, double sigma = 0.0) {
    return NoisyBackend(NoiseModel{kMeasuredConfusion, shots, sigma, seed});
}

} // namespace

TEST_CASE("mitigation inverts the readout map", "[mitigation]") {
    const auto m = mitigate({0.5, 0.5}, kMeasuredConfusion);
    CHECK(m.p0 == Approx(0.5667).margin(5e-5));
    CHECK(m.p1 == Approx(0.4333).margin(5e-5));

    const auto one = mitigate({0.76, 0.24}, kMeasuredConfusion);
    CHECK(one.p0 == Approx(1.0).margin(1e-12));
    CHECK(one.p1 == Approx(0.0).margin(1e-12));

    const auto same = mitigate({0.3, 0.7}, kIdentityConfusion);
    CHECK(same.p0 == Approx(0.3));
    CHECK(same.p1 == Approx(0.7));

    for (int i = 0; i <= 100; ++i) {
        const double p1 = i / 100.0;
        const double o1 = kMeasuredConfusion[0][1] * (1.0 - p1) + kMeasuredConfusion[1][1] * p1;
        const auto back = mitigate_unclipped({1.0 - o1, o1}, kMeasuredConfusion);
        REQUIRE(std::abs(back.p1 - p1) < 1e-12);
        REQUIRE(std::abs(back.p0 - (1.0 - p1)) < 1e-12);
    }
}

TEST_CASE("mitigation clips and renormalizes", "[mitigation]") {
    const auto raw = mitigate_unclipped({0.9, 0.1}, kMeasuredConfusion);
    CHECK(raw.p1 < 0.0);
    const auto m = mitigate({0.9, 0.1}, kMeasuredConfusion);
    CHECK(m.p1 == 0.0);
    CHECK(m.p0 == 1.0);
}

TEST_CASE("singular calibration is rejected", "[mitigation]") {
    const CalibrationMatrix c{{{0.5, 0.5}, {0.5, 0.5}}};
    CHECK_THROWS_AS(mitigate({0.5, 0.5}, c), MitigationError);
    const NoisyBackend b(NoiseModel{c, 100, 0.0, 1});
    // with shots = 1 both rows are one-hot; equal rows are singular
    bool singular_seen = false;
    for (std::uint64_t k = 0; k < 20 && !singular_seen; ++k) {
        try {
            (void)calibrate(b, 1, 4, k);
        } catch (const MitigationError &e) {
            singular_seen = std::string(e.what()).find("more shots") != std::string::npos;
        }
    }
    CHECK(singular_seen);
}

TEST_CASE("calibration recovers the readout matrix", "[mitigation]") {
    const auto b = measured(10000, 3);
    const auto c = calibrate(b, 10000);
    for (int i = 0; i < 2; ++i) {
        CHECK(c[i][0] + c[i][1] == Approx(1.0));
        for (int j = 0; j < 2; ++j) {
            CHECK(std::abs(c[i][j] - kMeasuredConfusion[i][j]) < 0.02);
        }
    }
    const IdealBackend ideal;
    const auto id = calibrate(ideal, 100);
    CHECK(id[0][0] == Approx(1.0));
    CHECK(id[1][1] == Approx(1.0));
}

TEST_CASE("mitigation keeps classification decisions", "[mitigation]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const double a = 0.5 + 0.5 * u(rng);
        const double d = 0.5 + 0.5 * u(rng);
        const CalibrationMatrix c{{{a, 1.0 - a}, {1.0 - d, d}}};
        const double p1 = u(rng);
        const double o1 = c[0][1] * (1.0 - p1) + c[1][1] * p1;
        const double threshold = c[0][1] / (c[0][1] + c[1][0]); // o1 at p1 = 0.5
        if (std::abs(o1 - threshold) < 1e-9) {
            continue;
        }
        const double m1 = mitigate_estimate(o1, 1, c);
        INFO("a=" << a << " d=" << d << " p1=" << p1);
        REQUIRE((m1 > 0.5) == (p1 > 0.5));
    }
}

TEST_CASE("residual analysis of exact pairs", "[mitigation]") {
    std::vector<ProbabilityPair> pairs;
    for (int i = 0; i <= 10; ++i) {
        pairs.push_back({i / 10.0, i / 10.0});
    }
    const auto r = residual_analysis(pairs);
    CHECK(r.slope == Approx(1.0));
    CHECK(r.intercept == Approx(0.0).margin(1e-12));
    CHECK(r.residual_std == Approx(0.0).margin(1e-12));
    CHECK(r.histogram.size() == 1);

    CHECK_THROWS_AS(residual_analysis(std::vector<ProbabilityPair>(2)), std::invalid_argument);
    CHECK_THROWS_AS(residual_analysis(std::vector<ProbabilityPair>(5, {0.3, 0.4})),
                    std::invalid_argument);
}

TEST_CASE("residual fit through the readout map", "[mitigation]") {
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto b = measured(500, 11);
    const auto raw = sample_pairs(spec, 250, b, 11);
    const auto before = residual_analysis(raw);
    CHECK(before.slope == Approx(0.60).margin(0.02));
    CHECK(before.intercept == Approx(0.24).margin(0.02));

    const auto cal = calibrate(measured(10000, 12), 10000);
    const auto after = residual_analysis(mitigate_pairs(raw, cal));
    CHECK(after.slope == Approx(1.0).margin(0.03));
    CHECK(after.intercept == Approx(0.0).margin(0.02));
    CHECK(std::abs(after.slope - 1.0) < std::abs(before.slope - 1.0));
}

TEST_CASE("Freedman-Diaconis histogram integrates to one", "[mitigation]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(1000);
    for (auto &x : v) {
        x = g(rng);
    }
    const auto h = histogram_fd(v);
    CHECK(h.size() > 5);
    double area = 0.0;
    for (const auto &b : h) {
        CHECK(b.right > b.left);
        area += b.density * (b.right - b.left);
    }
    CHECK(area == Approx(1.0));
    CHECK(to_csv(h).rfind("bin_left,bin_right,density\n", 0) == 0);
    CHECK_THROWS_AS(histogram_fd(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("binomial noise scales as one over root N", "[mitigation]") {
    CHECK(binomial_std(0.5, 100) == Approx(0.05));
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto d = generate(40, CircleSpec{}, 2);
    const ParameterVector theta(kReferenceTheta.begin(), kReferenceTheta.end());
    const std::vector<unsigned> shots{60, 120, 250, 500, 750};
    const auto r = noise_scaling(spec, theta, d.points, shots, 0.0, 20, 3);
    CHECK(r.exponent == Approx(-0.5).margin(0.05));
    REQUIRE(r.rows.size() == shots.size());
    for (const auto &row : r.rows) {
        CHECK(row.std == Approx(row.binomial_std).epsilon(0.1));
    }
    CHECK_THROWS_AS(noise_scaling(spec, theta, d.points, std::vector<unsigned>{100, 100}, 0.0, 2, 3),
                    std::invalid_argument);
}

TEST_CASE("a residual floor survives many shots", "[mitigation]") {
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto d = generate(100, CircleSpec{}, 2);
    const ParameterVector theta(kReferenceTheta.begin(), kReferenceTheta.end());
    const std::vector<unsigned> shots{100, 1000};
    const auto r = noise_scaling(spec, theta, d.points, shots, 0.006, 20, 4);
    CHECK(r.rows[1].excess_std == Approx(0.006).epsilon(0.2));
    CHECK(r.rows[1].std > r.rows[1].binomial_std);
}

TEST_CASE("gradient noise report", "[mitigation]") {
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto d = generate(50, CircleSpec{}, 2);
    const ParameterVector theta(kReferenceTheta.begin(), kReferenceTheta.end());
    const std::vector<double> steps{0.1};
    const std::vector<CostKind> costs{CostKind::CrossEntropy, CostKind::ChiSquared};

    const IdealBackend ideal;
    const auto clean = gradient_noise_report(spec, theta, d.points, ideal, steps, costs, 3, 1);
    CHECK(clean.rows.size() == 2 * 16);
    CHECK(clean.mean_sign_agreement(0.1, CostKind::CrossEntropy) == 1.0);
    CHECK(clean.mean_sign_agreement(0.1, CostKind::ChiSquared) == 1.0);

    const auto b = measured(150, 9);
    const auto noisy = gradient_noise_report(spec, theta, d.points, b, steps, costs, 20, 1);
    CHECK(noisy.mean_sign_agreement(0.1, CostKind::CrossEntropy) < 0.75);
    CHECK(noisy.to_csv().rfind("step,cost,component,theoretical,noisy_mean,noisy_std,sign_agreement\n", 0) == 0);
}

TEST_CASE("analysis reports have the documented columns", "[mitigation][analyze]") {
    ResidualsOptions ro;
    ro.count = 30;
    ro.calibration_shots = 2000;
    const auto res = analyze_residuals(ro);
    CHECK(res.at("residual_pairs.csv").rfind("theoretical,observed,mitigated\n", 0) == 0);
    CHECK(res.at("residual_fit.csv").find("unmitigated,") != std::string::npos);
    CHECK(res.count("residual_histogram.csv") == 1);
    CHECK(res.count("calibration.csv") == 1);

    TimeBudgetOptions to;
    const auto tb = analyze_time_budget(to);
    const auto &csv = tb.at("time_budget.csv");
    auto total = csv.substr(csv.find("total,"));
    total.pop_back();
    double minutes = 0.0;
    REQUIRE(parse_double(split_fields(trim(total)).back(), minutes));
    CHECK(minutes == Approx(330.0).margin(10.0));
}

TEST_CASE("shot lists", "[analyze]") {
    CHECK(parse_shot_list("60,100") == std::vector<unsigned>{60, 100});
    const auto r = parse_shot_list("60..1000");
    CHECK(r.front() == 60);
    CHECK(r.back() == 1000);
    CHECK(r[1] == 70);
    CHECK(parse_shot_list("10..35:10") == std::vector<unsigned>{10, 20, 30, 35});
    CHECK_THROWS_AS(parse_shot_list("0..10"), ConfigError);
    CHECK_THROWS_AS(parse_shot_list("a"), ConfigError);
    CHECK(parse_analysis("time-budget") == AnalysisKind::TimeBudget);
    CHECK_THROWS_AS(parse_analysis("spectra"), ConfigError);
}
