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
#include <numbers>
#include <vector>

#include "reup/analyze.hpp"
#include "reup/backend.hpp"
#include "reup/cost.hpp"
#include "reup/dataset.hpp"
#include "reup/parallel.hpp"

using namespace reup;
using Catch::Approx;

namespace {

const CircuitSpec kSpec{Ansatz::C2, 4};

std::vector<GateAngles> flip_angles(double phi_y) { return {{phi_y, 0.0}}; }

} // namespace

TEST_CASE("ideal backend returns exact probabilities and counts", "[backend]") {
    const IdealBackend b(150);
    CHECK(b.estimate(kSpec, kReferenceTheta, kReferencePoint, 1, 0) == Approx(0.33675).margin(5e-6));
    const std::vector<double> zero(16, 0.0);
    CHECK(b.estimate(kSpec, zero, {0.4, 0.4}, 0, 1) == Approx(1.0));
    b.ledger().reset();
    const auto d = generate(250, CircleSpec{}, 1);
    (void)estimate_dataset(kSpec, zero, d.points, b, 0);
    CHECK(b.ledger().counts() == LedgerCounts{250, 250 * 150});
}

TEST_CASE("noise model validation", "[backend]") {
    NoiseModel m;
    m.confusion = {{{0.5, 0.6}, {0.0, 1.0}}};
    CHECK_THROWS_AS(NoisyBackend(m), std::invalid_argument);
    m.confusion = kMeasuredConfusion;
    m.shots = 0;
    CHECK_THROWS_AS(NoisyBackend(m), std::invalid_argument);
    m.shots = 10;
    m.residual_sigma = -1.0;
    CHECK_THROWS_AS(NoisyBackend(m), std::invalid_argument);
    CHECK_THROWS_AS(IdealBackend(0), std::invalid_argument);
}

TEST_CASE("confusion acts before sampling", "[backend]") {
    const NoisyBackend b(NoiseModel{kMeasuredConfusion, 150, 0.0, 1});
    CHECK(b.expected({0.0, 1.0}, 1) == Approx(0.84));
    CHECK(b.expected({1.0, 0.0}, 1) == Approx(0.24));
    CHECK(b.expected({0.5, 0.5}, 0) == Approx(0.46));
}

TEST_CASE("noisy estimates are unbiased within the binomial bound", "[backend]") {
    // R * shots = 2e5 draws; bound |mean - o| < 4 sqrt(o(1-o)/(R shots))
    const unsigned shots = 200;
    const std::size_t repeats = 1000;
    for (const double phi : {0.3, std::numbers::pi / 2, 2.5}) {
        for (const auto &conf : {kIdentityConfusion, kMeasuredConfusion}) {
            const NoisyBackend b(NoiseModel{conf, shots, 0.0, 17});
            const auto angles = flip_angles(phi);
            const double o = b.expected(evaluate_angles(angles), 1);
            double sum = 0.0;
            for (std::size_t r = 0; r < repeats; ++r) {
                sum += b.estimate(angles, 1, r);
            }
            const double mean = sum / repeats;
            CHECK(std::abs(mean - o) < 4.0 * std::sqrt(o * (1 - o) / (repeats * shots)));
        }
    }
}

TEST_CASE("many shots converge on the exact probability", "[backend]") {
    const NoisyBackend b(NoiseModel{kIdentityConfusion, 100000, 0.0, 2});
    const auto angles = gate_angles(kSpec, kReferenceTheta, kReferencePoint);
    const double p = evaluate_angles(angles).p1;
    const double v = b.estimate(angles, 1, 0);
    CHECK(std::abs(v - p) < 3.0 * std::sqrt(p * (1 - p) / 1e5));
}

TEST_CASE("estimates are keyed, not ordered", "[backend]") {
    const NoisyBackend b(NoiseModel{kMeasuredConfusion, 150, 0.006, 4});
    const auto d = generate(200, CircleSpec{}, 3);
    const std::vector<double> theta(kReferenceTheta.begin(), kReferenceTheta.end());
    const auto serial = estimate_dataset(kSpec, theta, d.points, b, 99, 1);
    const auto threaded = estimate_dataset(kSpec, theta, d.points, b, 99, 8);
    CHECK(serial == threaded);
    const auto other = estimate_dataset(kSpec, theta, d.points, b, 100, 1);
    CHECK(serial != other);
    for (const double v : serial) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("estimates are multiples of 1/shots without a residual floor", "[backend]") {
    const NoisyBackend b(NoiseModel{kMeasuredConfusion, 150, 0.0, 8});
    const auto angles = flip_angles(1.0);
    for (std::uint64_t k = 0; k < 50; ++k) {
        const double v = b.estimate(angles, 0, k) * 150.0;
        REQUIRE(v == Approx(std::round(v)).margin(1e-9));
    }
    CHECK_THROWS_AS(b.estimate_with_shots(angles, 0, 0, 0), BackendError);
}

TEST_CASE("detection histogram", "[backend]") {
    const PoissonDetectionSpec spec;
    const auto dark = detection_histogram(0.0, 10000, spec, 1);
    CHECK(dark.p1_hat < 1e-3);
    CHECK(!dark.warning);
    std::uint64_t total = 0;
    for (const auto c : dark.histogram) {
        total += c;
    }
    CHECK(total == 10000);

    const auto err = discrimination_error(spec);
    CHECK(err.mean() < 0.01);
    // Poisson(2) tail above 11 and Poisson(25) mass at or below 11, summed independently
    double dark_tail = 0.0;
    double bright_head = 0.0;
    double dterm = std::exp(-2.0);
    double bterm = std::exp(-25.0);
    for (int k = 0; k <= 11; ++k) {
        if (k > 0) {
            dterm *= 2.0 / k;
            bterm *= 25.0 / k;
        }
        dark_tail += dterm;
        bright_head += bterm;
    }
    CHECK(err.dark_read_as_bright == Approx(1.0 - dark_tail).margin(1e-15));
    CHECK(err.bright_read_as_dark == Approx(bright_head).epsilon(1e-12));

    const double expected = expected_detected_p1(0.337, spec);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = detection_histogram(0.337, 125, spec, seed);
        REQUIRE(std::abs(r.p1_hat - expected) < 3.0 * std::sqrt(expected * (1 - expected) / 125));
    }

    PoissonDetectionSpec bad;
    bad.bright_mean = 10.0;
    CHECK(detection_histogram(0.5, 10, bad, 1).warning.has_value());
    CHECK_THROWS_AS(detection_histogram(1.5, 10, spec, 1), std::invalid_argument);
}

TEST_CASE("time budget arithmetic", "[backend]") {
    const TimeBudget budget;
    CHECK(estimate_time({0, 0}, budget) == 0.0);
    const LedgerCounts gen{50 * 250, 50 * 250 * 150};
    CHECK(estimate_time(gen, budget) / 60.0 == Approx(330.0).margin(10.0));
    const double once = estimate_time(gen, budget);
    const double twice = estimate_time(gen, budget, 300);
    const double shot_part = static_cast<double>(gen.shots) * budget.per_shot();
    CHECK(twice - once == Approx(shot_part));
    TimeBudget neg;
    neg.gate = -1.0;
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}
