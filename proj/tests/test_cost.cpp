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
#include <random>
#include <vector>

#include "reup/analyze.hpp"
#include "reup/cost.hpp"
#include "reup/dataset.hpp"

using namespace reup;
using Catch::Approx;

namespace {

// One D2 layer with R_y(pi/2): M = 0.5 for every point and label.
const CircuitSpec kHalf{Ansatz::D2, 1};
const std::vector<double> kHalfTheta{std::numbers::pi / 2, 0.0, 0.0, 0.0};

} // namespace

TEST_CASE("closed forms at M = 0.5", "[cost]") {
    const auto d = generate(100, CircleSpec{}, 2);
    const IdealBackend b;
    CHECK(cross_entropy(kHalf, kHalfTheta, d, b) == Approx(std::log(2.0)).margin(1e-12));
    CHECK(chi_squared(kHalf, kHalfTheta, d, b) == Approx(0.25).margin(1e-12));
    // a tie at exactly 0.5 counts as wrong
    CHECK(accuracy_from_estimates(std::vector<double>(10, 0.5)) == 0.0);
}

TEST_CASE("closed forms at M = 1 and M = 0", "[cost]") {
    const std::vector<double> ones(10, 1.0);
    const std::vector<double> zeros(10, 0.0);
    CHECK(loss_from_estimates(CostKind::CrossEntropy, ones) == 0.0);
    CHECK(loss_from_estimates(CostKind::ChiSquared, ones) == 0.0);
    CHECK(accuracy_from_estimates(ones) == 1.0);
    CHECK(loss_from_estimates(CostKind::ChiSquared, zeros) == 1.0);
    CHECK(loss_from_estimates(CostKind::CrossEntropy, zeros) == Approx(-std::log(kLogClamp)));
    CHECK(std::isfinite(loss_from_estimates(CostKind::CrossEntropy, zeros)));
    const std::vector<double> one_each{0.9, 0.2};
    CHECK(accuracy_from_estimates(one_each) == 0.5);
}

TEST_CASE("the gated variant ignores misclassified points", "[cost]") {
    const std::vector<double> m{0.9, 0.2, 0.5};
    CHECK(loss_from_estimates(CostKind::CrossEntropyAsWritten, m) ==
          Approx(-std::log(0.9) / 3.0));
    CHECK(loss_from_estimates(CostKind::CrossEntropy, m) ==
          Approx(-(std::log(0.9) + std::log(0.2) + std::log(0.5)) / 3.0));
}

TEST_CASE("bounds hold on random instances", "[cost]") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 10000; ++rep) {
        std::vector<double> m(1 + rep % 7);
        for (auto &v : m) {
            v = u(rng);
        }
        const double chi = loss_from_estimates(CostKind::ChiSquared, m);
        REQUIRE(chi >= 0.0);
        REQUIRE(chi <= 1.0);
        REQUIRE(loss_from_estimates(CostKind::CrossEntropy, m) >= 0.0);
    }
}

TEST_CASE("accuracy moves only when a point crosses 0.5", "[cost]") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> m(20);
        for (auto &v : m) {
            v = u(rng);
        }
        auto p = m;
        bool crossed = false;
        for (auto &v : p) {
            const double w = std::clamp(v + 0.05 * (u(rng) - 0.5), 0.0, 1.0);
            crossed = crossed || ((v > 0.5) != (w > 0.5));
            v = w;
        }
        if (!crossed) {
            REQUIRE(accuracy_from_estimates(p) == accuracy_from_estimates(m));
        }
        // squaring below 0.5 and square-rooting above keeps every side of the threshold
        std::vector<double> q(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            q[i] = m[i] > 0.5 ? std::sqrt(m[i]) : m[i] * m[i];
        }
        REQUIRE(accuracy_from_estimates(q) == accuracy_from_estimates(m));
    }
}

TEST_CASE("ideal evaluation is repeatable and matches the exact path", "[cost]") {
    const auto d = generate(250, CircleSpec{}, 5);
    const IdealBackend b;
    const CircuitSpec spec{Ansatz::C2, 4};
    for (const auto k : kAllCosts) {
        const auto a = evaluate(k, spec, kReferenceTheta, d.points, b, 1);
        const auto c = evaluate(k, spec, kReferenceTheta, d.points, b, 2, 4);
        CHECK(a.loss == c.loss);
        CHECK(a.accuracy == c.accuracy);
    }
    CHECK(evaluate(CostKind::CrossEntropy, spec, kReferenceTheta, d.points, b, 1).loss ==
          exact_loss(CostKind::CrossEntropy, spec, kReferenceTheta, d.points));
    CHECK(accuracy(spec, kReferenceTheta, d, b) == exact_accuracy(spec, kReferenceTheta, d.points));
}

TEST_CASE("empty datasets and unknown names are rejected", "[cost]") {
    const IdealBackend b;
    const Dataset empty;
    CHECK_THROWS_AS(accuracy(kHalf, kHalfTheta, empty, b), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(kHalf, kHalfTheta, empty, b), std::invalid_argument);
    CHECK_THROWS_AS(chi_squared(kHalf, kHalfTheta, empty, b), std::invalid_argument);
    CHECK(parse_cost("chi_squared") == CostKind::ChiSquared);
    CHECK_THROWS_AS(parse_cost("mse"), std::invalid_argument);
}

TEST_CASE("loss gradient matches central differences", "[cost]") {
    const auto d = generate(40, CircleSpec{}, 6);
    const CircuitSpec spec{Ansatz::C2, 4};
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> theta(16);
        for (auto &t : theta) {
            t = u(rng);
        }
        for (const auto k : {CostKind::CrossEntropy, CostKind::ChiSquared}) {
            const auto g = exact_loss_gradient(k, spec, theta, d.points);
            for (std::size_t j = 0; j < theta.size(); ++j) {
                auto x = theta;
                x[j] += 1e-6;
                const double plus = exact_loss(k, spec, x, d.points);
                x[j] -= 2e-6;
                const double minus = exact_loss(k, spec, x, d.points);
                REQUIRE(g[j] == Approx((plus - minus) / 2e-6).margin(1e-6));
            }
        }
        const auto ga = exact_loss_gradient(CostKind::Accuracy, spec, theta, d.points);
        for (const double v : ga) {
            REQUIRE(v == 0.0);
        }
    }
}
