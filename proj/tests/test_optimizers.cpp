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

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "reup/bfgs.hpp"
#include "reup/sgd.hpp"

using namespace reup;
using Catch::Approx;

namespace {

// f(x) = 1/2 x^T A x - b^T x with A SPD; minimizer A^{-1} b.
struct Quadratic {
    Eigen::Matrix2d A;
    Eigen::Vector2d b;

    std::pair<double, Eigen::VectorXd> operator()(const Eigen::VectorXd &x) const {
        const Eigen::Vector2d v = x;
        return {0.5 * v.dot(A * v) - b.dot(v), A * v - b};
    }
};

Quadratic make_quadratic() {
    Quadratic q;
    q.A << 3.0, 1.0, 1.0, 2.0;
    q.b << 1.0, -2.0;
    return q;
}

bool is_spd(const Eigen::MatrixXd &H) {
    if (!H.isApprox(H.transpose(), 1e-12)) {
        return false;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    return es.eigenvalues().minCoeff() > 0.0;
}

} // namespace

TEST_CASE("BFGS with exact line searches minimizes a quadratic within 5 iterations", "[bfgs]") {
    const auto q = make_quadratic();
    const Eigen::Vector2d want = q.A.ldlt().solve(q.b);
    LineSearchSpec ls;
    ls.kind = LineSearchSpec::Kind::StrongWolfe;
    ls.c2 = 1e-3;
    for (const bool as_written : {false, true}) {
        std::size_t checked = 0;
        const auto r = bfgs_minimize(
            q, [&](const Eigen::VectorXd &x) { return q(x).first; },
            Eigen::VectorXd(Eigen::Vector2d(4.0, -3.0)), as_written, ls, 5, 1e-10,
            [&](std::size_t, const Eigen::VectorXd &, double, const Eigen::VectorXd &,
                const Eigen::MatrixXd &H) {
                REQUIRE(is_spd(H));
                ++checked;
                return true;
            });
        INFO("as_written=" << as_written);
        CHECK(r.iterations <= 5);
        CHECK((r.x - want).norm() < 1e-8);
        CHECK(checked >= 2);
    }
}

TEST_CASE("BFGS with default line searches converges on a quadratic", "[bfgs]") {
    const auto q = make_quadratic();
    const Eigen::Vector2d want = q.A.ldlt().solve(q.b);
    for (const bool as_written : {false, true}) {
        for (const auto kind : {LineSearchSpec::Kind::Armijo, LineSearchSpec::Kind::StrongWolfe}) {
            LineSearchSpec ls;
            ls.kind = kind;
            const auto r = bfgs_minimize(q, Eigen::VectorXd(Eigen::Vector2d(4.0, -3.0)), as_written, ls,
                                         50, 1e-10);
            INFO("as_written=" << as_written << " kind=" << to_string(kind));
            CHECK((r.x - want).norm() < 1e-8);
            CHECK(r.reason == StopReason::GradientTolerance);
        }
    }
}

TEST_CASE("inverse Hessian update satisfies the secant condition", "[bfgs]") {
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::Vector3d s(0.3, -0.2, 0.5);
    const Eigen::Vector3d y(0.9, -0.1, 0.7);
    for (const bool as_written : {false, true}) {
        Eigen::MatrixXd G = H;
        REQUIRE(update_inverse_hessian(G, s, y, as_written));
        CHECK((G * y - s).norm() < 1e-12);
        CHECK(is_spd(G));
    }
    // no curvature: update skipped, H untouched
    Eigen::MatrixXd G = H;
    CHECK_FALSE(update_inverse_hessian(G, s, -y, false));
    CHECK(G == H);
}

TEST_CASE("BFGS on the classifier lowers the loss", "[bfgs]") {
    const CircuitSpec spec{Ansatz::C2, 2};
    const auto d = generate(60, CircleSpec{}, 3);
    const IdealBackend b;
    GradConfig c;
    c.max_iterations = 15;
    c.seed = 4;
    const auto r = bfgs_train_report(c, spec, d, b);
    const auto &t = r.result.trace.records;
    REQUIRE(t.size() >= 2);
    CHECK(t.back().best_loss < t.front().best_loss);
    CHECK(r.result.best_loss == exact_loss(CostKind::CrossEntropy, spec, r.result.best_theta, d.points));
    for (std::size_t i = 1; i < t.size(); ++i) {
        CHECK(t[i].cum_estimates > t[i - 1].cum_estimates);
    }
}

TEST_CASE("finite-difference BFGS charges at least 2 x dim x n per iteration", "[bfgs]") {
    const CircuitSpec spec{Ansatz::C2, 2};
    const auto d = generate(30, CircleSpec{}, 3);
    const NoisyBackend b(NoiseModel{kMeasuredConfusion, 150, 0.0, 1});
    GradConfig c;
    c.gradient = {GradientMethod::FiniteDifference, 0.5};
    c.max_iterations = 4;
    const auto r = bfgs_train(c, spec, d, b);
    const auto &t = r.trace.records;
    REQUIRE(t.size() >= 2);
    CHECK(t[0].cum_estimates >= 2 * 8 * 30);
    for (std::size_t i = 1; i < t.size(); ++i) {
        CHECK(t[i].cum_estimates - t[i - 1].cum_estimates >= 2 * 8 * 30);
    }
}

TEST_CASE("estimate budget stops training", "[bfgs][sgd]") {
    const CircuitSpec spec{Ansatz::C2, 2};
    const auto d = generate(30, CircleSpec{}, 3);
    for (const auto method : {GradTrainer::BfgsStandard, GradTrainer::GradientDescent}) {
        const IdealBackend b;
        GradConfig c;
        c.method = method;
        c.max_iterations = 1000;
        c.estimate_budget = 5000;
        const auto r = grad_train(c, spec, d, b);
        CHECK(r.trace.records.back().cum_estimates >= 5000);
        CHECK(r.trace.records.back().cum_estimates < 5000 + 30 * 17 * 40);
    }
}

TEST_CASE("zero learning rate leaves the parameters alone", "[sgd]") {
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto d = generate(40, CircleSpec{}, 3);
    const IdealBackend b;
    GradConfig c;
    c.method = GradTrainer::Sgd;
    c.batch_size = 8;
    c.learning_rate = 0.0;
    c.max_iterations = 12;
    c.initial_theta = ParameterVector(16, 0.3);
    const auto r = sgd_train(c, spec, d, b);
    CHECK(r.best_theta == *c.initial_theta);
    CHECK(r.trace.records.size() == 13);
}

TEST_CASE("full-batch descent with a small step decreases the loss monotonically", "[sgd]") {
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto d = generate(80, CircleSpec{}, 3);
    const IdealBackend b;
    GradConfig c;
    c.method = GradTrainer::GradientDescent;
    c.learning_rate = 0.05;
    c.max_iterations = 30;
    c.seed = 2;
    const auto r = sgd_train(c, spec, d, b);
    const auto &t = r.trace.records;
    REQUIRE(t.size() == 31);
    for (std::size_t i = 1; i < t.size(); ++i) {
        REQUIRE(t[i].best_loss <= t[i - 1].best_loss);
    }
}

TEST_CASE("mini-batches cover every point once per epoch", "[sgd]") {
    const CircuitSpec spec{Ansatz::C2, 1};
    const auto d = generate(12, CircleSpec{}, 3);
    const IdealBackend b;
    GradConfig c;
    c.method = GradTrainer::Sgd;
    c.batch_size = 4;
    c.max_iterations = 6;
    c.gradient = {GradientMethod::ParameterShift, 1e-3};
    (void)sgd_train(c, spec, d, b);
    // six shift-rule gradients of 4 points plus the final 4-point measurement
    CHECK(b.ledger().counts().estimates == 6 * 4 * (1 + 2 * 2) + 4);
}

TEST_CASE("gradient config validation", "[sgd]") {
    GradConfig c;
    c.cost = CostKind::Accuracy;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.cost = CostKind::CrossEntropy;
    c.learning_rate = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.learning_rate = 0.1;
    c.gradient = {GradientMethod::FiniteDifference, -0.5};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(parse_grad_trainer("bfgs_as_written") == GradTrainer::BfgsAsWritten);
    CHECK_THROWS_AS(parse_grad_trainer("adam"), std::invalid_argument);
}
