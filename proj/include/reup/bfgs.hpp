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

/**
 * @file bfgs.hpp
 * Quasi-Newton minimization with an inverse-Hessian approximation H.
 *
 * Two updates are available. `standard` is the BFGS inverse update
 *
 *   H+ = (I - r s y^T) H (I - r y s^T) + r s s^T,   r = 1 / (y^T s)
 *
 * and `as_written` is the DFP-form inverse update
 *
 *   H+ = H - (H y y^T H) / (y^T H y) + s s^T / (y^T s).
 *
 * Both keep H symmetric positive definite while y^T s > 0; otherwise the
 * update is skipped.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reup/backend.hpp"
#include "reup/circuit.hpp"
#include "reup/cost.hpp"
#include "reup/dataset.hpp"
#include "reup/objective.hpp"
#include "reup/trace.hpp"

namespace reup {

inline constexpr double kCurvatureThreshold = 1e-12;

enum class StopReason { MaxIterations, GradientTolerance, LineSearch, Budget };

constexpr std::string_view to_string(StopReason r) noexcept {
    switch (r) {
    case StopReason::MaxIterations:
        return "max_iterations";
    case StopReason::GradientTolerance:
        return "gradient_tolerance";
    case StopReason::LineSearch:
        return "line_search";
    case StopReason::Budget:
        return "budget";
    }
    return "?";
}

struct MinimizeResult {
    Eigen::VectorXd x;
    double f{0.0};
    std::size_t iterations{0};
    std::size_t skipped_updates{0};
    StopReason reason{StopReason::MaxIterations};
    Eigen::MatrixXd inverse_hessian;
};

/// Returns false when the update was skipped for lack of curvature.
inline bool update_inverse_hessian(Eigen::MatrixXd &H, const Eigen::VectorXd &s,
                                   const Eigen::VectorXd &y, bool as_written) {
    const double sy = s.dot(y);
    if (!(sy > kCurvatureThreshold)) {
        return false;
    }
    if (as_written) {
        const Eigen::VectorXd Hy = H * y;
        const double yHy = y.dot(Hy);
        if (!(yHy > kCurvatureThreshold)) {
            return false;
        }
        H += -(Hy * Hy.transpose()) / yHy + (s * s.transpose()) / sy;
    } else {
        const double r = 1.0 / sy;
        const auto n = s.size();
        const Eigen::MatrixXd V =
            Eigen::MatrixXd::Identity(n, n) - r * y * s.transpose();
        H = V.transpose() * H * V + r * s * s.transpose();
    }
    H = 0.5 * (H + H.transpose());
    return true;
}

namespace detail {

struct LineSearchOutcome {
    bool ok{false};
    double alpha{0.0};
    double f{0.0};
    std::optional<Eigen::VectorXd> g; ///< gradient at the accepted point, if computed
};

template <class F>
LineSearchOutcome armijo(F &&value, const Eigen::VectorXd &x, double f0, double slope,
                         const Eigen::VectorXd &d, const LineSearchSpec &ls) {
    double alpha = ls.initial_step;
    for (std::size_t k = 0; k < ls.max_steps; ++k, alpha *= ls.shrink) {
        const double fa = value(Eigen::VectorXd(x + alpha * d));
        if (std::isfinite(fa) && fa <= f0 + ls.c1 * alpha * slope) {
            return {true, alpha, fa, std::nullopt};
        }
    }
    return {};
}

template <class FG>
LineSearchOutcome strong_wolfe(FG &&value_grad, const Eigen::VectorXd &x, double f0, double slope,
                               const Eigen::VectorXd &d, const LineSearchSpec &ls) {
    auto probe = [&](double a) {
        auto [fa, ga] = value_grad(Eigen::VectorXd(x + a * d));
        const double da = ga.dot(d);
        return std::tuple<double, Eigen::VectorXd, double>{fa, std::move(ga), da};
    };
    // Quadratic interpolation from (lo, f_lo, d_lo) and (hi, f_hi), kept
    // inside the middle 80% of the bracket; exact on quadratic objectives.
    auto trial = [](double lo, double f_lo, double d_lo, double hi, double f_hi) {
        const double w = hi - lo;
        const double curv = f_hi - f_lo - d_lo * w;
        double a = curv > 0.0 ? lo - d_lo * w * w / (2.0 * curv) : 0.5 * (lo + hi);
        const double a_min = std::min(lo, hi) + 0.1 * std::abs(w);
        const double a_max = std::max(lo, hi) - 0.1 * std::abs(w);
        if (!std::isfinite(a) || a < a_min || a > a_max) {
            a = 0.5 * (lo + hi);
        }
        return a;
    };
    auto zoom = [&](double lo, double f_lo, double d_lo, double hi,
                    double f_hi) -> LineSearchOutcome {
        for (std::size_t k = 0; k < ls.max_steps; ++k) {
            const double a = std::isfinite(f_hi) ? trial(lo, f_lo, d_lo, hi, f_hi) : 0.5 * (lo + hi);
            auto [fa, ga, da] = probe(a);
            if (fa > f0 + ls.c1 * a * slope || fa >= f_lo) {
                hi = a;
                f_hi = fa;
            } else {
                if (std::abs(da) <= -ls.c2 * slope) {
                    return {true, a, fa, std::move(ga)};
                }
                if (da * (hi - lo) >= 0.0) {
                    hi = lo;
                    f_hi = f_lo;
                }
                lo = a;
                f_lo = fa;
                d_lo = da;
            }
        }
        return {};
    };

    double prev = 0.0;
    double f_prev = f0;
    double d_prev = slope;
    double a = ls.initial_step;
    for (std::size_t k = 0; k < ls.max_steps; ++k) {
        auto [fa, ga, da] = probe(a);
        if (!std::isfinite(fa) || fa > f0 + ls.c1 * a * slope || (k > 0 && fa >= f_prev)) {
            return zoom(prev, f_prev, d_prev, a, fa);
        }
        if (std::abs(da) <= -ls.c2 * slope) {
            return {true, a, fa, std::move(ga)};
        }
        if (da >= 0.0) {
            return zoom(a, fa, da, prev, f_prev);
        }
        prev = a;
        f_prev = fa;
        d_prev = da;
        a *= 2.0;
    }
    return {};
}

} // namespace detail

/**
 * Minimize with quasi-Newton steps starting from H = I.
 *
 * `value_grad(x)` returns (f, grad) and is called at each accepted iterate;
 * `value(x)` is used for backtracking trial points. `on_iterate(k, x, f, g,
 * H)` runs after each accepted iterate (k = 0 is the start point) and
 * returns false to stop early.
 */
template <class FG, class F, class Callback>
MinimizeResult bfgs_minimize(FG &&value_grad, F &&value, Eigen::VectorXd x0, bool as_written,
                             const LineSearchSpec &ls, std::size_t max_iterations,
                             double gradient_tolerance, Callback &&on_iterate) {
    ls.validate();
    const auto n = x0.size();
    MinimizeResult r;
    r.x = std::move(x0);
    r.inverse_hessian = Eigen::MatrixXd::Identity(n, n);
    auto [f, g] = value_grad(r.x);
    r.f = f;
    if (!on_iterate(std::size_t{0}, r.x, r.f, g, r.inverse_hessian)) {
        r.reason = StopReason::Budget;
        return r;
    }
    for (std::size_t k = 1; k <= max_iterations; ++k) {
        if (g.norm() < gradient_tolerance) {
            r.reason = StopReason::GradientTolerance;
            return r;
        }
        Eigen::VectorXd d = -(r.inverse_hessian * g);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            r.inverse_hessian.setIdentity();
            d = -g;
            slope = g.dot(d);
        }
        auto step = ls.kind == LineSearchSpec::Kind::Armijo
                        ? detail::armijo(value, r.x, r.f, slope, d, ls)
                        : detail::strong_wolfe(value_grad, r.x, r.f, slope, d, ls);
        if (!step.ok) {
            r.reason = StopReason::LineSearch;
            return r;
        }
        Eigen::VectorXd x1 = r.x + step.alpha * d;
        Eigen::VectorXd g1;
        double f1 = step.f;
        if (step.g) {
            g1 = std::move(*step.g);
        } else {
            auto [fv, gv] = value_grad(x1);
            f1 = fv;
            g1 = std::move(gv);
        }
        if (!update_inverse_hessian(r.inverse_hessian, x1 - r.x, g1 - g, as_written)) {
            ++r.skipped_updates;
        }
        r.x = std::move(x1);
        r.f = f1;
        g = std::move(g1);
        r.iterations = k;
        if (!on_iterate(k, r.x, r.f, g, r.inverse_hessian)) {
            r.reason = StopReason::Budget;
            return r;
        }
    }
    r.reason = StopReason::MaxIterations;
    return r;
}

/// Convenience overload for a plain (value, gradient) function.
template <class FG>
MinimizeResult bfgs_minimize(FG &&value_grad, Eigen::VectorXd x0, bool as_written = false,
                             const LineSearchSpec &ls = {}, std::size_t max_iterations = 100,
                             double gradient_tolerance = 1e-8) {
    auto value = [&](const Eigen::VectorXd &x) { return value_grad(x).first; };
    return bfgs_minimize(value_grad, value, std::move(x0), as_written, ls, max_iterations,
                         gradient_tolerance,
                         [](std::size_t, const Eigen::VectorXd &, double, const Eigen::VectorXd &,
                            const Eigen::MatrixXd &) { return true; });
}

namespace detail {

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline ParameterVector from_eigen(const Eigen::VectorXd &v) {
    return {v.data(), v.data() + v.size()};
}

} // namespace detail

struct BfgsReport {
    TrainResult result;
    StopReason reason{StopReason::MaxIterations};
    std::size_t skipped_updates{0};
};

/// Quasi-Newton training on the measured dataset loss.
inline BfgsReport bfgs_train_report(const GradConfig &config, const CircuitSpec &spec,
                                    const Dataset &data, const Backend &backend,
                                    const TimeBudget &budget = {}) {
    config.validate();
    spec.validate();
    if (data.empty()) {
        throw std::invalid_argument("training set is empty");
    }
    if (config.method != GradTrainer::BfgsStandard && config.method != GradTrainer::BfgsAsWritten) {
        throw std::invalid_argument("bfgs_train needs a bfgs method");
    }
    MeasuredObjective objective(config.cost, spec, data.points, backend, config.gradient,
                                config.seed, config.jobs);
    TraceRecorder recorder(backend, budget);
    BfgsReport report;
    auto &result = report.result;
    result.best_loss = std::numeric_limits<double>::infinity();

    Evaluation last;
    auto value_grad = [&](const Eigen::VectorXd &x) {
        const auto theta = detail::from_eigen(x);
        auto [e, g] = objective.value_gradient(theta);
        last = e;
        return std::pair<double, Eigen::VectorXd>{e.loss, detail::to_eigen(g)};
    };
    auto value = [&](const Eigen::VectorXd &x) {
        const auto theta = detail::from_eigen(x);
        return objective.value(theta).loss;
    };
    auto on_iterate = [&](std::size_t k, const Eigen::VectorXd &x, double, const Eigen::VectorXd &,
                          const Eigen::MatrixXd &) {
        recorder.record(result.trace, k, last.accuracy, last.loss);
        if (last.loss < result.best_loss) {
            result.best_loss = last.loss;
            result.best_accuracy = last.accuracy;
            result.best_theta = detail::from_eigen(x);
        }
        return config.estimate_budget == 0 || recorder.spent().estimates < config.estimate_budget;
    };

    const auto theta0 = initial_parameters(config, spec);
    const auto r = bfgs_minimize(value_grad, value, detail::to_eigen(theta0),
                                 config.method == GradTrainer::BfgsAsWritten, config.line_search,
                                 config.max_iterations, config.gradient_tolerance, on_iterate);
    report.reason = r.reason;
    report.skipped_updates = r.skipped_updates;
    return report;
}

inline TrainResult bfgs_train(const GradConfig &config, const CircuitSpec &spec,
                              const Dataset &data, const Backend &backend,
                              const TimeBudget &budget = {}) {
    return bfgs_train_report(config, spec, data, backend, budget).result;
}

} // namespace reup
