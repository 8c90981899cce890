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
 * @file gradient.hpp
 * Gradient estimators for the training loss, all routed through a backend.
 *
 * - finite difference: central differences of the dataset loss, 2 * dim
 *   loss evaluations per gradient.
 * - parameter shift: per point and per gate angle, two estimates at
 *   +/- pi/2, chained to parameters through the ansatz coefficients.
 * - analytic: exact composition on an exact backend (charged as a
 *   parameter-shift measurement would be); on a noisy backend it is
 *   measured with the shift rule.
 */
#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "reup/backend.hpp"
#include "reup/circuit.hpp"
#include "reup/cost.hpp"
#include "reup/parallel.hpp"
#include "reup/rng.hpp"

namespace reup {

enum class GradientMethod { FiniteDifference, ParameterShift, Analytic };

constexpr std::string_view to_string(GradientMethod m) noexcept {
    switch (m) {
    case GradientMethod::FiniteDifference:
        return "finite_difference";
    case GradientMethod::ParameterShift:
        return "parameter_shift";
    case GradientMethod::Analytic:
        return "analytic";
    }
    return "?";
}

inline GradientMethod parse_gradient_method(std::string_view s) {
    for (const auto m : {GradientMethod::FiniteDifference, GradientMethod::ParameterShift,
                         GradientMethod::Analytic}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    throw std::invalid_argument("unknown gradient method '" + std::string(s) + "'");
}

struct GradientSpec {
    GradientMethod method{GradientMethod::Analytic};
    double step{1e-3}; ///< finite-difference step

    void validate() const {
        if (method == GradientMethod::FiniteDifference && !(step > 0.0)) {
            throw std::invalid_argument("finite-difference step must be positive");
        }
    }
};

/**
 * Central differences of an arbitrary scalar function.
 * `f(theta, call)` receives a distinct call index per evaluation so noisy
 * functions can key their randomness on it.
 */
template <class F>
std::vector<double> gradient_fd(F &&f, std::span<const double> theta, double step) {
    if (!(step > 0.0)) {
        throw std::invalid_argument("finite-difference step must be positive");
    }
    std::vector<double> x(theta.begin(), theta.end());
    std::vector<double> grad(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double saved = x[j];
        x[j] = saved + step;
        const double plus = f(std::span<const double>(x), std::uint64_t{2 * j});
        x[j] = saved - step;
        const double minus = f(std::span<const double>(x), std::uint64_t{2 * j + 1});
        x[j] = saved;
        grad[j] = (plus - minus) / (2.0 * step);
    }
    return grad;
}

/// Central-difference gradient of the dataset loss through `backend`.
inline std::vector<double> gradient_fd(CostKind k, const CircuitSpec &spec,
                                       std::span<const double> theta,
                                       std::span<const DataPoint> points, const Backend &backend,
                                       double step, std::uint64_t key, unsigned jobs = 1) {
    spec.check_parameters(theta);
    return gradient_fd(
        [&](std::span<const double> x, std::uint64_t call) {
            return loss_from_estimates(
                k, estimate_dataset(spec, x, points, backend, derive_seed(key, {call}), jobs));
        },
        theta, step);
}

struct GradientResult {
    std::vector<double> gradient;
    /// Loss and estimates at theta when the estimator measured them.
    std::optional<Evaluation> at_theta;
};

/// Estimates per point used by a shift-rule gradient: M itself plus two per gate angle.
inline std::size_t shift_estimates_per_point(const CircuitSpec &spec) noexcept {
    return 1 + 2 * spec.gate_count();
}

inline GradientResult gradient_parameter_shift(CostKind k, const CircuitSpec &spec,
                                               std::span<const double> theta,
                                               std::span<const DataPoint> points,
                                               const Backend &backend, std::uint64_t key,
                                               unsigned jobs = 1) {
    if (!is_differentiable(k)) {
        throw std::invalid_argument("parameter-shift gradient is undefined for the accuracy cost");
    }
    spec.check_parameters(theta);
    if (points.empty()) {
        throw std::invalid_argument("gradient over an empty dataset");
    }
    constexpr double shift = std::numbers::pi / 2.0;
    const std::size_t dim = theta.size();
    std::vector<std::vector<double>> per_point(points.size());
    std::vector<double> m(points.size());

    parallel_for(points.size(), jobs, [&](std::size_t i) {
        const auto &p = points[i];
        auto angles = gate_angles(spec, theta, p.x);
        const std::uint64_t pk = derive_seed(key, {i});
        m[i] = backend.estimate(angles, p.label, derive_seed(pk, {0}));
        std::vector<double> dphi(spec.gate_count());
        for (std::size_t g = 0; g < dphi.size(); ++g) {
            double &phi = (g % 2 == 0) ? angles[g / 2].phi_y : angles[g / 2].phi_z;
            const double saved = phi;
            phi = saved + shift;
            const double plus = backend.estimate(angles, p.label, derive_seed(pk, {2 * g + 1}));
            phi = saved - shift;
            const double minus = backend.estimate(angles, p.label, derive_seed(pk, {2 * g + 2}));
            phi = saved;
            dphi[g] = 0.5 * (plus - minus);
        }
        per_point[i] = chain_to_parameters(spec, p.x, dphi);
    });

    GradientResult out;
    out.gradient.assign(dim, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double w = point_loss_derivative(k, m[i]);
        for (std::size_t j = 0; j < dim; ++j) {
            out.gradient[j] += w * per_point[i][j];
        }
    }
    for (auto &g : out.gradient) {
        g /= static_cast<double>(points.size());
    }
    Evaluation e;
    e.accuracy = accuracy_from_estimates(m);
    e.loss = loss_from_estimates(k, m);
    e.estimates = std::move(m);
    out.at_theta = std::move(e);
    return out;
}

inline GradientResult gradient_analytic(CostKind k, const CircuitSpec &spec,
                                        std::span<const double> theta,
                                        std::span<const DataPoint> points, const Backend &backend,
                                        std::uint64_t key, unsigned jobs = 1) {
    if (!backend.is_exact()) {
        return gradient_parameter_shift(k, spec, theta, points, backend, key, jobs);
    }
    spec.check_parameters(theta);
    if (points.empty()) {
        throw std::invalid_argument("gradient over an empty dataset");
    }
    GradientResult out;
    out.gradient = exact_loss_gradient(k, spec, theta, points);
    Evaluation e;
    e.estimates.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        e.estimates[i] = evaluate_circuit(spec, theta, points[i].x)[points[i].label];
    }
    e.accuracy = accuracy_from_estimates(e.estimates);
    e.loss = loss_from_estimates(k, e.estimates);
    out.at_theta = std::move(e);

    const std::uint64_t n = points.size() * shift_estimates_per_point(spec);
    backend.ledger().record(n, n * backend.shots());
    return out;
}

inline GradientResult estimate_gradient(const GradientSpec &g, CostKind k, const CircuitSpec &spec,
                                        std::span<const double> theta,
                                        std::span<const DataPoint> points, const Backend &backend,
                                        std::uint64_t key, unsigned jobs = 1) {
    switch (g.method) {
    case GradientMethod::FiniteDifference:
        return {gradient_fd(k, spec, theta, points, backend, g.step, key, jobs), std::nullopt};
    case GradientMethod::ParameterShift:
        return gradient_parameter_shift(k, spec, theta, points, backend, key, jobs);
    case GradientMethod::Analytic:
        return gradient_analytic(k, spec, theta, points, backend, key, jobs);
    }
    throw std::invalid_argument("unknown gradient method");
}

} // namespace reup
