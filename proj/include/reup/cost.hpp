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
 * @file cost.hpp
 * Training objectives evaluated over a dataset through a backend.
 *
 * All costs are functions of the per-point estimates m_i = M(theta, x_i, y_i):
 *
 *   accuracy        (1/n) sum 1[m_i > 0.5]
 *   cross entropy   -(1/n) sum log max(m_i, eps)
 *   as written      -(1/n) sum 1[m_i > 0.5] log max(m_i, eps)
 *   chi squared     (1/n) sum (1 - m_i)^2
 *
 * Reductions are ordered sums over the point index.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "reup/backend.hpp"
#include "reup/circuit.hpp"
#include "reup/dataset.hpp"
#include "reup/parallel.hpp"
#include "reup/rng.hpp"

namespace reup {

enum class CostKind { Accuracy, CrossEntropy, CrossEntropyAsWritten, ChiSquared };

inline constexpr std::array<CostKind, 4> kAllCosts{CostKind::Accuracy, CostKind::CrossEntropy,
                                                   CostKind::CrossEntropyAsWritten,
                                                   CostKind::ChiSquared};

constexpr std::string_view to_string(CostKind k) noexcept {
    switch (k) {
    case CostKind::Accuracy:
        return "accuracy";
    case CostKind::CrossEntropy:
        return "cross_entropy";
    case CostKind::CrossEntropyAsWritten:
        return "cross_entropy_as_written";
    case CostKind::ChiSquared:
        return "chi_squared";
    }
    return "?";
}

inline CostKind parse_cost(std::string_view s) {
    for (const auto k : kAllCosts) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw std::invalid_argument("unknown cost '" + std::string(s) + "'");
}

/// Lower clamp applied to estimates before taking logs.
inline constexpr double kLogClamp = 1e-12;

constexpr bool is_differentiable(CostKind k) noexcept { return k != CostKind::Accuracy; }

/// Contribution of one point to the value being minimized.
/// Accuracy is minimized as its negative.
inline double point_loss(CostKind k, double m) noexcept {
    switch (k) {
    case CostKind::Accuracy:
        return m > 0.5 ? -1.0 : 0.0;
    case CostKind::CrossEntropy:
        return -std::log(std::max(m, kLogClamp));
    case CostKind::CrossEntropyAsWritten:
        return m > 0.5 ? -std::log(std::max(m, kLogClamp)) : 0.0;
    case CostKind::ChiSquared:
        return (1.0 - m) * (1.0 - m);
    }
    return 0.0;
}

/// d(point_loss)/dm; zero almost everywhere for accuracy.
inline double point_loss_derivative(CostKind k, double m) noexcept {
    switch (k) {
    case CostKind::Accuracy:
        return 0.0;
    case CostKind::CrossEntropy:
        return m > kLogClamp ? -1.0 / m : 0.0;
    case CostKind::CrossEntropyAsWritten:
        return m > 0.5 ? -1.0 / m : 0.0;
    case CostKind::ChiSquared:
        return -2.0 * (1.0 - m);
    }
    return 0.0;
}

inline double accuracy_from_estimates(std::span<const double> m) {
    if (m.empty()) {
        throw std::invalid_argument("accuracy of an empty dataset");
    }
    std::size_t correct = 0;
    for (const double v : m) {
        correct += v > 0.5 ? 1U : 0U;
    }
    return static_cast<double>(correct) / static_cast<double>(m.size());
}

/// Mean point loss, i.e. the quantity an optimizer minimizes.
inline double loss_from_estimates(CostKind k, std::span<const double> m) {
    if (m.empty()) {
        throw std::invalid_argument("cost of an empty dataset");
    }
    double sum = 0.0;
    for (const double v : m) {
        sum += point_loss(k, v);
    }
    return sum / static_cast<double>(m.size());
}

/// Reported cost value: accuracy as a positive fraction, the rest as losses.
inline double cost_from_estimates(CostKind k, std::span<const double> m) {
    return k == CostKind::Accuracy ? accuracy_from_estimates(m) : loss_from_estimates(k, m);
}

/// Estimates for every point; point i uses stream derive_seed(key, {i}).
inline std::vector<double> estimate_dataset(const CircuitSpec &spec, std::span<const double> theta,
                                            std::span<const DataPoint> points,
                                            const Backend &backend, std::uint64_t key,
                                            unsigned jobs = 1) {
    spec.check_parameters(theta);
    std::vector<double> m(points.size());
    parallel_for(points.size(), jobs, [&](std::size_t i) {
        const auto angles = gate_angles(spec, theta, points[i].x);
        m[i] = backend.estimate(angles, points[i].label, derive_seed(key, {i}));
    });
    return m;
}

struct Evaluation {
    std::vector<double> estimates;
    double accuracy{0.0};
    double loss{0.0};
};

inline Evaluation evaluate(CostKind k, const CircuitSpec &spec, std::span<const double> theta,
                           std::span<const DataPoint> points, const Backend &backend,
                           std::uint64_t key, unsigned jobs = 1) {
    if (points.empty()) {
        throw std::invalid_argument("cannot evaluate a cost on an empty dataset");
    }
    Evaluation e;
    e.estimates = estimate_dataset(spec, theta, points, backend, key, jobs);
    e.accuracy = accuracy_from_estimates(e.estimates);
    e.loss = loss_from_estimates(k, e.estimates);
    return e;
}

inline double cost(CostKind k, const CircuitSpec &spec, std::span<const double> theta,
                   const Dataset &data, const Backend &backend, std::uint64_t key = 0) {
    if (data.empty()) {
        throw std::invalid_argument("cannot evaluate a cost on an empty dataset");
    }
    const auto m = estimate_dataset(spec, theta, data.points, backend, key);
    return cost_from_estimates(k, m);
}

inline double accuracy(const CircuitSpec &spec, std::span<const double> theta, const Dataset &data,
                       const Backend &backend, std::uint64_t key = 0) {
    return cost(CostKind::Accuracy, spec, theta, data, backend, key);
}

inline double cross_entropy(const CircuitSpec &spec, std::span<const double> theta,
                            const Dataset &data, const Backend &backend, std::uint64_t key = 0) {
    return cost(CostKind::CrossEntropy, spec, theta, data, backend, key);
}

inline double chi_squared(const CircuitSpec &spec, std::span<const double> theta,
                          const Dataset &data, const Backend &backend, std::uint64_t key = 0) {
    return cost(CostKind::ChiSquared, spec, theta, data, backend, key);
}

/// Exact accuracy without a backend (no ledger charge).
inline double exact_accuracy(const CircuitSpec &spec, std::span<const double> theta,
                             std::span<const DataPoint> points) {
    if (points.empty()) {
        throw std::invalid_argument("accuracy of an empty dataset");
    }
    std::size_t correct = 0;
    for (const auto &p : points) {
        correct += evaluate_circuit(spec, theta, p.x)[p.label] > 0.5 ? 1U : 0U;
    }
    return static_cast<double>(correct) / static_cast<double>(points.size());
}

/// Exact loss without a backend.
inline double exact_loss(CostKind k, const CircuitSpec &spec, std::span<const double> theta,
                         std::span<const DataPoint> points) {
    std::vector<double> m(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        m[i] = evaluate_circuit(spec, theta, points[i].x)[points[i].label];
    }
    return loss_from_estimates(k, m);
}

/// Exact gradient of the mean loss, composed from per-point circuit gradients.
inline std::vector<double> exact_loss_gradient(CostKind k, const CircuitSpec &spec,
                                               std::span<const double> theta,
                                               std::span<const DataPoint> points) {
    spec.check_parameters(theta);
    if (points.empty()) {
        throw std::invalid_argument("gradient over an empty dataset");
    }
    std::vector<double> grad(theta.size(), 0.0);
    for (const auto &p : points) {
        const auto angles = gate_angles(spec, theta, p.x);
        const double m = evaluate_angles(angles)[p.label];
        const double w = point_loss_derivative(k, m);
        if (w == 0.0) {
            continue;
        }
        const auto g = chain_to_parameters(spec, p.x, angle_gradient(angles, p.label));
        for (std::size_t j = 0; j < grad.size(); ++j) {
            grad[j] += w * g[j];
        }
    }
    for (auto &g : grad) {
        g /= static_cast<double>(points.size());
    }
    return grad;
}

} // namespace reup
