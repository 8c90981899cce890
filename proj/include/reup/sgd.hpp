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
 * @file sgd.hpp
 * Mini-batch stochastic gradient descent.
 *
 * Each iteration updates theta <- theta - lr * g on one batch. The data
 * order is reshuffled every epoch; a batch as large as the dataset gives
 * plain gradient descent. Trace rows carry the metrics of the batch used
 * for that update, measured before the update.
 */
#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "reup/backend.hpp"
#include "reup/bfgs.hpp"
#include "reup/circuit.hpp"
#include "reup/cost.hpp"
#include "reup/dataset.hpp"
#include "reup/objective.hpp"
#include "reup/rng.hpp"
#include "reup/trace.hpp"

namespace reup {

inline TrainResult sgd_train(const GradConfig &config, const CircuitSpec &spec, const Dataset &data,
                             const Backend &backend, const TimeBudget &budget = {}) {
    config.validate();
    spec.validate();
    if (data.empty()) {
        throw std::invalid_argument("training set is empty");
    }
    const std::size_t n = data.size();
    const std::size_t batch = (config.batch_size == 0 || config.method == GradTrainer::GradientDescent)
                                  ? n
                                  : std::min(config.batch_size, n);

    MeasuredObjective objective(config.cost, spec, data.points, backend, config.gradient,
                                config.seed, config.jobs);
    TraceRecorder recorder(backend, budget);
    TrainResult result;
    result.best_loss = std::numeric_limits<double>::infinity();

    auto theta = initial_parameters(config, spec);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<DataPoint> batch_points;
    batch_points.reserve(batch);

    std::size_t cursor = n; // forces a shuffle before the first batch
    std::size_t epoch = 0;
    for (std::size_t it = 0; it <= config.max_iterations; ++it) {
        if (cursor + batch > n) {
            if (batch < n) {
                auto rng = make_engine(config.seed, {tag(Stream::Shuffle), epoch});
                for (std::size_t i = n - 1; i > 0; --i) {
                    std::swap(order[i], order[uniform_index(rng, i + 1)]);
                }
            }
            ++epoch;
            cursor = 0;
        }
        batch_points.clear();
        for (std::size_t i = 0; i < batch; ++i) {
            batch_points.push_back(data.points[order[cursor + i]]);
        }
        cursor += batch;
        objective.set_points(batch_points);

        if (it == config.max_iterations) {
            // final iterate: measure only
            const auto e = objective.value(theta);
            recorder.record(result.trace, it, e.accuracy, e.loss);
            if (e.loss < result.best_loss) {
                result.best_loss = e.loss;
                result.best_accuracy = e.accuracy;
                result.best_theta = theta;
            }
            break;
        }
        auto [e, g] = objective.value_gradient(theta);
        recorder.record(result.trace, it, e.accuracy, e.loss);
        if (e.loss < result.best_loss) {
            result.best_loss = e.loss;
            result.best_accuracy = e.accuracy;
            result.best_theta = theta;
        }
        if (config.estimate_budget > 0 && recorder.spent().estimates >= config.estimate_budget) {
            break;
        }
        for (std::size_t j = 0; j < theta.size(); ++j) {
            theta[j] -= config.learning_rate * g[j];
        }
    }
    return result;
}

/// Dispatch on config.method.
inline TrainResult grad_train(const GradConfig &config, const CircuitSpec &spec,
                              const Dataset &data, const Backend &backend,
                              const TimeBudget &budget = {}) {
    switch (config.method) {
    case GradTrainer::BfgsStandard:
    case GradTrainer::BfgsAsWritten:
        return bfgs_train(config, spec, data, backend, budget);
    case GradTrainer::GradientDescent:
    case GradTrainer::Sgd:
        return sgd_train(config, spec, data, backend, budget);
    }
    throw std::invalid_argument("unknown gradient trainer");
}

} // namespace reup
