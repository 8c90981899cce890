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
 * @file objective.hpp
 * Configuration shared by the gradient-based trainers, and the measured
 * objective they minimize.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reup/backend.hpp"
#include "reup/circuit.hpp"
#include "reup/cost.hpp"
#include "reup/ga.hpp"
#include "reup/gradient.hpp"
#include "reup/rng.hpp"

namespace reup {

enum class GradTrainer { BfgsStandard, BfgsAsWritten, GradientDescent, Sgd };

constexpr std::string_view to_string(GradTrainer m) noexcept {
    switch (m) {
    case GradTrainer::BfgsStandard:
        return "bfgs_standard";
    case GradTrainer::BfgsAsWritten:
        return "bfgs_as_written";
    case GradTrainer::GradientDescent:
        return "gradient_descent";
    case GradTrainer::Sgd:
        return "sgd";
    }
    return "?";
}

inline GradTrainer parse_grad_trainer(std::string_view s) {
    for (const auto m : {GradTrainer::BfgsStandard, GradTrainer::BfgsAsWritten,
                         GradTrainer::GradientDescent, GradTrainer::Sgd}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    throw std::invalid_argument("unknown gradient trainer '" + std::string(s) + "'");
}

struct LineSearchSpec {
    enum class Kind { Armijo, StrongWolfe };

    Kind kind{Kind::Armijo};
    double c1{1e-4};
    double c2{0.9};
    double shrink{0.5};
    double initial_step{1.0};
    std::size_t max_steps{30};

    void validate() const {
        if (!(c1 > 0.0 && c1 < 1.0)) {
            throw std::invalid_argument("line search c1 must lie in (0, 1)");
        }
        if (kind == Kind::StrongWolfe && !(c2 > c1 && c2 < 1.0)) {
            throw std::invalid_argument("line search c2 must lie in (c1, 1)");
        }
        if (!(shrink > 0.0 && shrink < 1.0)) {
            throw std::invalid_argument("line search shrink must lie in (0, 1)");
        }
        if (!(initial_step > 0.0)) {
            throw std::invalid_argument("line search initial_step must be positive");
        }
        if (max_steps < 1) {
            throw std::invalid_argument("line search max_steps must be at least 1");
        }
    }
};

constexpr std::string_view to_string(LineSearchSpec::Kind k) noexcept {
    return k == LineSearchSpec::Kind::Armijo ? "armijo" : "strong_wolfe";
}

inline LineSearchSpec::Kind parse_line_search(std::string_view s) {
    if (s == "armijo") {
        return LineSearchSpec::Kind::Armijo;
    }
    if (s == "strong_wolfe") {
        return LineSearchSpec::Kind::StrongWolfe;
    }
    throw std::invalid_argument("unknown line search '" + std::string(s) + "'");
}

struct GradConfig {
    GradTrainer method{GradTrainer::BfgsStandard};
    GradientSpec gradient{};
    double learning_rate{0.1};
    std::size_t batch_size{0}; ///< 0 = whole dataset
    std::size_t max_iterations{100};
    LineSearchSpec line_search{};
    double gradient_tolerance{1e-8};
    Interval init_range{};
    std::optional<ParameterVector> initial_theta;
    CostKind cost{CostKind::CrossEntropy};
    std::uint64_t seed{0};
    std::uint64_t estimate_budget{0}; ///< 0 = none
    unsigned jobs{1};

    void validate() const {
        gradient.validate();
        line_search.validate();
        if (!is_differentiable(cost)) {
            throw std::invalid_argument("gradient training needs a differentiable cost");
        }
        if (!(learning_rate >= 0.0)) {
            throw std::invalid_argument("learning_rate must be nonnegative");
        }
        if (!(init_range.hi > init_range.lo)) {
            throw std::invalid_argument("init_range must be a nonempty interval");
        }
    }
};

/// Starting point: `initial_theta` if set, else uniform in init_range.
inline ParameterVector initial_parameters(const GradConfig &config, const CircuitSpec &spec) {
    if (config.initial_theta) {
        spec.check_parameters(*config.initial_theta);
        return *config.initial_theta;
    }
    auto rng = make_engine(config.seed, {tag(Stream::Init)});
    ParameterVector theta(spec.parameter_count());
    for (auto &t : theta) {
        t = uniform(rng, config.init_range.lo, config.init_range.hi);
    }
    return theta;
}

/**
 * Dataset loss measured through a backend. Every call draws from a fresh
 * stream numbered by a sequential counter, so a single-threaded optimizer
 * sees the same noise on every run.
 */
class MeasuredObjective {
  public:
    MeasuredObjective(CostKind kind, const CircuitSpec &spec, std::span<const DataPoint> points,
                      const Backend &backend, GradientSpec gradient, std::uint64_t seed,
                      unsigned jobs)
        : kind_(kind), spec_(spec), points_(points), backend_(backend), gradient_(gradient),
          seed_(seed), jobs_(jobs) {}

    void set_points(std::span<const DataPoint> points) noexcept { points_ = points; }

    Evaluation value(std::span<const double> theta) {
        return evaluate(kind_, spec_, theta, points_, backend_, next_key(), jobs_);
    }

    std::pair<Evaluation, std::vector<double>> value_gradient(std::span<const double> theta) {
        auto g = estimate_gradient(gradient_, kind_, spec_, theta, points_, backend_, next_key(),
                                   jobs_);
        Evaluation e = g.at_theta ? std::move(*g.at_theta) : value(theta);
        return {std::move(e), std::move(g.gradient)};
    }

  private:
    std::uint64_t next_key() noexcept {
        return derive_seed(seed_, {tag(Stream::Objective), calls_++});
    }

    CostKind kind_;
    const CircuitSpec &spec_;
    std::span<const DataPoint> points_;
    const Backend &backend_;
    GradientSpec gradient_;
    std::uint64_t seed_;
    unsigned jobs_;
    std::uint64_t calls_{0};
};

} // namespace reup
