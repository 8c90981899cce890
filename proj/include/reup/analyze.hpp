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
 * @file analyze.hpp
 * Report generators behind `reup analyze`. Each returns named CSV documents;
 * the caller decides where they go.
 */
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "reup/backend.hpp"
#include "reup/circuit.hpp"
#include "reup/config.hpp"
#include "reup/cost.hpp"
#include "reup/csv.hpp"
#include "reup/dataset.hpp"
#include "reup/landscape.hpp"
#include "reup/mitigation.hpp"

namespace reup {

/// A trained 2C, 4-layer parameter vector used as the default analysis point.
inline constexpr std::array<double, 16> kReferenceTheta{
    0.1532,  0.5374, 2.3999, -0.8025, 0.3855,  3.6122, 1.299,  0.1235,
    1.3819,  3.3182, -2.4787, 5.4758, -1.4164, 4.7989, 0.5262, 4.4542};

/// Input point paired with kReferenceTheta in the circuit check.
inline constexpr Point2 kReferencePoint{0.0976, 0.4304};

/// File name to CSV text.
using Reports = std::map<std::string, std::string>;

enum class AnalysisKind { Residuals, NoiseScaling, GradientNoise, Landscape, AnsatzSpread, TimeBudget };

inline constexpr std::array<AnalysisKind, 6> kAllAnalyses{
    AnalysisKind::Residuals,    AnalysisKind::NoiseScaling, AnalysisKind::GradientNoise,
    AnalysisKind::Landscape,    AnalysisKind::AnsatzSpread, AnalysisKind::TimeBudget};

inline std::string_view to_string(AnalysisKind k) {
    switch (k) {
    case AnalysisKind::Residuals:
        return "residuals";
    case AnalysisKind::NoiseScaling:
        return "noise-scaling";
    case AnalysisKind::GradientNoise:
        return "gradient-noise";
    case AnalysisKind::Landscape:
        return "landscape";
    case AnalysisKind::AnsatzSpread:
        return "ansatz-spread";
    case AnalysisKind::TimeBudget:
        return "time-budget";
    }
    return "?";
}

inline AnalysisKind parse_analysis(std::string_view s) {
    for (const auto k : kAllAnalyses) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw ConfigError("kind", "unknown analysis '" + std::string(s) + "'");
}

/**
 * Parse a shot-count list: comma-separated values, or `lo..hi` expanding
 * to lo, lo + 10, ... ending at hi, or `lo..hi:step`.
 */
inline std::vector<unsigned> parse_shot_list(std::string_view text) {
    std::vector<unsigned> out;
    auto fail = [&] {
        return ConfigError("shots", "expected 'a,b,c', 'lo..hi' or 'lo..hi:step', got '" +
                                        std::string(text) + "'");
    };
    if (const auto dots = text.find(".."); dots != std::string_view::npos) {
        unsigned lo = 0;
        unsigned hi = 0;
        unsigned step = 10;
        auto rest = text.substr(dots + 2);
        if (const auto colon = rest.find(':'); colon != std::string_view::npos) {
            if (!parse_integer(trim(rest.substr(colon + 1)), step) || step == 0) {
                throw fail();
            }
            rest = rest.substr(0, colon);
        }
        if (!parse_integer(trim(text.substr(0, dots)), lo) || !parse_integer(trim(rest), hi) ||
            lo < 1 || hi < lo) {
            throw fail();
        }
        for (unsigned n = lo; n <= hi; n += step) {
            out.push_back(n);
        }
        if (out.back() != hi) {
            out.push_back(hi);
        }
        return out;
    }
    for (const auto f : split_fields(text)) {
        unsigned n = 0;
        if (!parse_integer(trim(f), n) || n < 1) {
            throw fail();
        }
        out.push_back(n);
    }
    return out;
}

struct ResidualsOptions {
    CircuitSpec circuit{};
    std::size_t count{250};
    unsigned shots{500};
    ConfusionMatrix confusion{kMeasuredConfusion};
    double residual_sigma{0.0};
    unsigned calibration_shots{10000};
    std::uint64_t seed{0};
};

/// Observed versus exact label-1 probabilities, before and after mitigation.
inline Reports analyze_residuals(const ResidualsOptions &o) {
    const NoisyBackend backend(NoiseModel{o.confusion, o.shots, o.residual_sigma, o.seed});
    const auto raw = sample_pairs(o.circuit, o.count, backend, o.seed);
    const NoisyBackend calib_backend(
        NoiseModel{o.confusion, o.calibration_shots, o.residual_sigma, derive_seed(o.seed, {tag(Stream::Calibration)})});
    const auto c = calibrate(calib_backend, o.calibration_shots, o.circuit.layers);
    const auto mit = mitigate_pairs(raw, c);

    CsvWriter pairs{"theoretical", "observed", "mitigated"};
    for (std::size_t i = 0; i < raw.size(); ++i) {
        pairs.cell(raw[i].theoretical).cell(raw[i].observed).cell(mit[i].observed).end_row();
    }
    const auto before = residual_analysis(raw);
    const auto after = residual_analysis(mit);
    CsvWriter fit{"stage", "slope", "intercept", "residual_mean", "residual_std", "gauss_mu",
                  "gauss_sigma"};
    for (const auto &[stage, r] : {std::pair{"unmitigated", &before}, std::pair{"mitigated", &after}}) {
        fit.cell(stage)
            .cell(r->slope)
            .cell(r->intercept)
            .cell(r->residual_mean)
            .cell(r->residual_std)
            .cell(r->gauss_mu)
            .cell(r->gauss_sigma)
            .end_row();
    }
    CsvWriter cal{"true_state", "p_read_0", "p_read_1"};
    for (int s = 0; s < 2; ++s) {
        cal.cell(s).cell(c[s][0]).cell(c[s][1]).end_row();
    }
    return {{"residual_pairs.csv", pairs.str()},
            {"residual_fit.csv", fit.str()},
            {"residual_histogram.csv", to_csv(before.histogram)},
            {"residual_histogram_mitigated.csv", to_csv(after.histogram)},
            {"calibration.csv", cal.str()}};
}

struct NoiseScalingOptions {
    CircuitSpec circuit{};
    ParameterVector theta{kReferenceTheta.begin(), kReferenceTheta.end()};
    Dataset data;
    std::vector<unsigned> shots{parse_shot_list("60..1000")};
    double residual_sigma{0.0};
    std::size_t repeats{20};
    std::uint64_t seed{0};
    unsigned fit_max_shots{750};
};

inline Reports analyze_noise_scaling(const NoiseScalingOptions &o) {
    const auto r = noise_scaling(o.circuit, o.theta, o.data.points, o.shots, o.residual_sigma,
                                 o.repeats, o.seed, o.fit_max_shots);
    return {{"noise_scaling.csv", r.to_csv()}};
}

struct GradientNoiseOptions {
    CircuitSpec circuit{};
    ParameterVector theta{kReferenceTheta.begin(), kReferenceTheta.end()};
    Dataset data;
    BackendConfig backend{BackendConfig::Kind::Noisy, kMeasuredConfusion, kDefaultShots, 0.0, {}};
    std::vector<double> steps{0.01, 0.1, 0.5};
    std::vector<CostKind> costs{CostKind::Accuracy, CostKind::CrossEntropy, CostKind::ChiSquared};
    std::size_t repeats{10};
    std::uint64_t seed{0};
    unsigned jobs{1};
};

inline Reports analyze_gradient_noise(const GradientNoiseOptions &o) {
    const NoisyBackend backend(
        NoiseModel{o.backend.confusion, o.backend.shots, o.backend.residual_sigma, o.backend.seed.value_or(o.seed)});
    const auto r = gradient_noise_report(o.circuit, o.theta, o.data.points, backend, o.steps,
                                         o.costs, o.repeats, o.seed, o.jobs);
    return {{"gradient_noise.csv", r.to_csv()}};
}

struct LandscapeOptions {
    CircuitSpec circuit{};
    ParameterVector theta{kReferenceTheta.begin(), kReferenceTheta.end()};
    Dataset data;
    Grid2D grid{};
    LocalSearchSpec search{};
    std::uint64_t seed{0};
    unsigned jobs{1};
};

inline Reports analyze_landscape(const LandscapeOptions &o) {
    const auto s = landscape_scan(o.circuit, o.data.points, o.theta, o.grid, o.search, o.seed, o.jobs);
    return {{"landscape.csv", s.to_csv()}};
}

struct AnsatzSpreadOptions {
    std::size_t layers{4};
    std::size_t sets{20};
    Dataset data;
    Interval init_range{};
    std::uint64_t seed{0};
};

inline Reports analyze_ansatz_spread(const AnsatzSpreadOptions &o) {
    const auto rows = ansatz_spread(o.layers, o.sets, o.data.points, o.init_range, o.seed);
    return {{"ansatz_spread.csv", to_csv(rows)}};
}

struct TimeBudgetOptions {
    std::size_t population{50};
    std::size_t points{250};
    unsigned shots{kDefaultShots};
    TimeBudget budget{};
};

/// Modelled processor time for one generation, split by stage.
inline Reports analyze_time_budget(const TimeBudgetOptions &o) {
    o.budget.validate();
    const double estimates = static_cast<double>(o.population) * static_cast<double>(o.points);
    const double shots = estimates * static_cast<double>(o.shots);
    CsvWriter w{"stage", "per", "unit_seconds", "count", "seconds", "minutes"};
    auto row = [&](std::string_view stage, std::string_view per, double unit, double count) {
        w.cell(stage).cell(per).cell(unit).cell(count).cell(unit * count).cell(unit * count / 60.0).end_row();
    };
    const auto &b = o.budget;
    row("usb_load", "estimate", b.usb_load, estimates);
    row("dds_load", "estimate", b.dds_load, estimates);
    row("fpga_receive", "estimate", b.fpga_receive, estimates);
    row("cooling", "shot", b.cooling, shots);
    row("preparation", "shot", b.preparation, shots);
    row("gate", "shot", b.gate, shots);
    row("detection", "shot", b.detection, shots);
    const double total = estimate_time(
        {static_cast<std::uint64_t>(estimates), static_cast<std::uint64_t>(shots)}, b);
    w.cell("total").cell("generation").cell(total).cell(1.0).cell(total).cell(total / 60.0).end_row();
    return {{"time_budget.csv", w.str()}};
}

} // namespace reup
