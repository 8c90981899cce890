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
 * @file mitigation.hpp
 * Readout calibration and inversion, plus the statistical analyses of
 * estimator noise: residual regression, shot-count scaling, and finite
 * difference gradients compared against their noise.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reup/backend.hpp"
#include "reup/circuit.hpp"
#include "reup/cost.hpp"
#include "reup/csv.hpp"
#include "reup/dataset.hpp"
#include "reup/ga.hpp"
#include "reup/gradient.hpp"
#include "reup/rng.hpp"

namespace reup {

using CalibrationMatrix = ConfusionMatrix;

class MitigationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kSingularThreshold = 1e-9;

inline double determinant(const CalibrationMatrix &c) noexcept {
    return c[0][0] * c[1][1] - c[0][1] * c[1][0];
}

/**
 * Estimate the readout matrix from dummy circuits of `layers` layers that
 * prepare |0> (all angles 0) and |1> (a leading R_y(pi)).
 */
inline CalibrationMatrix calibrate(const Backend &backend, unsigned shots, std::size_t layers = 4,
                                   std::uint64_t key = 0) {
    if (layers < 1) {
        throw std::invalid_argument("calibration circuits need at least one layer");
    }
    std::vector<GateAngles> zero(layers);
    std::vector<GateAngles> one(layers);
    one[0].phi_y = std::numbers::pi;
    const double v0 = backend.estimate_with_shots(
        zero, 1, derive_seed(key, {tag(Stream::Calibration), 0}), shots);
    const double v1 = backend.estimate_with_shots(
        one, 1, derive_seed(key, {tag(Stream::Calibration), 1}), shots);
    CalibrationMatrix c{{{1.0 - v0, v0}, {1.0 - v1, v1}}};
    if (std::abs(determinant(c)) < kSingularThreshold) {
        throw MitigationError("calibration matrix is singular at " + std::to_string(shots) +
                              " shots; use more shots");
    }
    return c;
}

/// Solves C^T p = observed without clipping.
inline Probabilities mitigate_unclipped(Probabilities observed, const CalibrationMatrix &c) {
    const double det = determinant(c);
    if (std::abs(det) < kSingularThreshold) {
        throw MitigationError("calibration matrix is singular");
    }
    // C^T = [[c00, c10], [c01, c11]]
    return {(c[1][1] * observed.p0 - c[1][0] * observed.p1) / det,
            (-c[0][1] * observed.p0 + c[0][0] * observed.p1) / det};
}

/// Inverted probabilities clipped to [0, 1] and renormalized.
inline Probabilities mitigate(Probabilities observed, const CalibrationMatrix &c) {
    const auto raw = mitigate_unclipped(observed, c);
    const double p0 = std::clamp(raw.p0, 0.0, 1.0);
    const double p1 = std::clamp(raw.p1, 0.0, 1.0);
    const double sum = p0 + p1;
    if (!(sum > 0.0)) {
        return {0.5, 0.5};
    }
    return {p0 / sum, p1 / sum};
}

/// Mitigated probability of `label` from a single observed label estimate.
inline double mitigate_estimate(double observed, int label, const CalibrationMatrix &c) {
    check_label(label);
    const Probabilities o = label == 1 ? Probabilities{1.0 - observed, observed}
                                       : Probabilities{observed, 1.0 - observed};
    return mitigate(o, c)[label];
}

struct ProbabilityPair {
    double theoretical{0.0};
    double observed{0.0};
};

/// `count` random circuits (parameters in `range`, inputs in `domain`) measured for label 1.
inline std::vector<ProbabilityPair> sample_pairs(const CircuitSpec &spec, std::size_t count,
                                                 const Backend &backend, std::uint64_t seed,
                                                 Interval range = {}, Box domain = {}) {
    spec.validate();
    std::vector<ProbabilityPair> pairs(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto rng = make_engine(seed, {tag(Stream::Analysis), i});
        ParameterVector theta(spec.parameter_count());
        for (auto &t : theta) {
            t = uniform(rng, range.lo, range.hi);
        }
        const Point2 x{uniform(rng, domain.x0_min, domain.x0_max),
                       uniform(rng, domain.x1_min, domain.x1_max)};
        const auto angles = gate_angles(spec, theta, x);
        pairs[i].theoretical = evaluate_angles(angles).p1;
        pairs[i].observed = backend.estimate(angles, 1, derive_seed(seed, {tag(Stream::Detection), i}));
    }
    return pairs;
}

inline std::vector<ProbabilityPair> mitigate_pairs(std::span<const ProbabilityPair> pairs,
                                                   const CalibrationMatrix &c) {
    std::vector<ProbabilityPair> out(pairs.begin(), pairs.end());
    for (auto &p : out) {
        p.observed = mitigate_estimate(p.observed, 1, c);
    }
    return out;
}

struct HistogramBin {
    double left{0.0};
    double right{0.0};
    double density{0.0};
};

/// Freedman-Diaconis binning; a single bin when the spread is zero.
inline std::vector<HistogramBin> histogram_fd(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("histogram of no values");
    }
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    auto quantile = [&](double q) {
        const double pos = q * (n - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    const double range = v.back() - v.front();
    const double width = 2.0 * (quantile(0.75) - quantile(0.25)) / std::cbrt(n);
    std::size_t bins = 1;
    if (range > 0.0 && width > 0.0) {
        bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(range / width)), 1, 1000);
    }
    const double w = range > 0.0 ? range / static_cast<double>(bins) : 1.0;
    std::vector<HistogramBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].left = v.front() + w * static_cast<double>(b);
        out[b].right = out[b].left + w;
    }
    for (const double x : v) {
        auto b = range > 0.0 ? static_cast<std::size_t>((x - v.front()) / w) : 0;
        out[std::min(b, bins - 1)].density += 1.0;
    }
    for (auto &b : out) {
        b.density /= n * w;
    }
    return out;
}

inline std::string to_csv(std::span<const HistogramBin> bins) {
    CsvWriter w{"bin_left", "bin_right", "density"};
    for (const auto &b : bins) {
        w.cell(b.left).cell(b.right).cell(b.density).end_row();
    }
    return w.str();
}

struct ResidualReport {
    double slope{0.0};
    double intercept{0.0};
    double residual_mean{0.0}; ///< residual = observed - theoretical
    double residual_std{0.0};  ///< sample standard deviation
    double gauss_mu{0.0};      ///< maximum-likelihood normal fit
    double gauss_sigma{0.0};
    std::vector<HistogramBin> histogram;
};

/// Least-squares line observed = intercept + slope * theoretical, and residual statistics.
inline ResidualReport residual_analysis(std::span<const ProbabilityPair> pairs) {
    if (pairs.size() < 3) {
        throw std::invalid_argument("residual analysis needs at least 3 pairs");
    }
    const double n = static_cast<double>(pairs.size());
    double mx = 0.0;
    double my = 0.0;
    for (const auto &p : pairs) {
        mx += p.theoretical;
        my += p.observed;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto &p : pairs) {
        sxx += (p.theoretical - mx) * (p.theoretical - mx);
        sxy += (p.theoretical - mx) * (p.observed - my);
    }
    if (!(sxx > 0.0)) {
        throw std::invalid_argument("theoretical values have zero variance");
    }
    ResidualReport r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;

    std::vector<double> res(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        res[i] = pairs[i].observed - pairs[i].theoretical;
        r.residual_mean += res[i];
    }
    r.residual_mean /= n;
    double ss = 0.0;
    for (const double e : res) {
        ss += (e - r.residual_mean) * (e - r.residual_mean);
    }
    r.residual_std = std::sqrt(ss / (n - 1.0));
    r.gauss_mu = r.residual_mean;
    r.gauss_sigma = std::sqrt(ss / n);
    r.histogram = histogram_fd(res);
    return r;
}

/// Standard deviation of a k/N estimate of probability p.
inline double binomial_std(double p, unsigned shots) {
    if (shots < 1) {
        throw std::invalid_argument("shots must be at least 1");
    }
    return std::sqrt(p * (1.0 - p) / static_cast<double>(shots));
}

struct NoiseScalingRow {
    unsigned shots{0};
    double std{0.0};          ///< sample std of (estimate - exact)
    double binomial_std{0.0}; ///< expected std from sampling alone
    /// sqrt(max(0, std^2 - binomial_std^2)): the part that does not shrink with shots
    double excess_std{0.0};
};

struct NoiseScalingReport {
    std::vector<NoiseScalingRow> rows;
    double exponent{0.0};  ///< b in std = a N^b
    double prefactor{0.0}; ///< a
    double floor{0.0};     ///< f in std^2 = c / N + f^2
    double floor_c{0.0};   ///< c

    [[nodiscard]] std::string to_csv() const {
        CsvWriter w{"shots", "std", "binomial_std", "excess_std", "fit_exponent", "fit_prefactor",
                    "fit_floor"};
        for (const auto &r : rows) {
            w.cell(r.shots)
                .cell(r.std)
                .cell(r.binomial_std)
                .cell(r.excess_std)
                .cell(exponent)
                .cell(prefactor)
                .cell(floor)
                .end_row();
        }
        return w.str();
    }
};

namespace detail {

struct LineFit {
    double slope{0.0};
    double intercept{0.0};
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw std::invalid_argument("fit needs at least two distinct x values");
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

} // namespace detail

/**
 * Residual std of label-1 estimates against exact probabilities at each shot
 * count, over every point and `repeats` repetitions, measured on a backend
 * with identity readout and the given residual floor.
 *
 * The power law is fitted in log-log space on rows with N <= fit_max_shots;
 * the floor is fitted on all rows as std^2 = c/N + f^2.
 */
inline NoiseScalingReport noise_scaling(const CircuitSpec &spec, std::span<const double> theta,
                                        std::span<const DataPoint> points,
                                        std::span<const unsigned> shot_counts,
                                        double residual_sigma, std::size_t repeats,
                                        std::uint64_t seed, unsigned fit_max_shots = 750) {
    spec.check_parameters(theta);
    if (points.empty() || repeats < 1) {
        throw std::invalid_argument("noise scaling needs points and at least one repeat");
    }
    {
        std::vector<unsigned> distinct(shot_counts.begin(), shot_counts.end());
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2) {
            throw std::invalid_argument("noise scaling needs at least two distinct shot counts");
        }
    }
    NoiseModel model;
    model.residual_sigma = residual_sigma;
    model.seed = seed;
    NoisyBackend backend(model);

    std::vector<std::vector<GateAngles>> angles(points.size());
    std::vector<double> exact(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        angles[i] = gate_angles(spec, theta, points[i].x);
        exact[i] = evaluate_angles(angles[i]).p1;
    }

    NoiseScalingReport report;
    for (const unsigned n : shot_counts) {
        double sum = 0.0;
        double sum2 = 0.0;
        double binom_var = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            binom_var += exact[i] * (1.0 - exact[i]) / static_cast<double>(n);
            for (std::size_t r = 0; r < repeats; ++r) {
                const double e =
                    backend.estimate_with_shots(angles[i], 1, derive_seed(seed, {n, i, r}), n) -
                    exact[i];
                sum += e;
                sum2 += e * e;
                ++count;
            }
        }
        const double c = static_cast<double>(count);
        const double mean = sum / c;
        const double var = (sum2 - c * mean * mean) / (c - 1.0);
        binom_var /= static_cast<double>(points.size());
        NoiseScalingRow row;
        row.shots = n;
        row.std = std::sqrt(std::max(var, 0.0));
        row.binomial_std = std::sqrt(binom_var);
        row.excess_std = std::sqrt(std::max(var - binom_var, 0.0));
        report.rows.push_back(row);
    }

    std::vector<double> lx;
    std::vector<double> ly;
    std::vector<double> inv_n;
    std::vector<double> var;
    for (const auto &r : report.rows) {
        if (r.shots <= fit_max_shots && r.std > 0.0) {
            lx.push_back(std::log(static_cast<double>(r.shots)));
            ly.push_back(std::log(r.std));
        }
        inv_n.push_back(1.0 / static_cast<double>(r.shots));
        var.push_back(r.std * r.std);
    }
    if (lx.size() >= 2) {
        const auto fit = detail::least_squares(lx, ly);
        report.exponent = fit.slope;
        report.prefactor = std::exp(fit.intercept);
    } else {
        report.exponent = std::numeric_limits<double>::quiet_NaN();
        report.prefactor = std::numeric_limits<double>::quiet_NaN();
    }
    const auto q = detail::least_squares(inv_n, var);
    report.floor_c = q.slope;
    report.floor = std::sqrt(std::max(q.intercept, 0.0));
    return report;
}

struct GradientNoiseRow {
    double step{0.0};
    CostKind cost{CostKind::CrossEntropy};
    std::size_t component{0};
    double theoretical{0.0};
    double noisy_mean{0.0};
    double noisy_std{0.0};
    double sign_agreement{0.0};
};

struct GradientNoiseReport {
    std::vector<GradientNoiseRow> rows;

    /// Mean sign agreement over components for one (step, cost).
    [[nodiscard]] double mean_sign_agreement(double step, CostKind cost) const {
        double s = 0.0;
        std::size_t n = 0;
        for (const auto &r : rows) {
            if (r.step == step && r.cost == cost) {
                s += r.sign_agreement;
                ++n;
            }
        }
        return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    }

    /// Largest |theoretical| component for one (step, cost).
    [[nodiscard]] double max_theoretical(double step, CostKind cost) const {
        double m = 0.0;
        for (const auto &r : rows) {
            if (r.step == step && r.cost == cost) {
                m = std::max(m, std::abs(r.theoretical));
            }
        }
        return m;
    }

    [[nodiscard]] std::string to_csv() const {
        CsvWriter w{"step", "cost", "component", "theoretical", "noisy_mean", "noisy_std",
                    "sign_agreement"};
        for (const auto &r : rows) {
            w.cell(r.step)
                .cell(to_string(r.cost))
                .cell(r.component)
                .cell(r.theoretical)
                .cell(r.noisy_mean)
                .cell(r.noisy_std)
                .cell(r.sign_agreement)
                .end_row();
        }
        return w.str();
    }
};

/**
 * Central finite-difference gradients of each cost, noiseless versus
 * `repeats` measurements through `backend`. A component's sign agreement is
 * the fraction of repeats whose sign matches the noiseless one (a zero
 * noiseless component agrees only with exact zeros).
 */
inline GradientNoiseReport gradient_noise_report(const CircuitSpec &spec,
                                                 std::span<const double> theta,
                                                 std::span<const DataPoint> points,
                                                 const Backend &backend,
                                                 std::span<const double> steps,
                                                 std::span<const CostKind> costs,
                                                 std::size_t repeats, std::uint64_t seed,
                                                 unsigned jobs = 1) {
    spec.check_parameters(theta);
    if (steps.empty() || costs.empty() || repeats < 1) {
        throw std::invalid_argument("gradient noise report needs steps, costs and repeats");
    }
    auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
    GradientNoiseReport report;
    for (std::size_t si = 0; si < steps.size(); ++si) {
        const double h = steps[si];
        for (const auto k : costs) {
            const auto exact = gradient_fd(
                [&](std::span<const double> x, std::uint64_t) { return exact_loss(k, spec, x, points); },
                theta, h);
            std::vector<std::vector<double>> noisy(repeats);
            for (std::size_t r = 0; r < repeats; ++r) {
                noisy[r] = gradient_fd(k, spec, theta, points, backend, h,
                                       derive_seed(seed, {si, static_cast<std::uint64_t>(k), r}),
                                       jobs);
            }
            for (std::size_t j = 0; j < theta.size(); ++j) {
                GradientNoiseRow row{h, k, j, exact[j], 0.0, 0.0, 0.0};
                for (std::size_t r = 0; r < repeats; ++r) {
                    row.noisy_mean += noisy[r][j];
                    row.sign_agreement += sign(noisy[r][j]) == sign(exact[j]) ? 1.0 : 0.0;
                }
                row.noisy_mean /= static_cast<double>(repeats);
                row.sign_agreement /= static_cast<double>(repeats);
                double ss = 0.0;
                for (std::size_t r = 0; r < repeats; ++r) {
                    ss += (noisy[r][j] - row.noisy_mean) * (noisy[r][j] - row.noisy_mean);
                }
                row.noisy_std = repeats > 1 ? std::sqrt(ss / static_cast<double>(repeats - 1)) : 0.0;
                report.rows.push_back(row);
            }
        }
    }
    return report;
}

} // namespace reup
