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
 * @file backend.hpp
 * Measurement backends standing in for the quantum processor.
 *
 * A backend turns a list of gate angles and a label into one estimate of
 * M(theta, x, y), i.e. one projection measurement built from many shots.
 * Every call is keyed by a caller-supplied 64-bit stream key so that noisy
 * results depend only on (noise seed, key) and never on thread scheduling.
 */
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reup/circuit.hpp"
#include "reup/rng.hpp"

namespace reup {

/// Raised when a backend cannot produce an estimate.
class BackendError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Row i = prepared state |i>, column j = observed outcome j.
using ConfusionMatrix = std::array<std::array<double, 2>, 2>;

inline constexpr ConfusionMatrix kIdentityConfusion{{{1.0, 0.0}, {0.0, 1.0}}};

/// Readout matrix measured on the ion-trap processor after dummy gates.
inline constexpr ConfusionMatrix kMeasuredConfusion{{{0.76, 0.24}, {0.16, 0.84}}};

inline constexpr unsigned kDefaultShots = 150;

inline void check_row_stochastic(const ConfusionMatrix &m) {
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            if (!(m[i][j] >= 0.0 && m[i][j] <= 1.0)) {
                throw std::invalid_argument("confusion entries must lie in [0, 1]");
            }
        }
        if (std::abs(m[i][0] + m[i][1] - 1.0) > 1e-12) {
            throw std::invalid_argument("confusion row " + std::to_string(i) +
                                        " does not sum to 1");
        }
    }
}

/// Observed outcome distribution for true probabilities p: o = C^T p.
inline Probabilities apply_confusion(const ConfusionMatrix &c, Probabilities p) noexcept {
    return {p.p0 * c[0][0] + p.p1 * c[1][0], p.p0 * c[0][1] + p.p1 * c[1][1]};
}

struct NoiseModel {
    ConfusionMatrix confusion{kIdentityConfusion};
    unsigned shots{kDefaultShots};
    double residual_sigma{0.0};
    std::uint64_t seed{0};

    void validate() const {
        check_row_stochastic(confusion);
        if (shots < 1) {
            throw std::invalid_argument("shots must be at least 1");
        }
        if (!(residual_sigma >= 0.0)) {
            throw std::invalid_argument("residual_sigma must be nonnegative");
        }
    }
};

struct LedgerCounts {
    std::uint64_t estimates{0};
    std::uint64_t shots{0};

    friend LedgerCounts operator-(LedgerCounts a, LedgerCounts b) noexcept {
        return {a.estimates - b.estimates, a.shots - b.shots};
    }
    friend bool operator==(const LedgerCounts &, const LedgerCounts &) = default;
};

/// Thread-safe count of projection measurements and shots spent.
class MeasurementLedger {
  public:
    void record(std::uint64_t estimates, std::uint64_t shots) noexcept {
        estimates_.fetch_add(estimates, std::memory_order_relaxed);
        shots_.fetch_add(shots, std::memory_order_relaxed);
    }

    [[nodiscard]] LedgerCounts counts() const noexcept {
        return {estimates_.load(std::memory_order_relaxed), shots_.load(std::memory_order_relaxed)};
    }

    void reset() noexcept {
        estimates_.store(0);
        shots_.store(0);
    }

  private:
    std::atomic<std::uint64_t> estimates_{0};
    std::atomic<std::uint64_t> shots_{0};
};

class Backend {
  public:
    Backend() = default;
    Backend(const Backend &) = delete;
    Backend &operator=(const Backend &) = delete;
    virtual ~Backend() = default;

    /// Shots spent per estimate.
    [[nodiscard]] virtual unsigned shots() const noexcept = 0;

    /// True when estimates equal the exact probabilities.
    [[nodiscard]] virtual bool is_exact() const noexcept = 0;

    /// One estimate of the label probability for an explicit gate-angle list.
    double estimate(std::span<const GateAngles> angles, int label, std::uint64_t key) const {
        return estimate_with_shots(angles, label, key, shots());
    }

    double estimate_with_shots(std::span<const GateAngles> angles, int label, std::uint64_t key,
                               unsigned shot_count) const {
        check_label(label);
        if (shot_count < 1) {
            throw BackendError("an estimate needs at least one shot");
        }
        const double v = sample(evaluate_angles(angles), label, key, shot_count);
        ledger_.record(1, shot_count);
        return v;
    }

    double estimate(const CircuitSpec &spec, std::span<const double> theta, Point2 x, int label,
                    std::uint64_t key) const {
        const auto angles = gate_angles(spec, theta, x);
        return estimate(angles, label, key);
    }

    [[nodiscard]] MeasurementLedger &ledger() const noexcept { return ledger_; }

  protected:
    virtual double sample(Probabilities exact, int label, std::uint64_t key,
                          unsigned shot_count) const = 0;

  private:
    mutable MeasurementLedger ledger_;
};

/// Returns exact probabilities; still charges the nominal shot count.
class IdealBackend final : public Backend {
  public:
    explicit IdealBackend(unsigned nominal_shots = kDefaultShots) : shots_(nominal_shots) {
        if (shots_ < 1) {
            throw std::invalid_argument("nominal shots must be at least 1");
        }
    }

    [[nodiscard]] unsigned shots() const noexcept override { return shots_; }
    [[nodiscard]] bool is_exact() const noexcept override { return true; }

  protected:
    double sample(Probabilities exact, int label, std::uint64_t, unsigned) const override {
        return exact[label];
    }

  private:
    unsigned shots_;
};

/**
 * Readout confusion, binomial shot noise and an additive residual floor.
 *
 * The confusion matrix acts on the exact distribution before sampling, which
 * is the same as misassigning each shot independently. The residual term is
 * Gaussian and does not shrink with the shot count.
 */
class NoisyBackend final : public Backend {
  public:
    explicit NoisyBackend(NoiseModel model) : model_(model) { model_.validate(); }

    [[nodiscard]] unsigned shots() const noexcept override { return model_.shots; }
    [[nodiscard]] bool is_exact() const noexcept override { return false; }
    [[nodiscard]] const NoiseModel &model() const noexcept { return model_; }

    /// Expected value of an estimate for label y, before the residual floor.
    [[nodiscard]] double expected(Probabilities exact, int label) const noexcept {
        return apply_confusion(model_.confusion, exact)[label];
    }

    /// Sequential use: the stream key is the ledger's running estimate count.
    double next_estimate(const CircuitSpec &spec, std::span<const double> theta, Point2 x,
                         int label) const {
        return estimate(spec, theta, x, label, ledger().counts().estimates);
    }

  protected:
    double sample(Probabilities exact, int label, std::uint64_t key,
                  unsigned shot_count) const override {
        const double o = std::clamp(expected(exact, label), 0.0, 1.0);
        auto rng = make_engine(model_.seed, {key});
        std::binomial_distribution<std::uint64_t> binom(shot_count, o);
        double v = static_cast<double>(binom(rng)) / static_cast<double>(shot_count);
        if (model_.residual_sigma > 0.0) {
            std::normal_distribution<double> gauss(0.0, model_.residual_sigma);
            v += gauss(rng);
        }
        return std::clamp(v, 0.0, 1.0);
    }

  private:
    NoiseModel model_;
};

/// Sequential noisy estimate of M(theta, x, y).
inline double noisy_estimate(const CircuitSpec &spec, std::span<const double> theta, Point2 x,
                             int y, const NoisyBackend &backend) {
    return backend.next_estimate(spec, theta, x, y);
}

/// Exact estimate of M(theta, x, y); charges the ledger like any estimate.
inline double ideal_estimate(const CircuitSpec &spec, std::span<const double> theta, Point2 x,
                             int y, const IdealBackend &backend) {
    return backend.estimate(spec, theta, x, y, backend.ledger().counts().estimates);
}

// ---------------------------------------------------------------------------
// Threshold photon-count detection
// ---------------------------------------------------------------------------

struct PoissonDetectionSpec {
    double dark_mean{2.0};
    double bright_mean{25.0};
    unsigned threshold{11};
    /// Counts above threshold are read as |1> (bright = |1>) when true.
    bool bright_is_one{true};
};

struct DetectionResult {
    std::vector<std::uint64_t> histogram; ///< histogram[c] = shots with c photons
    double p1_hat{0.0};
    std::optional<std::string> warning;
};

inline double poisson_cdf(unsigned k, double mean) {
    // sum_{i<=k} e^-m m^i / i!
    double term = std::exp(-mean);
    double sum = term;
    for (unsigned i = 1; i <= k; ++i) {
        term *= mean / static_cast<double>(i);
        sum += term;
    }
    return std::min(sum, 1.0);
}

struct DiscriminationError {
    double dark_read_as_bright{0.0};
    double bright_read_as_dark{0.0};
    [[nodiscard]] double mean() const noexcept {
        return 0.5 * (dark_read_as_bright + bright_read_as_dark);
    }
};

inline DiscriminationError discrimination_error(const PoissonDetectionSpec &spec) {
    return {1.0 - poisson_cdf(spec.threshold, spec.dark_mean),
            poisson_cdf(spec.threshold, spec.bright_mean)};
}

/// Expected inferred p1 once threshold misassignment is included.
inline double expected_detected_p1(double p1, const PoissonDetectionSpec &spec) {
    const auto err = discrimination_error(spec);
    // probability that a shot from each true state ends up read as |1>
    const double one_from_one =
        spec.bright_is_one ? 1.0 - err.bright_read_as_dark : err.dark_read_as_bright;
    const double one_from_zero =
        spec.bright_is_one ? err.dark_read_as_bright : 1.0 - err.bright_read_as_dark;
    return p1 * one_from_one + (1.0 - p1) * one_from_zero;
}

inline DetectionResult detection_histogram(double p1, unsigned shots,
                                           const PoissonDetectionSpec &spec, std::uint64_t seed) {
    if (!(p1 >= 0.0 && p1 <= 1.0)) {
        throw std::invalid_argument("p1 must be a probability");
    }
    DetectionResult out;
    if (spec.bright_mean <= static_cast<double>(spec.threshold)) {
        out.warning = "bright_mean " + std::to_string(spec.bright_mean) +
                      " does not exceed threshold " + std::to_string(spec.threshold) +
                      "; bright and dark shots will be confused";
    }
    auto rng = make_engine(seed, {tag(Stream::Detection)});
    std::poisson_distribution<unsigned> dark(spec.dark_mean);
    std::poisson_distribution<unsigned> bright(spec.bright_mean);
    std::uint64_t read_one = 0;
    for (unsigned s = 0; s < shots; ++s) {
        const bool is_one = bernoulli(rng, p1);
        const bool is_bright = is_one == spec.bright_is_one;
        const unsigned c = is_bright ? bright(rng) : dark(rng);
        if (c >= out.histogram.size()) {
            out.histogram.resize(c + 1, 0);
        }
        ++out.histogram[c];
        const bool above = c > spec.threshold;
        if (above == spec.bright_is_one) {
            ++read_one;
        }
    }
    out.p1_hat = shots == 0 ? 0.0 : static_cast<double>(read_one) / static_cast<double>(shots);
    return out;
}

// ---------------------------------------------------------------------------
// Time budget
// ---------------------------------------------------------------------------

/**
 * Per-step durations in seconds. Communication steps are paid once per
 * estimate (one upload of gate parameters per data point); the rest once
 * per shot. Defaults are a calibration that reproduces roughly 330 minutes
 * for one generation of 50 individuals x 250 points x 150 shots.
 */
struct TimeBudget {
    double usb_load{0.62};
    double dds_load{0.31};
    double fpga_receive{0.17};
    double cooling{1.0e-3};
    double preparation{0.2e-3};
    double gate{0.05e-3};
    double detection{2.0e-3};

    [[nodiscard]] double per_estimate() const noexcept { return usb_load + dds_load + fpga_receive; }
    [[nodiscard]] double per_shot() const noexcept {
        return cooling + preparation + gate + detection;
    }

    void validate() const {
        for (const double d :
             {usb_load, dds_load, fpga_receive, cooling, preparation, gate, detection}) {
            if (!(d >= 0.0)) {
                throw std::invalid_argument("time budget durations must be nonnegative");
            }
        }
    }
};

/// Seconds for the measurements in `counts`. When shots_per_estimate is given
/// it replaces the ledger's shot total.
inline double estimate_time(LedgerCounts counts, const TimeBudget &budget,
                            std::optional<unsigned> shots_per_estimate = std::nullopt) {
    const double estimates = static_cast<double>(counts.estimates);
    const double shots = shots_per_estimate
                             ? estimates * static_cast<double>(*shots_per_estimate)
                             : static_cast<double>(counts.shots);
    return estimates * budget.per_estimate() + shots * budget.per_shot();
}

} // namespace reup
