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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "reup/backend.hpp"
#include "reup/circuit.hpp"
#include "reup/csv.hpp"

namespace reup {

/// One row per generation (GA) or iteration (gradient methods).
struct TraceRecord {
    std::size_t iter{0};
    double best_accuracy{0.0};
    double best_loss{0.0};
    double diversity{std::numeric_limits<double>::quiet_NaN()}; ///< NaN outside the GA
    std::uint64_t cum_estimates{0};
    std::uint64_t cum_shots{0};
    /// Modelled processor time for the measurements so far, from TimeBudget.
    double wall_ms{0.0};
};

inline constexpr std::string_view kTraceHeader =
    "iter,best_accuracy,best_loss,diversity,cum_estimates,cum_shots,wall_ms";

struct TrainingTrace {
    std::vector<TraceRecord> records;

    [[nodiscard]] std::string to_csv() const {
        CsvWriter w{"iter", "best_accuracy", "best_loss", "diversity", "cum_estimates", "cum_shots",
                    "wall_ms"};
        for (const auto &r : records) {
            w.cell(r.iter)
                .cell(r.best_accuracy)
                .cell(r.best_loss)
                .cell(r.diversity)
                .cell(r.cum_estimates)
                .cell(r.cum_shots)
                .cell(r.wall_ms)
                .end_row();
        }
        return w.str();
    }

    /// Highest best_accuracy seen up to and including record `upto`.
    [[nodiscard]] double cumulative_best_accuracy(std::size_t upto) const {
        double best = 0.0;
        for (std::size_t i = 0; i < records.size() && i <= upto; ++i) {
            best = std::max(best, records[i].best_accuracy);
        }
        return best;
    }

    /// Cumulative best accuracy among records whose estimate count is within `budget`.
    [[nodiscard]] double best_accuracy_within(std::uint64_t budget) const {
        double best = 0.0;
        for (const auto &r : records) {
            if (r.cum_estimates <= budget) {
                best = std::max(best, r.best_accuracy);
            }
        }
        return best;
    }

    /// Estimates spent when cumulative best accuracy first reached `level`.
    [[nodiscard]] std::uint64_t estimates_to_reach(double level) const {
        for (const auto &r : records) {
            if (r.best_accuracy >= level) {
                return r.cum_estimates;
            }
        }
        return std::numeric_limits<std::uint64_t>::max();
    }
};

struct TrainResult {
    ParameterVector best_theta;
    double best_accuracy{0.0};
    double best_loss{0.0};
    TrainingTrace trace;
};

/// Builds trace rows relative to the ledger state at construction.
class TraceRecorder {
  public:
    TraceRecorder(const Backend &backend, TimeBudget budget)
        : backend_(backend), budget_(budget), start_(backend.ledger().counts()) {}

    [[nodiscard]] LedgerCounts spent() const { return backend_.ledger().counts() - start_; }

    void record(TrainingTrace &trace, std::size_t iter, double accuracy, double loss,
                double diversity = std::numeric_limits<double>::quiet_NaN()) const {
        const auto used = spent();
        trace.records.push_back(
            {iter, accuracy, loss, diversity, used.estimates, used.shots,
             1000.0 * estimate_time(used, budget_)});
    }

  private:
    const Backend &backend_;
    TimeBudget budget_;
    LedgerCounts start_;
};

} // namespace reup
