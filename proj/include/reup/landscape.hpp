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
 * @file landscape.hpp
 * Accuracy landscape over two parameters, and gate-angle spread per ansatz.
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reup/circuit.hpp"
#include "reup/cost.hpp"
#include "reup/csv.hpp"
#include "reup/dataset.hpp"
#include "reup/ga.hpp"
#include "reup/parallel.hpp"
#include "reup/rng.hpp"

namespace reup {

/// Inclusive, evenly spaced axis.
struct Axis {
    double lo{-std::numbers::pi};
    double hi{std::numbers::pi};
    std::size_t count{21};

    [[nodiscard]] std::vector<double> values() const {
        if (count == 0) {
            throw std::invalid_argument("grid axis needs at least one point");
        }
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i) {
            v[i] = count == 1 ? lo
                              : lo + (hi - lo) * static_cast<double>(i) /
                                         static_cast<double>(count - 1);
        }
        return v;
    }
};

struct Grid2D {
    Axis theta0{};
    Axis theta1{};
};

/// Random search around each grid cell over the remaining coordinates.
struct LocalSearchSpec {
    std::size_t budget{20}; ///< extra candidates per cell; 0 = plain accuracy
    double radius{0.5};     ///< half-width of the uniform box around theta0
};

struct LandscapeSurface {
    std::vector<double> axis0;
    std::vector<double> axis1;
    std::vector<double> values; ///< row-major, axis0 index outer

    [[nodiscard]] double at(std::size_t i, std::size_t j) const {
        return values.at(i * axis1.size() + j);
    }

    [[nodiscard]] double min() const { return *std::min_element(values.begin(), values.end()); }
    [[nodiscard]] double max() const { return *std::max_element(values.begin(), values.end()); }

    [[nodiscard]] std::string to_csv() const {
        CsvWriter w{"theta0", "theta1", "accuracy"};
        for (std::size_t i = 0; i < axis0.size(); ++i) {
            for (std::size_t j = 0; j < axis1.size(); ++j) {
                w.cell(axis0[i]).cell(axis1[j]).cell(at(i, j)).end_row();
            }
        }
        return w.str();
    }
};

/**
 * For each (theta_0, theta_1) cell, the best exact accuracy found among the
 * cell point itself and `search.budget` random neighbours whose remaining
 * coordinates lie within `search.radius` of theta0's.
 */
inline LandscapeSurface landscape_scan(const CircuitSpec &spec, std::span<const DataPoint> points,
                                       std::span<const double> theta0, const Grid2D &grid,
                                       const LocalSearchSpec &search, std::uint64_t seed,
                                       unsigned jobs = 1) {
    spec.check_parameters(theta0);
    if (theta0.size() < 2) {
        throw std::invalid_argument("landscape scan needs at least two parameters");
    }
    if (points.empty()) {
        throw std::invalid_argument("landscape scan over an empty dataset");
    }
    if (!(search.radius >= 0.0)) {
        throw std::invalid_argument("search radius must be nonnegative");
    }
    LandscapeSurface s;
    s.axis0 = grid.theta0.values();
    s.axis1 = grid.theta1.values();
    const std::size_t n1 = s.axis1.size();
    s.values.assign(s.axis0.size() * n1, 0.0);

    parallel_for(s.values.size(), jobs, [&](std::size_t cell) {
        const std::size_t i = cell / n1;
        const std::size_t j = cell % n1;
        ParameterVector base(theta0.begin(), theta0.end());
        base[0] = s.axis0[i];
        base[1] = s.axis1[j];
        double best = exact_accuracy(spec, base, points);
        auto rng = make_engine(seed, {tag(Stream::Landscape), i, j});
        ParameterVector cand = base;
        for (std::size_t k = 0; k < search.budget; ++k) {
            for (std::size_t d = 2; d < cand.size(); ++d) {
                cand[d] = base[d] + uniform(rng, -search.radius, search.radius);
            }
            best = std::max(best, exact_accuracy(spec, cand, points));
        }
        s.values[cell] = best;
    });
    return s;
}

struct AngleSpreadRow {
    Ansatz ansatz{Ansatz::C2};
    std::size_t set{0};
    std::size_t point{0};
    double phi_y_sum{0.0};
    double phi_z_sum{0.0};
};

/// Summed R_y and R_z angles over all layers, for `sets` random parameter
/// vectors per ansatz and every data point.
inline std::vector<AngleSpreadRow> ansatz_spread(std::size_t layers, std::size_t sets,
                                                 std::span<const DataPoint> points,
                                                 Interval init_range, std::uint64_t seed) {
    std::vector<AngleSpreadRow> rows;
    rows.reserve(kAllAnsatze.size() * sets * points.size());
    for (const auto a : kAllAnsatze) {
        const CircuitSpec spec{a, layers};
        spec.validate();
        for (std::size_t s = 0; s < sets; ++s) {
            auto rng = make_engine(seed, {tag(Stream::Analysis), static_cast<std::uint64_t>(a), s});
            ParameterVector theta(spec.parameter_count());
            for (auto &t : theta) {
                t = uniform(rng, init_range.lo, init_range.hi);
            }
            for (std::size_t p = 0; p < points.size(); ++p) {
                AngleSpreadRow r{a, s, p, 0.0, 0.0};
                for (const auto &g : gate_angles(spec, theta, points[p].x)) {
                    r.phi_y_sum += g.phi_y;
                    r.phi_z_sum += g.phi_z;
                }
                rows.push_back(r);
            }
        }
    }
    return rows;
}

inline std::string to_csv(std::span<const AngleSpreadRow> rows) {
    CsvWriter w{"ansatz", "set", "point", "phi_y_sum", "phi_z_sum"};
    for (const auto &r : rows) {
        w.cell(to_string(r.ansatz)).cell(r.set).cell(r.point).cell(r.phi_y_sum).cell(r.phi_z_sum).end_row();
    }
    return w.str();
}

} // namespace reup
