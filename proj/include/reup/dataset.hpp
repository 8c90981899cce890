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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "reup/circuit.hpp"
#include "reup/csv.hpp"
#include "reup/rng.hpp"

namespace reup {

struct DataPoint {
    Point2 x;
    int label{0};
    friend bool operator==(const DataPoint &, const DataPoint &) = default;
};

/// Axis-aligned sampling domain.
struct Box {
    double x0_min{-1.0};
    double x0_max{1.0};
    double x1_min{-1.0};
    double x1_max{1.0};

    [[nodiscard]] double area() const noexcept {
        return (x0_max - x0_min) * (x1_max - x1_min);
    }
    [[nodiscard]] bool contains(Point2 p) const noexcept {
        return p.x0 >= x0_min && p.x0 <= x0_max && p.x1 >= x1_min && p.x1 <= x1_max;
    }
    friend bool operator==(const Box &, const Box &) = default;
};

/// Radius giving equal expected class mass on the default [-1, 1]^2 domain.
inline const double kBalancedRadius = std::sqrt(2.0 / std::numbers::pi);

struct CircleSpec {
    Point2 center{0.0, 0.0};
    double radius{kBalancedRadius};
    Box domain{};

    /// 1 iff strictly inside the circle.
    [[nodiscard]] int classify(Point2 p) const noexcept {
        const double dx = p.x0 - center.x0;
        const double dy = p.x1 - center.x1;
        return dx * dx + dy * dy < radius * radius ? 1 : 0;
    }

    void validate() const {
        if (!(domain.x0_max > domain.x0_min) || !(domain.x1_max > domain.x1_min)) {
            throw std::invalid_argument("sampling domain has zero area");
        }
        if (!(radius > 0.0)) {
            throw std::invalid_argument("circle radius must be positive");
        }
        if (center.x0 - radius < domain.x0_min || center.x0 + radius > domain.x0_max ||
            center.x1 - radius < domain.x1_min || center.x1 + radius > domain.x1_max) {
            throw std::invalid_argument("circle does not fit inside the sampling domain");
        }
    }

    friend bool operator==(const CircleSpec &, const CircleSpec &) = default;
};

/// Labelled points. Boundary and seed are known only for generated sets.
struct Dataset {
    std::vector<DataPoint> points;
    std::optional<CircleSpec> boundary;
    std::optional<std::uint64_t> seed;

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
    [[nodiscard]] bool empty() const noexcept { return points.empty(); }

    /// Fraction of points with label 1.
    [[nodiscard]] double positive_fraction() const {
        if (points.empty()) {
            return 0.0;
        }
        std::size_t n = 0;
        for (const auto &p : points) {
            n += static_cast<std::size_t>(p.label);
        }
        return static_cast<double>(n) / static_cast<double>(points.size());
    }
};

inline Dataset generate(std::size_t n, const CircleSpec &spec, std::uint64_t seed) {
    spec.validate();
    if (n < 1) {
        throw std::invalid_argument("dataset size must be at least 1");
    }
    auto rng = make_engine(seed, {tag(Stream::Dataset)});
    Dataset d;
    d.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 p{uniform(rng, spec.domain.x0_min, spec.domain.x0_max),
                       uniform(rng, spec.domain.x1_min, spec.domain.x1_max)};
        d.points.push_back({p, spec.classify(p)});
    }
    d.boundary = spec;
    d.seed = seed;
    return d;
}

/// Malformed dataset text; carries the 1-based line and the field name.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, std::string field, const std::string &what)
        : std::runtime_error("line " + std::to_string(line) + ", field '" + field + "': " + what),
          line_(line), field_(std::move(field)) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string &field() const noexcept { return field_; }

  private:
    std::size_t line_;
    std::string field_;
};

inline constexpr std::string_view kDatasetHeader = "x0,x1,label";

inline std::string to_csv(const Dataset &d) {
    CsvWriter w{"x0", "x1", "label"};
    for (const auto &p : d.points) {
        w.cell(p.x.x0).cell(p.x.x1).cell(p.label).end_row();
    }
    return w.str();
}

inline Dataset parse_csv(std::string_view text) {
    Dataset d;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (!header_seen) {
            if (line != kDatasetHeader) {
                throw ParseError(line_no, "header",
                                 "expected '" + std::string(kDatasetHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw ParseError(line_no, "row",
                             "expected 3 fields, found " + std::to_string(fields.size()));
        }
        DataPoint p;
        if (!parse_double(trim(fields[0]), p.x.x0) || !std::isfinite(p.x.x0)) {
            throw ParseError(line_no, "x0", "not a finite number");
        }
        if (!parse_double(trim(fields[1]), p.x.x1) || !std::isfinite(p.x.x1)) {
            throw ParseError(line_no, "x1", "not a finite number");
        }
        if (!parse_integer(trim(fields[2]), p.label) || (p.label != 0 && p.label != 1)) {
            throw ParseError(line_no, "label",
                             "label must be 0 or 1, got '" + std::string(fields[2]) + "'");
        }
        d.points.push_back(p);
    }
    if (!header_seen) {
        throw ParseError(1, "header", "empty dataset file");
    }
    return d;
}

inline void save(const Dataset &d, const std::filesystem::path &path) {
    write_text(path, to_csv(d));
}

inline Dataset load(const std::filesystem::path &path) { return parse_csv(read_text(path)); }

/// Indices of points whose stored label disagrees with `spec`.
inline std::vector<std::size_t> mislabelled(const Dataset &d, const CircleSpec &spec) {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < d.points.size(); ++i) {
        if (spec.classify(d.points[i].x) != d.points[i].label) {
            bad.push_back(i);
        }
    }
    return bad;
}

} // namespace reup
