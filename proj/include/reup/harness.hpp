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
 * @file harness.hpp
 * End-to-end runs: build the dataset and backend from a config, train,
 * and write the run directory.
 *
 * A run directory holds
 *   config.json   the resolved config (re-running it reproduces trace.csv)
 *   trace.csv     per-iteration trace
 *   theta.csv     best parameters, header `index,theta`
 *   summary.json  final metrics
 */
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reup/backend.hpp"
#include "reup/bfgs.hpp"
#include "reup/circuit.hpp"
#include "reup/config.hpp"
#include "reup/cost.hpp"
#include "reup/csv.hpp"
#include "reup/dataset.hpp"
#include "reup/ga.hpp"
#include "reup/parallel.hpp"
#include "reup/sgd.hpp"
#include "reup/trace.hpp"

namespace reup {

inline Dataset materialize(const DatasetSource &d, std::uint64_t master_seed) {
    if (const auto *p = std::get_if<std::filesystem::path>(&d.source)) {
        return load(*p);
    }
    const auto &g = std::get<GenerateSource>(d.source);
    return generate(g.n, g.circle, g.seed.value_or(master_seed));
}

inline std::unique_ptr<Backend> make_backend(const BackendConfig &b, std::uint64_t master_seed) {
    if (b.kind == BackendConfig::Kind::Ideal) {
        return std::make_unique<IdealBackend>(b.shots);
    }
    NoiseModel m;
    m.confusion = b.confusion;
    m.shots = b.shots;
    m.residual_sigma = b.residual_sigma;
    m.seed = b.seed.value_or(master_seed);
    return std::make_unique<NoisyBackend>(m);
}

inline std::string theta_to_csv(std::span<const double> theta) {
    CsvWriter w{"index", "theta"};
    for (std::size_t i = 0; i < theta.size(); ++i) {
        w.cell(i).cell(theta[i]).end_row();
    }
    return w.str();
}

inline ParameterVector parse_theta_csv(std::string_view text) {
    ParameterVector theta;
    std::size_t line_no = 0;
    bool header = true;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (header) {
            if (line != "index,theta") {
                throw ParseError(line_no, "header", "expected header 'index,theta'");
            }
            header = false;
            continue;
        }
        const auto f = split_fields(line);
        std::size_t idx = 0;
        if (f.size() != 2) {
            throw ParseError(line_no, "row", "expected 2 fields");
        }
        if (!parse_integer(trim(f[0]), idx) || idx != theta.size()) {
            throw ParseError(line_no, "index", "expected index " + std::to_string(theta.size()));
        }
        double v = 0.0;
        if (!parse_double(trim(f[1]), v) || !std::isfinite(v)) {
            throw ParseError(line_no, "theta", "expected a finite number");
        }
        theta.push_back(v);
    }
    if (header) {
        throw ParseError(1, "header", "empty parameter file");
    }
    return theta;
}

inline ParameterVector load_theta(const std::filesystem::path &path) {
    return parse_theta_csv(read_text(path));
}

struct RunOutput {
    TrainResult result;
    std::optional<double> test_accuracy;
    LedgerCounts spent;
    double modelled_minutes{0.0};
    double host_seconds{0.0};
};

inline RunOutput run_experiment(const ExperimentConfig &c) {
    const auto started = std::chrono::steady_clock::now();
    const Dataset train = materialize(c.dataset, c.seed);
    if (train.empty()) {
        throw ConfigError("dataset", "training set is empty");
    }
    const auto backend = make_backend(c.backend, c.seed);
    RunOutput out;
    if (c.optimizer.kind == OptimizerConfig::Kind::Ga) {
        out.result = ga_train(c.optimizer.ga, c.circuit, train, *backend, c.time_budget);
    } else {
        out.result = grad_train(c.optimizer.grad, c.circuit, train, *backend, c.time_budget);
    }
    out.spent = backend->ledger().counts();
    out.modelled_minutes = estimate_time(out.spent, c.time_budget) / 60.0;
    if (c.test_dataset) {
        const Dataset test = materialize(*c.test_dataset, c.seed);
        if (!test.empty() && !out.result.best_theta.empty()) {
            out.test_accuracy = exact_accuracy(c.circuit, out.result.best_theta, test.points);
        }
    }
    out.host_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

inline Json summary_json(const ExperimentConfig &c, const RunOutput &r) {
    Json s = Json::object();
    s["optimizer"] = c.optimizer.kind == OptimizerConfig::Kind::Ga
                         ? std::string("ga")
                         : std::string(to_string(c.optimizer.grad.method));
    s["best_accuracy"] = r.result.best_accuracy;
    s["best_loss"] = r.result.best_loss;
    const auto &recs = r.result.trace.records;
    s["final_accuracy"] = recs.empty() ? 0.0 : recs.back().best_accuracy;
    s["max_trace_accuracy"] = recs.empty() ? 0.0 : r.result.trace.cumulative_best_accuracy(recs.size());
    s["iterations"] = recs.empty() ? 0 : recs.back().iter;
    s["cum_estimates"] = r.spent.estimates;
    s["cum_shots"] = r.spent.shots;
    s["modelled_minutes"] = r.modelled_minutes;
    s["test_accuracy"] = r.test_accuracy ? Json(*r.test_accuracy) : Json(nullptr);
    s["host_seconds"] = r.host_seconds;
    return s;
}

/// Write config.json, trace.csv, theta.csv and summary.json into `dir`.
inline void write_run(const std::filesystem::path &dir, const ExperimentConfig &c,
                      const RunOutput &r) {
    write_text(dir / "config.json", resolve(c).dump(2) + "\n");
    write_text(dir / "trace.csv", r.result.trace.to_csv());
    write_text(dir / "theta.csv", theta_to_csv(r.result.best_theta));
    write_text(dir / "summary.json", summary_json(c, r).dump(2) + "\n");
}

struct PointResult {
    DataPoint point;
    int predicted{0};
    double m{0.0};
};

struct EvaluationReport {
    double accuracy{0.0};
    std::vector<PointResult> points;

    [[nodiscard]] std::string to_csv() const {
        CsvWriter w{"x0", "x1", "true", "predicted", "M"};
        for (const auto &p : points) {
            w.cell(p.point.x.x0)
                .cell(p.point.x.x1)
                .cell(p.point.label)
                .cell(p.predicted)
                .cell(p.m)
                .end_row();
        }
        return w.str();
    }
};

/// Per-point M and predicted label; prediction keeps the true label when M > 0.5.
inline EvaluationReport evaluate_dataset(const CircuitSpec &spec, std::span<const double> theta,
                                         const Dataset &data, const Backend &backend,
                                         std::uint64_t key = 0, unsigned jobs = 1) {
    if (theta.size() != spec.parameter_count()) {
        throw ConfigError("theta", "has " + std::to_string(theta.size()) + " values but ansatz " +
                                       std::string(to_string(spec.ansatz)) + " with " +
                                       std::to_string(spec.layers) + " layers needs " +
                                       std::to_string(spec.parameter_count()));
    }
    if (data.empty()) {
        throw ConfigError("data", "dataset is empty");
    }
    const auto m = estimate_dataset(spec, theta, data.points, backend, key, jobs);
    EvaluationReport r;
    r.accuracy = accuracy_from_estimates(m);
    r.points.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int y = data.points[i].label;
        r.points[i] = {data.points[i], m[i] > 0.5 ? y : 1 - y, m[i]};
    }
    return r;
}

/// CSV field with quoting when needed.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (const char ch : s) {
        out += ch;
        if (ch == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

struct SweepAxis {
    std::string key;
    std::vector<Json> values;
};

struct SweepRow {
    std::size_t cell{0};
    std::uint64_t seed{0};
    std::vector<Json> values;
    Json summary;
};

struct SweepResult {
    std::vector<SweepAxis> axes;
    std::vector<SweepRow> rows;

    [[nodiscard]] std::string rows_csv() const {
        std::string out = "cell,seed";
        for (const auto &a : axes) {
            out += "," + csv_field(a.key);
        }
        out += ",best_accuracy,best_loss,final_accuracy,max_trace_accuracy,cum_estimates,test_accuracy\n";
        for (const auto &r : rows) {
            out += std::to_string(r.cell) + "," + std::to_string(r.seed);
            for (const auto &v : r.values) {
                out += "," + csv_field(v.dump());
            }
            for (const char *k : {"best_accuracy", "best_loss", "final_accuracy",
                                  "max_trace_accuracy"}) {
                out += "," + format_double(r.summary[k].get<double>());
            }
            out += "," + std::to_string(r.summary["cum_estimates"].get<std::uint64_t>());
            const auto &t = r.summary["test_accuracy"];
            out += "," + (t.is_null() ? std::string("nan") : format_double(t.get<double>()));
            out += "\n";
        }
        return out;
    }

    [[nodiscard]] std::string medians_csv() const {
        std::string out = "cell";
        for (const auto &a : axes) {
            out += "," + csv_field(a.key);
        }
        out += ",seeds,median_best_accuracy,median_final_accuracy,median_max_trace_accuracy,"
               "median_test_accuracy\n";
        std::size_t cells = 0;
        for (const auto &r : rows) {
            cells = std::max(cells, r.cell + 1);
        }
        auto median = [](std::vector<double> v) {
            if (v.empty()) {
                return std::numeric_limits<double>::quiet_NaN();
            }
            std::sort(v.begin(), v.end());
            const auto n = v.size();
            return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        };
        for (std::size_t c = 0; c < cells; ++c) {
            std::vector<double> best;
            std::vector<double> fin;
            std::vector<double> mx;
            std::vector<double> test;
            const SweepRow *first = nullptr;
            for (const auto &r : rows) {
                if (r.cell != c) {
                    continue;
                }
                first = first ? first : &r;
                best.push_back(r.summary["best_accuracy"].get<double>());
                fin.push_back(r.summary["final_accuracy"].get<double>());
                mx.push_back(r.summary["max_trace_accuracy"].get<double>());
                if (!r.summary["test_accuracy"].is_null()) {
                    test.push_back(r.summary["test_accuracy"].get<double>());
                }
            }
            if (!first) {
                continue;
            }
            out += std::to_string(c);
            for (const auto &v : first->values) {
                out += "," + csv_field(v.dump());
            }
            out += "," + std::to_string(best.size()) + "," + format_double(median(best)) + "," +
                   format_double(median(fin)) + "," + format_double(median(mx)) + "," +
                   format_double(median(test)) + "\n";
        }
        return out;
    }
};

/// Config text for one sweep cell: base plus grid values, master seed, and output dir.
inline Json sweep_cell_config(const Json &base, std::span<const SweepAxis> axes,
                              std::span<const std::size_t> choice, std::uint64_t seed,
                              const std::filesystem::path &dir) {
    Json cfg = base;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        set_path(cfg, axes[a].key, axes[a].values[choice[a]]);
    }
    cfg["seed"] = seed;
    cfg["jobs"] = 1;
    cfg["output_dir"] = dir.generic_string();
    return cfg;
}

/**
 * Run every grid cell for every seed. Cells run concurrently up to `jobs`;
 * each writes its own run directory under out_dir/cell_<i>/seed_<s>.
 */
inline SweepResult run_sweep(const Json &base, std::vector<SweepAxis> axes,
                             std::span<const std::uint64_t> seeds,
                             const std::filesystem::path &out_dir, unsigned jobs = 1) {
    if (seeds.empty()) {
        throw ConfigError("seeds", "at least one seed is needed");
    }
    std::size_t cells = 1;
    for (const auto &a : axes) {
        if (a.values.empty()) {
            throw ConfigError(a.key, "grid axis has no values");
        }
        cells *= a.values.size();
    }
    // parse every cell up front so config errors surface before any work
    struct Task {
        std::size_t cell;
        std::uint64_t seed;
        std::vector<Json> values;
        ExperimentConfig config;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cells; ++c) {
        std::vector<std::size_t> choice(axes.size());
        std::size_t rest = c;
        for (std::size_t a = axes.size(); a-- > 0;) {
            choice[a] = rest % axes[a].values.size();
            rest /= axes[a].values.size();
        }
        std::vector<Json> values;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            values.push_back(axes[a].values[choice[a]]);
        }
        for (const auto s : seeds) {
            const auto dir =
                out_dir / ("cell_" + std::to_string(c)) / ("seed_" + std::to_string(s));
            tasks.push_back({c, s, values, parse_config(sweep_cell_config(base, axes, choice, s, dir))});
        }
    }
    SweepResult result;
    result.axes = std::move(axes);
    result.rows.resize(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        const auto &t = tasks[i];
        const auto out = run_experiment(t.config);
        write_run(t.config.output_dir, t.config, out);
        result.rows[i] = {t.cell, t.seed, t.values, summary_json(t.config, out)};
    });
    write_text(out_dir / "sweep.csv", result.rows_csv());
    write_text(out_dir / "medians.csv", result.medians_csv());
    return result;
}

/**
 * Sweep description file:
 *   {"base": {...config...} | "base_config": "path.json",
 *    "grid": {"optimizer.population_size": [10, 20, 50, 75], ...},
 *    "seeds": [1, 2, 3], "output_dir": "runs/sweep", "jobs": 1}
 * Grid keys are dotted config paths; axes expand in file order, the last
 * axis varying fastest.
 */
struct SweepSpec {
    Json base = Json::object();
    std::vector<SweepAxis> axes;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path output_dir{"runs/sweep"};
    unsigned jobs{1};
};

/// Parse a "key=[v1, v2]" grid axis; a scalar value gives a one-value axis.
inline SweepAxis parse_grid_axis(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError(std::string(text), "grid axis must look like key=[v1,v2,...]");
    }
    SweepAxis a{std::string(text.substr(0, eq)), {}};
    const Json v = parse_value(text.substr(eq + 1));
    if (v.is_array()) {
        a.values.assign(v.begin(), v.end());
    } else {
        a.values.push_back(v);
    }
    if (a.values.empty()) {
        throw ConfigError(a.key, "grid axis has no values");
    }
    return a;
}

inline SweepSpec parse_sweep_spec(const Json &j, const std::filesystem::path &relative_to = {}) {
    if (!j.is_object()) {
        throw ConfigError("", "sweep file must hold a JSON object");
    }
    for (const auto &[k, v] : j.items()) {
        static constexpr std::array<std::string_view, 6> known{"base", "base_config", "grid",
                                                               "seeds", "output_dir", "jobs"};
        if (std::find(known.begin(), known.end(), k) == known.end()) {
            throw ConfigError(k, "unknown key");
        }
    }
    SweepSpec s;
    if (j.contains("base") && j.contains("base_config")) {
        throw ConfigError("base", "give at most one of 'base' or 'base_config'");
    }
    try {
        if (j.contains("base")) {
            s.base = j.at("base");
            if (!s.base.is_object()) {
                throw ConfigError("base", "expected an object");
            }
        } else if (j.contains("base_config")) {
            std::filesystem::path p = j.at("base_config").get<std::string>();
            if (p.is_relative() && !relative_to.empty()) {
                p = relative_to / p;
            }
            s.base = Json::parse(read_text(p));
        }
        if (j.contains("grid")) {
            const auto &g = j.at("grid");
            if (!g.is_object()) {
                throw ConfigError("grid", "expected an object of key: [values]");
            }
            for (const auto &[k, v] : g.items()) {
                SweepAxis a{k, {}};
                if (v.is_array()) {
                    a.values.assign(v.begin(), v.end());
                } else {
                    a.values.push_back(v);
                }
                if (a.values.empty()) {
                    throw ConfigError("grid." + k, "grid axis has no values");
                }
                s.axes.push_back(std::move(a));
            }
        }
        if (j.contains("seeds")) {
            s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
            if (s.seeds.empty()) {
                throw ConfigError("seeds", "at least one seed is needed");
            }
        }
        if (j.contains("output_dir")) {
            s.output_dir = j.at("output_dir").get<std::string>();
        }
        if (j.contains("jobs")) {
            s.jobs = j.at("jobs").get<unsigned>();
            if (s.jobs < 1) {
                throw ConfigError("jobs", "must be at least 1");
            }
        }
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError("base_config", std::string("invalid JSON: ") + e.what());
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError("", std::string("malformed sweep file: ") + e.what());
    }
    return s;
}

} // namespace reup
