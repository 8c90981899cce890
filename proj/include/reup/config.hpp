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
 * @file config.hpp
 * Experiment configuration as JSON.
 *
 * Parsing is strict: unknown keys and ill-typed values raise ConfigError
 * naming the dotted key. `resolve()` fills every default so that the
 * written config reproduces the run on its own. Sub-seeds (dataset,
 * backend, optimizer) default to the master `seed`.
 *
 * @code{.json}
 * {
 *   "seed": 1,
 *   "output_dir": "runs/ga",
 *   "circuit": {"ansatz": "2C", "layers": 4},
 *   "dataset": {"generate": {"n": 250}},
 *   "backend": {"kind": "ideal"},
 *   "cost": "cross_entropy",
 *   "optimizer": {"kind": "ga", "population_size": 50}
 * }
 * @endcode
 */
#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "reup/backend.hpp"
#include "reup/circuit.hpp"
#include "reup/cost.hpp"
#include "reup/csv.hpp"
#include "reup/dataset.hpp"
#include "reup/ga.hpp"
#include "reup/objective.hpp"

namespace reup {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string key, const std::string &what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    [[nodiscard]] const std::string &key() const noexcept { return key_; }

  private:
    std::string key_;
};

struct GenerateSource {
    std::size_t n{250};
    std::optional<std::uint64_t> seed; ///< defaults to the master seed
    CircleSpec circle{};
};

struct DatasetSource {
    std::variant<GenerateSource, std::filesystem::path> source{GenerateSource{}};
};

struct BackendConfig {
    enum class Kind { Ideal, Noisy };
    Kind kind{Kind::Ideal};
    ConfusionMatrix confusion{kIdentityConfusion};
    unsigned shots{kDefaultShots};
    double residual_sigma{0.0};
    std::optional<std::uint64_t> seed;
};

struct OptimizerConfig {
    enum class Kind { Ga, Gradient };
    Kind kind{Kind::Ga};
    GAConfig ga{};
    GradConfig grad{};
    bool seed_set{false};
};

struct ExperimentConfig {
    std::uint64_t seed{0};
    unsigned jobs{1};
    std::filesystem::path output_dir{"runs/default"};
    CircuitSpec circuit{};
    DatasetSource dataset{};
    std::optional<DatasetSource> test_dataset;
    BackendConfig backend{};
    CostKind cost{CostKind::CrossEntropy};
    OptimizerConfig optimizer{};
    TimeBudget time_budget{};
};

/// Master-seed default from REUP_SEED, else 0.
inline std::uint64_t default_master_seed() {
    if (const char *s = std::getenv("REUP_SEED")) {
        std::uint64_t v = 0;
        if (!parse_integer(trim(s), v)) {
            throw ConfigError("REUP_SEED", "expected an unsigned integer");
        }
        return v;
    }
    return 0;
}

namespace detail {

/// A JSON object plus its dotted path, for error messages and key checks.
class Node {
  public:
    Node(const Json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(path_, "expected an object");
        }
    }

    void allow(std::initializer_list<std::string_view> keys) const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool ok = false;
            for (const auto k : keys) {
                ok = ok || it.key() == k;
            }
            if (!ok) {
                throw ConfigError(key(it.key()), "unknown key");
            }
        }
    }

    [[nodiscard]] bool has(std::string_view k) const { return j_.contains(k); }

    [[nodiscard]] std::string key(std::string_view k) const {
        return path_.empty() ? std::string(k) : path_ + "." + std::string(k);
    }

    [[nodiscard]] Node child(std::string_view k) const { return {j_.at(std::string(k)), key(k)}; }

    [[nodiscard]] const Json &raw(std::string_view k) const { return j_.at(std::string(k)); }

    template <class T> void read(std::string_view k, T &out) const {
        if (!has(k)) {
            return;
        }
        const Json &v = raw(k);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) {
                    throw ConfigError(key(k), "expected a boolean");
                }
                out = v.get<bool>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                               v.get<std::int64_t>() < 0)) {
                    throw ConfigError(key(k), "expected a nonnegative integer");
                }
                const auto u = v.get<std::uint64_t>();
                if (u > std::numeric_limits<T>::max()) {
                    throw ConfigError(key(k), "value out of range");
                }
                out = static_cast<T>(u);
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) {
                    throw ConfigError(key(k), "expected a number");
                }
                out = v.get<double>();
            } else {
                if (!v.is_string()) {
                    throw ConfigError(key(k), "expected a string");
                }
                out = v.get<std::string>();
            }
        } catch (const nlohmann::json::exception &e) {
            throw ConfigError(key(k), e.what());
        }
    }

    template <class T> void read(std::string_view k, std::optional<T> &out) const {
        if (has(k)) {
            T v{};
            read(k, v);
            out = v;
        }
    }

    /// Reads a string and maps it with `parse`, rethrowing parse errors as ConfigError.
    template <class T, class Parse> void read_enum(std::string_view k, T &out, Parse &&parse) const {
        if (!has(k)) {
            return;
        }
        std::string s;
        read(k, s);
        try {
            out = parse(s);
        } catch (const std::invalid_argument &e) {
            throw ConfigError(key(k), e.what());
        }
    }

    [[nodiscard]] std::vector<double> numbers(std::string_view k, std::size_t expected) const {
        const Json &v = raw(k);
        if (!v.is_array() || (expected && v.size() != expected)) {
            throw ConfigError(key(k), expected ? "expected an array of " + std::to_string(expected) +
                                                     " numbers"
                                               : "expected an array of numbers");
        }
        std::vector<double> out;
        for (const auto &e : v) {
            if (!e.is_number()) {
                throw ConfigError(key(k), "expected numbers");
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    [[nodiscard]] const std::string &path() const noexcept { return path_; }

  private:
    const Json &j_;
    std::string path_;
};

template <class Fn> void validated(const std::string &key, Fn &&fn) {
    try {
        fn();
    } catch (const ConfigError &) {
        throw;
    } catch (const std::invalid_argument &e) {
        throw ConfigError(key, e.what());
    }
}

inline Interval read_interval(const Node &n, std::string_view k, Interval def) {
    if (!n.has(k)) {
        return def;
    }
    const auto v = n.numbers(k, 2);
    return {v[0], v[1]};
}

inline DatasetSource parse_dataset(const Node &n) {
    n.allow({"generate", "path"});
    if (n.has("generate") == n.has("path")) {
        throw ConfigError(n.path(), "give exactly one of 'generate' or 'path'");
    }
    DatasetSource d;
    if (n.has("path")) {
        std::string p;
        n.read("path", p);
        d.source = std::filesystem::path(p);
        return d;
    }
    const Node g = n.child("generate");
    g.allow({"n", "seed", "center", "radius", "domain"});
    GenerateSource s;
    g.read("n", s.n);
    g.read("seed", s.seed);
    if (g.has("center")) {
        const auto c = g.numbers("center", 2);
        s.circle.center = {c[0], c[1]};
    }
    g.read("radius", s.circle.radius);
    if (g.has("domain")) {
        const auto b = g.numbers("domain", 4);
        s.circle.domain = {b[0], b[1], b[2], b[3]};
    }
    if (s.n < 1) {
        throw ConfigError(g.key("n"), "must be at least 1");
    }
    validated(g.path(), [&] { s.circle.validate(); });
    d.source = s;
    return d;
}

inline ConfusionMatrix parse_confusion(const Node &n, std::string_view k) {
    const Json &v = n.raw(k);
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "identity") {
            return kIdentityConfusion;
        }
        if (s == "measured") {
            return kMeasuredConfusion;
        }
        throw ConfigError(n.key(k), "expected 'identity', 'measured' or a 2x2 matrix");
    }
    if (!v.is_array() || v.size() != 2 || !v[0].is_array() || !v[1].is_array() ||
        v[0].size() != 2 || v[1].size() != 2) {
        throw ConfigError(n.key(k), "expected a 2x2 matrix");
    }
    ConfusionMatrix m{};
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            if (!v[i][j].is_number()) {
                throw ConfigError(n.key(k), "expected numbers");
            }
            m[i][j] = v[i][j].get<double>();
        }
    }
    validated(n.key(k), [&] { check_row_stochastic(m); });
    return m;
}

inline MutationSpec parse_mutation(const Node &n) {
    n.allow({"kind", "rate", "mask_base", "scale", "delta_halfwidth"});
    MutationSpec m;
    n.read_enum("kind", m.kind, [](std::string_view s) {
        if (s == "fixed") {
            return MutationSpec::Kind::Fixed;
        }
        if (s == "decaying") {
            return MutationSpec::Kind::Decaying;
        }
        throw std::invalid_argument("unknown mutation kind '" + std::string(s) + "'");
    });
    n.read("rate", m.rate);
    n.read("mask_base", m.mask_base);
    n.read("scale", m.scale);
    n.read("delta_halfwidth", m.delta_halfwidth);
    validated(n.path(), [&] { m.validate(); });
    return m;
}

inline OptimizerConfig parse_optimizer(const Node &n, CircuitSpec circuit) {
    OptimizerConfig o;
    std::string kind = "ga";
    n.read("kind", kind);
    if (kind == "ga") {
        n.allow({"kind", "population_size", "selection", "crossover", "mutation", "elitism_count",
                 "init_range", "max_generations", "target_accuracy", "tournament_size",
                 "parent_fraction", "estimate_budget", "seed"});
        auto &g = o.ga;
        n.read("population_size", g.population_size);
        n.read_enum("selection", g.selection, parse_selection);
        n.read_enum("crossover", g.crossover, parse_crossover);
        if (n.has("mutation")) {
            g.mutation = parse_mutation(n.child("mutation"));
        }
        n.read("elitism_count", g.elitism_count);
        g.init_range = read_interval(n, "init_range", g.init_range);
        n.read("max_generations", g.max_generations);
        n.read("target_accuracy", g.target_accuracy);
        n.read("tournament_size", g.tournament_size);
        n.read("parent_fraction", g.parent_fraction);
        n.read("estimate_budget", g.estimate_budget);
        o.seed_set = n.has("seed");
        n.read("seed", g.seed);
        validated(n.path(), [&] { g.validate(); });
        return o;
    }
    o.kind = OptimizerConfig::Kind::Gradient;
    auto &g = o.grad;
    try {
        g.method = parse_grad_trainer(kind);
    } catch (const std::invalid_argument &e) {
        throw ConfigError(n.key("kind"), e.what());
    }
    n.allow({"kind", "gradient", "learning_rate", "batch_size", "max_iterations", "line_search",
             "gradient_tolerance", "init_range", "initial_theta", "estimate_budget", "seed"});
    if (n.has("gradient")) {
        const Node gn = n.child("gradient");
        gn.allow({"method", "step"});
        gn.read_enum("method", g.gradient.method, parse_gradient_method);
        gn.read("step", g.gradient.step);
    }
    n.read("learning_rate", g.learning_rate);
    n.read("batch_size", g.batch_size);
    n.read("max_iterations", g.max_iterations);
    if (n.has("line_search")) {
        const Node ln = n.child("line_search");
        ln.allow({"kind", "c1", "c2", "shrink", "initial_step", "max_steps"});
        ln.read_enum("kind", g.line_search.kind, parse_line_search);
        ln.read("c1", g.line_search.c1);
        ln.read("c2", g.line_search.c2);
        ln.read("shrink", g.line_search.shrink);
        ln.read("initial_step", g.line_search.initial_step);
        ln.read("max_steps", g.line_search.max_steps);
    }
    n.read("gradient_tolerance", g.gradient_tolerance);
    g.init_range = read_interval(n, "init_range", g.init_range);
    if (n.has("initial_theta") && !n.raw("initial_theta").is_null()) {
        g.initial_theta = n.numbers("initial_theta", circuit.parameter_count());
    }
    n.read("estimate_budget", g.estimate_budget);
    o.seed_set = n.has("seed");
    n.read("seed", g.seed);
    return o;
}

inline Json dataset_to_json(const DatasetSource &d, std::uint64_t master) {
    Json j = Json::object();
    if (const auto *p = std::get_if<std::filesystem::path>(&d.source)) {
        j["path"] = p->generic_string();
        return j;
    }
    const auto &g = std::get<GenerateSource>(d.source);
    Json gen = Json::object();
    gen["n"] = g.n;
    gen["seed"] = g.seed.value_or(master);
    gen["center"] = {g.circle.center.x0, g.circle.center.x1};
    gen["radius"] = g.circle.radius;
    gen["domain"] = {g.circle.domain.x0_min, g.circle.domain.x0_max, g.circle.domain.x1_min,
                     g.circle.domain.x1_max};
    j["generate"] = gen;
    return j;
}

} // namespace detail

/// Parse a config object. Missing master seed falls back to REUP_SEED.
inline ExperimentConfig parse_config(const Json &j) {
    const detail::Node root(j, "");
    root.allow({"seed", "jobs", "output_dir", "circuit", "dataset", "test_dataset", "backend",
                "cost", "optimizer", "time_budget"});
    ExperimentConfig c;
    c.seed = default_master_seed();
    root.read("seed", c.seed);
    root.read("jobs", c.jobs);
    if (c.jobs < 1) {
        throw ConfigError("jobs", "must be at least 1");
    }
    if (root.has("output_dir")) {
        std::string s;
        root.read("output_dir", s);
        c.output_dir = s;
    }
    if (root.has("circuit")) {
        const auto n = root.child("circuit");
        n.allow({"ansatz", "layers"});
        n.read_enum("ansatz", c.circuit.ansatz, parse_ansatz);
        n.read("layers", c.circuit.layers);
        detail::validated("circuit", [&] { c.circuit.validate(); });
    }
    if (root.has("dataset")) {
        c.dataset = detail::parse_dataset(root.child("dataset"));
    }
    if (root.has("test_dataset") && !root.raw("test_dataset").is_null()) {
        c.test_dataset = detail::parse_dataset(root.child("test_dataset"));
        // an unseeded test set must not coincide with the training set
        if (auto *g = std::get_if<GenerateSource>(&c.test_dataset->source); g && !g->seed) {
            g->seed = derive_seed(c.seed, {tag(Stream::Dataset), 1});
        }
    }
    if (root.has("backend")) {
        const auto n = root.child("backend");
        n.allow({"kind", "confusion", "shots", "residual_sigma", "seed"});
        auto &b = c.backend;
        n.read_enum("kind", b.kind, [](std::string_view s) {
            if (s == "ideal") {
                return BackendConfig::Kind::Ideal;
            }
            if (s == "noisy") {
                return BackendConfig::Kind::Noisy;
            }
            throw std::invalid_argument("unknown backend kind '" + std::string(s) + "'");
        });
        if (n.has("confusion")) {
            b.confusion = detail::parse_confusion(n, "confusion");
        }
        n.read("shots", b.shots);
        n.read("residual_sigma", b.residual_sigma);
        n.read("seed", b.seed);
        if (b.shots < 1) {
            throw ConfigError("backend.shots", "must be at least 1");
        }
        if (!(b.residual_sigma >= 0.0)) {
            throw ConfigError("backend.residual_sigma", "must be nonnegative");
        }
    }
    root.read_enum("cost", c.cost, parse_cost);
    if (root.has("optimizer")) {
        c.optimizer = detail::parse_optimizer(root.child("optimizer"), c.circuit);
    }
    auto &o = c.optimizer;
    if (o.kind == OptimizerConfig::Kind::Ga) {
        o.ga.fitness = c.cost;
        if (!o.seed_set) {
            o.ga.seed = c.seed;
        }
        o.ga.jobs = c.jobs;
    } else {
        o.grad.cost = c.cost;
        if (!o.seed_set) {
            o.grad.seed = c.seed;
        }
        o.grad.jobs = c.jobs;
        detail::validated("optimizer", [&] { o.grad.validate(); });
    }
    if (root.has("time_budget")) {
        const auto n = root.child("time_budget");
        n.allow({"usb_load", "dds_load", "fpga_receive", "cooling", "preparation", "gate",
                 "detection"});
        auto &t = c.time_budget;
        n.read("usb_load", t.usb_load);
        n.read("dds_load", t.dds_load);
        n.read("fpga_receive", t.fpga_receive);
        n.read("cooling", t.cooling);
        n.read("preparation", t.preparation);
        n.read("gate", t.gate);
        n.read("detection", t.detection);
        detail::validated("time_budget", [&] { t.validate(); });
    }
    return c;
}

inline ExperimentConfig parse_config_text(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline ExperimentConfig load_config(const std::filesystem::path &path) {
    return parse_config_text(read_text(path));
}

/// Fully explicit config: every default and derived seed written out.
inline Json resolve(const ExperimentConfig &c) {
    Json j = Json::object();
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["output_dir"] = c.output_dir.generic_string();
    j["circuit"] = {{"ansatz", std::string(to_string(c.circuit.ansatz))},
                    {"layers", c.circuit.layers}};
    j["dataset"] = detail::dataset_to_json(c.dataset, c.seed);
    j["test_dataset"] = c.test_dataset ? detail::dataset_to_json(*c.test_dataset, c.seed)
                                       : Json(nullptr);
    const auto &b = c.backend;
    j["backend"] = {{"kind", b.kind == BackendConfig::Kind::Ideal ? "ideal" : "noisy"},
                    {"confusion",
                     {{b.confusion[0][0], b.confusion[0][1]}, {b.confusion[1][0], b.confusion[1][1]}}},
                    {"shots", b.shots},
                    {"residual_sigma", b.residual_sigma},
                    {"seed", b.seed.value_or(c.seed)}};
    j["cost"] = std::string(to_string(c.cost));
    Json o = Json::object();
    if (c.optimizer.kind == OptimizerConfig::Kind::Ga) {
        const auto &g = c.optimizer.ga;
        o["kind"] = "ga";
        o["population_size"] = g.population_size;
        o["selection"] = std::string(to_string(g.selection));
        o["crossover"] = std::string(to_string(g.crossover));
        o["mutation"] = {{"kind", g.mutation.kind == MutationSpec::Kind::Fixed ? "fixed" : "decaying"},
                         {"rate", g.mutation.rate},
                         {"mask_base", g.mutation.mask_base},
                         {"scale", g.mutation.scale},
                         {"delta_halfwidth", g.mutation.delta_halfwidth}};
        o["elitism_count"] = g.elitism_count;
        o["init_range"] = {g.init_range.lo, g.init_range.hi};
        o["max_generations"] = g.max_generations;
        o["target_accuracy"] = g.target_accuracy;
        o["tournament_size"] = g.tournament_size;
        o["parent_fraction"] = g.parent_fraction;
        o["estimate_budget"] = g.estimate_budget;
        o["seed"] = g.seed;
    } else {
        const auto &g = c.optimizer.grad;
        o["kind"] = std::string(to_string(g.method));
        o["gradient"] = {{"method", std::string(to_string(g.gradient.method))},
                         {"step", g.gradient.step}};
        o["learning_rate"] = g.learning_rate;
        o["batch_size"] = g.batch_size;
        o["max_iterations"] = g.max_iterations;
        o["line_search"] = {{"kind", std::string(to_string(g.line_search.kind))},
                            {"c1", g.line_search.c1},
                            {"c2", g.line_search.c2},
                            {"shrink", g.line_search.shrink},
                            {"initial_step", g.line_search.initial_step},
                            {"max_steps", g.line_search.max_steps}};
        o["gradient_tolerance"] = g.gradient_tolerance;
        o["init_range"] = {g.init_range.lo, g.init_range.hi};
        o["initial_theta"] = g.initial_theta ? Json(*g.initial_theta) : Json(nullptr);
        o["estimate_budget"] = g.estimate_budget;
        o["seed"] = g.seed;
    }
    j["optimizer"] = o;
    const auto &t = c.time_budget;
    j["time_budget"] = {{"usb_load", t.usb_load},       {"dds_load", t.dds_load},
                        {"fpga_receive", t.fpga_receive}, {"cooling", t.cooling},
                        {"preparation", t.preparation}, {"gate", t.gate},
                        {"detection", t.detection}};
    return j;
}

/**
 * Set a dotted key (e.g. "optimizer.population_size") in a JSON object,
 * creating intermediate objects. The value text is parsed as JSON, falling
 * back to a plain string.
 */
inline void set_path(Json &root, std::string_view dotted, const Json &value) {
    if (dotted.empty()) {
        throw ConfigError("", "empty override key");
    }
    Json *node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        const std::string part(dotted.substr(start, dot - start));
        if (part.empty()) {
            throw ConfigError(std::string(dotted), "malformed key");
        }
        if (!node->is_object()) {
            throw ConfigError(std::string(dotted), "cannot descend into a non-object");
        }
        if (dot == std::string_view::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) {
            *node = Json::object();
        }
        start = dot + 1;
    }
}

inline Json parse_value(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error &) {
        return Json(std::string(text));
    }
}

/// Apply "key=value" overrides.
inline void apply_overrides(Json &root, const std::vector<std::string> &overrides) {
    for (const auto &o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(o, "override must look like key=value");
        }
        set_path(root, std::string_view(o).substr(0, eq), parse_value(std::string_view(o).substr(eq + 1)));
    }
}

} // namespace reup
