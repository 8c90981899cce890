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

// reup: command-line front end.
//
//   reup gen-data --n 250 --seed 7 --out data.csv
//   reup train presets/ga_default.json [--set key=value ...]
//   reup evaluate --theta runs/x/theta.csv --data test.csv [--config runs/x/config.json]
//   reup sweep presets/sweep_population.json [--grid key=[...]] [--seeds 1,2,3]
//   reup analyze <residuals|noise-scaling|gradient-noise|landscape|ansatz-spread|time-budget>
//
// Exit codes: 0 success, 1 unexpected failure, 2 config error, 3 backend
// error, 4 I/O or parse error.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reup/reup.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kBackend = 3, kIo = 4 };

std::vector<std::uint64_t> parse_seed_list(const std::string &text) {
    std::vector<std::uint64_t> out;
    for (const auto f : reup::split_fields(text)) {
        std::uint64_t v = 0;
        if (!reup::parse_integer(reup::trim(f), v)) {
            throw reup::ConfigError("seeds", "expected comma-separated unsigned integers");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw reup::ConfigError("seeds", "at least one seed is needed");
    }
    return out;
}

std::vector<double> parse_double_list(const std::string &key, const std::string &text) {
    std::vector<double> out;
    for (const auto f : reup::split_fields(text)) {
        double v = 0.0;
        if (!reup::parse_double(reup::trim(f), v)) {
            throw reup::ConfigError(key, "expected comma-separated numbers");
        }
        out.push_back(v);
    }
    return out;
}

reup::Json read_json(const fs::path &path) {
    try {
        return reup::Json::parse(reup::read_text(path));
    } catch (const nlohmann::json::parse_error &e) {
        throw reup::ConfigError("", path.string() + ": invalid JSON: " + e.what());
    }
}

void write_reports(const fs::path &dir, const reup::Reports &reports) {
    for (const auto &[name, text] : reports) {
        reup::write_text(dir / name, text);
        std::cout << (dir / name).string() << "\n";
    }
}

struct GenDataArgs {
    std::size_t n{250};
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<double> center;
    std::optional<double> radius;
    std::vector<double> domain;
};

int cmd_gen_data(const GenDataArgs &a) {
    reup::CircleSpec circle;
    if (!a.center.empty()) {
        circle.center = {a.center.at(0), a.center.at(1)};
    }
    if (a.radius) {
        circle.radius = *a.radius;
    }
    if (!a.domain.empty()) {
        circle.domain = {a.domain.at(0), a.domain.at(1), a.domain.at(2), a.domain.at(3)};
    }
    try {
        circle.validate();
    } catch (const std::invalid_argument &e) {
        throw reup::ConfigError("circle", e.what());
    }
    if (a.n < 1) {
        throw reup::ConfigError("n", "must be at least 1");
    }
    const auto seed = a.seed.value_or(reup::default_master_seed());
    const auto d = reup::generate(a.n, circle, seed);
    reup::save(d, a.out);
    reup::DatasetSource src;
    src.source = reup::GenerateSource{a.n, seed, circle};
    std::cout << reup::detail::dataset_to_json(src, seed).dump(2) << "\n";
    return kOk;
}

struct TrainArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::string> output;
    std::optional<unsigned> jobs;
    std::optional<std::uint64_t> seed;
};

reup::ExperimentConfig config_from(const std::string &path, const std::vector<std::string> &overrides,
                                   const std::optional<std::string> &output,
                                   const std::optional<unsigned> &jobs,
                                   const std::optional<std::uint64_t> &seed) {
    auto j = read_json(path);
    reup::apply_overrides(j, overrides);
    if (jobs) {
        j["jobs"] = *jobs;
    }
    if (seed) {
        j["seed"] = *seed;
    }
    if (output) {
        j["output_dir"] = *output;
    }
    return reup::parse_config(j);
}

int cmd_train(const TrainArgs &a) {
    const auto cfg = config_from(a.config, a.overrides, a.output, a.jobs, a.seed);
    const auto out = reup::run_experiment(cfg);
    reup::write_run(cfg.output_dir, cfg, out);
    std::cout << reup::summary_json(cfg, out).dump(2) << "\n";
    return kOk;
}

struct EvaluateArgs {
    std::string theta;
    std::string data;
    std::optional<std::string> config;
    std::string ansatz{"2C"};
    std::size_t layers{4};
    std::string backend{"ideal"};
    unsigned shots{reup::kDefaultShots};
    std::string confusion{"identity"};
    double residual_sigma{0.0};
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    unsigned jobs{1};
};

int cmd_evaluate(const EvaluateArgs &a) {
    reup::CircuitSpec spec;
    reup::BackendConfig bc;
    std::uint64_t master = a.seed.value_or(reup::default_master_seed());
    if (a.config) {
        const auto c = reup::parse_config(read_json(*a.config));
        spec = c.circuit;
        bc = c.backend;
        master = a.seed.value_or(c.seed);
    } else {
        reup::Json j = {{"circuit", {{"ansatz", a.ansatz}, {"layers", a.layers}}},
                        {"backend",
                         {{"kind", a.backend},
                          {"shots", a.shots},
                          {"confusion", a.confusion},
                          {"residual_sigma", a.residual_sigma}}}};
        const auto c = reup::parse_config(j);
        spec = c.circuit;
        bc = c.backend;
    }
    const auto theta = reup::load_theta(a.theta);
    const auto data = reup::load(a.data);
    const auto backend = reup::make_backend(bc, master);
    const auto r = reup::evaluate_dataset(spec, theta, data, *backend, master, a.jobs);
    if (a.out) {
        reup::write_text(*a.out, r.to_csv());
    }
    std::cout << "accuracy," << reup::format_double(r.accuracy) << "\n";
    return kOk;
}

struct SweepArgs {
    std::string spec;
    std::vector<std::string> grid;
    std::vector<std::string> overrides;
    std::optional<std::string> seeds;
    std::optional<std::string> output;
    std::optional<unsigned> jobs;
};

int cmd_sweep(const SweepArgs &a) {
    const fs::path spec_path(a.spec);
    auto s = reup::parse_sweep_spec(read_json(spec_path), spec_path.parent_path());
    reup::apply_overrides(s.base, a.overrides);
    for (const auto &g : a.grid) {
        auto axis = reup::parse_grid_axis(g);
        auto it = std::find_if(s.axes.begin(), s.axes.end(),
                               [&](const auto &x) { return x.key == axis.key; });
        if (it != s.axes.end()) {
            *it = std::move(axis);
        } else {
            s.axes.push_back(std::move(axis));
        }
    }
    if (a.seeds) {
        s.seeds = parse_seed_list(*a.seeds);
    }
    if (a.output) {
        s.output_dir = *a.output;
    }
    if (a.jobs) {
        s.jobs = *a.jobs;
    }
    const auto r = reup::run_sweep(s.base, s.axes, s.seeds, s.output_dir, s.jobs);
    std::cout << r.medians_csv();
    return kOk;
}

struct AnalyzeArgs {
    std::string output{"analysis"};
    std::optional<std::uint64_t> seed;
    unsigned jobs{1};
    std::optional<std::string> theta;
    std::optional<std::string> data;
    std::size_t n{250};
    std::string ansatz{"2C"};
    std::size_t layers{4};
    std::size_t repeats{0};
    double residual_sigma{0.0};
    std::string confusion{"measured"};
    unsigned shot_count{0};
    std::string shots{"60..1000"};
    std::size_t count{250};
    unsigned calibration_shots{10000};
    std::string steps{"0.01,0.1,0.5"};
    std::size_t grid_count{21};
    std::size_t search_budget{20};
    double radius{0.5};
    std::size_t sets{20};
    std::size_t population{50};
    std::size_t points{250};
};

struct AnalyzeContext {
    reup::CircuitSpec circuit;
    reup::ConfusionMatrix confusion;
    std::uint64_t seed{0};
};

AnalyzeContext analyze_context(const AnalyzeArgs &a) {
    reup::Json j = {{"circuit", {{"ansatz", a.ansatz}, {"layers", a.layers}}},
                    {"backend", {{"kind", "noisy"}, {"confusion", a.confusion}}}};
    if (a.seed) {
        j["seed"] = *a.seed;
    }
    const auto c = reup::parse_config(j);
    return {c.circuit, c.backend.confusion, c.seed};
}

reup::Dataset analysis_data(const AnalyzeArgs &a, std::uint64_t seed) {
    if (a.data) {
        return reup::load(*a.data);
    }
    return reup::generate(a.n, reup::CircleSpec{}, seed);
}

reup::ParameterVector analysis_theta(const AnalyzeArgs &a, const reup::CircuitSpec &spec) {
    reup::ParameterVector theta =
        a.theta ? reup::load_theta(*a.theta)
                : reup::ParameterVector(reup::kReferenceTheta.begin(), reup::kReferenceTheta.end());
    if (theta.size() != spec.parameter_count()) {
        throw reup::ConfigError("theta", "has " + std::to_string(theta.size()) +
                                             " values; the circuit needs " +
                                             std::to_string(spec.parameter_count()));
    }
    return theta;
}

int cmd_analyze(reup::AnalysisKind kind, const AnalyzeArgs &a) {
    const auto ctx = analyze_context(a);
    reup::Reports reports;
    switch (kind) {
    case reup::AnalysisKind::Residuals: {
        reup::ResidualsOptions o;
        o.circuit = ctx.circuit;
        o.count = a.count;
        o.shots = a.shot_count ? a.shot_count : 500;
        o.confusion = ctx.confusion;
        o.residual_sigma = a.residual_sigma;
        o.calibration_shots = a.calibration_shots;
        o.seed = ctx.seed;
        reports = reup::analyze_residuals(o);
        break;
    }
    case reup::AnalysisKind::NoiseScaling: {
        reup::NoiseScalingOptions o;
        o.circuit = ctx.circuit;
        o.theta = analysis_theta(a, ctx.circuit);
        o.data = analysis_data(a, ctx.seed);
        o.shots = reup::parse_shot_list(a.shots);
        o.residual_sigma = a.residual_sigma;
        o.repeats = a.repeats ? a.repeats : 20;
        o.seed = ctx.seed;
        reports = reup::analyze_noise_scaling(o);
        break;
    }
    case reup::AnalysisKind::GradientNoise: {
        reup::GradientNoiseOptions o;
        o.circuit = ctx.circuit;
        o.theta = analysis_theta(a, ctx.circuit);
        o.data = analysis_data(a, ctx.seed);
        o.backend.confusion = ctx.confusion;
        o.backend.shots = a.shot_count ? a.shot_count : reup::kDefaultShots;
        o.backend.residual_sigma = a.residual_sigma;
        o.steps = parse_double_list("steps", a.steps);
        o.repeats = a.repeats ? a.repeats : 10;
        o.seed = ctx.seed;
        o.jobs = a.jobs;
        reports = reup::analyze_gradient_noise(o);
        break;
    }
    case reup::AnalysisKind::Landscape: {
        reup::LandscapeOptions o;
        o.circuit = ctx.circuit;
        o.theta = analysis_theta(a, ctx.circuit);
        o.data = analysis_data(a, ctx.seed);
        o.grid.theta0.count = a.grid_count;
        o.grid.theta1.count = a.grid_count;
        o.search = {a.search_budget, a.radius};
        o.seed = ctx.seed;
        o.jobs = a.jobs;
        reports = reup::analyze_landscape(o);
        break;
    }
    case reup::AnalysisKind::AnsatzSpread: {
        reup::AnsatzSpreadOptions o;
        o.layers = ctx.circuit.layers;
        o.sets = a.sets;
        o.data = analysis_data(a, ctx.seed);
        o.seed = ctx.seed;
        reports = reup::analyze_ansatz_spread(o);
        break;
    }
    case reup::AnalysisKind::TimeBudget: {
        reup::TimeBudgetOptions o;
        o.population = a.population;
        o.points = a.points;
        o.shots = a.shot_count ? a.shot_count : reup::kDefaultShots;
        reports = reup::analyze_time_budget(o);
        break;
    }
    }
    write_reports(a.output, reports);
    return kOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Data re-uploading classifier: training, evaluation and analysis"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto *gen_cmd = app.add_subcommand("gen-data", "Sample a labelled circle dataset");
    gen_cmd->add_option("--n", gen.n, "Number of points")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Sampling seed (default REUP_SEED, else 0)");
    gen_cmd->add_option("--out", gen.out, "Output CSV")->required();
    gen_cmd->add_option("--center", gen.center, "Circle center x0 x1")->expected(2);
    gen_cmd->add_option("--radius", gen.radius, "Circle radius (default: equal class mass)");
    gen_cmd->add_option("--domain", gen.domain, "Sampling box x0_min x0_max x1_min x1_max")
        ->expected(4);

    TrainArgs train;
    auto *train_cmd = app.add_subcommand("train", "Train from a JSON config");
    train_cmd->add_option("config", train.config, "Config file")->required();
    train_cmd->add_option("--set", train.overrides, "Override a key: dotted.key=json_value");
    train_cmd->add_option("--output", train.output, "Output directory");
    train_cmd->add_option("--jobs", train.jobs, "Worker threads");
    train_cmd->add_option("--seed", train.seed, "Master seed");

    EvaluateArgs ev;
    auto *ev_cmd = app.add_subcommand("evaluate", "Classify a dataset with trained parameters");
    ev_cmd->add_option("--theta", ev.theta, "Parameter CSV (index,theta)")->required();
    ev_cmd->add_option("--data", ev.data, "Dataset CSV (x0,x1,label)")->required();
    ev_cmd->add_option("--config", ev.config, "Take circuit and backend from a run config");
    ev_cmd->add_option("--ansatz", ev.ansatz, "2A, 2B, 2C or 2D")->capture_default_str();
    ev_cmd->add_option("--layers", ev.layers)->capture_default_str();
    ev_cmd->add_option("--backend", ev.backend, "ideal or noisy")->capture_default_str();
    ev_cmd->add_option("--shots", ev.shots)->capture_default_str();
    ev_cmd->add_option("--confusion", ev.confusion, "identity or measured")->capture_default_str();
    ev_cmd->add_option("--residual-sigma", ev.residual_sigma)->capture_default_str();
    ev_cmd->add_option("--seed", ev.seed, "Backend seed");
    ev_cmd->add_option("--out", ev.out, "Per-point CSV (x0,x1,true,predicted,M)");
    ev_cmd->add_option("--jobs", ev.jobs)->capture_default_str();

    SweepArgs sw;
    auto *sw_cmd = app.add_subcommand("sweep", "Run a hyperparameter grid over seeds");
    sw_cmd->add_option("spec", sw.spec, "Sweep file")->required();
    sw_cmd->add_option("--grid", sw.grid, "Grid axis: dotted.key=[v1,v2,...]");
    sw_cmd->add_option("--set", sw.overrides, "Override a base config key");
    sw_cmd->add_option("--seeds", sw.seeds, "Comma-separated master seeds");
    sw_cmd->add_option("--output", sw.output, "Output directory");
    sw_cmd->add_option("--jobs", sw.jobs, "Concurrent cells");

    AnalyzeArgs an;
    std::optional<reup::AnalysisKind> kind;
    auto *an_cmd = app.add_subcommand("analyze", "Write report CSVs");
    an_cmd->require_subcommand(1);
    an_cmd->add_option("--output", an.output, "Output directory")->capture_default_str();
    an_cmd->add_option("--seed", an.seed, "Master seed");
    an_cmd->add_option("--jobs", an.jobs)->capture_default_str();
    an_cmd->add_option("--ansatz", an.ansatz)->capture_default_str();
    an_cmd->add_option("--layers", an.layers)->capture_default_str();
    an_cmd->fallthrough();
    for (const auto k : reup::kAllAnalyses) {
        auto *sub = an_cmd->add_subcommand(std::string(reup::to_string(k)));
        sub->callback([&kind, k] { kind = k; });
        switch (k) {
        case reup::AnalysisKind::Residuals:
            sub->add_option("--count", an.count, "Random circuits")->capture_default_str();
            sub->add_option("--shots", an.shot_count, "Shots per estimate (default 500)");
            sub->add_option("--confusion", an.confusion)->capture_default_str();
            sub->add_option("--residual-sigma", an.residual_sigma)->capture_default_str();
            sub->add_option("--calibration-shots", an.calibration_shots)->capture_default_str();
            break;
        case reup::AnalysisKind::NoiseScaling:
            sub->add_option("--shots", an.shots, "List a,b,c or range lo..hi[:step]")
                ->capture_default_str();
            sub->add_option("--repeats", an.repeats, "Repeats per point (default 20)");
            sub->add_option("--residual-sigma", an.residual_sigma)->capture_default_str();
            sub->add_option("--theta", an.theta);
            sub->add_option("--data", an.data);
            sub->add_option("--n", an.n, "Generated points when --data is absent")
                ->capture_default_str();
            break;
        case reup::AnalysisKind::GradientNoise:
            sub->add_option("--steps", an.steps)->capture_default_str();
            sub->add_option("--shots", an.shot_count, "Shots per estimate (default 150)");
            sub->add_option("--repeats", an.repeats, "Noisy repeats (default 10)");
            sub->add_option("--confusion", an.confusion)->capture_default_str();
            sub->add_option("--residual-sigma", an.residual_sigma)->capture_default_str();
            sub->add_option("--theta", an.theta);
            sub->add_option("--data", an.data);
            sub->add_option("--n", an.n)->capture_default_str();
            break;
        case reup::AnalysisKind::Landscape:
            sub->add_option("--grid-count", an.grid_count, "Points per axis")->capture_default_str();
            sub->add_option("--search-budget", an.search_budget)->capture_default_str();
            sub->add_option("--radius", an.radius)->capture_default_str();
            sub->add_option("--theta", an.theta);
            sub->add_option("--data", an.data);
            sub->add_option("--n", an.n)->capture_default_str();
            break;
        case reup::AnalysisKind::AnsatzSpread:
            sub->add_option("--sets", an.sets)->capture_default_str();
            sub->add_option("--data", an.data);
            sub->add_option("--n", an.n)->capture_default_str();
            break;
        case reup::AnalysisKind::TimeBudget:
            sub->add_option("--population", an.population)->capture_default_str();
            sub->add_option("--points", an.points)->capture_default_str();
            sub->add_option("--shots", an.shot_count, "Shots per estimate (default 150)");
            break;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*gen_cmd) {
            return cmd_gen_data(gen);
        }
        if (*train_cmd) {
            return cmd_train(train);
        }
        if (*ev_cmd) {
            return cmd_evaluate(ev);
        }
        if (*sw_cmd) {
            return cmd_sweep(sw);
        }
        if (*an_cmd && kind) {
            return cmd_analyze(*kind, an);
        }
    } catch (const reup::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const reup::BackendError &e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const reup::MitigationError &e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const reup::ParseError &e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kIo;
    } catch (const reup::IoError &e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const std::invalid_argument &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
