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


// Acceptance checks, one per criterion. Each prints a single
// "criterion N: PASS|FAIL ..." line; the exit code is nonzero on any failure.
//
//   acceptance                 run all criteria
//   acceptance --criterion N   run one

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "reup/reup.hpp"

using namespace reup;

namespace {

constexpr std::array<std::uint64_t, 5> kSeeds{1, 2, 3, 4, 5};

struct Outcome {
    bool pass{false};
    std::string detail;
};

class Timer {
  public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_{std::chrono::steady_clock::now()};
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << v;
    return s.str();
}

std::string list(const std::vector<double> &v, int digits = 3) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? " " : "") + fmt(v[i], digits);
    }
    return out + "]";
}

std::string runtime(double seconds) { return " (" + fmt(seconds, 2) + " s)"; }

ParameterVector reference_theta() { return {kReferenceTheta.begin(), kReferenceTheta.end()}; }

/// 2C, 4 layers, 250 training points, CE, ideal backend, GA with pop 50.
Json base_config(std::uint64_t seed) {
    Json j = Json::object();
    j["seed"] = seed;
    j["circuit"] = {{"ansatz", "2C"}, {"layers", 4}};
    j["dataset"] = {{"generate", {{"n", 250}}}};
    j["backend"] = {{"kind", "ideal"}};
    j["cost"] = "cross_entropy";
    j["optimizer"] = {{"kind", "ga"}, {"population_size", 50}, {"max_generations", 20}};
    return j;
}

RunOutput run(const Json &j) { return run_experiment(parse_config(j)); }

double max_trace_accuracy(const RunOutput &r) {
    return r.result.trace.cumulative_best_accuracy(r.result.trace.records.size());
}

Outcome criterion_1() {
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto theta = reference_theta();
    const Timer t;
    const double p1 = evaluate_angles(gate_angles(spec, theta, kReferencePoint)).p1;
    const double secs = t.seconds();
    const bool ok = std::abs(p1 - 0.337) <= 0.001 && secs < 1e-3;
    return {ok, "p1=" + fmt(p1, 5) + " target 0.337+-0.001, " + fmt(secs * 1e6, 1) + " us"};
}

Outcome criterion_2() {
    const Timer t;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> angle(-2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
    const IdealBackend b;
    double worst = 0.0;
    for (int inst = 0; inst < 1000; ++inst) {
        const auto a = kAllAnsatze[static_cast<std::size_t>(inst) % kAllAnsatze.size()];
        const CircuitSpec spec{a, 1 + static_cast<std::size_t>(inst % 4)};
        ParameterVector theta(spec.parameter_count());
        for (auto &v : theta) {
            v = angle(rng);
        }
        const auto d = generate(4, CircleSpec{}, 1000 + static_cast<std::uint64_t>(inst));
        for (const auto k : {CostKind::CrossEntropy, CostKind::ChiSquared}) {
            const auto an = gradient_analytic(k, spec, theta, d.points, b, 0).gradient;
            const auto sh = gradient_parameter_shift(k, spec, theta, d.points, b, 0).gradient;
            const auto fd = gradient_fd(k, spec, theta, d.points, b, 1e-6, 0);
            for (std::size_t i = 0; i < theta.size(); ++i) {
                worst = std::max({worst, std::abs(an[i] - sh[i]), std::abs(an[i] - fd[i]),
                                  std::abs(sh[i] - fd[i])});
            }
        }
    }
    const double secs = t.seconds();
    return {worst <= 1e-6 && secs < 10.0,
            "max disagreement " + std::to_string(worst) + " over 1000 instances" + runtime(secs)};
}

Outcome criterion_3() {
    const Timer t;
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto theta = reference_theta();
    const auto d = generate(250, CircleSpec{}, 1);
    const IdealBackend b;
    auto max_abs = [](const std::vector<double> &g) {
        double m = 0.0;
        for (const double v : g) {
            m = std::max(m, std::abs(v));
        }
        return m;
    };
    const double ce = max_abs(gradient_fd(CostKind::CrossEntropy, spec, theta, d.points, b, 0.01, 0));
    const double chi = max_abs(gradient_fd(CostKind::ChiSquared, spec, theta, d.points, b, 0.01, 0));
    const double acc = max_abs(gradient_fd(CostKind::Accuracy, spec, theta, d.points, b, 0.01, 0));
    const double secs = t.seconds();
    const bool ok = ce < 0.006 && chi < 0.006 && acc == 0.0 && secs < 5.0;
    return {ok, "max|grad| CE=" + fmt(ce) + " chi2=" + fmt(chi) + " (target < 0.006), accuracy=" +
                    fmt(acc) + " (target 0)" + runtime(secs)};
}

Outcome criterion_4() {
    const Timer t;
    std::vector<double> acc;
    for (const auto s : kSeeds) {
        acc.push_back(max_trace_accuracy(run(base_config(s))));
    }
    const double m = median(acc);
    const double secs = t.seconds();
    return {m >= 0.90 && secs < 300.0,
            "median best training accuracy " + fmt(m, 3) + " (target >= 0.90), seeds " + list(acc) +
                runtime(secs)};
}

Outcome criterion_5() {
    const Timer t;
    std::vector<double> small;
    std::vector<double> large;
    for (const auto s : kSeeds) {
        auto j = base_config(s);
        j["optimizer"]["max_generations"] = 25;
        large.push_back(max_trace_accuracy(run(j)));
        j["optimizer"]["population_size"] = 9;
        small.push_back(max_trace_accuracy(run(j)));
    }
    const double ms = median(small);
    const double ml = median(large);
    const double secs = t.seconds();
    return {ms < ml && secs < 300.0, "median after 25 generations: pop 9 " + fmt(ms, 3) +
                                         " " + list(small) + ", pop 50 " + fmt(ml, 3) + " " +
                                         list(large) + runtime(secs)};
}

Outcome criterion_6() {
    const Timer t;
    std::vector<double> ga;
    std::vector<double> bfgs;
    std::vector<double> bfgs_reach;
    std::vector<double> gd_reach;
    std::uint64_t budget = 0;
    auto reach = [](const RunOutput &r) {
        const auto e = r.result.trace.estimates_to_reach(0.85);
        return e == std::numeric_limits<std::uint64_t>::max() ? std::numeric_limits<double>::infinity()
                                                              : static_cast<double>(e);
    };
    for (const auto s : kSeeds) {
        auto j = base_config(s);
        const auto g = run(j);
        budget = g.spent.estimates;
        ga.push_back(max_trace_accuracy(g));

        j["optimizer"] = {{"kind", "bfgs_standard"},
                          {"gradient", {{"method", "analytic"}}},
                          {"max_iterations", 1000},
                          {"estimate_budget", budget}};
        const auto b = run(j);
        bfgs.push_back(b.result.trace.best_accuracy_within(budget));
        bfgs_reach.push_back(reach(b));

        j["optimizer"] = {{"kind", "gradient_descent"},
                          {"gradient", {{"method", "analytic"}}},
                          {"learning_rate", 0.5},
                          {"max_iterations", 100000},
                          {"estimate_budget", budget}};
        gd_reach.push_back(reach(run(j)));
    }
    const double mg = median(ga);
    const double mb = median(bfgs);
    const double rb = median(bfgs_reach);
    const double rg = median(gd_reach);
    const double secs = t.seconds();
    const bool ok = std::abs(mb - mg) <= 0.03 && rg > rb && secs < 600.0;
    return {ok, "budget " + std::to_string(budget) + " estimates: GA " + fmt(mg, 3) + " " + list(ga) +
                    ", BFGS " + fmt(mb, 3) + " " + list(bfgs) + "; estimates to 85%: BFGS " +
                    fmt(rb, 0) + ", GD " + fmt(rg, 0) + runtime(secs)};
}

Outcome criterion_7() {
    const Timer t;
    int stalled = 0;
    std::vector<double> gains;
    std::vector<double> ga;
    for (const auto s : kSeeds) {
        auto j = base_config(s);
        j["backend"] = {{"kind", "noisy"}, {"confusion", "measured"}, {"shots", 150}};
        const auto g = run(j);
        const auto train = generate(250, CircleSpec{}, s);
        ga.push_back(exact_accuracy(CircuitSpec{Ansatz::C2, 4}, g.result.best_theta, train.points));

        j["optimizer"] = {{"kind", "bfgs_standard"},
                          {"gradient", {{"method", "finite_difference"}, {"step", 0.5}}},
                          {"max_iterations", 20}};
        const auto b = run(j);
        const auto &recs = b.result.trace.records;
        std::size_t at6 = 0;
        while (at6 + 1 < recs.size() && recs[at6 + 1].iter <= 6) {
            ++at6;
        }
        const double gain = b.result.trace.cumulative_best_accuracy(recs.size()) -
                            b.result.trace.cumulative_best_accuracy(at6);
        gains.push_back(gain);
        stalled += gain <= 0.02 ? 1 : 0;
    }
    const double mg = median(ga);
    const double secs = t.seconds();
    return {stalled >= 3 && mg >= 0.88 && secs < 900.0,
            "FD-BFGS stalled after iteration 6 in " + std::to_string(stalled) +
                "/5 seeds (gains " + list(gains) + "), noisy GA median " + fmt(mg, 3) + " " + list(ga) +
                " (target >= 0.88)" + runtime(secs)};
}

Outcome criterion_8() {
    const Timer t;
    ResidualsOptions o;
    o.count = 250;
    o.shots = 500;
    o.seed = 8;
    const NoisyBackend backend(NoiseModel{o.confusion, o.shots, 0.0, o.seed});
    const auto raw = sample_pairs(o.circuit, o.count, backend, o.seed);
    const NoisyBackend calib(NoiseModel{o.confusion, o.calibration_shots, 0.0, o.seed + 1});
    const auto cal = calibrate(calib, o.calibration_shots, o.circuit.layers);
    const auto before = residual_analysis(raw);
    const auto after = residual_analysis(mitigate_pairs(raw, cal));
    const double secs = t.seconds();
    const bool ok = std::abs(before.slope - 0.60) <= 0.02 && std::abs(before.intercept - 0.24) <= 0.02 &&
                    std::abs(after.slope - 1.0) <= 0.03 && std::abs(after.intercept) <= 0.02 &&
                    secs < 60.0;
    return {ok, "unmitigated slope " + fmt(before.slope) + " intercept " + fmt(before.intercept) +
                    ", mitigated slope " + fmt(after.slope) + " intercept " + fmt(after.intercept) +
                    runtime(secs)};
}

Outcome criterion_9() {
    const Timer t;
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto theta = reference_theta();
    const auto d = generate(250, CircleSpec{}, 9);
    const auto shots = parse_shot_list("60..750:30");
    const auto clean = noise_scaling(spec, theta, d.points, shots, 0.0, 20, 9);
    const std::vector<unsigned> at1000{100, 1000};
    const auto floored = noise_scaling(spec, theta, d.points, at1000, 0.006, 20, 10);
    const auto &row = floored.rows.back();
    const double secs = t.seconds();
    const bool ok = std::abs(clean.exponent + 0.5) <= 0.05 &&
                    std::abs(row.excess_std - 0.006) <= 0.2 * 0.006 && secs < 120.0;
    return {ok, "exponent " + fmt(clean.exponent) + " (target -0.5+-0.05); at N=1000 with floor 0.006: "
                    "excess std " + fmt(row.excess_std, 5) + ", total std " + fmt(row.std, 5) +
                    ", binomial " + fmt(row.binomial_std, 5) + runtime(secs)};
}

Outcome criterion_10() {
    const Timer t;
    const CircuitSpec spec{Ansatz::C2, 4};
    const auto r = run(base_config(1));
    const auto train = generate(250, CircleSpec{}, 1);
    const auto test = generate(1000, CircleSpec{}, derive_seed(1, {tag(Stream::Dataset), 1}));
    const double a_train = exact_accuracy(spec, r.result.best_theta, train.points);
    const double a_test = exact_accuracy(spec, r.result.best_theta, test.points);
    const double secs = t.seconds();
    return {std::abs(a_train - a_test) <= 0.03 && secs < 60.0,
            "train " + fmt(a_train, 3) + ", fresh 1000-point test " + fmt(a_test, 3) + runtime(secs)};
}

Outcome criterion_11() {
    const Timer t;
    const CircuitSpec half{Ansatz::D2, 1};
    const std::vector<double> half_theta{std::numbers::pi / 2, 0.0, 0.0, 0.0};
    const auto d = generate(250, CircleSpec{}, 11);
    const IdealBackend b;
    const double ce = cross_entropy(half, half_theta, d, b);
    const double chi = chi_squared(half, half_theta, d, b);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> angle(-2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
    const CircuitSpec spec{Ansatz::C2, 4};
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        ParameterVector theta(16);
        for (auto &v : theta) {
            v = angle(rng);
        }
        const auto pts = generate(5, CircleSpec{}, 5000 + static_cast<std::uint64_t>(i));
        const double v = exact_loss(CostKind::ChiSquared, spec, theta, pts.points);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const bool ok = std::abs(ce - std::log(2.0)) <= 1e-12 && std::abs(chi - 0.25) <= 1e-12 &&
                    lo >= 0.0 && hi <= 1.0;
    return {ok, "CE-ln2 " + std::to_string(ce - std::log(2.0)) + ", chi2-0.25 " +
                    std::to_string(chi - 0.25) + ", chi2 range [" + fmt(lo) + ", " + fmt(hi) + "]" +
                    runtime(t.seconds())};
}

Outcome criterion_12() {
    const Timer t;
    std::vector<Json> configs;
    auto ga = base_config(12);
    ga["backend"] = {{"kind", "noisy"}, {"confusion", "measured"}, {"shots", 150}};
    ga["optimizer"]["max_generations"] = 5;
    configs.push_back(ga);
    auto bfgs = base_config(12);
    bfgs["backend"] = ga["backend"];
    bfgs["optimizer"] = {{"kind", "bfgs_standard"},
                         {"gradient", {{"method", "finite_difference"}, {"step", 0.5}}},
                         {"max_iterations", 5}};
    configs.push_back(bfgs);
    auto sgd = base_config(12);
    sgd["backend"] = ga["backend"];
    sgd["optimizer"] = {{"kind", "sgd"}, {"batch_size", 25}, {"max_iterations", 20},
                        {"gradient", {{"method", "parameter_shift"}}}};
    configs.push_back(sgd);
    bool ok = true;
    std::string detail;
    for (const auto &c : configs) {
        const auto archived = resolve(parse_config(c));
        auto j1 = archived;
        j1["jobs"] = 1;
        auto j8 = archived;
        j8["jobs"] = 8;
        const auto a = run(j1).result.trace.to_csv();
        const auto b = run(j8).result.trace.to_csv();
        const bool same = a == b;
        ok = ok && same;
        detail += std::string(detail.empty() ? "" : ", ") + archived["optimizer"]["kind"].get<std::string>() +
                  (same ? " identical" : " DIFFERENT");
    }
    return {ok, detail + runtime(t.seconds())};
}

Outcome criterion_13() {
    const TimeBudget b{};
    const double estimates = 50.0 * 250.0;
    const double minutes =
        estimate_time({static_cast<std::uint64_t>(estimates), static_cast<std::uint64_t>(estimates * 150.0)},
                      b) /
        60.0;
    return {std::abs(minutes - 330.0) <= 10.0, fmt(minutes, 2) + " min per generation (target 330+-10)"};
}

const std::array<std::function<Outcome()>, 13> kCriteria{
    criterion_1, criterion_2,  criterion_3,  criterion_4,  criterion_5,  criterion_6, criterion_7,
    criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13};

} // namespace

int main(int argc, char **argv) {
    std::vector<std::size_t> which;
    if (argc == 3 && std::string(argv[1]) == "--criterion") {
        const long n = std::strtol(argv[2], nullptr, 10);
        if (n < 1 || n > static_cast<long>(kCriteria.size())) {
            std::fprintf(stderr, "criterion must be 1..%zu\n", kCriteria.size());
            return 2;
        }
        which.push_back(static_cast<std::size_t>(n));
    } else if (argc == 1) {
        for (std::size_t i = 1; i <= kCriteria.size(); ++i) {
            which.push_back(i);
        }
    } else {
        std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
        return 2;
    }
    int failures = 0;
    for (const auto n : which) {
        Outcome o;
        try {
            o = kCriteria[n - 1]();
        } catch (const std::exception &e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("criterion %zu: %s %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
