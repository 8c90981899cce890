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
 * @file ga.hpp
 * Real-valued genetic algorithm over circuit parameter vectors.
 *
 * Each generation: elites are copied unchanged, the rest of the population
 * is bred from selected parents by crossover and mutation, and the whole
 * new population is re-measured on the backend. The best chromosome ever
 * measured is returned.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reup/backend.hpp"
#include "reup/circuit.hpp"
#include "reup/cost.hpp"
#include "reup/dataset.hpp"
#include "reup/parallel.hpp"
#include "reup/rng.hpp"
#include "reup/trace.hpp"

namespace reup {

enum class SelectionKind { SteadyState, RouletteWheel, StochasticUniversal, Rank, Random, Tournament };
enum class CrossoverKind { SinglePoint, TwoPoint, Scattered };

inline constexpr std::array<SelectionKind, 6> kAllSelections{
    SelectionKind::SteadyState, SelectionKind::RouletteWheel, SelectionKind::StochasticUniversal,
    SelectionKind::Rank,        SelectionKind::Random,        SelectionKind::Tournament};

inline constexpr std::array<CrossoverKind, 3> kAllCrossovers{
    CrossoverKind::SinglePoint, CrossoverKind::TwoPoint, CrossoverKind::Scattered};

constexpr std::string_view to_string(SelectionKind k) noexcept {
    switch (k) {
    case SelectionKind::SteadyState:
        return "sss";
    case SelectionKind::RouletteWheel:
        return "rws";
    case SelectionKind::StochasticUniversal:
        return "sus";
    case SelectionKind::Rank:
        return "rank";
    case SelectionKind::Random:
        return "random";
    case SelectionKind::Tournament:
        return "tournament";
    }
    return "?";
}

constexpr std::string_view to_string(CrossoverKind k) noexcept {
    switch (k) {
    case CrossoverKind::SinglePoint:
        return "single_point";
    case CrossoverKind::TwoPoint:
        return "two_point";
    case CrossoverKind::Scattered:
        return "scattered";
    }
    return "?";
}

inline SelectionKind parse_selection(std::string_view s) {
    for (const auto k : kAllSelections) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw std::invalid_argument("unknown selection '" + std::string(s) + "'");
}

inline CrossoverKind parse_crossover(std::string_view s) {
    for (const auto k : kAllCrossovers) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw std::invalid_argument("unknown crossover '" + std::string(s) + "'");
}

struct Interval {
    double lo{-std::numbers::pi};
    double hi{std::numbers::pi};

    [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
    friend bool operator==(const Interval &, const Interval &) = default;
};

struct MutationSpec {
    enum class Kind { Fixed, Decaying };

    Kind kind{Kind::Decaying};
    double rate{0.2};       ///< fixed: per-gene replacement probability
    double mask_base{0.95}; ///< decaying: per-gene probability mask_base^t
    double scale{-0.5};     ///< decaying: perturbation factor t^scale
    double delta_halfwidth{0.5};

    void validate() const {
        if (!(rate >= 0.0 && rate <= 1.0)) {
            throw std::invalid_argument("mutation rate must lie in [0, 1]");
        }
        if (!(mask_base > 0.0 && mask_base <= 1.0)) {
            throw std::invalid_argument("mask_base must lie in (0, 1]");
        }
        if (!(delta_halfwidth >= 0.0)) {
            throw std::invalid_argument("delta_halfwidth must be nonnegative");
        }
    }

    /// Probability that any one gene mutates at generation t.
    [[nodiscard]] double gene_probability(std::size_t t) const {
        return kind == Kind::Fixed ? rate : std::pow(mask_base, static_cast<double>(t));
    }

    /// t^scale, with t = 0 mapped to 1.
    [[nodiscard]] double decay_factor(std::size_t t) const {
        return t == 0 ? 1.0 : std::pow(static_cast<double>(t), scale);
    }

    /// Largest additive change a decaying mutation can make at generation t.
    [[nodiscard]] double max_perturbation(std::size_t t) const {
        return delta_halfwidth * decay_factor(t);
    }
};

struct GAConfig {
    std::size_t population_size{50};
    SelectionKind selection{SelectionKind::SteadyState};
    CrossoverKind crossover{CrossoverKind::Scattered};
    MutationSpec mutation{};
    std::size_t elitism_count{2};
    Interval init_range{};
    std::size_t max_generations{20};
    double target_accuracy{1.0};
    CostKind fitness{CostKind::CrossEntropy};
    std::uint64_t seed{0};
    std::size_t tournament_size{3};
    double parent_fraction{0.5}; ///< steady-state mating pool, as a fraction of the population
    std::uint64_t estimate_budget{0}; ///< stop once this many estimates are spent; 0 = none
    unsigned jobs{1};

    void validate() const {
        if (population_size < 2) {
            throw std::invalid_argument("population_size must be at least 2");
        }
        if (elitism_count >= population_size) {
            throw std::invalid_argument("elitism_count must be smaller than population_size");
        }
        if (!(init_range.hi > init_range.lo)) {
            throw std::invalid_argument("init_range must be a nonempty interval");
        }
        if (tournament_size < 1) {
            throw std::invalid_argument("tournament_size must be at least 1");
        }
        if (!(parent_fraction > 0.0 && parent_fraction <= 1.0)) {
            throw std::invalid_argument("parent_fraction must lie in (0, 1]");
        }
        mutation.validate();
    }
};

struct Chromosome {
    ParameterVector genes;
    double fitness{-std::numeric_limits<double>::infinity()};
    double accuracy{0.0};
    double loss{0.0};
};

namespace detail {

inline std::size_t weighted_pick(std::span<const double> cumulative, Engine &rng) {
    const double total = cumulative.back();
    const double u = uniform01(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                 cumulative.size() - 1);
}

/// Shifted fitness (f - min f) as selection weights; uniform when all equal.
inline std::vector<double> proportional_weights(std::span<const double> fitness,
                                                std::span<const std::size_t> members) {
    double lo = std::numeric_limits<double>::infinity();
    for (const double f : fitness) {
        lo = std::min(lo, f);
    }
    std::vector<double> w(members.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        w[i] = fitness[members[i]] - lo;
        sum += w[i];
    }
    if (!(sum > 0.0)) {
        std::fill(w.begin(), w.end(), 1.0);
    }
    return w;
}

inline std::vector<double> cumulative(std::span<const double> w) {
    std::vector<double> c(w.size());
    std::partial_sum(w.begin(), w.end(), c.begin());
    return c;
}

/// Indices sorted by decreasing fitness, ties by index.
inline std::vector<std::size_t> rank_order(std::span<const double> fitness) {
    std::vector<std::size_t> idx(fitness.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    return idx;
}

} // namespace detail

/// Rank weights: the worst individual gets 1, the best n; ties share the mean rank.
inline std::vector<double> rank_weights(std::span<const double> fitness) {
    const std::size_t n = fitness.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && fitness[idx[j + 1]] == fitness[idx[i]]) {
            ++j;
        }
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            w[idx[k]] = mean_rank;
        }
        i = j + 1;
    }
    return w;
}

/**
 * Choose `count` parent indices.
 *
 * Steady-state draws fitness-proportionally from the best `parent_fraction`
 * of the population; roulette and stochastic-universal use shifted fitness
 * (f - min f) so negative losses work; tournament samples distinct
 * contestants, so a tournament as large as the population always returns
 * the best individual.
 */
inline std::vector<std::size_t> select_parents(std::span<const double> fitness, SelectionKind kind,
                                               std::size_t count, Engine &rng,
                                               std::size_t tournament_size = 3,
                                               double parent_fraction = 0.5) {
    const std::size_t n = fitness.size();
    if (n == 0) {
        throw std::invalid_argument("cannot select from an empty population");
    }
    for (const double f : fitness) {
        if (!std::isfinite(f)) {
            throw std::invalid_argument("fitness values must be finite");
        }
    }
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> out;
    out.reserve(count);

    switch (kind) {
    case SelectionKind::SteadyState: {
        auto order = detail::rank_order(fitness);
        const auto pool = static_cast<std::size_t>(std::ceil(parent_fraction * static_cast<double>(n)));
        order.resize(std::clamp<std::size_t>(pool, 1, n));
        const auto cum = detail::cumulative(detail::proportional_weights(fitness, order));
        for (std::size_t c = 0; c < count; ++c) {
            out.push_back(order[detail::weighted_pick(cum, rng)]);
        }
        break;
    }
    case SelectionKind::RouletteWheel: {
        const auto cum = detail::cumulative(detail::proportional_weights(fitness, all));
        for (std::size_t c = 0; c < count; ++c) {
            out.push_back(detail::weighted_pick(cum, rng));
        }
        break;
    }
    case SelectionKind::StochasticUniversal: {
        if (count == 0) {
            break;
        }
        const auto cum = detail::cumulative(detail::proportional_weights(fitness, all));
        const double spacing = cum.back() / static_cast<double>(count);
        double pointer = uniform01(rng) * spacing;
        std::size_t i = 0;
        for (std::size_t c = 0; c < count; ++c, pointer += spacing) {
            while (i + 1 < n && cum[i] <= pointer) {
                ++i;
            }
            out.push_back(i);
        }
        break;
    }
    case SelectionKind::Rank: {
        const auto cum = detail::cumulative(rank_weights(fitness));
        for (std::size_t c = 0; c < count; ++c) {
            out.push_back(detail::weighted_pick(cum, rng));
        }
        break;
    }
    case SelectionKind::Random:
        for (std::size_t c = 0; c < count; ++c) {
            out.push_back(uniform_index(rng, n));
        }
        break;
    case SelectionKind::Tournament: {
        const std::size_t k = std::min(std::max<std::size_t>(tournament_size, 1), n);
        std::vector<std::size_t> pool = all;
        for (std::size_t c = 0; c < count; ++c) {
            // partial Fisher-Yates: first k entries become the contestants
            for (std::size_t j = 0; j < k; ++j) {
                std::swap(pool[j], pool[j + uniform_index(rng, n - j)]);
            }
            std::size_t best = pool[0];
            for (std::size_t j = 1; j < k; ++j) {
                const std::size_t cand = pool[j];
                if (fitness[cand] > fitness[best] || (fitness[cand] == fitness[best] && cand < best)) {
                    best = cand;
                }
            }
            out.push_back(best);
        }
        break;
    }
    }
    return out;
}

using ChildPair = std::pair<ParameterVector, ParameterVector>;

/// Child a takes b's gene wherever mask is set; child b the reverse.
inline ChildPair crossover_masked(std::span<const double> a, std::span<const double> b,
                                  const std::vector<bool> &mask) {
    if (a.size() != b.size() || mask.size() != a.size()) {
        throw std::invalid_argument("crossover needs equal-length parents and mask");
    }
    ChildPair c{ParameterVector(a.begin(), a.end()), ParameterVector(b.begin(), b.end())};
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (mask[i]) {
            std::swap(c.first[i], c.second[i]);
        }
    }
    return c;
}

/// Swap genes in [lo, hi) between the parents.
inline ChildPair crossover_segment(std::span<const double> a, std::span<const double> b,
                                   std::size_t lo, std::size_t hi) {
    std::vector<bool> mask(a.size(), false);
    for (std::size_t i = lo; i < hi && i < mask.size(); ++i) {
        mask[i] = true;
    }
    return crossover_masked(a, b, mask);
}

inline ChildPair crossover(std::span<const double> a, std::span<const double> b, CrossoverKind kind,
                           Engine &rng) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("crossover needs parents of equal length");
    }
    const std::size_t n = a.size();
    switch (kind) {
    case CrossoverKind::SinglePoint: {
        if (n < 2) {
            return crossover_segment(a, b, 0, 0);
        }
        const std::size_t k = 1 + uniform_index(rng, n - 1); // [1, n-1]
        return crossover_segment(a, b, k, n);
    }
    case CrossoverKind::TwoPoint: {
        if (n < 3) {
            return crossover(a, b, CrossoverKind::SinglePoint, rng);
        }
        std::size_t k1 = 1 + uniform_index(rng, n - 1);
        std::size_t k2 = 1 + uniform_index(rng, n - 2);
        if (k2 >= k1) {
            ++k2;
        }
        if (k1 > k2) {
            std::swap(k1, k2);
        }
        return crossover_segment(a, b, k1, k2);
    }
    case CrossoverKind::Scattered: {
        std::vector<bool> mask(n);
        for (std::size_t i = 0; i < n; ++i) {
            mask[i] = bernoulli(rng, 0.5);
        }
        return crossover_masked(a, b, mask);
    }
    }
    throw std::invalid_argument("unknown crossover kind");
}

/// Mutate in place at generation t.
inline void mutate(ParameterVector &genes, std::size_t t, const MutationSpec &spec,
                   Interval init_range, Engine &rng) {
    const double p = spec.gene_probability(t);
    const double factor = spec.decay_factor(t);
    for (auto &g : genes) {
        if (!bernoulli(rng, p)) {
            continue;
        }
        if (spec.kind == MutationSpec::Kind::Fixed) {
            g = uniform(rng, init_range.lo, init_range.hi);
        } else {
            g += uniform(rng, -spec.delta_halfwidth, spec.delta_halfwidth) * factor;
        }
    }
}

/// Mean pairwise Euclidean distance between chromosomes.
inline double diversity(std::span<const ParameterVector> population) {
    const std::size_t n = population.size();
    if (n < 2) {
        throw std::invalid_argument("diversity needs at least two chromosomes");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < population[i].size(); ++k) {
                const double d = population[i][k] - population[j][k];
                d2 += d * d;
            }
            sum += std::sqrt(d2);
        }
    }
    return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

inline double fitness_of(CostKind k, const Evaluation &e) noexcept {
    return k == CostKind::Accuracy ? e.accuracy : -e.loss;
}

inline TrainResult ga_train(const GAConfig &config, const CircuitSpec &spec, const Dataset &data,
                            const Backend &backend, const TimeBudget &budget = {}) {
    config.validate();
    spec.validate();
    if (data.empty()) {
        throw std::invalid_argument("training set is empty");
    }
    const std::size_t dim = spec.parameter_count();
    const std::size_t S = config.population_size;
    TraceRecorder recorder(backend, budget);
    TrainResult result;

    std::vector<Chromosome> pop(S);
    {
        auto rng = make_engine(config.seed, {tag(Stream::Init)});
        for (auto &c : pop) {
            c.genes.resize(dim);
            for (auto &g : c.genes) {
                g = uniform(rng, config.init_range.lo, config.init_range.hi);
            }
        }
    }

    Chromosome best;
    auto measure = [&](std::size_t generation) {
        std::vector<Evaluation> evals(S);
        parallel_for(S, config.jobs, [&](std::size_t i) {
            const auto key = derive_seed(config.seed, {tag(Stream::Fitness), generation, i});
            try {
                evals[i] = evaluate(config.fitness, spec, pop[i].genes, data.points, backend, key);
            } catch (const BackendError &e) {
                throw BackendError("generation " + std::to_string(generation) + ": " + e.what());
            }
        });
        double best_acc = 0.0;
        double best_loss = std::numeric_limits<double>::infinity();
        std::vector<ParameterVector> genes(S);
        for (std::size_t i = 0; i < S; ++i) {
            pop[i].accuracy = evals[i].accuracy;
            pop[i].loss = evals[i].loss;
            pop[i].fitness = fitness_of(config.fitness, evals[i]);
            best_acc = std::max(best_acc, evals[i].accuracy);
            best_loss = std::min(best_loss, evals[i].loss);
            genes[i] = pop[i].genes;
            if (pop[i].fitness > best.fitness) {
                best = pop[i];
            }
        }
        recorder.record(result.trace, generation, best_acc, best_loss, diversity(genes));
        return best_acc;
    };

    double generation_best = measure(0);
    for (std::size_t gen = 1; gen <= config.max_generations; ++gen) {
        if (generation_best >= config.target_accuracy) {
            break;
        }
        if (config.estimate_budget > 0 && recorder.spent().estimates >= config.estimate_budget) {
            break;
        }
        std::vector<double> fitness(S);
        for (std::size_t i = 0; i < S; ++i) {
            fitness[i] = pop[i].fitness;
        }
        const auto order = detail::rank_order(fitness);

        std::vector<Chromosome> next;
        next.reserve(S);
        for (std::size_t e = 0; e < config.elitism_count; ++e) {
            next.push_back(pop[order[e]]);
        }

        const std::size_t need = S - next.size();
        auto sel_rng = make_engine(config.seed, {tag(Stream::Selection), gen});
        auto cross_rng = make_engine(config.seed, {tag(Stream::Crossover), gen});
        auto mut_rng = make_engine(config.seed, {tag(Stream::Mutation), gen});
        const auto parents = select_parents(fitness, config.selection, 2 * ((need + 1) / 2),
                                            sel_rng, config.tournament_size,
                                            config.parent_fraction);
        for (std::size_t p = 0; p + 1 < parents.size() && next.size() < S; p += 2) {
            auto [a, b] = crossover(pop[parents[p]].genes, pop[parents[p + 1]].genes,
                                    config.crossover, cross_rng);
            mutate(a, gen, config.mutation, config.init_range, mut_rng);
            mutate(b, gen, config.mutation, config.init_range, mut_rng);
            next.push_back({std::move(a)});
            if (next.size() < S) {
                next.push_back({std::move(b)});
            }
        }
        pop = std::move(next);
        generation_best = measure(gen);
    }

    result.best_theta = best.genes;
    result.best_accuracy = best.accuracy;
    result.best_loss = best.loss;
    return result;
}

} // namespace reup
