#pragma once

/// @file ga_engine.hpp
/// @brief Generational GA over canonical TSP tours with genealogy bookkeeping.
///
/// Each generation produces exactly N individuals. Every individual carries
/// the id of its dominant parent (the genealogical edge) and lifecycle flags,
/// and every slot is reported as a BirthRecord for the genealogy module.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <genlab/rng.hpp>
#include <genlab/tsp_instance.hpp>

namespace genlab {

/// (i, j): i-th birth (1-based) of generation j (1-based).
struct NodeId {
    int i = 0;
    int j = 0;
    auto operator<=>(const NodeId&) const = default;
};

struct GaConfig {
    std::size_t population_size = 100;
    double crossover_prob = 0.9;
    double mutation_prob = 0.05;
    bool elitism = false;
    std::optional<int> max_age;
    std::optional<int> edge_cap;
    int max_generations = 500;
    std::uint64_t seed = 1;
    bool reverse_insertion = true;

    void validate() const {
        if (population_size < 2) {
            throw std::invalid_argument("population_size must be at least 2");
        }
        if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) {
            throw std::invalid_argument("crossover_prob must lie in [0,1]");
        }
        if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) {
            throw std::invalid_argument("mutation_prob must lie in [0,1]");
        }
        if (max_age && *max_age < 1) {
            throw std::invalid_argument("max_age must be at least 1");
        }
        if (edge_cap && *edge_cap < 1) {
            throw std::invalid_argument("edge_cap must be at least 1");
        }
        if (max_generations < 1) {
            throw std::invalid_argument("max_generations must be at least 1");
        }
    }
};

struct Individual {
    NodeId id;
    Tour tour;
    double length = 0.0;
    double fitness = 0.0;
    std::optional<NodeId> dominant_parent;
    std::optional<NodeId> other_parent;
    bool uncoupled = false;
    bool is_clone = false;
    int age = 0;
};

struct BirthRecord {
    NodeId child;
    std::optional<NodeId> dominant_parent;
    int generation = 0;
    bool is_clone = false;
    bool uncoupled = false;

    bool operator==(const BirthRecord&) const = default;
};

struct GenerationSummary {
    int generation = 0;
    double best_length = 0.0;
    double mean_length = 0.0;
    bool fitness_balance = false; // every individual has the same fitness
    std::size_t clones = 0;
    std::size_t uncoupled = 0;
};

/// Maximization score for roulette selection.
inline double fitness_transform(double length) {
    if (!(length > 0.0)) {
        throw std::invalid_argument("fitness_transform: length must be positive");
    }
    return 1.0 / length;
}

/// Cumulative-sum roulette over a fixed fitness vector.
class RouletteWheel {
  public:
    explicit RouletteWheel(std::span<const double> fitness) {
        if (fitness.empty()) {
            throw std::invalid_argument("roulette: empty population");
        }
        cumulative_.reserve(fitness.size());
        double acc = 0.0;
        for (double f : fitness) {
            if (!(f > 0.0)) {
                throw std::invalid_argument("roulette: fitness must be positive");
            }
            acc += f;
            cumulative_.push_back(acc);
        }
    }

    std::size_t operator()(Rng& rng) const {
        const double r = std::uniform_real_distribution<double>(0.0, cumulative_.back())(rng);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
        if (it == cumulative_.end()) {
            --it;
        }
        return static_cast<std::size_t>(it - cumulative_.begin());
    }

  private:
    std::vector<double> cumulative_;
};

inline std::size_t roulette_index(std::span<const Individual> pop, Rng& rng) {
    std::vector<double> fitness;
    fitness.reserve(pop.size());
    for (const auto& ind : pop) {
        fitness.push_back(ind.fitness);
    }
    return RouletteWheel(fitness)(rng);
}

inline const Individual& roulette_select(std::span<const Individual> pop, Rng& rng) {
    return pop[roulette_index(pop, rng)];
}

namespace detail {

// succ/pred lookup for undirected adjacency tests.
struct Adjacency {
    std::vector<int> succ;
    std::vector<int> pred;

    explicit Adjacency(const Tour& t) : succ(t.size()), pred(t.size()) {
        const std::size_t n = t.size();
        for (std::size_t k = 0; k < n; ++k) {
            succ[t[k]] = t[(k + 1) % n];
            pred[t[k]] = t[(k + n - 1) % n];
        }
    }

    bool has(int a, int b) const noexcept { return succ[a] == b || pred[a] == b; }
};

inline std::size_t shared_edges(const Tour& t, const Adjacency& other) {
    std::size_t count = 0;
    const std::size_t n = t.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (other.has(t[k], t[(k + 1) % n])) {
            ++count;
        }
    }
    return count;
}

} // namespace detail

inline std::size_t shared_edge_count(const Tour& a, const Tour& b) {
    return detail::shared_edges(a, detail::Adjacency(b));
}

struct CrossoverResult {
    Tour child;
    int dominant = 0; // 0: first parent, 1: second parent
    std::size_t shared_first = 0;
    std::size_t shared_second = 0;
    bool fallback_used = false;
};

/// Enhanced edge recombination.
///
/// Every city gets an edge list drawn from both parents (p1 successor, p1
/// predecessor, p2 successor, p2 predecessor; duplicates merged and flagged
/// as common). Starting from city 0 the walk prefers common edges, then the
/// candidate with the fewest remaining entries; remaining ties go to the
/// earliest entry. If the current list is empty, the next city is drawn
/// uniformly from the unvisited ones.
inline CrossoverResult eer_crossover(const Tour& p1, const Tour& p2, double fitness1,
                                     double fitness2, Rng& rng) {
    const std::size_t n = p1.size();
    if (p2.size() != n || n < 3) {
        throw std::invalid_argument("eer_crossover: parents must be tours over the same instance");
    }
    const detail::Adjacency a1(p1);
    const detail::Adjacency a2(p2);

    struct EdgeList {
        std::array<int, 4> city{};
        std::array<bool, 4> common{};
        int size = 0;
    };
    std::vector<EdgeList> full(n);
    for (std::size_t c = 0; c < n; ++c) {
        auto& list = full[c];
        const int candidates[4] = {a1.succ[c], a1.pred[c], a2.succ[c], a2.pred[c]};
        for (int nb : candidates) {
            if (std::find(list.city.begin(), list.city.begin() + list.size, nb) ==
                list.city.begin() + list.size) {
                list.city[list.size] = nb;
                list.common[list.size] = a1.has(static_cast<int>(c), nb) &&
                                         a2.has(static_cast<int>(c), nb);
                ++list.size;
            }
        }
    }
    std::vector<EdgeList> remaining = full;
    std::vector<char> visited(n, 0);

    auto visit = [&](int c) {
        visited[c] = 1;
        for (int k = 0; k < full[c].size; ++k) {
            auto& list = remaining[full[c].city[k]];
            for (int m = 0; m < list.size; ++m) {
                if (list.city[m] == c) {
                    for (int s = m; s + 1 < list.size; ++s) {
                        list.city[s] = list.city[s + 1];
                        list.common[s] = list.common[s + 1];
                    }
                    --list.size;
                    break;
                }
            }
        }
    };

    CrossoverResult out;
    out.child.cities.reserve(n);
    out.child.cities.push_back(0);
    visit(0);
    int current = 0;
    while (out.child.size() < n) {
        const auto& list = remaining[current];
        int next = -1;
        if (list.size == 0) {
            out.fallback_used = true;
            std::vector<int> open;
            for (std::size_t c = 0; c < n; ++c) {
                if (!visited[c]) {
                    open.push_back(static_cast<int>(c));
                }
            }
            next = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
        } else {
            bool any_common = false;
            for (int k = 0; k < list.size; ++k) {
                any_common = any_common || list.common[k];
            }
            int best_size = 5;
            for (int k = 0; k < list.size; ++k) {
                if (any_common && !list.common[k]) {
                    continue;
                }
                const int candidate = list.city[k];
                if (remaining[candidate].size < best_size) {
                    best_size = remaining[candidate].size;
                    next = candidate;
                }
            }
        }
        out.child.cities.push_back(next);
        visit(next);
        current = next;
    }

    out.shared_first = detail::shared_edges(out.child, a1);
    out.shared_second = detail::shared_edges(out.child, a2);
    if (out.shared_first != out.shared_second) {
        out.dominant = out.shared_first > out.shared_second ? 0 : 1;
    } else if (fitness1 != fitness2) {
        out.dominant = fitness1 > fitness2 ? 0 : 1;
    } else {
        out.dominant = 0;
    }
    return out;
}

inline std::pair<Tour, NodeId> eer_crossover(const Individual& p1, const Individual& p2, Rng& rng) {
    auto r = eer_crossover(p1.tour, p2.tour, p1.fitness, p2.fitness, rng);
    return {std::move(r.child), r.dominant == 0 ? p1.id : p2.id};
}

/// Reverses positions [first, last] (inclusive); position 0 is never touched.
inline Tour invert_span(const Tour& t, std::size_t first, std::size_t last) {
    if (first < 1 || last >= t.size() || first >= last) {
        throw std::invalid_argument("invert_span: need 1 <= first < last < n");
    }
    Tour out = t;
    std::reverse(out.cities.begin() + static_cast<std::ptrdiff_t>(first),
                 out.cities.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    return out;
}

/// Sub-string inversion over a uniformly chosen span of length >= 2 within 1..n-1.
inline Tour inversion_mutate(const Tour& t, Rng& rng) {
    const std::size_t n = t.size();
    if (n < 3) {
        return t;
    }
    std::size_t a = std::uniform_int_distribution<std::size_t>(1, n - 1)(rng);
    std::size_t b = std::uniform_int_distribution<std::size_t>(1, n - 2)(rng);
    if (b >= a) {
        ++b;
    }
    return invert_span(t, std::min(a, b), std::max(a, b));
}

inline BirthRecord record_of(const Individual& ind) {
    return BirthRecord{ind.id, ind.dominant_parent, ind.id.j, ind.is_clone, ind.uncoupled};
}

/// For every tour repeated in `pop` whose reverse is absent, the last duplicate
/// slot becomes an uncoupled individual carrying the reversed tour. Presence
/// is judged on the input population, so replacements never cascade.
inline std::vector<Individual> reverse_insertion(std::vector<Individual> pop) {
    std::unordered_map<Tour, std::vector<std::size_t>, TourHash> slots;
    std::vector<const Tour*> first_seen;
    for (std::size_t s = 0; s < pop.size(); ++s) {
        auto [it, inserted] = slots.try_emplace(pop[s].tour);
        it->second.push_back(s);
        if (inserted) {
            first_seen.push_back(&it->first);
        }
    }
    std::vector<std::size_t> replace;
    for (const Tour* tour : first_seen) {
        const auto& where = slots.at(*tour);
        if (where.size() > 1 && !slots.contains(reverse_tour(*tour))) {
            replace.push_back(where.back());
        }
    }
    for (std::size_t s : replace) {
        Individual& ind = pop[s];
        ind.tour = reverse_tour(ind.tour);
        ind.dominant_parent.reset();
        ind.other_parent.reset();
        ind.uncoupled = true;
        ind.is_clone = false;
        ind.age = 0;
    }
    return pop;
}

struct GenerationStep {
    std::vector<Individual> population;
    std::vector<BirthRecord> records;
};

/// Produces generation `next_generation` from `pop`.
inline GenerationStep step_generation(const TspInstance& inst, std::span<const Individual> pop,
                                      const GaConfig& config, int next_generation, Rng& rng) {
    const std::size_t n_pop = config.population_size;
    if (pop.size() != n_pop) {
        throw std::invalid_argument("step_generation: population size differs from config");
    }
    std::vector<double> fitness;
    fitness.reserve(pop.size());
    for (const auto& ind : pop) {
        fitness.push_back(ind.fitness);
    }
    const RouletteWheel wheel(fitness);

    GenerationStep step;
    step.population.reserve(n_pop);
    for (std::size_t slot = 0; slot < n_pop; ++slot) {
        const Individual& first = pop[wheel(rng)];
        const Individual& second = pop[wheel(rng)];

        Individual child;
        child.id = NodeId{static_cast<int>(slot) + 1, next_generation};
        const Individual* dominant = &first;
        if (uniform01(rng) < config.crossover_prob) {
            auto r = eer_crossover(first.tour, second.tour, first.fitness, second.fitness, rng);
            child.tour = std::move(r.child);
            dominant = r.dominant == 0 ? &first : &second;
            child.other_parent = r.dominant == 0 ? second.id : first.id;
        } else {
            child.tour = first.tour;
        }
        if (uniform01(rng) < config.mutation_prob) {
            child.tour = inversion_mutate(child.tour, rng);
        }
        child.length = tour_length(inst, child.tour);
        child.fitness = fitness_transform(child.length);
        child.dominant_parent = dominant->id;

        // The offspring displaces its dominant parent only by improving on it.
        const bool parent_may_stay = !config.max_age || dominant->age < *config.max_age;
        if (config.elitism && child.fitness <= dominant->fitness && parent_may_stay) {
            child.tour = dominant->tour;
            child.length = dominant->length;
            child.fitness = dominant->fitness;
            child.other_parent.reset();
            child.is_clone = true;
            child.age = dominant->age + 1;
        }
        step.population.push_back(std::move(child));
    }
    if (config.reverse_insertion) {
        step.population = reverse_insertion(std::move(step.population));
    }
    step.records.reserve(n_pop);
    for (const auto& ind : step.population) {
        step.records.push_back(record_of(ind));
    }
    return step;
}

inline GenerationSummary summarize(std::span<const Individual> pop, int generation) {
    GenerationSummary s;
    s.generation = generation;
    s.best_length = pop.front().length;
    double total = 0.0;
    bool balanced = true;
    for (const auto& ind : pop) {
        s.best_length = std::min(s.best_length, ind.length);
        total += ind.length;
        balanced = balanced && ind.fitness == pop.front().fitness;
        s.clones += ind.is_clone ? 1 : 0;
        s.uncoupled += ind.uncoupled ? 1 : 0;
    }
    s.mean_length = total / static_cast<double>(pop.size());
    s.fitness_balance = balanced;
    return s;
}

struct RunResult {
    std::vector<Individual> final_population;
    std::vector<BirthRecord> records;
    std::vector<GenerationSummary> summary;
};

inline std::vector<Individual> initial_population(const TspInstance& inst, std::size_t n_pop,
                                                  Rng& rng) {
    std::vector<Individual> pop;
    pop.reserve(n_pop);
    for (std::size_t slot = 0; slot < n_pop; ++slot) {
        Individual ind;
        ind.id = NodeId{static_cast<int>(slot) + 1, 1};
        ind.tour = random_tour(inst.n, rng);
        ind.length = tour_length(inst, ind.tour);
        ind.fitness = fitness_transform(ind.length);
        ind.uncoupled = true;
        pop.push_back(std::move(ind));
    }
    return pop;
}

/// Full run: random generation 1, then step_generation up to max_generations.
inline RunResult run(const TspInstance& inst, const GaConfig& config) {
    config.validate();
    Rng rng(config.seed);
    RunResult result;
    result.records.reserve(config.population_size * static_cast<std::size_t>(config.max_generations));
    result.summary.reserve(static_cast<std::size_t>(config.max_generations));

    std::vector<Individual> pop = initial_population(inst, config.population_size, rng);
    for (const auto& ind : pop) {
        result.records.push_back(record_of(ind));
    }
    result.summary.push_back(summarize(pop, 1));
    for (int j = 2; j <= config.max_generations; ++j) {
        auto step = step_generation(inst, pop, config, j, rng);
        pop = std::move(step.population);
        result.records.insert(result.records.end(), step.records.begin(), step.records.end());
        result.summary.push_back(summarize(pop, j));
    }
    result.final_population = std::move(pop);
    return result;
}

} // namespace genlab
