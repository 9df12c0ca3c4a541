#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "neatwise/speciation.hpp"
#include "test_support.hpp"

using namespace neatwise;
using namespace neatwise::testing;

namespace {

EvolutionParams small_params(int population, std::uint64_t seed) {
    Rng rng(seed);
    EvolutionParams p;
    p.population_size = population;
    p.compat_threshold = rng.uniform(0.5, 4.0);
    p.dropoff_age = 1 + static_cast<int>(rng.below(6));
    p.add_node_prob = rng.uniform(0.0, 0.3);
    p.add_connection_prob = rng.uniform(0.0, 0.5);
    p.survival_fraction = rng.uniform(0.1, 0.9);
    p.interspecies_rate = rng.uniform(0.0, 0.2);
    p.elitism_min_species_size = 1 + static_cast<int>(rng.below(6));
    return p;
}

// Deterministic fitness that rewards weights near 0.5 and a little structure.
double shaped_fitness(const Genome& g) {
    double d = 0.0;
    for (const auto& c : g.connections) {
        if (c.enabled) d += std::abs(c.weight - 0.5);
    }
    return 1.0 / (1.0 + d) + 0.01 * static_cast<double>(g.nodes.size());
}

void evaluate_all(Population& pop, const std::function<double(const Genome&)>& f) {
    for (auto& g : pop.genomes) g.fitness = f(g);
}

Population population_of(const std::vector<Genome>& genomes) {
    Population pop;
    pop.genomes = genomes;
    return pop;
}

}  // namespace

TEST_SUITE("speciation") {

TEST_CASE("identical genomes form one species") {
    InnovationRegistry reg;
    Rng rng(1);
    const Genome g = random_genome(reg, rng, 5);
    Population pop = population_of(std::vector<Genome>(20, g));
    EvolutionParams params;
    speciate(pop, params, rng);
    REQUIRE(pop.species.size() == 1);
    CHECK(pop.species[0].members.size() == 20);
}

TEST_CASE("zero threshold splits genomes differing in one weight") {
    InnovationRegistry reg;
    Rng rng(2);
    Genome a = minimal_genome(3, 1, tanh_pair(), reg, rng);
    Genome b = a;
    b.connections[0].weight += 0.1;
    Population pop = population_of({a, b});
    EvolutionParams params;
    params.compat_threshold = 0.0;
    speciate(pop, params, rng);
    CHECK(pop.species.size() == 2);
}

TEST_CASE("species bookkeeping over random populations") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        InnovationRegistry reg;
        std::vector<Genome> genomes;
        const int n = 2 + static_cast<int>(rng.below(40));
        for (int i = 0; i < n; ++i) genomes.push_back(random_genome(reg, rng, static_cast<int>(rng.below(10))));
        Population pop = population_of(genomes);
        EvolutionParams params;
        params.compat_threshold = rng.uniform(0.0, 5.0);
        evaluate_all(pop, shaped_fitness);
        speciate(pop, params, rng);
        std::size_t total = 0;
        for (const auto& s : pop.species) {
            CHECK_FALSE(s.members.empty());
            total += s.members.size();
        }
        CHECK(total == genomes.size());
        CHECK(pop.species.size() <= genomes.size());
        for (std::size_t s = 1; s < pop.species.size(); ++s) CHECK(pop.species[s - 1].id < pop.species[s].id);
    }
}

TEST_CASE("fitness sharing") {
    InnovationRegistry reg;
    Rng rng(4);
    const Genome g = minimal_genome(3, 1, tanh_pair(), reg, rng);
    Population pop = population_of(std::vector<Genome>(4, g));
    for (auto& x : pop.genomes) x.fitness = 8.0;
    speciate(pop, EvolutionParams{}, rng);
    share_fitness(pop);
    for (const auto& x : pop.genomes) CHECK(x.adjusted_fitness == 2.0);

    Population single = population_of({g});
    single.genomes[0].fitness = 3.5;
    speciate(single, EvolutionParams{}, rng);
    share_fitness(single);
    CHECK(single.genomes[0].adjusted_fitness == 3.5);

    // Summed adjusted fitness of a species is its mean raw fitness.
    for (int trial = 0; trial < 100; ++trial) {
        InnovationRegistry r;
        std::vector<Genome> genomes;
        for (int i = 0; i < 30; ++i) genomes.push_back(random_genome(r, rng, static_cast<int>(rng.below(8))));
        Population p = population_of(genomes);
        for (auto& x : p.genomes) x.fitness = rng.uniform(0, 10);
        speciate(p, EvolutionParams{}, rng);
        share_fitness(p);
        for (const auto& s : p.species) {
            double adjusted = 0, raw = 0;
            for (auto m : s.members) {
                adjusted += p.genomes[m].adjusted_fitness;
                raw += p.genomes[m].fitness;
            }
            CHECK(adjusted == doctest::Approx(raw / static_cast<double>(s.members.size())));
        }
    }
}

TEST_CASE("drop-off boundary and champion protection") {
    InnovationRegistry reg;
    Rng rng(5);
    const Genome weak = minimal_genome(3, 1, tanh_pair(), reg, rng);
    Genome strong = weak;
    for (auto& c : strong.connections) c.weight += 5.0;  // far enough to be its own species
    Population pop = population_of({weak, strong});
    pop.genomes[0].fitness = 1.0;
    pop.genomes[1].fitness = 2.0;
    EvolutionParams params;
    params.dropoff_age = 50;
    speciate(pop, params, rng);
    REQUIRE(pop.species.size() == 2);
    for (auto& s : pop.species) s.last_improvement_generation = 0;

    pop.generation = 49;
    apply_dropoff(pop, params);
    CHECK_FALSE(pop.species[0].culled);
    CHECK_FALSE(pop.species[1].culled);

    pop.generation = 50;
    apply_dropoff(pop, params);
    CHECK(pop.species[0].culled);
    CHECK_FALSE(pop.species[1].culled);  // holds the best genome
}

TEST_CASE("drop-off immunity window over random runs") {
    int cases = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        EvolutionParams params = small_params(12 + static_cast<int>(seed % 20), seed);
        Rng rng(seed);
        Population pop = initial_population(params, 3, 1, tanh_pair(), rng);
        for (int gen = 0; gen < 6; ++gen) {
            // Noisy fitness so species stagnate and improve at random.
            for (auto& g : pop.genomes) g.fitness = rng.uniform();
            speciate(pop, params, rng);
            share_fitness(pop);
            apply_dropoff(pop, params);
            const auto protected_species = pop.species_of(pop.best_index());
            for (std::size_t s = 0; s < pop.species.size(); ++s) {
                const auto& sp = pop.species[s];
                if (pop.generation < sp.last_improvement_generation + params.dropoff_age) CHECK_FALSE(sp.culled);
                if (protected_species == s) CHECK_FALSE(sp.culled);
                if (sp.culled) CHECK(sp.stagnation(pop.generation) >= params.dropoff_age);
            }
            if (!reproduce(pop, params, sa1_pool(), rng)) break;
        }
        ++cases;
    }
    CHECK(cases == 1000);
}

TEST_CASE("best fitness ever never decreases") {
    Rng rng(6);
    EvolutionParams params = small_params(30, 6);
    Population pop = initial_population(params, 3, 1, tanh_pair(), rng);
    std::map<int, double> best;
    for (int gen = 0; gen < 30; ++gen) {
        for (auto& g : pop.genomes) g.fitness = rng.uniform();
        speciate(pop, params, rng);
        for (const auto& s : pop.species) {
            if (best.count(s.id)) CHECK(s.best_fitness_ever >= best[s.id]);
            best[s.id] = s.best_fitness_ever;
        }
        share_fitness(pop);
        apply_dropoff(pop, params);
        if (!reproduce(pop, params, sa1_pool(), rng)) break;
    }
}

TEST_CASE("offspring allocation") {
    CHECK(allocate_offspring(std::vector<double>{1, 1, 1}, 10) == std::vector<int>{4, 3, 3});
    CHECK(allocate_offspring(std::vector<double>{0, 0}, 5) == std::vector<int>{3, 2});
    CHECK(allocate_offspring(std::vector<double>{3, 1}, 8) == std::vector<int>{6, 2});
    CHECK(allocate_offspring(std::vector<double>{}, 8).empty());

    Rng rng(7);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t k = 1 + rng.below(30);
        std::vector<double> shares(k);
        for (auto& s : shares) s = rng.chance(0.2) ? 0.0 : rng.uniform(0, 100) * std::pow(10.0, rng.uniform(-6, 6));
        const int total = 1 + static_cast<int>(rng.below(2000));
        const auto seats = allocate_offspring(shares, total);
        CHECK(std::accumulate(seats.begin(), seats.end(), 0) == total);
        const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            CHECK(seats[i] >= 0);
            if (sum > 0) CHECK(std::abs(seats[i] - shares[i] / sum * total) < 1.0 + 1e-9);
        }
    }
}

TEST_CASE("parent pool cut-off") {
    CHECK(parent_pool_size(100, 0.2) == 20);
    CHECK(parent_pool_size(3, 0.2) == 1);
    CHECK(parent_pool_size(1, 0.2) == 1);
    CHECK(parent_pool_size(10, 1.0) == 10);
}

TEST_CASE("reproduction without structural change keeps structure") {
    InnovationRegistry reg;
    Rng rng(8);
    EvolutionParams params;
    params.population_size = 50;
    params.add_node_prob = 0.0;
    params.add_connection_prob = 0.0;
    params.crossover_rate = 0.0;
    Population pop = initial_population(params, 3, 1, tanh_pair(), rng);
    evaluate_all(pop, shaped_fitness);
    speciate(pop, params, rng);
    share_fitness(pop);
    apply_dropoff(pop, params);
    REQUIRE(reproduce(pop, params, sa1_pool(), rng));
    CHECK(pop.genomes.size() == 50);
    for (const auto& g : pop.genomes) {
        CHECK(g.nodes.size() == 5);
        CHECK(g.connections.size() == 4);
    }
    CHECK(pop.generation == 1);
}

TEST_CASE("extinction when every species is culled") {
    Rng rng(9);
    EvolutionParams params;
    params.population_size = 10;
    Population pop = initial_population(params, 3, 1, tanh_pair(), rng);
    evaluate_all(pop, shaped_fitness);
    speciate(pop, params, rng);
    share_fitness(pop);
    for (auto& s : pop.species) s.culled = true;
    const auto before = pop.genomes.size();
    CHECK_FALSE(reproduce(pop, params, sa1_pool(), rng));
    CHECK(pop.genomes.size() == before);
}

TEST_CASE("population size is conserved") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const int n = 2 + static_cast<int>(seed % 40);
        EvolutionParams params = small_params(n, seed);
        Rng rng(seed + 7);
        Population pop = initial_population(params, 3, 1, tanh_pair(), rng);
        for (int gen = 0; gen < 4; ++gen) {
            REQUIRE(pop.genomes.size() == static_cast<std::size_t>(n));
            for (auto& g : pop.genomes) g.fitness = rng.chance(0.1) ? 0.0 : rng.uniform();
            speciate(pop, params, rng);
            share_fitness(pop);
            apply_dropoff(pop, params);
            if (!reproduce(pop, params, sa1_pool(), rng)) break;
            for (const auto& g : pop.genomes) REQUIRE_NOTHROW(g.validate());
        }
        CHECK(pop.genomes.size() == static_cast<std::size_t>(n));
    }
}

TEST_CASE("champion fitness is monotone with elitism") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        EvolutionParams params = small_params(10 + static_cast<int>(seed % 30), seed);
        params.elitism = true;
        Rng rng(seed + 11);
        Population pop = initial_population(params, 3, 1, tanh_pair(), rng);
        double previous = -1.0;
        for (int gen = 0; gen < 5; ++gen) {
            evaluate_all(pop, shaped_fitness);
            const double best = pop.genomes[pop.best_index()].fitness;
            CHECK(best >= previous);
            previous = best;
            speciate(pop, params, rng);
            share_fitness(pop);
            apply_dropoff(pop, params);
            if (!reproduce(pop, params, sa1_pool(), rng)) break;
        }
    }
}

TEST_CASE("evolve stopping rules") {
    Rng rng(12);
    EvolutionParams params;
    params.population_size = 10;
    params.max_generations = 3;
    {
        Population pop = initial_population(params, 3, 1, tanh_pair(), rng);
        const auto r = evolve(pop, params, sa1_pool(), shaped_fitness, [](const Genome&) { return true; }, rng);
        CHECK(r.success);
        CHECK(r.generations == 1);
        CHECK(r.evaluations == 10);
        CHECK(r.winner.has_value());
    }
    {
        Population pop = initial_population(params, 3, 1, tanh_pair(), rng);
        const auto r = evolve(pop, params, sa1_pool(), shaped_fitness, [](const Genome&) { return false; }, rng);
        CHECK_FALSE(r.success);
        CHECK(r.generations == 3);
        CHECK(r.evaluations == 30);
        CHECK_FALSE(r.winner.has_value());
        CHECK(r.champion.fitness > 0.0);
    }
}

TEST_CASE("evolve is deterministic for a seed") {
    EvolutionParams params;
    params.population_size = 40;
    params.max_generations = 8;
    std::string text[2];
    std::int64_t evals[2];
    for (int i = 0; i < 2; ++i) {
        Rng rng(13);
        Population pop = initial_population(params, 3, 1, tanh_pair(), rng);
        const auto r = evolve(pop, params, sa1_pool(), shaped_fitness, [](const Genome&) { return false; }, rng);
        text[i] = to_text(r.champion);
        evals[i] = r.evaluations;
    }
    CHECK(text[0] == text[1]);
    CHECK(evals[0] == evals[1]);
}

TEST_CASE("parameter files") {
    std::istringstream in("# comment\npopulation_size 150\ncompat_threshold 3.0  # tighter\nelitism false\n\n");
    const EvolutionParams p = parse_params(in);
    CHECK(p.population_size == 150);
    CHECK(p.compat_threshold == 3.0);
    CHECK_FALSE(p.elitism);
    CHECK(p.dropoff_age == 15);

    std::istringstream unknown("mutate_toggle_enable_prob 0.1\n");
    CHECK_THROWS_AS(parse_params(unknown), std::invalid_argument);
    std::istringstream bad_value("population_size many\n");
    CHECK_THROWS_AS(parse_params(bad_value), std::invalid_argument);
    std::istringstream out_of_range("crossover_rate 1.5\n");
    CHECK_THROWS_AS(parse_params(out_of_range), std::invalid_argument);
    std::istringstream tiny("population_size 1\n");
    CHECK_THROWS_AS(parse_params(tiny), std::invalid_argument);

    std::stringstream round;
    EvolutionParams q;
    q.weight_power = 1.2345678901234567;
    q.max_generations = 77;
    write_params(round, q);
    const EvolutionParams back = parse_params(round);
    CHECK(back.weight_power == q.weight_power);
    CHECK(back.max_generations == 77);
}

}  // TEST_SUITE
