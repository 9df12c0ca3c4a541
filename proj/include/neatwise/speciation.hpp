#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neatwise/activation.hpp"
#include "neatwise/genome.hpp"
#include "neatwise/rng.hpp"

namespace neatwise {

/// Tunables of the generation loop. Field names double as parameter-file keys.
struct EvolutionParams {
    int population_size = 1000;
    double compat_threshold = 4.0;
    double excess_coeff = 1.0;
    double disjoint_coeff = 1.0;
    double weight_coeff = 3.0;

    double weight_mutation_prob = 0.9;  // per offspring
    double weight_perturb_prob = 0.9;   // per gene
    double weight_replace_prob = 0.1;   // per gene, when not perturbed
    double weight_power = 2.5;

    double add_node_prob = 0.03;
    double add_connection_prob = 0.3;
    int new_connection_tries = 20;

    double crossover_rate = 0.75;
    double mate_only_prob = 0.2;
    double interspecies_rate = 0.05;
    double survival_fraction = 0.2;

    int dropoff_age = 15;
    int max_generations = 100;
    bool elitism = true;
    int elitism_min_species_size = 5;

    CompatibilityCoefficients coefficients() const { return {excess_coeff, disjoint_coeff, weight_coeff}; }
    WeightMutation weight_mutation() const { return {weight_perturb_prob, weight_replace_prob, weight_power}; }

    /// Throws std::invalid_argument on an out-of-range value.
    void validate() const;
};

/// `key value` lines; `#` starts a comment. Keys not naming an
/// EvolutionParams field are rejected. Unlisted fields keep `base` values.
EvolutionParams parse_params(std::istream& in, EvolutionParams base = {});
EvolutionParams load_params(const std::string& path, EvolutionParams base = {});
/// Applies a single `key value` assignment.
void set_param(EvolutionParams& params, const std::string& key, const std::string& value);
void write_params(std::ostream& out, const EvolutionParams& params);

struct Species {
    int id = 0;
    Genome representative;
    std::vector<std::size_t> members;  // indices into Population::genomes
    double best_fitness_ever = 0.0;
    int last_improvement_generation = 0;
    int age = 0;
    int offspring = 0;
    bool culled = false;

    int stagnation(int generation) const { return generation - last_improvement_generation; }
};

struct Population {
    std::vector<Genome> genomes;
    std::vector<Species> species;
    int generation = 0;
    InnovationRegistry registry;
    std::optional<Genome> champion;
    int next_species_id = 1;

    /// Index of the highest raw fitness genome; earliest index wins ties.
    std::size_t best_index() const;
    /// Index into `species` of the species holding genome `genome`, if any.
    std::optional<std::size_t> species_of(std::size_t genome) const;
};

Population initial_population(const EvolutionParams& params, int n_inputs, int n_outputs,
                              const PiecewiseActivation& output_activation, Rng& rng);

/// Assigns every genome to the first species (in id order) whose
/// representative is within the compatibility threshold, founding new
/// species as needed. Drops empty species, updates stagnation bookkeeping
/// and picks next generation's representatives uniformly from members.
void speciate(Population& pop, const EvolutionParams& params, Rng& rng);

/// adjusted_fitness = fitness / species size.
void share_fitness(Population& pop);

/// Marks species stagnant for at least dropoff_age generations as culled,
/// except the species holding the current best genome.
void apply_dropoff(Population& pop, const EvolutionParams& params);

/// Largest-remainder apportionment of `total` seats by `shares`. Zero total
/// share falls back to equal shares.
std::vector<int> allocate_offspring(std::span<const double> shares, int total);

/// How many top-ranked members of a species of `members` may become parents.
std::size_t parent_pool_size(std::size_t members, double survival_fraction);

/// Breeds the next generation in place. Returns false (population left
/// untouched) when every species has been culled.
bool reproduce(Population& pop, const EvolutionParams& params, const FunctionPool& pool, Rng& rng);

struct RunResult {
    bool success = false;
    bool extinct = false;
    int generations = 0;
    std::int64_t evaluations = 0;
    std::optional<Genome> winner;
    Genome champion;
};

using Evaluator = std::function<double(const Genome&)>;
using SuccessTest = std::function<bool(const Genome&)>;

/// Evaluate, speciate, share, drop off, test the generation's best genome,
/// reproduce; until success, max_generations, or extinction.
RunResult evolve(Population& pop, const EvolutionParams& params, const FunctionPool& pool,
                 const Evaluator& evaluator, const SuccessTest& success_test, Rng& rng);

}  // namespace neatwise
