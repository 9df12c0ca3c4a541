#include "neatwise/speciation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <variant>

namespace neatwise {

namespace {

using Field = std::variant<double EvolutionParams::*, int EvolutionParams::*, bool EvolutionParams::*>;

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        {"population_size", &EvolutionParams::population_size},
        {"compat_threshold", &EvolutionParams::compat_threshold},
        {"excess_coeff", &EvolutionParams::excess_coeff},
        {"disjoint_coeff", &EvolutionParams::disjoint_coeff},
        {"weight_coeff", &EvolutionParams::weight_coeff},
        {"weight_mutation_prob", &EvolutionParams::weight_mutation_prob},
        {"weight_perturb_prob", &EvolutionParams::weight_perturb_prob},
        {"weight_replace_prob", &EvolutionParams::weight_replace_prob},
        {"weight_power", &EvolutionParams::weight_power},
        {"add_node_prob", &EvolutionParams::add_node_prob},
        {"add_connection_prob", &EvolutionParams::add_connection_prob},
        {"new_connection_tries", &EvolutionParams::new_connection_tries},
        {"crossover_rate", &EvolutionParams::crossover_rate},
        {"mate_only_prob", &EvolutionParams::mate_only_prob},
        {"interspecies_rate", &EvolutionParams::interspecies_rate},
        {"survival_fraction", &EvolutionParams::survival_fraction},
        {"dropoff_age", &EvolutionParams::dropoff_age},
        {"max_generations", &EvolutionParams::max_generations},
        {"elitism", &EvolutionParams::elitism},
        {"elitism_min_species_size", &EvolutionParams::elitism_min_species_size},
    };
    return table;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw std::invalid_argument("parameter '" + key + "': cannot parse '" + text + "'");
    }
    return value;
}

void check_probability(const char* name, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
}

void mutate_offspring(Genome& child, const EvolutionParams& params, const FunctionPool& pool,
                      InnovationRegistry& registry, Rng& rng) {
    if (rng.chance(params.add_node_prob)) {
        mutate_add_node(child, pool, registry, rng);
    } else if (rng.chance(params.add_connection_prob)) {
        mutate_add_connection(child, registry, rng, params.new_connection_tries);
    } else if (rng.chance(params.weight_mutation_prob)) {
        mutate_weights(child, params.weight_mutation(), rng);
    }
}

// Higher fitness wins; ties go to the smaller genome, then to `a`.
bool first_is_fitter(const Genome& a, const Genome& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    return a.connections.size() <= b.connections.size();
}

}  // namespace

void EvolutionParams::validate() const {
    if (population_size < 2) throw std::invalid_argument("population_size must be at least 2");
    if (dropoff_age < 1) throw std::invalid_argument("dropoff_age must be at least 1");
    if (max_generations < 1) throw std::invalid_argument("max_generations must be at least 1");
    if (compat_threshold < 0.0) throw std::invalid_argument("compat_threshold must be non-negative");
    if (weight_power < 0.0) throw std::invalid_argument("weight_power must be non-negative");
    if (new_connection_tries < 1) throw std::invalid_argument("new_connection_tries must be positive");
    check_probability("weight_mutation_prob", weight_mutation_prob);
    check_probability("weight_perturb_prob", weight_perturb_prob);
    check_probability("weight_replace_prob", weight_replace_prob);
    check_probability("add_node_prob", add_node_prob);
    check_probability("add_connection_prob", add_connection_prob);
    check_probability("crossover_rate", crossover_rate);
    check_probability("mate_only_prob", mate_only_prob);
    check_probability("interspecies_rate", interspecies_rate);
    check_probability("survival_fraction", survival_fraction);
    if (weight_perturb_prob + weight_replace_prob > 1.0 + 1e-12) {
        throw std::invalid_argument("weight_perturb_prob + weight_replace_prob exceeds 1");
    }
}

void set_param(EvolutionParams& params, const std::string& key, const std::string& value) {
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
    if (it == table.end()) throw std::invalid_argument("unknown parameter '" + key + "'");
    std::visit(
        [&](auto member) {
            using T = std::remove_reference_t<decltype(params.*member)>;
            if constexpr (std::is_same_v<T, bool>) {
                if (value == "1" || value == "true") {
                    params.*member = true;
                } else if (value == "0" || value == "false") {
                    params.*member = false;
                } else {
                    throw std::invalid_argument("parameter '" + key + "': expected a boolean");
                }
            } else {
                params.*member = parse_number<T>(key, value);
            }
        },
        it->second);
}

EvolutionParams parse_params(std::istream& in, EvolutionParams base) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string key, value, extra;
        if (!(words >> key)) continue;
        if (!(words >> value) || (words >> extra)) {
            throw std::invalid_argument("parameter line " + std::to_string(line_no) + ": expected 'key value'");
        }
        set_param(base, key, value);
    }
    base.validate();
    return base;
}

EvolutionParams load_params(const std::string& path, EvolutionParams base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open parameter file " + path);
    return parse_params(in, base);
}

void write_params(std::ostream& out, const EvolutionParams& params) {
    const auto old_precision = out.precision(17);
    for (const auto& [key, field] : fields()) {
        out << key << ' ';
        std::visit([&](auto member) { out << params.*member; }, field);
        out << '\n';
    }
    out.precision(old_precision);
}

std::size_t Population::best_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < genomes.size(); ++i) {
        if (genomes[i].fitness > genomes[best].fitness) best = i;
    }
    return best;
}

std::optional<std::size_t> Population::species_of(std::size_t genome) const {
    for (std::size_t s = 0; s < species.size(); ++s) {
        const auto& m = species[s].members;
        if (std::find(m.begin(), m.end(), genome) != m.end()) return s;
    }
    return std::nullopt;
}

Population initial_population(const EvolutionParams& params, int n_inputs, int n_outputs,
                              const PiecewiseActivation& output_activation, Rng& rng) {
    params.validate();
    Population pop;
    pop.genomes.reserve(static_cast<std::size_t>(params.population_size));
    for (int i = 0; i < params.population_size; ++i) {
        pop.genomes.push_back(minimal_genome(n_inputs, n_outputs, output_activation, pop.registry, rng));
    }
    return pop;
}

void speciate(Population& pop, const EvolutionParams& params, Rng& rng) {
    const auto coeffs = params.coefficients();
    for (auto& s : pop.species) {
        s.members.clear();
        s.culled = false;
        s.offspring = 0;
    }
    for (std::size_t i = 0; i < pop.genomes.size(); ++i) {
        const Genome& g = pop.genomes[i];
        bool placed = false;
        for (auto& s : pop.species) {
            if (compatibility(g, s.representative, coeffs) < params.compat_threshold) {
                s.members.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) {
            Species s;
            s.id = pop.next_species_id++;
            s.representative = g;
            s.members.push_back(i);
            s.best_fitness_ever = g.fitness;
            s.last_improvement_generation = pop.generation;
            pop.species.push_back(std::move(s));
        }
    }
    std::erase_if(pop.species, [](const Species& s) { return s.members.empty(); });

    for (auto& s : pop.species) {
        double best = 0.0;
        for (std::size_t m : s.members) best = std::max(best, pop.genomes[m].fitness);
        if (best > s.best_fitness_ever) {
            s.best_fitness_ever = best;
            s.last_improvement_generation = pop.generation;
        }
        ++s.age;
        s.representative = pop.genomes[s.members[rng.below(s.members.size())]];
    }
}

void share_fitness(Population& pop) {
    for (const auto& s : pop.species) {
        const double size = static_cast<double>(s.members.size());
        for (std::size_t m : s.members) pop.genomes[m].adjusted_fitness = pop.genomes[m].fitness / size;
    }
}

void apply_dropoff(Population& pop, const EvolutionParams& params) {
    if (pop.genomes.empty()) return;
    const auto protected_species = pop.species_of(pop.best_index());
    for (std::size_t s = 0; s < pop.species.size(); ++s) {
        auto& sp = pop.species[s];
        sp.culled = sp.stagnation(pop.generation) >= params.dropoff_age && protected_species != s;
    }
}

std::vector<int> allocate_offspring(std::span<const double> shares, int total) {
    std::vector<int> seats(shares.size(), 0);
    if (shares.empty() || total <= 0) return seats;
    double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
    std::vector<double> weights(shares.begin(), shares.end());
    if (!(sum > 0.0)) {
        std::fill(weights.begin(), weights.end(), 1.0);
        sum = static_cast<double>(weights.size());
    }
    std::vector<std::pair<double, std::size_t>> remainders;
    int given = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double quota = weights[i] / sum * total;
        seats[i] = static_cast<int>(std::floor(quota));
        given += seats[i];
        remainders.emplace_back(quota - seats[i], i);
    }
    // Largest fractional part first; lower index wins ties.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; given < total; k = (k + 1) % remainders.size()) {
        ++seats[remainders[k].second];
        ++given;
    }
    // Floating-point quotas can overshoot by a seat; take it back from the largest.
    while (given > total) {
        auto it = std::max_element(seats.begin(), seats.end());
        --*it;
        --given;
    }
    return seats;
}

std::size_t parent_pool_size(std::size_t members, double survival_fraction) {
    const auto n = static_cast<std::size_t>(std::floor(survival_fraction * static_cast<double>(members)));
    return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(members, 1));
}

bool reproduce(Population& pop, const EvolutionParams& params, const FunctionPool& pool, Rng& rng) {
    std::vector<std::size_t> live;
    for (std::size_t s = 0; s < pop.species.size(); ++s) {
        if (!pop.species[s].culled && !pop.species[s].members.empty()) live.push_back(s);
    }
    if (live.empty()) return false;

    std::vector<double> shares;
    for (std::size_t s : live) {
        double sum = 0.0;
        for (std::size_t m : pop.species[s].members) sum += pop.genomes[m].adjusted_fitness;
        shares.push_back(sum);
    }
    std::vector<int> seats = allocate_offspring(shares, params.population_size);

    const std::size_t best = pop.best_index();
    const auto best_species = pop.species_of(best);
    if (params.elitism && best_species) {
        // The best genome's species always keeps at least one seat so the
        // champion survives.
        auto pos = std::find(live.begin(), live.end(), *best_species);
        if (pos != live.end()) {
            const auto k = static_cast<std::size_t>(pos - live.begin());
            if (seats[k] == 0) {
                std::size_t donor = k == 0 ? 1 : 0;
                for (std::size_t d = 0; d < seats.size(); ++d) {
                    if (d != k && seats[d] > seats[donor]) donor = d;
                }
                ++seats[k];
                --seats[donor];
            }
        }
    }

    std::vector<Genome> next;
    next.reserve(static_cast<std::size_t>(params.population_size));
    for (std::size_t k = 0; k < live.size(); ++k) {
        Species& sp = pop.species[live[k]];
        sp.offspring = seats[k];
        if (seats[k] == 0) continue;

        std::vector<std::size_t> ranked = sp.members;
        std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
            return pop.genomes[a].fitness > pop.genomes[b].fitness;
        });
        ranked.resize(parent_pool_size(ranked.size(), params.survival_fraction));

        int produced = 0;
        const bool holds_best = best_species == live[k];
        if (params.elitism && (seats[k] >= params.elitism_min_species_size || holds_best)) {
            next.push_back(pop.genomes[ranked.front()]);
            ++produced;
        }
        for (; produced < seats[k]; ++produced) {
            const Genome& mom = pop.genomes[ranked[rng.below(ranked.size())]];
            Genome child;
            bool mutate = true;
            if (rng.chance(params.crossover_rate)) {
                const Genome* dad = nullptr;
                if (live.size() > 1 && rng.chance(params.interspecies_rate)) {
                    std::size_t other = rng.below(live.size() - 1);
                    if (other >= k) ++other;
                    const auto& om = pop.species[live[other]].members;
                    dad = &pop.genomes[*std::max_element(om.begin(), om.end(), [&](std::size_t a, std::size_t b) {
                        return pop.genomes[a].fitness < pop.genomes[b].fitness;
                    })];
                } else {
                    dad = &pop.genomes[ranked[rng.below(ranked.size())]];
                }
                child = first_is_fitter(mom, *dad) ? crossover(mom, *dad, rng) : crossover(*dad, mom, rng);
                mutate = dad == &mom || !rng.chance(params.mate_only_prob);
            } else {
                child = mom;
            }
            if (mutate) mutate_offspring(child, params, pool, pop.registry, rng);
            child.fitness = 0.0;
            child.adjusted_fitness = 0.0;
            next.push_back(std::move(child));
        }
    }

    pop.genomes = std::move(next);
    for (auto& s : pop.species) s.members.clear();
    pop.registry.new_generation();
    ++pop.generation;
    return true;
}

RunResult evolve(Population& pop, const EvolutionParams& params, const FunctionPool& pool,
                 const Evaluator& evaluator, const SuccessTest& success_test, Rng& rng) {
    params.validate();
    RunResult result;
    while (pop.generation < params.max_generations) {
        for (auto& g : pop.genomes) {
            g.fitness = evaluator(g);
            ++result.evaluations;
        }
        const std::size_t best = pop.best_index();
        if (!pop.champion || pop.genomes[best].fitness > pop.champion->fitness) pop.champion = pop.genomes[best];

        speciate(pop, params, rng);
        share_fitness(pop);
        apply_dropoff(pop, params);
        ++result.generations;

        if (success_test(pop.genomes[best])) {
            result.success = true;
            result.winner = pop.genomes[best];
            break;
        }
        if (!reproduce(pop, params, pool, rng)) {
            result.extinct = true;
            break;
        }
    }
    if (pop.champion) result.champion = *pop.champion;
    return result;
}

}  // namespace neatwise
