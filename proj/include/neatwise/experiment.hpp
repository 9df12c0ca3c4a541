#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "neatwise/activation.hpp"
#include "neatwise/cartpole.hpp"
#include "neatwise/genome.hpp"
#include "neatwise/speciation.hpp"

namespace neatwise::experiment {

struct Preset {
    std::string name;
    FunctionPool pool;
    PiecewiseActivation output_activation;
    std::vector<std::pair<std::string, std::string>> overrides;  // applied on top of the parameter file
    int runs_per_instance = 100;
    bool piecewise_enabled = true;
};

inline constexpr double kTunedSigmoidSlope = 4.924273;

/// BASELINE, HOMO_<KIND> for each canonical kind (HOMO_SINE, HOMO_ARCTAN, ...),
/// SA0, SA1, SA2, SA3. Throws std::invalid_argument for anything else.
Preset preset(std::string_view name);
std::vector<std::string> preset_names();

/// Preset built around a user-supplied pool (CLI --pool).
Preset custom_preset(std::string name, FunctionPool pool, int dropoff_age = 50);

EvolutionParams apply_overrides(EvolutionParams base, const Preset& preset);

/// What a run is evolved against.
class Task {
public:
    virtual ~Task() = default;
    virtual int inputs() const = 0;
    virtual int outputs() const = 0;
    virtual double evaluate(const Genome& g) const = 0;
    virtual cartpole::SuccessReport check(const Genome& g) const = 0;
};

/// Double pole balancing without velocity inputs.
class DpnvTask final : public Task {
public:
    explicit DpnvTask(cartpole::PhysicsParams physics = {}) : physics_(physics) {}
    int inputs() const override { return 3; }
    int outputs() const override { return 1; }
    double evaluate(const Genome& g) const override { return cartpole::evaluate(g, physics_); }
    cartpole::SuccessReport check(const Genome& g) const override { return cartpole::success_test(g, physics_); }
    const cartpole::PhysicsParams& physics() const { return physics_; }

private:
    cartpole::PhysicsParams physics_;
};

/// (resting, active) description -> count.
using Census = std::map<std::pair<std::string, std::string>, std::int64_t>;

/// Counts hidden-node activation pairs across `genomes`.
Census activation_census(const std::vector<Genome>& genomes);

struct RunRecord {
    std::string preset;
    int instance = 0;
    int run = 0;
    std::uint64_t seed = 0;
    bool success = false;        // a champion balanced and generalized (run terminated early)
    bool balanced = false;       // some generation champion balanced from the standard start
    bool extinct = false;
    int generations = 0;
    std::int64_t evaluations = 0;
    std::int64_t balance_evaluations = 0;  // evaluations up to the first balancing champion
    int generalization = 0;      // best score among champions that reached the generalization stage
    int nodes = 0;               // node count of that champion
    int generalization_tests = 0;
};

struct RunOutcome {
    RunRecord record;
    RunResult result;
    Census census;  // of the final population
};

/// One evolution run, fully determined by `seed`.
RunOutcome run_experiment(const Preset& preset, const EvolutionParams& params, const Task& task,
                          std::uint64_t seed);

struct InstanceStats {
    std::string preset;
    int instance = 0;
    std::uint64_t seed = 0;
    int runs = 0;
    std::int64_t total_evaluations = 0;
    int successful_experiments = 0;
    std::int64_t total_generalization_score = 0;
    int generalization_champions = 0;  // champions put through the generalization test
    std::int64_t total_node_count = 0;
    int network_sample_size = 0;
    int balanced_experiments = 0;
    Census activation_distribution;  // final run's final population
};

struct InstanceResult {
    InstanceStats stats;
    std::vector<RunRecord> records;
};

std::uint64_t instance_seed(std::uint64_t base_seed, int instance);
std::uint64_t run_seed(std::uint64_t instance_seed, int run);

/// Runs `runs` experiments with seeds derived from `seed`, using up to
/// `threads` worker threads. Results do not depend on `threads`.
InstanceResult run_instance(const Preset& preset, const EvolutionParams& params, const Task& task,
                            std::uint64_t seed, int instance = 0, int runs = -1, int threads = 1);

/// Folds per-run records into instance totals (census left empty).
InstanceStats accumulate(const std::vector<RunRecord>& records);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n)
    std::size_t n = 0;
};

Estimate estimate(const std::vector<double>& values);

struct AggregateStats {
    std::size_t records = 0;
    Estimate success_rate;   // percent
    Estimate balanced_rate;  // percent
    Estimate evaluations;
    Estimate generalization;
    Estimate nodes;
};

/// Run-level statistics. include_failed=true takes success rate and
/// evaluations over every run; include_failed=false restricts everything to
/// successful runs. Generalization and node means always use successful runs.
/// Throws std::invalid_argument on empty input.
AggregateStats aggregate(const std::vector<RunRecord>& records, bool include_failed);

/// Instance-level statistics: each instance contributes its success percent
/// and per-run averages; include_failed=false drops instances without a
/// single success.
AggregateStats aggregate_instances(const std::vector<InstanceStats>& instances, bool include_failed);

void write_records_csv_header(std::ostream& out);
void write_record_csv(std::ostream& out, const RunRecord& r);
std::string instance_json(const InstanceStats& stats);
/// Table with mean +- standard error rows, one per label.
void write_aggregate_table(std::ostream& out, const std::vector<std::pair<std::string, AggregateStats>>& rows);

}  // namespace neatwise::experiment
