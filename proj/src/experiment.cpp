#include "neatwise/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace neatwise::experiment {

namespace {

constexpr CanonicalFunction unaltered(FunctionKind kind) { return {kind, 1.0, 0.0}; }

Preset homogeneous_preset(std::string name, const CanonicalFunction& f) {
    return Preset{std::move(name), FunctionPool({{f, 1.0}}), PiecewiseActivation::homogeneous(f), {}, 100, false};
}

Preset biased_preset(std::string name, std::vector<PoolEntry> entries) {
    FunctionPool pool(std::move(entries));
    const auto output = PiecewiseActivation::homogeneous(pool.dominant());
    return Preset{std::move(name), std::move(pool), output, {{"dropoff_age", "50"}}, 100, true};
}

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

}  // namespace

Preset preset(std::string_view name) {
    const std::string key = upper(name);
    const CanonicalFunction arctan = unaltered(FunctionKind::ArcTan);
    const CanonicalFunction sigmoid = unaltered(FunctionKind::Sigmoid);
    const CanonicalFunction tuned_sigmoid{FunctionKind::Sigmoid, kTunedSigmoidSlope, 0.0};

    if (key == "BASELINE") return homogeneous_preset("BASELINE", tuned_sigmoid);
    if (key == "SA0") return biased_preset("SA0", {{arctan, 0.5}, {sigmoid, 0.5}});
    if (key == "SA1") {
        return biased_preset("SA1", {{arctan, 0.875}, {{FunctionKind::Sigmoid, kTunedSigmoidSlope, -0.5}, 0.125}});
    }
    if (key == "SA2") return biased_preset("SA2", {{arctan, 0.875}, {tuned_sigmoid, 0.125}});
    if (key == "SA3") return biased_preset("SA3", {{arctan, 0.875}, {sigmoid, 0.125}});
    if (key.rfind("HOMO_", 0) == 0) {
        const FunctionKind kind = parse_kind(key.substr(5));
        return homogeneous_preset("HOMO_" + upper(kind_name(kind)), unaltered(kind));
    }
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names = {"BASELINE"};
    for (FunctionKind kind : kAllKinds) names.push_back("HOMO_" + upper(kind_name(kind)));
    for (const char* sa : {"SA0", "SA1", "SA2", "SA3"}) names.emplace_back(sa);
    return names;
}

Preset custom_preset(std::string name, FunctionPool pool, int dropoff_age) {
    const auto output = PiecewiseActivation::homogeneous(pool.dominant());
    return Preset{std::move(name), std::move(pool), output, {{"dropoff_age", std::to_string(dropoff_age)}}, 100,
                  true};
}

EvolutionParams apply_overrides(EvolutionParams base, const Preset& preset) {
    for (const auto& [key, value] : preset.overrides) set_param(base, key, value);
    base.validate();
    return base;
}

Census activation_census(const std::vector<Genome>& genomes) {
    Census census;
    for (const auto& g : genomes) {
        for (const auto& n : g.nodes) {
            if (n.role != NodeRole::Hidden) continue;
            ++census[{describe(n.activation.resting), describe(n.activation.active)}];
        }
    }
    return census;
}

RunOutcome run_experiment(const Preset& preset, const EvolutionParams& params, const Task& task,
                          std::uint64_t seed) {
    if (!preset.piecewise_enabled && preset.pool.size() != 1) {
        throw std::invalid_argument("preset " + preset.name + ": homogeneous presets need a single-function pool");
    }
    RunOutcome out;
    RunRecord& rec = out.record;
    rec.preset = preset.name;
    rec.seed = seed;

    Rng rng(seed);
    Population pop = initial_population(params, task.inputs(), task.outputs(), preset.output_activation, rng);

    std::int64_t evaluated = 0;
    auto evaluator = [&](const Genome& g) {
        ++evaluated;
        return task.evaluate(g);
    };
    auto success_test = [&](const Genome& g) {
        const cartpole::SuccessReport report = task.check(g);
        if (report.balanced) {
            if (!rec.balanced || report.generalization > rec.generalization) {
                rec.generalization = report.generalization;
                rec.nodes = static_cast<int>(g.nodes.size());
            }
            if (!rec.balanced) rec.balance_evaluations = evaluated;
            rec.balanced = true;
            ++rec.generalization_tests;
        }
        return report.success;
    };

    out.result = evolve(pop, params, preset.pool, evaluator, success_test, rng);
    rec.success = out.result.success;
    rec.extinct = out.result.extinct;
    rec.generations = out.result.generations;
    rec.evaluations = out.result.evaluations;
    out.census = activation_census(pop.genomes);
    return out;
}

std::uint64_t instance_seed(std::uint64_t base_seed, int instance) {
    return derive_seed(base_seed, static_cast<std::uint64_t>(instance));
}

std::uint64_t run_seed(std::uint64_t instance_seed, int run) {
    return derive_seed(instance_seed ^ 0x5851f42d4c957f2dULL, static_cast<std::uint64_t>(run));
}

InstanceStats accumulate(const std::vector<RunRecord>& records) {
    InstanceStats s;
    for (const auto& r : records) {
        ++s.runs;
        s.total_evaluations += r.evaluations;
        s.generalization_champions += r.generalization_tests;
        if (r.balanced) ++s.balanced_experiments;
        if (!r.success) continue;
        ++s.successful_experiments;
        s.total_generalization_score += r.generalization;
        s.total_node_count += r.nodes;
        ++s.network_sample_size;
    }
    return s;
}

InstanceResult run_instance(const Preset& preset, const EvolutionParams& params, const Task& task,
                            std::uint64_t seed, int instance, int runs, int threads) {
    if (runs < 0) runs = preset.runs_per_instance;
    std::vector<RunOutcome> outcomes(static_cast<std::size_t>(runs));
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (int i = next++; i < runs; i = next++) {
            try {
                outcomes[static_cast<std::size_t>(i)] = run_experiment(preset, params, task, run_seed(seed, i));
                outcomes[static_cast<std::size_t>(i)].record.instance = instance;
                outcomes[static_cast<std::size_t>(i)].record.run = i;
                if (i + 1 != runs) outcomes[static_cast<std::size_t>(i)].census.clear();
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const int n_threads = std::clamp(threads, 1, std::max(runs, 1));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    InstanceResult result;
    for (auto& o : outcomes) result.records.push_back(o.record);
    result.stats = accumulate(result.records);
    result.stats.preset = preset.name;
    result.stats.instance = instance;
    result.stats.seed = seed;
    if (!outcomes.empty()) result.stats.activation_distribution = std::move(outcomes.back().census);
    return result;
}

Estimate estimate(const std::vector<double>& values) {
    Estimate e;
    e.n = values.size();
    if (values.empty()) return e;
    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / static_cast<double>(e.n);
    if (e.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.mean) * (v - e.mean);
        e.std_error = std::sqrt(ss / static_cast<double>(e.n - 1)) / std::sqrt(static_cast<double>(e.n));
    }
    return e;
}

AggregateStats aggregate(const std::vector<RunRecord>& records, bool include_failed) {
    if (records.empty()) throw std::invalid_argument("aggregate needs at least one record");
    std::vector<double> success, balanced, evaluations, generalization, nodes;
    for (const auto& r : records) {
        if (r.success) {
            generalization.push_back(r.generalization);
            nodes.push_back(r.nodes);
        }
        if (!include_failed && !r.success) continue;
        success.push_back(r.success ? 100.0 : 0.0);
        balanced.push_back(r.balanced ? 100.0 : 0.0);
        evaluations.push_back(static_cast<double>(r.evaluations));
    }
    AggregateStats a;
    a.records = records.size();
    a.success_rate = estimate(success);
    a.balanced_rate = estimate(balanced);
    a.evaluations = estimate(evaluations);
    a.generalization = estimate(generalization);
    a.nodes = estimate(nodes);
    return a;
}

AggregateStats aggregate_instances(const std::vector<InstanceStats>& instances, bool include_failed) {
    if (instances.empty()) throw std::invalid_argument("aggregate needs at least one instance");
    std::vector<double> success, balanced, evaluations, generalization, nodes;
    for (const auto& s : instances) {
        if (s.runs == 0) continue;
        const bool failed = s.successful_experiments == 0;
        if (failed && !include_failed) continue;
        const double runs = s.runs;
        success.push_back(100.0 * s.successful_experiments / runs);
        balanced.push_back(100.0 * s.balanced_experiments / runs);
        evaluations.push_back(static_cast<double>(s.total_evaluations) / runs);
        const double sample = s.network_sample_size;
        generalization.push_back(failed ? 0.0 : static_cast<double>(s.total_generalization_score) / sample);
        nodes.push_back(failed ? 0.0 : static_cast<double>(s.total_node_count) / sample);
    }
    AggregateStats a;
    a.records = instances.size();
    a.success_rate = estimate(success);
    a.balanced_rate = estimate(balanced);
    a.evaluations = estimate(evaluations);
    a.generalization = estimate(generalization);
    a.nodes = estimate(nodes);
    return a;
}

void write_records_csv_header(std::ostream& out) {
    out << "preset,instance,run,success,evaluations,generalization,nodes,seed,balanced,generations,extinct,balance_evaluations\n";
}

void write_record_csv(std::ostream& out, const RunRecord& r) {
    out << r.preset << ',' << r.instance << ',' << r.run << ',' << (r.success ? 1 : 0) << ',' << r.evaluations
        << ',' << r.generalization << ',' << r.nodes << ',' << r.seed << ',' << (r.balanced ? 1 : 0) << ','
        << r.generations << ',' << (r.extinct ? 1 : 0) << ',' << r.balance_evaluations << '\n';
}

std::string instance_json(const InstanceStats& s) {
    nlohmann::ordered_json j;
    j["preset"] = s.preset;
    j["instance"] = s.instance;
    j["seed"] = s.seed;
    j["runs"] = s.runs;
    j["total_evaluations"] = s.total_evaluations;
    j["successful_experiments"] = s.successful_experiments;
    j["balanced_experiments"] = s.balanced_experiments;
    j["total_generalization_score"] = s.total_generalization_score;
    j["generalization_champions"] = s.generalization_champions;
    j["total_node_count"] = s.total_node_count;
    j["network_sample_size"] = s.network_sample_size;
    auto census = nlohmann::ordered_json::array();
    for (const auto& [pair, count] : s.activation_distribution) {
        census.push_back({{"resting", pair.first}, {"active", pair.second}, {"count", count}});
    }
    j["activation_distribution"] = std::move(census);
    return j.dump(2) + "\n";
}

void write_aggregate_table(std::ostream& out, const std::vector<std::pair<std::string, AggregateStats>>& rows) {
    auto cell = [](const Estimate& e, int precision) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(precision) << e.mean << " +- " << std::setprecision(3) << e.std_error;
        return s.str();
    };
    std::size_t label_width = 8;
    for (const auto& [label, _] : rows) label_width = std::max(label_width, label.size());
    out << std::left << std::setw(static_cast<int>(label_width)) << "network" << "  " << std::setw(6) << "n"
        << std::setw(20) << "success %" << std::setw(20) << "balanced %" << std::setw(24) << "evaluations"
        << std::setw(20) << "generalizations" << "no. nodes\n";
    for (const auto& [label, a] : rows) {
        out << std::left << std::setw(static_cast<int>(label_width)) << label << "  " << std::setw(6) << a.records
            << std::setw(20) << cell(a.success_rate, 2) << std::setw(20) << cell(a.balanced_rate, 2)
            << std::setw(24) << cell(a.evaluations, 2) << std::setw(20) << cell(a.generalization, 2)
            << cell(a.nodes, 3) << '\n';
    }
}

}  // namespace neatwise::experiment
