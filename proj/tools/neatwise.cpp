#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "neatwise/activation.hpp"
#include "neatwise/experiment.hpp"
#include "neatwise/speciation.hpp"
#include "neatwise/validation.hpp"

#ifndef NEATWISE_DEFAULT_PARAMS
#define NEATWISE_DEFAULT_PARAMS "config/dpnv.params"
#endif

namespace fs = std::filesystem;
using namespace neatwise;

namespace {

struct EvolutionOptions {
    std::string preset = "BASELINE";
    std::string pool_file;
    std::string params_file = NEATWISE_DEFAULT_PARAMS;
    std::vector<std::string> overrides;  // key=value
    std::uint64_t seed = 0;
};

void add_evolution_options(CLI::App* cmd, EvolutionOptions& o, bool with_preset) {
    if (with_preset) {
        cmd->add_option("--preset", o.preset, "BASELINE, HOMO_<KIND>, SA0, SA1, SA2 or SA3")->capture_default_str();
        cmd->add_option("--pool", o.pool_file, "pool file (kind slope shift weight per line); replaces --preset")
            ->check(CLI::ExistingFile);
    }
    cmd->add_option("--params", o.params_file, "parameter file (key value per line)")->capture_default_str();
    cmd->add_option("--set", o.overrides, "parameter override key=value, applied after presets");
    cmd->add_option("--seed", o.seed, "base seed")->required();
}

experiment::Preset resolve_preset(const EvolutionOptions& o) {
    if (!o.pool_file.empty()) return experiment::custom_preset(fs::path(o.pool_file).stem().string(), load_pool(o.pool_file));
    return experiment::preset(o.preset);
}

EvolutionParams resolve_params(const EvolutionOptions& o, const experiment::Preset& preset) {
    EvolutionParams params = experiment::apply_overrides(load_params(o.params_file), preset);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        set_param(params, kv.substr(0, eq), kv.substr(eq + 1));
    }
    params.validate();
    return params;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream s;
    s << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

// Timestamps and host details go here so the data files stay reproducible.
void write_metadata(const fs::path& dir, const std::vector<std::string>& argv, double seconds) {
    nlohmann::ordered_json j;
    j["finished_utc"] = timestamp();
    j["wall_seconds"] = seconds;
    j["hardware_threads"] = std::thread::hardware_concurrency();
    j["argv"] = argv;
    open_output(dir / "metadata.json") << j.dump(2) << '\n';
}

struct PresetRun {
    std::string label;
    std::vector<experiment::RunRecord> records;
    std::vector<experiment::InstanceStats> instances;
};

PresetRun run_preset(const experiment::Preset& preset, const EvolutionParams& params, std::uint64_t seed,
                     int instances, int runs, int jobs, const fs::path& dir, bool quiet) {
    fs::create_directories(dir);
    {
        auto out = open_output(dir / "params.txt");
        write_params(out, params);
    }
    experiment::DpnvTask task;
    PresetRun result{preset.name, {}, {}};
    auto csv = open_output(dir / "runs.csv");
    experiment::write_records_csv_header(csv);
    for (int i = 0; i < instances; ++i) {
        const auto inst = experiment::run_instance(preset, params, task, experiment::instance_seed(seed, i), i, runs, jobs);
        for (const auto& r : inst.records) experiment::write_record_csv(csv, r);
        csv.flush();
        open_output(dir / ("instance_" + std::to_string(i) + ".json")) << experiment::instance_json(inst.stats);
        result.records.insert(result.records.end(), inst.records.begin(), inst.records.end());
        result.instances.push_back(inst.stats);
        if (!quiet) {
            std::cerr << preset.name << " instance " << i << ": " << inst.stats.successful_experiments << '/'
                      << inst.stats.runs << " successful, " << inst.stats.balanced_experiments << " balanced\n";
        }
    }
    return result;
}

void write_aggregates(const fs::path& path, const std::vector<PresetRun>& runs) {
    auto out = open_output(path);
    std::vector<std::pair<std::string, experiment::AggregateStats>> rows;
    out << "Per run, including failed experiments\n";
    for (const auto& r : runs) rows.emplace_back(r.label, experiment::aggregate(r.records, true));
    experiment::write_aggregate_table(out, rows);
    rows.clear();
    out << "\nPer run, excluding failed experiments\n";
    for (const auto& r : runs) {
        bool any = false;
        for (const auto& rec : r.records) any = any || rec.success;
        if (any) rows.emplace_back(r.label, experiment::aggregate(r.records, false));
    }
    experiment::write_aggregate_table(out, rows);
    rows.clear();
    out << "\nPer instance, including failed instances\n";
    for (const auto& r : runs) rows.emplace_back(r.label, experiment::aggregate_instances(r.instances, true));
    experiment::write_aggregate_table(out, rows);
    rows.clear();
    out << "\nPer instance, excluding failed instances\n";
    for (const auto& r : runs) {
        bool any = false;
        for (const auto& s : r.instances) any = any || s.successful_experiments > 0;
        if (any) rows.emplace_back(r.label, experiment::aggregate_instances(r.instances, false));
    }
    experiment::write_aggregate_table(out, rows);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

CanonicalFunction make_function(const std::string& kind, double slope, double shift) {
    return {parse_kind(kind), slope, shift};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };
    const int default_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    CLI::App app{"Evolves double pole balancing controllers with piecewise activation functions."};
    app.require_subcommand(1);

    EvolutionOptions run_opts;
    int instances = 1, runs = 100, jobs = default_jobs;
    std::string out_dir = "results";
    bool quiet = false;
    auto* run = app.add_subcommand("run", "run instances of one preset and write CSV, JSON and an aggregate table");
    add_evolution_options(run, run_opts, true);
    run->add_option("--instances", instances, "number of instances")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--runs", runs, "experiments per instance")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_flag("--quiet", quiet, "no progress on stderr");

    EvolutionOptions sweep_opts;
    std::string sweep_presets = "BASELINE,SA0,SA1,SA2,SA3";
    auto* sweep = app.add_subcommand("sweep", "run several presets with the same seed into sub-directories");
    add_evolution_options(sweep, sweep_opts, false);
    sweep->add_option("--presets", sweep_presets, "comma-separated preset names")->capture_default_str();
    sweep->add_option("--instances", instances, "number of instances")->check(CLI::PositiveNumber);
    sweep->add_option("--runs", runs, "experiments per instance")->check(CLI::PositiveNumber);
    sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_flag("--quiet", quiet, "no progress on stderr");

    std::string resting = "arctan", active = "sine", tab_out;
    double resting_slope = 1.0, resting_shift = 0.0, active_slope = 1.0, active_shift = 0.0;
    std::vector<double> range = {-3.14, 3.14};
    int points = 629;
    auto* tab = app.add_subcommand("tabulate", "write x,y samples of a piecewise activation function");
    tab->add_option("--resting", resting, "function for x < 0")->capture_default_str();
    tab->add_option("--active", active, "function for x >= 0")->capture_default_str();
    tab->add_option("--resting-slope", resting_slope)->capture_default_str();
    tab->add_option("--resting-shift", resting_shift)->capture_default_str();
    tab->add_option("--active-slope", active_slope)->capture_default_str();
    tab->add_option("--active-shift", active_shift)->capture_default_str();
    tab->add_option("--range", range, "lo hi")->expected(2)->capture_default_str();
    tab->add_option("--n", points, "number of samples (>= 2)")->capture_default_str();
    tab->add_option("--out", tab_out, "CSV file (default stdout)");

    EvolutionOptions census_opts;
    std::string census_out;
    auto* census = app.add_subcommand("census", "evolve once and count hidden-node activation pairs in the final population");
    add_evolution_options(census, census_opts, true);
    census->add_option("--out", census_out, "CSV file (default stdout)");

    validation::Options vopts;
    auto* validate = app.add_subcommand("validate", "run the fast property suite");
    validate->add_flag("--corrupt-physics", vopts.corrupt_physics, "negative control: perturb the pole-2 length");
    validate->add_option("--seed", vopts.seed, "property suite seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run) {
            const auto preset = resolve_preset(run_opts);
            const auto params = resolve_params(run_opts, preset);
            const fs::path dir(out_dir);
            const PresetRun result = run_preset(preset, params, run_opts.seed, instances, runs, jobs, dir, quiet);
            write_aggregates(dir / "aggregate.txt", {result});
            write_metadata(dir, args, elapsed());
            std::ifstream table(dir / "aggregate.txt");
            std::cout << table.rdbuf();
            return 0;
        }
        if (*sweep) {
            const fs::path dir(out_dir);
            std::vector<PresetRun> results;
            for (const auto& name : split_list(sweep_presets)) {
                EvolutionOptions o = sweep_opts;
                o.preset = name;
                const auto preset = resolve_preset(o);
                const auto params = resolve_params(o, preset);
                results.push_back(run_preset(preset, params, o.seed, instances, runs, jobs, dir / preset.name, quiet));
            }
            write_aggregates(dir / "aggregate.txt", results);
            write_metadata(dir, args, elapsed());
            std::ifstream table(dir / "aggregate.txt");
            std::cout << table.rdbuf();
            return 0;
        }
        if (*tab) {
            const PiecewiseActivation p{make_function(resting, resting_slope, resting_shift),
                                        make_function(active, active_slope, active_shift)};
            const auto rows = tabulate(p, range[0], range[1], points);
            if (tab_out.empty()) {
                write_tabulation_csv(std::cout, rows);
            } else {
                auto out = open_output(tab_out);
                write_tabulation_csv(out, rows);
            }
            return 0;
        }
        if (*census) {
            const auto preset = resolve_preset(census_opts);
            const auto params = resolve_params(census_opts, preset);
            const auto outcome = experiment::run_experiment(preset, params, experiment::DpnvTask{}, census_opts.seed);
            std::ofstream file;
            if (!census_out.empty()) file = open_output(census_out);
            std::ostream& out = census_out.empty() ? std::cout : file;
            out << "resting,active,count\n";
            for (const auto& [pair, count] : outcome.census) out << pair.first << ',' << pair.second << ',' << count << '\n';
            return 0;
        }
        if (*validate) {
            bool all = true;
            for (const auto& r : validation::run_properties(vopts)) {
                std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
                all = all && r.passed;
            }
            std::cout << std::fixed << std::setprecision(1) << "elapsed " << elapsed() << " s\n";
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
