#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "neatwise/genome.hpp"
#include "neatwise/network.hpp"

namespace neatwise::cartpole {

struct State {
    double x = 0.0;
    double dx = 0.0;
    double theta1 = 0.0;
    double dtheta1 = 0.0;
    double theta2 = 0.0;
    double dtheta2 = 0.0;

    friend bool operator==(const State&, const State&) = default;
};

/// Benchmark constants. Lengths are pole half-lengths; gravity carries its
/// sign (negative is down).
struct PhysicsParams {
    double cart_mass = 1.0;
    double pole1_mass = 0.1;
    double pole1_half_length = 0.5;
    double pole2_mass = 0.01;
    double pole2_half_length = 0.05;
    double gravity = -9.8;
    double max_force = 10.0;
    double pole_friction = 2e-6;
    double time_step = 0.01;
    int steps_per_action = 2;

    double track_limit = 2.4;
    double angle_limit = 0.628319;  // 36 degrees

    double standard_start_theta1 = 0.0174532925199432957;  // 1 degree
    int episode_steps = 1000;
    int tail_steps = 100;

    // Generalization grid: each of x, dx, theta1, dtheta1 takes the
    // quantiles below of [-limit, +limit].
    std::array<double, 5> grid_quantiles = {0.05, 0.25, 0.5, 0.75, 0.95};
    double grid_x = 2.16;
    double grid_dx = 1.35;
    double grid_theta1 = 0.06283152;   // 3.6 degrees
    double grid_dtheta1 = 0.15009752;  // 8.6 degrees/s
    int generalization_threshold = 200;
};

using Derivative = std::array<double, 6>;

/// Time derivative of the state under `force`.
Derivative derivative(const State& s, double force, const PhysicsParams& p);

/// Advances one control interval (steps_per_action RK4 steps of time_step).
/// Throws std::domain_error if the state becomes non-finite or |force|
/// exceeds max_force.
State step(const State& s, double force, const PhysicsParams& p);

bool failed(const State& s, const PhysicsParams& p);

/// Cart position and pole angles scaled to [-1, 1]; velocities withheld.
std::array<double, 3> observe(const State& s, const PhysicsParams& p);

/// Affine map from the output node's nominal range onto [-max_force, max_force].
double output_to_force(double output, std::pair<double, double> range, const PhysicsParams& p);

/// Total mechanical energy (potential zero at the pivots).
double mechanical_energy(const State& s, const PhysicsParams& p);

struct EpisodeResult {
    int steps = 0;
    double tail_sum = 0.0;  // sum of |x|+|dx|+|theta1|+|dtheta1| over the last tail_steps steps
};

struct TraceRow {
    int step = 0;
    State state;
    double force = 0.0;
};

/// Runs the controller from `start` for at most `max_steps` control steps.
/// The phenotype must be freshly reset.
EpisodeResult episode(Phenotype& ph, const State& start, int max_steps, const PhysicsParams& p,
                      std::vector<TraceRow>* trace = nullptr);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

/// 0.1 * steps/1000 + 0.9 * 0.75 / tail_sum once at least 100 steps survive.
double fitness(const EpisodeResult& r);

/// Fitness of one episode from the standard start.
double evaluate(const Genome& g, const PhysicsParams& p);

std::vector<State> generalization_states(const PhysicsParams& p);

struct SuccessReport {
    bool balanced = false;      // survived episode_steps from the standard start
    int generalization = 0;     // passing starts out of 625; 0 when not balanced
    bool success = false;       // balanced and generalization >= threshold
};

SuccessReport success_test(const Genome& g, const PhysicsParams& p);

}  // namespace neatwise::cartpole
