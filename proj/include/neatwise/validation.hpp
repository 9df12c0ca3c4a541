#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "neatwise/cartpole.hpp"

namespace neatwise::validation {

/// Cart-pole dynamics written independently of cartpole::derivative: the
/// Lagrangian mass matrix is assembled and solved directly.
cartpole::Derivative reference_derivative(const cartpole::State& s, double force,
                                          const cartpole::PhysicsParams& p);

/// Explicit Euler over one control interval with step `dt`.
cartpole::State euler_reference(const cartpole::State& s, double force, const cartpole::PhysicsParams& p,
                                double dt = 1e-6);

/// Random state inside the failure bounds with bounded velocities.
cartpole::State random_state(Rng& rng, const cartpole::PhysicsParams& p);

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct Options {
    std::uint64_t seed = 20170501;
    /// Negative control: integrate with a perturbed pole-2 length while the
    /// oracle keeps the true constants.
    bool corrupt_physics = false;
    int oracle_cases = 100;
    int sampling_draws = 1'000'000;
    int fuzz_cases = 1000;
};

std::vector<PropertyResult> run_properties(const Options& options);

}  // namespace neatwise::validation
