#pragma once

#include <utility>

#include "neatwise/activation.hpp"
#include "neatwise/genome.hpp"
#include "neatwise/rng.hpp"

namespace neatwise::testing {

inline PiecewiseActivation tanh_pair() { return PiecewiseActivation::homogeneous({FunctionKind::TanH, 1.0, 0.0}); }

inline const FunctionPool& sa1_pool() {
    static const FunctionPool pool({{{FunctionKind::ArcTan, 1.0, 0.0}, 0.875},
                                    {{FunctionKind::Sigmoid, 4.924273, -0.5}, 0.125}});
    return pool;
}

/// Minimal (3,1) genome followed by `steps` random mutations.
inline Genome random_genome(InnovationRegistry& reg, Rng& rng, int steps) {
    Genome g = minimal_genome(3, 1, tanh_pair(), reg, rng);
    for (int s = 0; s < steps; ++s) {
        switch (rng.below(3)) {
            case 0: mutate_add_node(g, sa1_pool(), reg, rng); break;
            case 1: mutate_add_connection(g, reg, rng); break;
            default: mutate_weights(g, {}, rng); break;
        }
    }
    return g;
}

/// Two genomes with a shared history; the first is the fitter one.
inline std::pair<Genome, Genome> related_pair(InnovationRegistry& reg, Rng& rng) {
    Genome a = minimal_genome(3, 1, tanh_pair(), reg, rng);
    Genome b = minimal_genome(3, 1, tanh_pair(), reg, rng);
    for (Genome* g : {&a, &b}) {
        const int steps = static_cast<int>(rng.below(12));
        for (int s = 0; s < steps; ++s) {
            switch (rng.below(3)) {
                case 0: mutate_add_node(*g, sa1_pool(), reg, rng); break;
                case 1: mutate_add_connection(*g, reg, rng); break;
                default: mutate_weights(*g, {}, rng); break;
            }
            if (rng.chance(0.3)) reg.new_generation();
        }
    }
    a.fitness = 1.0;
    b.fitness = 0.5;
    return {std::move(a), std::move(b)};
}

}  // namespace neatwise::testing
