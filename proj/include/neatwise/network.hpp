#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neatwise/genome.hpp"

namespace neatwise {

/// Executable form of a genome. Each activate() call loads the sensors and
/// then performs one synchronous update: computed nodes see the current
/// inputs and the previous-step activations of other computed nodes, so a
/// signal crosses one hidden layer per call and recurrent links carry one
/// step of memory.
class Phenotype {
public:
    /// Throws std::logic_error on a malformed genome.
    explicit Phenotype(const Genome& g);

    std::span<const double> activate(std::span<const double> inputs);
    void reset();

    std::size_t node_count() const { return state_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t input_count() const { return inputs_.size(); }
    std::size_t output_count() const { return outputs_.size(); }

    /// Node ids in evaluation order.
    const std::vector<NodeId>& order() const { return ids_; }
    std::span<const double> state() const { return state_; }
    /// Activation of output `i`.
    const PiecewiseActivation& output_activation(std::size_t i) const { return activation_[outputs_[i]]; }

private:
    struct Edge {
        std::size_t source;
        double weight;
    };

    std::vector<NodeId> ids_;
    std::vector<PiecewiseActivation> activation_;
    std::vector<std::size_t> inputs_;
    std::vector<std::size_t> biases_;
    std::vector<std::size_t> outputs_;
    std::vector<std::size_t> computed_;          // non-sensor nodes
    std::vector<std::size_t> first_edge_;        // per computed node, CSR offsets
    std::vector<Edge> edges_;
    std::vector<double> state_;
    std::vector<double> next_;
    std::vector<double> output_values_;
};

inline Phenotype build(const Genome& g) { return Phenotype(g); }

}  // namespace neatwise
