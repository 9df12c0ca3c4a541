#include "neatwise/network.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace neatwise {

Phenotype::Phenotype(const Genome& g) {
    g.validate();
    std::map<NodeId, std::size_t> index;
    for (const auto& n : g.nodes) {
        index.emplace(n.id, ids_.size());
        ids_.push_back(n.id);
        activation_.push_back(n.activation);
        switch (n.role) {
            case NodeRole::Input: inputs_.push_back(ids_.size() - 1); break;
            case NodeRole::Bias: biases_.push_back(ids_.size() - 1); break;
            case NodeRole::Output: outputs_.push_back(ids_.size() - 1); [[fallthrough]];
            case NodeRole::Hidden: computed_.push_back(ids_.size() - 1); break;
        }
    }
    std::sort(computed_.begin(), computed_.end());

    std::vector<std::vector<Edge>> incoming(ids_.size());
    for (const auto& c : g.connections) {
        if (!c.enabled) continue;
        incoming[index.at(c.target)].push_back({index.at(c.source), c.weight});
    }
    for (std::size_t node : computed_) {
        first_edge_.push_back(edges_.size());
        edges_.insert(edges_.end(), incoming[node].begin(), incoming[node].end());
    }
    first_edge_.push_back(edges_.size());

    state_.assign(ids_.size(), 0.0);
    next_.assign(ids_.size(), 0.0);
    output_values_.assign(outputs_.size(), 0.0);
}

std::span<const double> Phenotype::activate(std::span<const double> inputs) {
    if (inputs.size() != inputs_.size()) {
        throw std::domain_error("expected " + std::to_string(inputs_.size()) + " inputs, got " +
                                std::to_string(inputs.size()));
    }
    // Sensors are loaded before the pass; computed nodes read the previous
    // step's values of other computed nodes.
    for (std::size_t k = 0; k < inputs_.size(); ++k) state_[inputs_[k]] = inputs[k];
    for (std::size_t b : biases_) state_[b] = 1.0;
    for (std::size_t k = 0; k < computed_.size(); ++k) {
        double sum = 0.0;
        for (std::size_t e = first_edge_[k]; e < first_edge_[k + 1]; ++e) {
            sum += edges_[e].weight * state_[edges_[e].source];
        }
        next_[computed_[k]] = eval_piecewise(activation_[computed_[k]], sum);
    }
    for (std::size_t k = 0; k < inputs_.size(); ++k) next_[inputs_[k]] = inputs[k];
    for (std::size_t b : biases_) next_[b] = 1.0;
    state_.swap(next_);
    for (std::size_t k = 0; k < outputs_.size(); ++k) output_values_[k] = state_[outputs_[k]];
    return output_values_;
}

void Phenotype::reset() {
    std::fill(state_.begin(), state_.end(), 0.0);
    std::fill(next_.begin(), next_.end(), 0.0);
    std::fill(output_values_.begin(), output_values_.end(), 0.0);
}

}  // namespace neatwise
