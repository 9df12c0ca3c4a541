#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "neatwise/activation.hpp"
#include "neatwise/rng.hpp"

namespace neatwise {

using NodeId = int;
using Innovation = std::int64_t;

enum class NodeRole { Input, Bias, Hidden, Output };

std::string_view role_name(NodeRole role);
NodeRole parse_role(std::string_view name);

struct NodeGene {
    NodeId id = 0;
    NodeRole role = NodeRole::Hidden;
    // Ignored for input and bias nodes.
    PiecewiseActivation activation;

    bool is_sensor() const { return role == NodeRole::Input || role == NodeRole::Bias; }
};

struct ConnectionGene {
    NodeId source = 0;
    NodeId target = 0;
    double weight = 0.0;
    bool enabled = true;
    Innovation innovation = 0;
};

inline constexpr double kWeightCap = 8.0;

/// Node genes sorted by id, connection genes sorted by innovation.
struct Genome {
    std::vector<NodeGene> nodes;
    std::vector<ConnectionGene> connections;
    double fitness = 0.0;
    double adjusted_fitness = 0.0;

    const NodeGene* find_node(NodeId id) const;
    bool has_connection(NodeId source, NodeId target) const;
    std::size_t count_role(NodeRole role) const;
    std::size_t enabled_connection_count() const;

    /// Throws std::logic_error describing the first violated invariant.
    void validate() const;
};

/// Hands out innovation numbers and node ids. Within one generation the
/// same structural event maps to the same numbers; call new_generation()
/// between generations. Not thread-safe.
class InnovationRegistry {
public:
    struct Split {
        NodeId node = 0;
        Innovation in_innovation = 0;
        Innovation out_innovation = 0;
    };

    Innovation connection_innovation(NodeId source, NodeId target);
    Split node_split(const ConnectionGene& split);

    NodeId fresh_node_id() { return next_node_id_++; }
    Innovation fresh_innovation() { return next_innovation_++; }

    /// Ensures ids below `bound` are never handed out.
    void reserve_node_ids(NodeId bound);

    void new_generation();

    Innovation next_innovation() const { return next_innovation_; }
    NodeId next_node_id() const { return next_node_id_; }

private:
    Innovation next_innovation_ = 1;
    NodeId next_node_id_ = 0;
    std::map<std::pair<NodeId, NodeId>, Innovation> connections_;
    std::map<Innovation, Split> splits_;
};

/// Inputs, one bias node and outputs, fully connected sensor -> output with
/// weights uniform in [-1, 1]. Ids: inputs 0..n-1, bias n, outputs after.
Genome minimal_genome(int n_inputs, int n_outputs, const PiecewiseActivation& output_activation,
                      InnovationRegistry& registry, Rng& rng);

/// Splits a uniformly chosen enabled connection. The new hidden node's
/// activation is drawn from `pool`; in-weight 1.0, out-weight the old weight.
/// Returns false (genome untouched) when there is no enabled connection.
bool mutate_add_node(Genome& g, const FunctionPool& pool, InnovationRegistry& registry, Rng& rng);

/// Adds one previously unconnected (source, target) pair; recurrent links
/// and self-loops are allowed. Returns false after `tries` failed draws.
bool mutate_add_connection(Genome& g, InnovationRegistry& registry, Rng& rng, int tries = 20);

struct WeightMutation {
    double perturb_prob = 0.9;
    double replace_prob = 0.1;
    double power = 2.5;
};

/// Per gene: with perturb_prob add U(-power, power); else with replace_prob
/// replace by U(-power, power). Results are clamped to +-kWeightCap.
void mutate_weights(Genome& g, const WeightMutation& m, Rng& rng);

/// `fitter` supplies disjoint and excess genes and wins activation ties.
Genome crossover(const Genome& fitter, const Genome& other, Rng& rng);

struct CompatibilityCoefficients {
    double excess = 1.0;
    double disjoint = 1.0;
    double weight = 3.0;
};

double compatibility(const Genome& a, const Genome& b, const CompatibilityCoefficients& c);

/// Line format: `node <id> <role> <kind> <slope> <shift> <kind> <slope> <shift>`
/// and `conn <innovation> <source> <target> <weight> <enabled>`.
void write_genome(std::ostream& out, const Genome& g);
Genome read_genome(std::istream& in);
std::string to_text(const Genome& g);

}  // namespace neatwise
