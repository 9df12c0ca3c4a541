#include "neatwise/genome.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace neatwise {

namespace {

bool by_id(const NodeGene& a, const NodeGene& b) { return a.id < b.id; }

void insert_node(Genome& g, NodeGene node) {
    auto it = std::lower_bound(g.nodes.begin(), g.nodes.end(), node, by_id);
    g.nodes.insert(it, std::move(node));
}

void insert_connection(Genome& g, ConnectionGene c) {
    auto it = std::lower_bound(g.connections.begin(), g.connections.end(), c,
                               [](const ConnectionGene& a, const ConnectionGene& b) {
                                   return a.innovation < b.innovation;
                               });
    g.connections.insert(it, c);
}

double clamp_weight(double w) { return std::clamp(w, -kWeightCap, kWeightCap); }

}  // namespace

std::string_view role_name(NodeRole role) {
    switch (role) {
        case NodeRole::Input: return "input";
        case NodeRole::Bias: return "bias";
        case NodeRole::Hidden: return "hidden";
        case NodeRole::Output: return "output";
    }
    throw std::logic_error("unhandled node role");
}

NodeRole parse_role(std::string_view name) {
    for (NodeRole r : {NodeRole::Input, NodeRole::Bias, NodeRole::Hidden, NodeRole::Output}) {
        if (name == role_name(r)) return r;
    }
    throw std::invalid_argument("unknown node role '" + std::string(name) + "'");
}

const NodeGene* Genome::find_node(NodeId id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), NodeGene{id, NodeRole::Hidden, {}}, by_id);
    if (it == nodes.end() || it->id != id) return nullptr;
    return &*it;
}

bool Genome::has_connection(NodeId source, NodeId target) const {
    return std::any_of(connections.begin(), connections.end(),
                       [&](const ConnectionGene& c) { return c.source == source && c.target == target; });
}

std::size_t Genome::count_role(NodeRole role) const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [&](const NodeGene& n) { return n.role == role; }));
}

std::size_t Genome::enabled_connection_count() const {
    return static_cast<std::size_t>(
        std::count_if(connections.begin(), connections.end(), [](const ConnectionGene& c) { return c.enabled; }));
}

void Genome::validate() const {
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (nodes[i - 1].id >= nodes[i].id) throw std::logic_error("node ids not strictly increasing");
    }
    if (count_role(NodeRole::Input) == 0) throw std::logic_error("genome has no input node");
    if (count_role(NodeRole::Bias) == 0) throw std::logic_error("genome has no bias node");
    if (count_role(NodeRole::Output) == 0) throw std::logic_error("genome has no output node");
    std::set<std::pair<NodeId, NodeId>> pairs;
    for (std::size_t i = 0; i < connections.size(); ++i) {
        const auto& c = connections[i];
        if (i > 0 && connections[i - 1].innovation >= c.innovation) {
            throw std::logic_error("connection innovations not strictly increasing");
        }
        const NodeGene* src = find_node(c.source);
        const NodeGene* dst = find_node(c.target);
        if (src == nullptr || dst == nullptr) {
            throw std::logic_error("connection " + std::to_string(c.innovation) + " references a missing node");
        }
        if (dst->is_sensor()) {
            throw std::logic_error("connection " + std::to_string(c.innovation) + " targets a sensor node");
        }
        if (!pairs.emplace(c.source, c.target).second) {
            throw std::logic_error("duplicate connection " + std::to_string(c.source) + "->" +
                                   std::to_string(c.target));
        }
        if (!std::isfinite(c.weight)) throw std::logic_error("non-finite connection weight");
    }
}

Innovation InnovationRegistry::connection_innovation(NodeId source, NodeId target) {
    auto [it, inserted] = connections_.try_emplace({source, target}, next_innovation_);
    if (inserted) ++next_innovation_;
    return it->second;
}

InnovationRegistry::Split InnovationRegistry::node_split(const ConnectionGene& split) {
    if (auto it = splits_.find(split.innovation); it != splits_.end()) return it->second;
    Split s;
    s.node = fresh_node_id();
    s.in_innovation = connection_innovation(split.source, s.node);
    s.out_innovation = connection_innovation(s.node, split.target);
    splits_.emplace(split.innovation, s);
    return s;
}

void InnovationRegistry::reserve_node_ids(NodeId bound) { next_node_id_ = std::max(next_node_id_, bound); }

void InnovationRegistry::new_generation() {
    connections_.clear();
    splits_.clear();
}

Genome minimal_genome(int n_inputs, int n_outputs, const PiecewiseActivation& output_activation,
                      InnovationRegistry& registry, Rng& rng) {
    if (n_inputs < 1 || n_outputs < 1) throw std::invalid_argument("need at least one input and one output");
    Genome g;
    for (int i = 0; i < n_inputs; ++i) g.nodes.push_back({i, NodeRole::Input, output_activation});
    const NodeId bias = n_inputs;
    g.nodes.push_back({bias, NodeRole::Bias, output_activation});
    for (int o = 0; o < n_outputs; ++o) {
        g.nodes.push_back({bias + 1 + o, NodeRole::Output, output_activation});
    }
    registry.reserve_node_ids(bias + 1 + n_outputs);
    for (int o = 0; o < n_outputs; ++o) {
        const NodeId out = bias + 1 + o;
        for (NodeId src = 0; src <= bias; ++src) {
            ConnectionGene c{src, out, rng.uniform(-1.0, 1.0), true, registry.connection_innovation(src, out)};
            insert_connection(g, c);
        }
    }
    return g;
}

bool mutate_add_node(Genome& g, const FunctionPool& pool, InnovationRegistry& registry, Rng& rng) {
    std::vector<std::size_t> enabled;
    for (std::size_t i = 0; i < g.connections.size(); ++i) {
        if (g.connections[i].enabled) enabled.push_back(i);
    }
    if (enabled.empty()) return false;

    ConnectionGene& old = g.connections[enabled[rng.below(enabled.size())]];
    old.enabled = false;
    const ConnectionGene split = old;

    InnovationRegistry::Split s = registry.node_split(split);
    const bool clash = g.find_node(s.node) != nullptr || g.has_connection(split.source, s.node) ||
                       g.has_connection(s.node, split.target);
    if (clash) {
        // The same link was split earlier in this genome's lineage under the
        // same generation's numbering; take unshared numbers instead.
        s.node = registry.fresh_node_id();
        s.in_innovation = registry.fresh_innovation();
        s.out_innovation = registry.fresh_innovation();
    }

    insert_node(g, {s.node, NodeRole::Hidden, sample_pair(pool, rng)});
    insert_connection(g, {split.source, s.node, 1.0, true, s.in_innovation});
    insert_connection(g, {s.node, split.target, split.weight, true, s.out_innovation});
    return true;
}

bool mutate_add_connection(Genome& g, InnovationRegistry& registry, Rng& rng, int tries) {
    std::vector<NodeId> targets;
    for (const auto& n : g.nodes) {
        if (!n.is_sensor()) targets.push_back(n.id);
    }
    if (targets.empty()) return false;
    for (int attempt = 0; attempt < tries; ++attempt) {
        const NodeId source = g.nodes[rng.below(g.nodes.size())].id;
        const NodeId target = targets[rng.below(targets.size())];
        if (g.has_connection(source, target)) continue;
        Innovation inn = registry.connection_innovation(source, target);
        if (std::any_of(g.connections.begin(), g.connections.end(),
                        [&](const ConnectionGene& c) { return c.innovation == inn; })) {
            inn = registry.fresh_innovation();
        }
        insert_connection(g, {source, target, rng.uniform(-1.0, 1.0), true, inn});
        return true;
    }
    return false;
}

void mutate_weights(Genome& g, const WeightMutation& m, Rng& rng) {
    for (auto& c : g.connections) {
        const double r = rng.uniform();
        const double delta = rng.uniform(-m.power, m.power);
        if (r < m.perturb_prob) {
            c.weight = clamp_weight(c.weight + delta);
        } else if (r < m.perturb_prob + m.replace_prob) {
            c.weight = clamp_weight(delta);
        }
    }
}

Genome crossover(const Genome& fitter, const Genome& other, Rng& rng) {
    Genome child;
    std::set<std::pair<NodeId, NodeId>> linked;
    std::set<NodeId> referenced;

    auto inherit = [&](ConnectionGene gene, bool disabled_in_a_parent) {
        if (!linked.emplace(gene.source, gene.target).second) return;
        gene.enabled = !(disabled_in_a_parent && rng.chance(0.75));
        referenced.insert(gene.source);
        referenced.insert(gene.target);
        child.connections.push_back(gene);
    };

    const auto& a = fitter.connections;
    const auto& b = other.connections;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].innovation < b[j].innovation)) {
            inherit(a[i], !a[i].enabled);
            ++i;
        } else if (i == a.size() || b[j].innovation < a[i].innovation) {
            ++j;  // disjoint or excess in the weaker parent
        } else {
            const bool disabled = !a[i].enabled || !b[j].enabled;
            inherit(rng.chance(0.5) ? a[i] : b[j], disabled);
            ++i;
            ++j;
        }
    }

    for (const auto& n : fitter.nodes) {
        if (n.role != NodeRole::Hidden || referenced.count(n.id) != 0) child.nodes.push_back(n);
    }
    for (const auto& n : other.nodes) {
        if (referenced.count(n.id) != 0 && fitter.find_node(n.id) == nullptr) insert_node(child, n);
    }
    return child;
}

double compatibility(const Genome& a, const Genome& b, const CompatibilityCoefficients& c) {
    const auto& x = a.connections;
    const auto& y = b.connections;
    std::size_t i = 0;
    std::size_t j = 0;
    double disjoint = 0.0;
    double excess = 0.0;
    double weight_diff = 0.0;
    double matching = 0.0;
    while (i < x.size() && j < y.size()) {
        if (x[i].innovation == y[j].innovation) {
            weight_diff += std::abs(x[i].weight - y[j].weight);
            matching += 1.0;
            ++i;
            ++j;
        } else if (x[i].innovation < y[j].innovation) {
            disjoint += 1.0;
            ++i;
        } else {
            disjoint += 1.0;
            ++j;
        }
    }
    excess = static_cast<double>((x.size() - i) + (y.size() - j));

    const std::size_t larger = std::max(x.size(), y.size());
    const double n = larger < 20 ? 1.0 : static_cast<double>(larger);
    const double mean_weight = matching > 0.0 ? weight_diff / matching : 0.0;
    return c.excess * excess / n + c.disjoint * disjoint / n + c.weight * mean_weight;
}

void write_genome(std::ostream& out, const Genome& g) {
    const auto old_precision = out.precision(17);
    for (const auto& n : g.nodes) {
        const auto& r = n.activation.resting;
        const auto& a = n.activation.active;
        out << "node " << n.id << ' ' << role_name(n.role) << ' ' << kind_name(r.kind) << ' ' << r.slope << ' '
            << r.shift << ' ' << kind_name(a.kind) << ' ' << a.slope << ' ' << a.shift << '\n';
    }
    for (const auto& c : g.connections) {
        out << "conn " << c.innovation << ' ' << c.source << ' ' << c.target << ' ' << c.weight << ' '
            << (c.enabled ? 1 : 0) << '\n';
    }
    out.precision(old_precision);
}

Genome read_genome(std::istream& in) {
    Genome g;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string tag;
        if (!(fields >> tag) || tag.front() == '#') continue;
        auto fail = [&](const std::string& what) {
            return std::invalid_argument("genome line " + std::to_string(line_no) + ": " + what);
        };
        if (tag == "node") {
            NodeGene n;
            std::string role, rk, ak;
            if (!(fields >> n.id >> role >> rk >> n.activation.resting.slope >> n.activation.resting.shift >> ak >>
                  n.activation.active.slope >> n.activation.active.shift)) {
                throw fail("malformed node gene");
            }
            n.role = parse_role(role);
            n.activation.resting.kind = parse_kind(rk);
            n.activation.active.kind = parse_kind(ak);
            insert_node(g, n);
        } else if (tag == "conn") {
            ConnectionGene c;
            int enabled = 0;
            if (!(fields >> c.innovation >> c.source >> c.target >> c.weight >> enabled)) {
                throw fail("malformed connection gene");
            }
            c.enabled = enabled != 0;
            insert_connection(g, c);
        } else {
            throw fail("unknown record '" + tag + "'");
        }
    }
    g.validate();
    return g;
}

std::string to_text(const Genome& g) {
    std::ostringstream s;
    write_genome(s, g);
    return s.str();
}

}  // namespace neatwise
