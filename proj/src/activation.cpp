#include "neatwise/activation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace neatwise {

std::string_view kind_name(FunctionKind kind) {
    switch (kind) {
        case FunctionKind::Sine: return "sine";
        case FunctionKind::Sigmoid: return "sigmoid";
        case FunctionKind::ArcTan: return "arctan";
        case FunctionKind::TanH: return "tanh";
        case FunctionKind::BentIdentity: return "bentidentity";
        case FunctionKind::ReLU: return "relu";
        case FunctionKind::ELU: return "elu";
    }
    throw std::logic_error("unhandled function kind");
}

FunctionKind parse_kind(std::string_view name) {
    std::string lowered(name);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (FunctionKind kind : kAllKinds) {
        if (lowered == kind_name(kind)) return kind;
    }
    if (lowered == "sin") return FunctionKind::Sine;
    if (lowered == "atan") return FunctionKind::ArcTan;
    if (lowered == "bent_identity" || lowered == "bent") return FunctionKind::BentIdentity;
    throw std::invalid_argument("unknown activation function '" + std::string(name) + "'");
}

FunctionPool::FunctionPool(std::vector<PoolEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("function pool is empty");
    double total = 0.0;
    for (const auto& e : entries_) {
        if (!(e.weight > 0.0)) throw std::invalid_argument("pool weights must be positive");
        if (!(e.function.slope > 0.0)) throw std::invalid_argument("function slope must be positive");
        if (!std::isfinite(e.function.shift)) throw std::invalid_argument("function shift must be finite");
        total += e.weight;
        cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("pool weights must sum to 1 (got " + std::to_string(total) + ")");
    }
}

FunctionPool FunctionPool::uniform(const std::vector<CanonicalFunction>& functions) {
    std::vector<PoolEntry> entries;
    const double w = 1.0 / static_cast<double>(functions.size());
    for (const auto& f : functions) entries.push_back({f, w});
    // Rounding can leave the sum a few ulps off; give the remainder to the last entry.
    if (!entries.empty()) {
        double rest = 1.0;
        for (std::size_t i = 0; i + 1 < entries.size(); ++i) rest -= entries[i].weight;
        entries.back().weight = rest;
    }
    return FunctionPool(std::move(entries));
}

std::size_t FunctionPool::draw_index(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) return entries_.size() - 1;
    return static_cast<std::size_t>(it - cumulative_.begin());
}

const CanonicalFunction& FunctionPool::dominant() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        if (entries_[i].weight > entries_[best].weight) best = i;
    }
    return entries_[best].function;
}

FunctionPool parse_pool(std::istream& in) {
    std::vector<PoolEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string kind;
        if (!(fields >> kind)) continue;
        PoolEntry entry;
        std::string extra;
        if (!(fields >> entry.function.slope >> entry.function.shift >> entry.weight) || (fields >> extra)) {
            throw std::invalid_argument("pool line " + std::to_string(line_no) +
                                        ": expected 'kind slope shift weight'");
        }
        entry.function.kind = parse_kind(kind);
        entries.push_back(entry);
    }
    return FunctionPool(std::move(entries));
}

FunctionPool load_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pool file " + path);
    return parse_pool(in);
}

double eval_canonical(const CanonicalFunction& f, double x) {
    if (!std::isfinite(x)) throw std::domain_error("activation input is not finite");
    const double u = f.slope * x;
    double y = 0.0;
    switch (f.kind) {
        case FunctionKind::Sine: y = std::sin(u); break;
        case FunctionKind::Sigmoid: y = 1.0 / (1.0 + std::exp(-u)); break;
        case FunctionKind::ArcTan: y = std::atan(u); break;
        case FunctionKind::TanH: y = std::tanh(u); break;
        case FunctionKind::BentIdentity: y = (std::sqrt(u * u + 1.0) - 1.0) / 2.0 + u; break;
        case FunctionKind::ReLU: y = u > 0.0 ? u : 0.0; break;
        case FunctionKind::ELU: y = u >= 0.0 ? u : std::expm1(u); break;
    }
    return y + f.shift;
}

double eval_piecewise(const PiecewiseActivation& p, double x) {
    return eval_canonical(x < 0.0 ? p.resting : p.active, x);
}

std::pair<double, double> nominal_range(const CanonicalFunction& f) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    double lo = -1.0;
    double hi = 1.0;
    switch (f.kind) {
        case FunctionKind::Sigmoid:
        case FunctionKind::ReLU: lo = 0.0; break;
        case FunctionKind::ArcTan: lo = -half_pi; hi = half_pi; break;
        case FunctionKind::Sine:
        case FunctionKind::TanH:
        case FunctionKind::BentIdentity:
        case FunctionKind::ELU: break;
    }
    return {lo + f.shift, hi + f.shift};
}

std::pair<double, double> nominal_range(const PiecewiseActivation& p) {
    const auto a = nominal_range(p.resting);
    const auto b = nominal_range(p.active);
    return {std::min(a.first, b.first), std::max(a.second, b.second)};
}

PiecewiseActivation sample_pair(const FunctionPool& pool, Rng& rng) {
    PiecewiseActivation p;
    p.resting = pool.entries()[pool.draw_index(rng)].function;
    p.active = pool.entries()[pool.draw_index(rng)].function;
    return p;
}

boost::multiprecision::cpp_int count_configurations(unsigned pool_size, unsigned n_nodes) {
    if (pool_size == 0) throw std::invalid_argument("pool size must be positive");
    const boost::multiprecision::cpp_int pairs = static_cast<unsigned long long>(pool_size) * pool_size;
    return boost::multiprecision::pow(pairs, n_nodes);
}

double continuity_gap(const PiecewiseActivation& p) {
    return std::abs(eval_canonical(p.resting, 0.0) - eval_canonical(p.active, 0.0));
}

std::vector<std::pair<double, double>> tabulate(const PiecewiseActivation& p, double lo, double hi,
                                                std::size_t n) {
    if (!(lo < hi)) throw std::invalid_argument("tabulate requires lo < hi");
    if (n < 2) throw std::invalid_argument("tabulate requires at least 2 samples");
    std::vector<std::pair<double, double>> rows;
    rows.reserve(n);
    const double span = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i + 1 == n ? hi : lo + span * static_cast<double>(i) / static_cast<double>(n - 1);
        rows.emplace_back(x, eval_piecewise(p, x));
    }
    return rows;
}

void write_tabulation_csv(std::ostream& out, const std::vector<std::pair<double, double>>& rows) {
    const auto old_flags = out.flags();
    const auto old_precision = out.precision(17);
    out << "x,y\n";
    for (const auto& [x, y] : rows) out << x << ',' << y << '\n';
    out.flags(old_flags);
    out.precision(old_precision);
}

std::string describe(const CanonicalFunction& f) {
    std::ostringstream s;
    s << kind_name(f.kind);
    if (f.slope != 1.0 || f.shift != 0.0) s << '(' << f.slope << ',' << f.shift << ')';
    return s.str();
}

std::string describe(const PiecewiseActivation& p) {
    return describe(p.resting) + "|" + describe(p.active);
}

}  // namespace neatwise
