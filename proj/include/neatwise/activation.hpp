#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "neatwise/rng.hpp"

namespace neatwise {

enum class FunctionKind { Sine, Sigmoid, ArcTan, TanH, BentIdentity, ReLU, ELU };

inline constexpr std::array<FunctionKind, 7> kAllKinds = {
    FunctionKind::Sine, FunctionKind::Sigmoid,      FunctionKind::ArcTan, FunctionKind::TanH,
    FunctionKind::BentIdentity, FunctionKind::ReLU, FunctionKind::ELU};

std::string_view kind_name(FunctionKind kind);

/// Accepts the lowercase names produced by kind_name plus a few aliases
/// ("atan", "bent_identity"). Throws std::invalid_argument.
FunctionKind parse_kind(std::string_view name);

/// One of the seven canonical functions, evaluated at slope * x and offset by shift.
struct CanonicalFunction {
    FunctionKind kind = FunctionKind::Sigmoid;
    double slope = 1.0;
    double shift = 0.0;

    friend bool operator==(const CanonicalFunction&, const CanonicalFunction&) = default;
};

/// Left branch (x < 0) is the resting state, right branch (x >= 0) the active state.
struct PiecewiseActivation {
    CanonicalFunction resting;
    CanonicalFunction active;

    static PiecewiseActivation homogeneous(const CanonicalFunction& f) { return {f, f}; }
    bool is_homogeneous() const { return resting == active; }

    friend bool operator==(const PiecewiseActivation&, const PiecewiseActivation&) = default;
};

struct PoolEntry {
    CanonicalFunction function;
    double weight = 0.0;
};

/// Weighted pool of canonical functions. Construction validates that the
/// pool is nonempty, weights are positive and sum to one within 1e-12, and
/// every slope is positive.
class FunctionPool {
public:
    explicit FunctionPool(std::vector<PoolEntry> entries);

    static FunctionPool uniform(const std::vector<CanonicalFunction>& functions);

    const std::vector<PoolEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    /// Index drawn with probability proportional to weight.
    std::size_t draw_index(Rng& rng) const;

    /// Entry with the largest weight; earliest entry wins ties.
    const CanonicalFunction& dominant() const;

private:
    std::vector<PoolEntry> entries_;
    std::vector<double> cumulative_;
};

/// Lines of `kind slope shift weight`; blank lines and `#` comments ignored.
FunctionPool parse_pool(std::istream& in);
FunctionPool load_pool(const std::string& path);

double eval_canonical(const CanonicalFunction& f, double x);
double eval_piecewise(const PiecewiseActivation& p, double x);

/// Nominal output interval used to map a node's output onto an actuator.
/// Bounded kinds report their asymptotes; unbounded kinds report the
/// interval their useful control range is taken to be (ReLU [0,1],
/// BentIdentity and ELU [-1,1]).
std::pair<double, double> nominal_range(const CanonicalFunction& f);
std::pair<double, double> nominal_range(const PiecewiseActivation& p);

PiecewiseActivation sample_pair(const FunctionPool& pool, Rng& rng);

/// (pool_size^2)^n_nodes. Throws std::invalid_argument when pool_size is 0.
boost::multiprecision::cpp_int count_configurations(unsigned pool_size, unsigned n_nodes);

/// |resting(0) - active(0)|.
double continuity_gap(const PiecewiseActivation& p);

/// n evenly spaced samples over [lo, hi], endpoints included.
std::vector<std::pair<double, double>> tabulate(const PiecewiseActivation& p, double lo, double hi,
                                                std::size_t n);

/// Two-column `x,y` CSV with 17 significant digits.
void write_tabulation_csv(std::ostream& out, const std::vector<std::pair<double, double>>& rows);

std::string describe(const CanonicalFunction& f);
std::string describe(const PiecewiseActivation& p);

}  // namespace neatwise
