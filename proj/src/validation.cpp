#include "neatwise/validation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "neatwise/activation.hpp"
#include "neatwise/experiment.hpp"
#include "neatwise/genome.hpp"

namespace neatwise::validation {

namespace {

using Matrix3 = std::array<std::array<double, 3>, 3>;
using Vector3 = std::array<double, 3>;

Vector3 solve(Matrix3 a, Vector3 b) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    Vector3 x{};
    for (int r = 2; r >= 0; --r) {
        double sum = b[r];
        for (int c = r + 1; c < 3; ++c) sum -= a[r][c] * x[c];
        x[r] = sum / a[r][r];
    }
    return x;
}

std::string format(double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
}

double max_component_error(const cartpole::State& a, const cartpole::State& b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.dx - b.dx), std::abs(a.theta1 - b.theta1),
                     std::abs(a.dtheta1 - b.dtheta1), std::abs(a.theta2 - b.theta2),
                     std::abs(a.dtheta2 - b.dtheta2)});
}

cartpole::State mirror(const cartpole::State& s) {
    return {-s.x, -s.dx, -s.theta1, -s.dtheta1, -s.theta2, -s.dtheta2};
}

PropertyResult physics_oracle(const Options& o) {
    cartpole::PhysicsParams truth;
    cartpole::PhysicsParams used = truth;
    if (o.corrupt_physics) used.pole2_half_length *= 1.05;
    Rng rng(derive_seed(o.seed, 1));
    double worst = 0.0;
    for (int i = 0; i < o.oracle_cases; ++i) {
        const cartpole::State s = random_state(rng, truth);
        const double force = rng.uniform(-truth.max_force, truth.max_force);
        worst = std::max(worst, max_component_error(cartpole::step(s, force, used), euler_reference(s, force, truth)));
    }
    return {"physics_oracle", worst <= 1e-6, "max component error " + format(worst) + " (tolerance 1e-6)"};
}

PropertyResult energy_drift(const Options&) {
    cartpole::PhysicsParams p;
    p.pole_friction = 0.0;
    cartpole::State s;
    s.theta1 = 0.1;
    s.theta2 = -0.05;
    const double e0 = cartpole::mechanical_energy(s, p);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        s = cartpole::step(s, 0.0, p);
        worst = std::max(worst, std::abs(cartpole::mechanical_energy(s, p) - e0) / std::abs(e0));
    }
    return {"energy_drift", worst < 1e-3, "max relative drift " + format(worst) + " over 1000 steps (limit 1e-3)"};
}

PropertyResult mirror_symmetry(const Options& o) {
    cartpole::PhysicsParams p;
    Rng rng(derive_seed(o.seed, 2));
    bool exact = true;
    for (int i = 0; i < 100 && exact; ++i) {
        cartpole::State a = random_state(rng, p);
        cartpole::State b = mirror(a);
        for (int k = 0; k < 50; ++k) {
            const double force = rng.uniform(-p.max_force, p.max_force);
            a = cartpole::step(a, force, p);
            b = cartpole::step(b, -force, p);
            if (!(b == mirror(a))) {
                exact = false;
                break;
            }
        }
    }
    return {"mirror_symmetry", exact, exact ? "mirrored trajectories agree bitwise" : "mirrored trajectory diverged"};
}

PropertyResult continuity(const Options&) {
    const CanonicalFunction arctan{FunctionKind::ArcTan, 1.0, 0.0};
    const double sa1 = continuity_gap({arctan, {FunctionKind::Sigmoid, experiment::kTunedSigmoidSlope, -0.5}});
    const double unaltered = continuity_gap({arctan, {FunctionKind::Sigmoid, 1.0, 0.0}});
    bool homogeneous_ok = true;
    for (FunctionKind k : kAllKinds) {
        homogeneous_ok = homogeneous_ok && continuity_gap(PiecewiseActivation::homogeneous({k, 1.0, 0.0})) == 0.0;
    }
    const bool ok = sa1 == 0.0 && unaltered == 0.5 && homogeneous_ok;
    return {"continuity_gaps", ok, "SA1 gap " + format(sa1) + ", unaltered arctan/sigmoid gap " + format(unaltered)};
}

PropertyResult sampling(const Options& o) {
    const FunctionPool& pool = experiment::preset("SA1").pool;
    Rng rng(derive_seed(o.seed, 3));
    const std::size_t k = pool.size();
    std::vector<double> counts(k * k, 0.0);
    for (int i = 0; i < o.sampling_draws; ++i) {
        const PiecewiseActivation p = sample_pair(pool, rng);
        std::size_t r = 0, a = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (pool.entries()[j].function == p.resting) r = j;
            if (pool.entries()[j].function == p.active) a = j;
        }
        counts[r * k + a] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t a = 0; a < k; ++a) {
            const double expected = o.sampling_draws * pool.entries()[r].weight * pool.entries()[a].weight;
            chi2 += (counts[r * k + a] - expected) * (counts[r * k + a] - expected) / expected;
        }
    }
    const boost::math::chi_squared dist(static_cast<double>(k * k - 1));
    const double critical = boost::math::quantile(boost::math::complement(dist, 0.001));
    return {"sampling_chi_square", chi2 < critical,
            "chi2 " + format(chi2) + " vs critical " + format(critical) + " (alpha 0.001)"};
}

PropertyResult crossover_fuzz(const Options& o) {
    const FunctionPool& pool = experiment::preset("SA1").pool;
    Rng rng(derive_seed(o.seed, 4));
    for (int i = 0; i < o.fuzz_cases; ++i) {
        InnovationRegistry registry;
        const auto out = PiecewiseActivation::homogeneous(pool.dominant());
        Genome a = minimal_genome(3, 1, out, registry, rng);
        Genome b = minimal_genome(3, 1, out, registry, rng);
        for (Genome* g : {&a, &b}) {
            const int steps = static_cast<int>(rng.below(12));
            for (int s = 0; s < steps; ++s) {
                switch (rng.below(3)) {
                    case 0: mutate_add_node(*g, pool, registry, rng); break;
                    case 1: mutate_add_connection(*g, registry, rng); break;
                    default: mutate_weights(*g, {}, rng); break;
                }
                if (rng.chance(0.3)) registry.new_generation();
            }
        }
        a.fitness = rng.uniform();
        b.fitness = rng.uniform();
        const Genome child = a.fitness >= b.fitness ? crossover(a, b, rng) : crossover(b, a, rng);
        try {
            child.validate();
        } catch (const std::exception& e) {
            return {"crossover_fuzz", false, std::string("invalid child: ") + e.what()};
        }
        std::set<Innovation> parents;
        for (const auto& c : a.connections) parents.insert(c.innovation);
        for (const auto& c : b.connections) parents.insert(c.innovation);
        for (const auto& c : child.connections) {
            if (parents.count(c.innovation) == 0) {
                return {"crossover_fuzz", false, "child innovation outside parents' union"};
            }
        }
    }
    return {"crossover_fuzz", true, std::to_string(o.fuzz_cases) + " random crossovers valid and closed"};
}

PropertyResult configurations(const Options&) {
    // Repeated multiplication in base 10^9 limbs, independent of cpp_int.
    std::vector<std::uint64_t> limbs = {1};
    auto to_string = [&] {
        std::ostringstream s;
        s << limbs.back();
        for (auto it = limbs.rbegin() + 1; it != limbs.rend(); ++it) {
            s.width(9);
            s.fill('0');
            s << *it;
        }
        return s.str();
    };
    for (unsigned n = 0; n <= 5; ++n) {
        if (count_configurations(7, n).str() != to_string()) {
            return {"configuration_count", false, "mismatch at n=" + std::to_string(n)};
        }
        std::uint64_t carry = 0;
        for (auto& limb : limbs) {
            const std::uint64_t v = limb * 49 + carry;
            limb = v % 1'000'000'000;
            carry = v / 1'000'000'000;
        }
        if (carry != 0) limbs.push_back(carry);
    }
    return {"configuration_count", true, "49^n for n = 0..5"};
}

}  // namespace

cartpole::Derivative reference_derivative(const cartpole::State& s, double force, const cartpole::PhysicsParams& p) {
    const double g = -p.gravity;
    const double m1 = p.pole1_mass, l1 = p.pole1_half_length;
    const double m2 = p.pole2_mass, l2 = p.pole2_half_length;
    const Matrix3 mass = {{
        {p.cart_mass + m1 + m2, m1 * l1 * std::cos(s.theta1), m2 * l2 * std::cos(s.theta2)},
        {m1 * l1 * std::cos(s.theta1), 4.0 / 3.0 * m1 * l1 * l1, 0.0},
        {m2 * l2 * std::cos(s.theta2), 0.0, 4.0 / 3.0 * m2 * l2 * l2},
    }};
    const Vector3 generalized = {
        force + m1 * l1 * s.dtheta1 * s.dtheta1 * std::sin(s.theta1) +
            m2 * l2 * s.dtheta2 * s.dtheta2 * std::sin(s.theta2),
        m1 * g * l1 * std::sin(s.theta1) - p.pole_friction * s.dtheta1,
        m2 * g * l2 * std::sin(s.theta2) - p.pole_friction * s.dtheta2,
    };
    const Vector3 acc = solve(mass, generalized);
    return {s.dx, acc[0], s.dtheta1, acc[1], s.dtheta2, acc[2]};
}

cartpole::State euler_reference(const cartpole::State& s, double force, const cartpole::PhysicsParams& p, double dt) {
    const double interval = p.time_step * p.steps_per_action;
    const auto steps = static_cast<long>(std::llround(interval / dt));
    cartpole::State x = s;
    for (long i = 0; i < steps; ++i) {
        const auto d = reference_derivative(x, force, p);
        x = {x.x + dt * d[0],       x.dx + dt * d[1],     x.theta1 + dt * d[2],
             x.dtheta1 + dt * d[3], x.theta2 + dt * d[4], x.dtheta2 + dt * d[5]};
    }
    return x;
}

cartpole::State random_state(Rng& rng, const cartpole::PhysicsParams& p) {
    cartpole::State s;
    s.x = rng.uniform(-p.track_limit, p.track_limit);
    s.dx = rng.uniform(-1.0, 1.0);
    s.theta1 = rng.uniform(-0.2, 0.2);
    s.dtheta1 = rng.uniform(-1.0, 1.0);
    s.theta2 = rng.uniform(-0.2, 0.2);
    s.dtheta2 = rng.uniform(-1.0, 1.0);
    return s;
}

std::vector<PropertyResult> run_properties(const Options& options) {
    return {physics_oracle(options), energy_drift(options),   mirror_symmetry(options), continuity(options),
            sampling(options),       crossover_fuzz(options), configurations(options)};
}

}  // namespace neatwise::validation
