#include "neatwise/cartpole.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace neatwise::cartpole {

namespace {

State advance(const State& s, const Derivative& d, double h) {
    return {s.x + h * d[0],      s.dx + h * d[1],      s.theta1 + h * d[2],
            s.dtheta1 + h * d[3], s.theta2 + h * d[4], s.dtheta2 + h * d[5]};
}

State rk4(const State& s, double force, double h, const PhysicsParams& p) {
    const Derivative k1 = derivative(s, force, p);
    const Derivative k2 = derivative(advance(s, k1, h / 2.0), force, p);
    const Derivative k3 = derivative(advance(s, k2, h / 2.0), force, p);
    const Derivative k4 = derivative(advance(s, k3, h), force, p);
    Derivative slope;
    for (std::size_t i = 0; i < slope.size(); ++i) slope[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    return advance(s, slope, h);
}

bool finite(const State& s) {
    return std::isfinite(s.x) && std::isfinite(s.dx) && std::isfinite(s.theta1) && std::isfinite(s.dtheta1) &&
           std::isfinite(s.theta2) && std::isfinite(s.dtheta2);
}

double jiggle(const State& s) { return std::abs(s.x) + std::abs(s.dx) + std::abs(s.theta1) + std::abs(s.dtheta1); }

}  // namespace

Derivative derivative(const State& s, double force, const PhysicsParams& p) {
    const double sin1 = std::sin(s.theta1);
    const double cos1 = std::cos(s.theta1);
    const double sin2 = std::sin(s.theta2);
    const double cos2 = std::cos(s.theta2);
    const double ml1 = p.pole1_mass * p.pole1_half_length;
    const double ml2 = p.pole2_mass * p.pole2_half_length;
    const double friction1 = p.pole_friction * s.dtheta1 / ml1;
    const double friction2 = p.pole_friction * s.dtheta2 / ml2;
    const double gsin1 = p.gravity * sin1;
    const double gsin2 = p.gravity * sin2;

    // Effective force and mass each pole exerts on the cart.
    const double f1 = ml1 * s.dtheta1 * s.dtheta1 * sin1 + 0.75 * p.pole1_mass * cos1 * (friction1 + gsin1);
    const double f2 = ml2 * s.dtheta2 * s.dtheta2 * sin2 + 0.75 * p.pole2_mass * cos2 * (friction2 + gsin2);
    const double m1 = p.pole1_mass * (1.0 - 0.75 * cos1 * cos1);
    const double m2 = p.pole2_mass * (1.0 - 0.75 * cos2 * cos2);

    const double ddx = (force + f1 + f2) / (m1 + m2 + p.cart_mass);
    const double ddtheta1 = -0.75 * (ddx * cos1 + gsin1 + friction1) / p.pole1_half_length;
    const double ddtheta2 = -0.75 * (ddx * cos2 + gsin2 + friction2) / p.pole2_half_length;
    return {s.dx, ddx, s.dtheta1, ddtheta1, s.dtheta2, ddtheta2};
}

State step(const State& s, double force, const PhysicsParams& p) {
    if (!(std::abs(force) <= p.max_force)) throw std::domain_error("force outside actuator limits");
    State next = s;
    for (int i = 0; i < p.steps_per_action; ++i) next = rk4(next, force, p.time_step, p);
    if (!finite(next)) throw std::domain_error("cart-pole state became non-finite");
    return next;
}

bool failed(const State& s, const PhysicsParams& p) {
    return std::abs(s.x) > p.track_limit || std::abs(s.theta1) > p.angle_limit ||
           std::abs(s.theta2) > p.angle_limit;
}

std::array<double, 3> observe(const State& s, const PhysicsParams& p) {
    return {s.x / p.track_limit, s.theta1 / p.angle_limit, s.theta2 / p.angle_limit};
}

double output_to_force(double output, std::pair<double, double> range, const PhysicsParams& p) {
    const auto [lo, hi] = range;
    const double unit = (output - lo) / (hi - lo) * 2.0 - 1.0;
    return std::clamp(unit * p.max_force, -p.max_force, p.max_force);
}

double mechanical_energy(const State& s, const PhysicsParams& p) {
    const double g = -p.gravity;
    auto pole = [&](double m, double l, double theta, double dtheta) {
        const double kinetic = 0.5 * m *
                               (s.dx * s.dx + 2.0 * s.dx * l * dtheta * std::cos(theta) +
                                4.0 / 3.0 * l * l * dtheta * dtheta);
        return kinetic + m * g * l * std::cos(theta);
    };
    return 0.5 * p.cart_mass * s.dx * s.dx + pole(p.pole1_mass, p.pole1_half_length, s.theta1, s.dtheta1) +
           pole(p.pole2_mass, p.pole2_half_length, s.theta2, s.dtheta2);
}

EpisodeResult episode(Phenotype& ph, const State& start, int max_steps, const PhysicsParams& p,
                      std::vector<TraceRow>* trace) {
    EpisodeResult result;
    if (failed(start, p)) return result;
    const auto range = nominal_range(ph.output_activation(0));
    std::vector<double> tail(static_cast<std::size_t>(std::max(p.tail_steps, 1)), 0.0);

    State s = start;
    while (result.steps < max_steps) {
        const auto obs = observe(s, p);
        const double force = output_to_force(ph.activate(obs)[0], range, p);
        s = step(s, force, p);
        if (trace != nullptr) trace->push_back({result.steps + 1, s, force});
        if (failed(s, p)) break;
        tail[static_cast<std::size_t>(result.steps) % tail.size()] = jiggle(s);
        ++result.steps;
    }
    for (double v : tail) result.tail_sum += v;
    return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    const auto old_precision = out.precision(17);
    out << "step,x,dx,theta1,dtheta1,theta2,dtheta2,force\n";
    for (const auto& r : trace) {
        out << r.step << ',' << r.state.x << ',' << r.state.dx << ',' << r.state.theta1 << ',' << r.state.dtheta1
            << ',' << r.state.theta2 << ',' << r.state.dtheta2 << ',' << r.force << '\n';
    }
    out.precision(old_precision);
}

double fitness(const EpisodeResult& r) {
    const double survival = 0.1 * static_cast<double>(r.steps) / 1000.0;
    if (r.steps < 100) return survival;
    const double tail = std::max(r.tail_sum, std::numeric_limits<double>::min());
    return survival + 0.9 * 0.75 / tail;
}

double evaluate(const Genome& g, const PhysicsParams& p) {
    Phenotype ph(g);
    State start;
    start.theta1 = p.standard_start_theta1;
    return fitness(episode(ph, start, p.episode_steps, p));
}

std::vector<State> generalization_states(const PhysicsParams& p) {
    std::vector<State> states;
    auto level = [](double q, double limit) { return q * 2.0 * limit - limit; };
    for (double qx : p.grid_quantiles) {
        for (double qdx : p.grid_quantiles) {
            for (double qt : p.grid_quantiles) {
                for (double qdt : p.grid_quantiles) {
                    State s;
                    s.x = level(qx, p.grid_x);
                    s.dx = level(qdx, p.grid_dx);
                    s.theta1 = level(qt, p.grid_theta1);
                    s.dtheta1 = level(qdt, p.grid_dtheta1);
                    states.push_back(s);
                }
            }
        }
    }
    return states;
}

SuccessReport success_test(const Genome& g, const PhysicsParams& p) {
    SuccessReport report;
    Phenotype ph(g);
    State start;
    start.theta1 = p.standard_start_theta1;
    report.balanced = episode(ph, start, p.episode_steps, p).steps >= p.episode_steps;
    if (!report.balanced) return report;
    for (const State& s : generalization_states(p)) {
        ph.reset();
        if (episode(ph, s, p.episode_steps, p).steps >= p.episode_steps) ++report.generalization;
    }
    report.success = report.generalization >= p.generalization_threshold;
    return report;
}

}  // namespace neatwise::cartpole
