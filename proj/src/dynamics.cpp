#include "ncmech/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <string>

#include "ncmech/errors.hpp"

namespace ncmech {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using Vec6 = Eigen::Matrix<double, 6, 1>;

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double int_pow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

// Per-particle phase velocity: block(x, p, t) * (m grad V, p / m).
Vec6 particle_rhs(const AlgebraSpec& spec, double m, const Potential& potential, const Vec3& x, const Vec3& p,
                  double t) {
    Vec6 grad;
    grad.head<3>() = m * potential_gradient(potential, x);
    grad.tail<3>() = p / m;
    return particle_block(spec, x, p, t) * grad;
}

using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

Trajectory run_rk4(const Rhs& f, Eigen::VectorXd z, const TimeGrid& grid) {
    Trajectory traj;
    traj.dt = grid.dt;
    const std::size_t n = grid.samples();
    traj.times.reserve(n);
    traj.states.reserve(n);
    traj.times.push_back(grid.t0);
    traj.states.push_back(PhaseState::unflatten(z, grid.t0));
    const double h = grid.dt;
    for (std::size_t step = 1; step < n; ++step) {
        const double t = grid.time(step - 1);
        try {
            const Eigen::VectorXd k1 = f(t, z);
            const Eigen::VectorXd k2 = f(t + 0.5 * h, z + 0.5 * h * k1);
            const Eigen::VectorXd k3 = f(t + 0.5 * h, z + 0.5 * h * k2);
            const Eigen::VectorXd k4 = f(t + h, z + h * k3);
            z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at step " + std::to_string(step), step);
        }
        if (!z.allFinite()) throw NumericalError("non-finite state at step " + std::to_string(step), step);
        traj.times.push_back(grid.time(step));
        traj.states.push_back(PhaseState::unflatten(z, grid.time(step)));
    }
    return traj;
}

bool exempt_from_neglect_flag(AlgebraKind kind) {
    return kind == AlgebraKind::Canonical || kind == AlgebraKind::SpaceTime;
}

}  // namespace

void validate(const Potential& potential, const std::string& field) {
    std::visit(overloaded{
                   [&](const UniformField& u) {
                       if (!u.g.allFinite()) throw ValidationError(field + ".g", "must be finite");
                   },
                   [&](const NewtonianField& n) {
                       if (!std::isfinite(n.source_strength) || n.source_strength <= 0.0)
                           throw ValidationError(field + ".source_strength", "must be positive and finite");
                       if (!n.center.allFinite()) throw ValidationError(field + ".center", "must be finite");
                   },
                   [&](const PolynomialField& poly) {
                       for (const auto& [e, c] : poly.coefficients) {
                           if (e[0] < 0 || e[1] < 0 || e[2] < 0 || e[0] + e[1] + e[2] > 4)
                               throw ValidationError(field + ".terms", "exponents must be non-negative with degree <= 4");
                           if (!std::isfinite(c)) throw ValidationError(field + ".terms", "coefficients must be finite");
                       }
                   },
               },
               potential);
}

double potential_value(const Potential& potential, const Vec3& x) {
    return std::visit(overloaded{
                          [&](const UniformField& u) { return u.g.dot(x); },
                          [&](const NewtonianField& n) {
                              const double r = (x - n.center).norm();
                              if (r < kNewtonianMinRadius) throw NumericalError("Newtonian singularity");
                              return -n.source_strength / r;
                          },
                          [&](const PolynomialField& poly) {
                              double v = 0.0;
                              for (const auto& [e, c] : poly.coefficients)
                                  v += c * int_pow(x(0), e[0]) * int_pow(x(1), e[1]) * int_pow(x(2), e[2]);
                              return v;
                          },
                      },
                      potential);
}

Vec3 potential_gradient(const Potential& potential, const Vec3& x) {
    return std::visit(overloaded{
                          [&](const UniformField& u) -> Vec3 { return u.g; },
                          [&](const NewtonianField& n) -> Vec3 {
                              const Vec3 d = x - n.center;
                              const double r = d.norm();
                              if (r < kNewtonianMinRadius) throw NumericalError("Newtonian singularity");
                              return n.source_strength / (r * r * r) * d;
                          },
                          [&](const PolynomialField& poly) -> Vec3 {
                              Vec3 g = Vec3::Zero();
                              for (const auto& [e, c] : poly.coefficients)
                                  for (int axis = 0; axis < 3; ++axis) {
                                      if (e[axis] == 0) continue;
                                      double term = c * e[axis];
                                      for (int other = 0; other < 3; ++other)
                                          term *= int_pow(x(other), other == axis ? e[other] - 1 : e[other]);
                                      g(axis) += term;
                                  }
                              return g;
                          },
                      },
                      potential);
}

std::size_t TimeGrid::samples() const {
    return static_cast<std::size_t>(std::floor((t_end - t0) / dt + 1e-9)) + 1;
}

void GravityScenario::validate() const {
    ncmech::validate(potential);
    if (!(grid.dt > 0.0) || !std::isfinite(grid.dt)) throw ValidationError("grid.dt", "must be positive");
    if (!std::isfinite(grid.t0)) throw ValidationError("grid.t0", "must be finite");
    if (!(grid.t_end > grid.t0) || !std::isfinite(grid.t_end)) throw ValidationError("grid.t_end", "must exceed t0");
    if (initial.t != grid.t0) throw ValidationError("initial.t", "must equal grid.t0");
    if (initial.particles() != system.size())
        throw ValidationError("initial", "particle count does not match the system");
    initial.validate("initial");
}

double hamiltonian(const ParticleSystem& system, const Potential& potential, const PhaseState& state) {
    double h = 0.0;
    for (std::size_t a = 0; a < system.size(); ++a) {
        const double m = system[a].mass;
        h += state.p[a].squaredNorm() / (2.0 * m) + m * potential_value(potential, state.x[a]);
    }
    return h;
}

Eigen::VectorXd eom_rhs(const GravityScenario& scenario, const PhaseState& state) {
    const ParticleSystem& sys = scenario.system;
    if (state.particles() != sys.size()) throw ValidationError("state", "particle count does not match the system");
    Eigen::VectorXd out(phase_dim(sys.size()));
    for (std::size_t a = 0; a < sys.size(); ++a)
        out.segment<6>(x_index(a, 0)) =
            particle_rhs(sys[a].spec, sys[a].mass, scenario.potential, state.x[a], state.p[a], state.t);
    return out;
}

Vec6 closed_form_rhs(const AlgebraSpec& spec, double m, const Potential& potential, const Vec3& x, const Vec3& p,
                     double t) {
    const Vec3 dV = potential_gradient(potential, x);
    Vec3 xdot = p / m;
    Vec3 pdot = -m * dV;
    std::visit(overloaded{
                   [](const Canonical&) {},
                   [&](const SpaceTime& s) {
                       const int rho = s.rho - 1, tau = s.tau - 1;
                       // X_i' = P_i/m + (t m / kappa) dV/dX_k (d_i,rho d_k,tau - d_i,tau d_k,rho)
                       xdot(rho) += t * m / s.kappa * dV(tau);
                       xdot(tau) -= t * m / s.kappa * dV(rho);
                   },
                   [&](const SpaceSpace& s) {
                       const int k = s.k - 1, l = s.l - 1, g = s.gamma - 1;
                       const double kt = s.kappa_tilde;
                       xdot(k) += m * x(l) / kt * dV(g);
                       xdot(l) -= m * x(k) / kt * dV(g);
                       xdot(g) += -m * x(l) / kt * dV(k) + m * x(k) / kt * dV(l);
                       pdot(k) += m * p(l) / kt * dV(g);
                       pdot(l) -= m * p(k) / kt * dV(g);
                   },
                   [&](const auto& other) {
                       const Generalized g = as_generalized(other);
                       for (int i = 0; i < 3; ++i)
                           for (int j = 0; j < 3; ++j) {
                               double xx = g.theta0(i, j) * t;
                               for (int k = 0; k < 3; ++k) {
                                   xdot(i) += g.theta_bar[k](i, j) * p(j) * x(k) / m +
                                              g.theta_tilde[k](i, j) * p(j) * p(k) / m;
                                   xx += g.theta[k](i, j) * x(k);
                                   // {P_i, X_j} = -{X_j, P_i}: the momentum equation reads
                                   // the deformation tensors with lower indices (j, i).
                                   pdot(i) -= m * (g.theta_bar[k](j, i) * x(k) + g.theta_tilde[k](j, i) * p(k)) * dV(j);
                               }
                               xdot(i) += m * xx * dV(j);
                           }
                   },
               },
               spec);
    Vec6 out;
    out << xdot, pdot;
    return out;
}

Particle body_particle(const GravityScenario& scenario) {
    const ParticleSystem& sys = scenario.system;
    if (!exempt_from_neglect_flag(sys.kind()) && !scenario.neglect_relative_motion)
        throw ValidationError("neglect_relative_motion",
                              "COM motion of a " + std::string(kind_name(sys.kind())) +
                                  " body does not decouple from relative motion; set the flag to neglect it");
    return Particle{sys.total_mass(), effective_parameters(sys).spec};
}

Eigen::VectorXd body_com_rhs(const GravityScenario& scenario, const PhaseState& com_state) {
    if (com_state.particles() != 1) throw ValidationError("com_state", "must describe exactly one body");
    const Particle body = body_particle(scenario);
    return particle_rhs(body.spec, body.mass, scenario.potential, com_state.x[0], com_state.p[0], com_state.t);
}

std::uint64_t scenario_hash(const GravityScenario& scenario) {
    std::string text;
    auto add = [&](double v) { text += fmt17(v) + ";"; };
    const ParticleSystem& sys = scenario.system;
    for (std::size_t a = 0; a < sys.size(); ++a) {
        text += std::string(kind_name(kind_of(sys[a].spec))) + ";";
        add(sys[a].mass);
        const Generalized g = as_generalized(sys[a].spec);
        for (int i = 0; i < 9; ++i) add(g.theta0.data()[i]);
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 9; ++i) {
                add(g.theta[k].data()[i]);
                add(g.theta_bar[k].data()[i]);
                add(g.theta_tilde[k].data()[i]);
            }
        for (int i = 0; i < 3; ++i) {
            add(scenario.initial.x[a](i));
            add(scenario.initial.p[a](i));
        }
    }
    std::visit(overloaded{
                   [&](const UniformField& u) {
                       text += "uniform;";
                       for (int i = 0; i < 3; ++i) add(u.g(i));
                   },
                   [&](const NewtonianField& n) {
                       text += "newtonian;";
                       add(n.source_strength);
                       for (int i = 0; i < 3; ++i) add(n.center(i));
                   },
                   [&](const PolynomialField& poly) {
                       text += "polynomial;";
                       for (const auto& [e, c] : poly.coefficients) {
                           text += std::to_string(e[0]) + std::to_string(e[1]) + std::to_string(e[2]) + ":";
                           add(c);
                       }
                   },
               },
               scenario.potential);
    add(scenario.grid.t0);
    add(scenario.grid.t_end);
    add(scenario.grid.dt);
    text += scenario.body_mode ? "body;" : "points;";
    // FNV-1a
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Trajectory integrate(const GravityScenario& scenario) {
    scenario.validate();
    Trajectory traj;
    if (scenario.body_mode) {
        const Particle body = body_particle(scenario);
        const ComCoordinates c = com_transform(scenario.system, scenario.initial);
        const Potential& potential = scenario.potential;
        Rhs f = [&](double t, const Eigen::VectorXd& z) -> Eigen::VectorXd {
            return particle_rhs(body.spec, body.mass, potential, z.head<3>(), z.tail<3>(), t);
        };
        traj = run_rk4(f, c.com_state(scenario.grid.t0).flatten(), scenario.grid);
        traj.masses = {body.mass};
    } else {
        Rhs f = [&](double t, const Eigen::VectorXd& z) { return eom_rhs(scenario, PhaseState::unflatten(z, t)); };
        traj = run_rk4(f, scenario.initial.flatten(), scenario.grid);
        for (const auto& p : scenario.system.particles()) traj.masses.push_back(p.mass);
    }
    traj.scenario_hash = scenario_hash(scenario);
    return traj;
}

void write_csv(std::ostream& out, const Trajectory& trajectory, bool reduced_momenta) {
    const std::size_t n = trajectory.masses.size();
    out << "t";
    for (std::size_t a = 0; a < n; ++a) {
        const std::string tag = "(" + std::to_string(a + 1) + ")_";
        for (int i = 1; i <= 3; ++i) out << ",X" << tag << i;
        for (int i = 1; i <= 3; ++i) out << ",P" << tag << i;
    }
    if (reduced_momenta)
        for (std::size_t a = 0; a < n; ++a)
            for (int i = 1; i <= 3; ++i) out << ",Pr(" << a + 1 << ")_" << i;
    out << '\n';
    for (std::size_t s = 0; s < trajectory.size(); ++s) {
        const PhaseState& st = trajectory.states[s];
        out << fmt17(trajectory.times[s]);
        for (std::size_t a = 0; a < n; ++a) {
            for (int i = 0; i < 3; ++i) out << ',' << fmt17(st.x[a](i));
            for (int i = 0; i < 3; ++i) out << ',' << fmt17(st.p[a](i));
        }
        if (reduced_momenta)
            for (std::size_t a = 0; a < n; ++a)
                for (int i = 0; i < 3; ++i) out << ',' << fmt17(st.p[a](i) / trajectory.masses[a]);
        out << '\n';
    }
}

double WepResult::max_position() const {
    double worst = 0.0;
    for (const auto& p : pairs) worst = std::max(worst, p.max_position);
    return worst;
}

double WepResult::max_reduced_momentum() const {
    double worst = 0.0;
    for (const auto& p : pairs) worst = std::max(worst, p.max_reduced_momentum);
    return worst;
}

namespace {

WepResult compare_runs(std::vector<GravityScenario> scenarios) {
    std::vector<std::future<Trajectory>> futures;
    for (const auto& sc : scenarios)
        futures.push_back(std::async(std::launch::async, [&sc] { return integrate(sc); }));
    WepResult result;
    for (auto& f : futures) result.runs.push_back(f.get());

    for (std::size_t a = 0; a < result.runs.size(); ++a)
        for (std::size_t b = a + 1; b < result.runs.size(); ++b) {
            const Trajectory& ra = result.runs[a];
            const Trajectory& rb = result.runs[b];
            WepPair pair{a, b};
            for (std::size_t s = 0; s < ra.size(); ++s) {
                pair.max_position = std::max(pair.max_position, (ra.states[s].x[0] - rb.states[s].x[0]).norm());
                pair.max_reduced_momentum =
                    std::max(pair.max_reduced_momentum,
                             (ra.states[s].p[0] / ra.masses[0] - rb.states[s].p[0] / rb.masses[0]).norm());
            }
            pair.final_position = rb.states.back().x[0] - ra.states.back().x[0];
            result.pairs.push_back(pair);
        }
    return result;
}

AlgebraSpec spec_for(const GravityScenario& templ, double m, ScalingMode mode) {
    const Particle& ref = templ.system[0];
    return mode == ScalingMode::MassScaled ? scaling_rule_of(ref.spec, ref.mass).spec_for_mass(m) : ref.spec;
}

}  // namespace

WepResult wep_deviation(const GravityScenario& templ, const std::vector<double>& masses, ScalingMode mode) {
    templ.validate();
    const Vec3 x0 = templ.initial.x[0];
    const Vec3 reduced = templ.initial.p[0] / templ.system[0].mass;
    std::vector<GravityScenario> runs;
    for (double m : masses) {
        PhaseState init(1, templ.grid.t0);
        init.x[0] = x0;
        init.p[0] = m * reduced;
        runs.push_back(GravityScenario{ParticleSystem({Particle{m, spec_for(templ, m, mode)}}), templ.potential, init,
                                       templ.grid, false, false});
    }
    return compare_runs(std::move(runs));
}

WepResult body_deviation(const GravityScenario& templ, const std::vector<std::vector<double>>& bodies,
                         ScalingMode mode) {
    templ.validate();
    const Vec3 x0 = templ.initial.x[0];
    const Vec3 reduced = templ.initial.p[0] / templ.system[0].mass;
    std::vector<GravityScenario> runs;
    for (const auto& body : bodies) {
        std::vector<Particle> parts;
        PhaseState init(body.size(), templ.grid.t0);
        for (std::size_t a = 0; a < body.size(); ++a) {
            parts.push_back(Particle{body[a], spec_for(templ, body[a], mode)});
            init.x[a] = x0;
            init.p[a] = body[a] * reduced;
        }
        runs.push_back(GravityScenario{ParticleSystem(std::move(parts)), templ.potential, init, templ.grid, true,
                                       templ.neglect_relative_motion});
    }
    return compare_runs(std::move(runs));
}

double decoupling_check(const ParticleSystem& system, const PhaseState& state, const Potential& potential) {
    const StructureMatrix J = structure_matrix(system.specs(), state);
    const Eigen::VectorXd z = state.flatten();
    const ComCoordinates c = com_transform(system, state);
    const double M = system.total_mass();
    const Vec3 dV = potential_gradient(potential, c.x_cm);

    Eigen::VectorXd grad_com = Eigen::VectorXd::Zero(z.size());
    Eigen::VectorXd grad_rel = Eigen::VectorXd::Zero(z.size());
    for (int i = 0; i < 3; ++i) {
        grad_com += (c.p_cm(i) / M) * com::p_cm(system, i).gradient(z) + M * dV(i) * com::x_cm(system, i).gradient(z);
        for (std::size_t a = 0; a < system.size(); ++a) {
            const double inertia = system.mu(a) * system[a].mass;
            grad_rel += (c.dp[a](i) / inertia) * com::dp(system, a, i).gradient(z) +
                        2.0 * c.dx[a](i) * com::dx(system, a, i).gradient(z);
        }
    }
    return std::abs(grad_com.dot(J * grad_rel));
}

double richardson_order_ratio(const GravityScenario& scenario) {
    auto end_state = [&](double dt) {
        GravityScenario sc = scenario;
        sc.grid.dt = dt;
        return integrate(sc).states.back().flatten();
    };
    const double dt = scenario.grid.dt;
    const Eigen::VectorXd z1 = end_state(dt), z2 = end_state(dt / 2), z4 = end_state(dt / 4);
    return (z1 - z2).norm() / (z2 - z4).norm();
}

}  // namespace ncmech
