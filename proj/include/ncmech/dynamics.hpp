#pragma once

// Motion in a gravitational field, H = sum_a P(a)^2 / 2 m_a + m_a V(X(a)),
// integrated as z' = J(z, t) grad H with fixed-step classical RK4.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "ncmech/algebra.hpp"
#include "ncmech/composition.hpp"

namespace ncmech {

/// V = g . X
struct UniformField {
    Vec3 g = Vec3::Zero();
};

/// V = -source_strength / |X - center|
struct NewtonianField {
    double source_strength = 1.0;
    Vec3 center = Vec3::Zero();
};

/// V = sum c * X1^e1 X2^e2 X3^e3 with e1 + e2 + e3 <= 4.
struct PolynomialField {
    std::map<std::array<int, 3>, double> coefficients;
};

using Potential = std::variant<UniformField, NewtonianField, PolynomialField>;

/// Distance from a Newtonian center below which evaluation fails.
inline constexpr double kNewtonianMinRadius = 1e-9;

void validate(const Potential& potential, const std::string& field = "potential");
double potential_value(const Potential& potential, const Vec3& x);
/// Throws NumericalError inside kNewtonianMinRadius of a Newtonian center.
Vec3 potential_gradient(const Potential& potential, const Vec3& x);

struct TimeGrid {
    double t0 = 0.0;
    double t_end = 1.0;
    double dt = 1e-3;

    /// floor((t_end - t0) / dt) + 1, robust to the last step landing a few
    /// ulps short of t_end.
    std::size_t samples() const;
    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

struct GravityScenario {
    ParticleSystem system;
    Potential potential;
    PhaseState initial;
    TimeGrid grid;
    /// Evolve only the COM of `system` as a pseudo-particle of mass M.
    bool body_mode = false;
    /// Acknowledges that relative motion is neglected for COM dynamics of
    /// variants where it does not decouple exactly.
    bool neglect_relative_motion = false;

    void validate() const;
};

double hamiltonian(const ParticleSystem& system, const Potential& potential, const PhaseState& state);

/// J(z, t) grad H for the full particle system.
Eigen::VectorXd eom_rhs(const GravityScenario& scenario, const PhaseState& state);

/// Hand-written equations of motion of one particle per algebra family,
/// (X', P') stacked. Used as the independent route against eom_rhs.
Eigen::Matrix<double, 6, 1> closed_form_rhs(const AlgebraSpec& spec, double mass, const Potential& potential,
                                            const Vec3& x, const Vec3& p, double t);

/// Pseudo-particle of mass M carrying the effective algebra of the system.
/// Throws ScalingRequired when the COM algebra does not close, and
/// ValidationError when relative motion would have to be neglected without
/// `neglect_relative_motion` being set.
Particle body_particle(const GravityScenario& scenario);

/// Phase velocity of (X_cm, P_cm) for a composite body; `com_state` is a
/// one-particle state.
Eigen::VectorXd body_com_rhs(const GravityScenario& scenario, const PhaseState& com_state);

struct Trajectory {
    std::vector<double> times;
    std::vector<PhaseState> states;
    /// Mass of every tracked particle (M for a body run).
    std::vector<double> masses;
    std::string integrator = "rk4";
    double dt = 0.0;
    std::uint64_t scenario_hash = 0;

    std::size_t size() const noexcept { return states.size(); }
};

std::uint64_t scenario_hash(const GravityScenario& scenario);

/// Throws NumericalError (with the step index) on singularities or
/// non-finite states.
Trajectory integrate(const GravityScenario& scenario);

/// Header t, X(a)_i, P(a)_i per particle, then Pr(a)_i = P/m when
/// `reduced_momenta`; every value printed with 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& trajectory, bool reduced_momenta = false);

enum class ScalingMode { Fixed, MassScaled };

struct WepPair {
    std::size_t first = 0;
    std::size_t second = 0;
    double max_position = 0.0;          // max_t |X - X'|
    double max_reduced_momentum = 0.0;  // max_t |P/m - P'/m'|
    Vec3 final_position = Vec3::Zero(); // X' - X at the last sample
};

struct WepResult {
    std::vector<WepPair> pairs;
    std::vector<Trajectory> runs;

    double max_position() const;
    double max_reduced_momentum() const;
};

/// Point particles of each mass started from the template's X and reduced
/// momentum P/m. Particle 0 of the template supplies the algebra and the
/// reference mass: in MassScaled mode parameters follow scaling_rule_of it,
/// in Fixed mode they are copied unchanged.
WepResult wep_deviation(const GravityScenario& templ, const std::vector<double>& masses, ScalingMode mode);

/// Composite bodies, each given by its constituent masses, all starting at
/// the template's X with reduced momentum P/m; only the COM is evolved.
WepResult body_deviation(const GravityScenario& templ, const std::vector<std::vector<double>>& bodies,
                         ScalingMode mode);

/// |{P_cm^2 / 2M + M V(X_cm), H_rel}| with
/// H_rel = sum_a dP(a)^2 / (2 mu_a m_a) + sum_a |dX(a)|^2.
double decoupling_check(const ParticleSystem& system, const PhaseState& state, const Potential& potential);

/// |z(dt) - z(dt/2)| / |z(dt/2) - z(dt/4)| at t_end; about 16 for RK4.
double richardson_order_ratio(const GravityScenario& scenario);

}  // namespace ncmech
