#pragma once

// Center-of-mass and relative variables of an N-particle system
//
//     P_cm = sum_a P(a),            X_cm = sum_a mu_a X(a),
//     dP(a) = P(a) - mu_a P_cm,     dX(a) = X(a) - X_cm,
//
// with mu_a = m_a / M, their brackets, and the mass-scaling condition under
// which the COM algebra reproduces the single-particle algebra.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncmech/algebra.hpp"

namespace ncmech {

struct Particle {
    double mass = 1.0;
    AlgebraSpec spec = Canonical{};
};

class ParticleSystem {
public:
    /// Throws ValidationError if empty, a mass is not positive and finite, a
    /// spec is invalid, or the specs mix variants or axis choices.
    explicit ParticleSystem(std::vector<Particle> particles);

    std::size_t size() const noexcept { return particles_.size(); }
    const Particle& operator[](std::size_t a) const { return particles_[a]; }
    std::span<const Particle> particles() const noexcept { return particles_; }
    std::span<const AlgebraSpec> specs() const noexcept { return specs_; }
    AlgebraKind kind() const { return kind_of(specs_.front()); }

    double total_mass() const noexcept { return total_mass_; }
    double mu(std::size_t a) const { return particles_[a].mass / total_mass_; }

private:
    std::vector<Particle> particles_;
    std::vector<AlgebraSpec> specs_;
    double total_mass_ = 0.0;
};

struct ComCoordinates {
    Vec3 x_cm = Vec3::Zero();
    Vec3 p_cm = Vec3::Zero();
    std::vector<Vec3> dx;
    std::vector<Vec3> dp;

    /// The COM phase point (X_cm, P_cm, t) as a one-particle state.
    PhaseState com_state(double t) const;
};

ComCoordinates com_transform(const ParticleSystem& system, const PhaseState& state);

namespace com {

/// Coefficient vectors of the COM and relative variables (axis 0-based).
/// All of them are linear in z, so these are also their gradients.
Observable x_cm(const ParticleSystem& system, int axis);
Observable p_cm(const ParticleSystem& system, int axis);
Observable dx(const ParticleSystem& system, std::size_t particle, int axis);
Observable dp(const ParticleSystem& system, std::size_t particle, int axis);

}  // namespace com

/// Mass-independent constants of the scaling condition. Only the members
/// relevant to `kind` are meaningful.
struct MassScalingRule {
    AlgebraKind kind = AlgebraKind::Canonical;
    double gamma_kappa = 0.0;        // kappa_a / m_a
    double gamma_kappa_tilde = 0.0;  // kappa_tilde_a / m_a
    double kappa_bar = 0.0;          // shared kappa_bar
    Tensor2 gamma0 = Tensor2::Zero();        // theta0_a m_a
    Tensor3 gamma = zero_tensor3();          // theta_a m_a
    Tensor3 gamma_tilde = zero_tensor3();    // theta_tilde_a m_a
    Tensor3 theta_bar = zero_tensor3();      // shared theta_bar
    AlgebraSpec axes = Canonical{};          // carries the axis indices

    /// The parameters a particle of mass `m` carries under this rule.
    AlgebraSpec spec_for_mass(double m) const;
};

struct ScalingVerdict {
    bool holds = false;
    /// Consensus constants (mass-weighted mean of the per-particle values);
    /// present only when `holds`.
    std::optional<MassScalingRule> rule;
    /// max over parameter components and particle pairs (a, b) of
    /// |v_a - v_b| / |v_b|, with |v_a - v_b| used when v_b = 0.
    double worst_relative_deviation = 0.0;
};

ScalingVerdict satisfies_mass_scaling(const ParticleSystem& system, double tol);

/// Mass-scaling rule derived from a single particle (always holds).
MassScalingRule scaling_rule_of(const AlgebraSpec& spec, double mass);

struct EffectiveParameters {
    AlgebraSpec spec;
    /// True when the effective parameters depend on how the total mass is
    /// split among the constituents.
    bool composition_dependent = false;
};

/// Effective single-particle algebra of the COM: 1/kappa_eff = sum mu_a^2 / kappa_a
/// (likewise kappa_tilde), 1/kappa_bar_eff = sum mu_a / kappa_bar_a,
/// theta0_eff = sum mu_a^2 theta0_a (likewise theta, theta_tilde) and
/// theta_bar_eff = sum mu_a theta_bar_a.
///
/// SpaceTime always closes. The other deformed variants throw ScalingRequired
/// unless the scaling condition holds within `tol`; Generalized with vanishing
/// theta and theta_tilde only needs a shared theta_bar.
EffectiveParameters effective_parameters(const ParticleSystem& system, double tol = 1e-12);

/// The same weighted sums without any closure requirement.
AlgebraSpec composition_weighted_spec(const ParticleSystem& system);

struct ComBracketReport {
    std::map<std::string, double> computed;
    std::map<std::string, double> closed_form;
    double max_abs_diff = 0.0;
};

/// Every bracket among X_cm, P_cm, dX(a), dP(a), evaluated by the chain rule
/// and by the closed forms. Keys look like "{Xcm_1,Xcm_2}", "{dX(1)_3,dP(2)_1}"
/// (1-based particles and axes).
ComBracketReport com_bracket_report(const ParticleSystem& system, const PhaseState& state);

struct ReproductionResult {
    bool closes = false;
    double max_abs_diff = 0.0;
};

/// Compares the COM brackets with the single-particle table of
/// composition_weighted_spec() at (X_cm, P_cm, t).
ReproductionResult reproduction_check(const ParticleSystem& system, const PhaseState& state);

struct RelativeCoupling {
    double max_abs = 0.0;
    std::vector<Tensor2> dx_xcm;  // (i, j) = {dX(a)_i, Xcm_j}
    std::vector<Tensor2> pcm_dx;  // (i, j) = {Pcm_i, dX(a)_j}
    std::vector<Tensor2> dp_xcm;  // (i, j) = {dP(a)_i, Xcm_j}
};

RelativeCoupling com_relative_coupling(const ParticleSystem& system, const PhaseState& state);

}  // namespace ncmech
