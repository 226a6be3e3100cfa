#pragma once

// Lie-algebraic noncommutative phase spaces.
//
// Every algebra is encoded as an antisymmetric structure matrix
// J_ab(z, t) = {z_a, z_b} over the flattened phase vector
//
//     z = (X1, X2, X3, P1, P2, P3)  for particle 0, then particle 1, ...
//
// Particles never couple, so J is block diagonal with one 6x6 block per
// particle. General brackets follow from {f, g} = grad f . J . grad g.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ncmech {

using Vec3 = Eigen::Vector3d;
using Tensor2 = Eigen::Matrix3d;
/// Rank-3 parameter tensor; `t[k](i, j)` holds the component with upper
/// index k and lower indices i, j.
using Tensor3 = std::array<Eigen::Matrix3d, 3>;
using StructureMatrix = Eigen::MatrixXd;

Tensor3 zero_tensor3();

/// Commutative coordinates: {X_i, X_j} = 0, {X_i, P_j} = delta_ij.
struct Canonical {};

/// Space coordinates commuting to time: {X_rho, X_tau} = t / kappa.
/// Axis indices are 1-based.
struct SpaceTime {
    double kappa = 1.0;
    int rho = 1;
    int tau = 2;
};

/// Space coordinates commuting to space: X_gamma rotates the (k, l) plane of
/// both coordinates and momenta with strength 1 / kappa_tilde.
struct SpaceSpace {
    double kappa_tilde = 1.0;
    int k = 1;
    int l = 2;
    int gamma = 3;
};

/// General Lie-type algebra
///
///     {X_i, X_j} = theta0_ij t + theta^k_ij X_k
///     {X_i, P_j} = delta_ij + theta_bar^k_ij X_k + theta_tilde^k_ij P_k
///     {P_i, P_j} = 0
///
/// theta0 and every slice of theta are antisymmetric. theta_bar and
/// theta_tilde carry no symmetry constraint: their first lower index belongs
/// to the coordinate and the second to the momentum.
struct Generalized {
    Tensor2 theta0 = Tensor2::Zero();
    Tensor3 theta = zero_tensor3();
    Tensor3 theta_bar = zero_tensor3();
    Tensor3 theta_tilde = zero_tensor3();
};

/// First constrained special case of the general algebra:
///
///     {X_k, X_gamma} = -t/kappa + X_l/kappa_tilde
///     {X_l, X_gamma} =  t/kappa - X_k/kappa_tilde
///     {X_k, X_l}     =  t/kappa
///
/// with the SpaceSpace momentum rotation.
struct MiaoTypeI {
    double kappa = 1.0;
    double kappa_tilde = 1.0;
    int k = 1;
    int l = 2;
    int gamma = 3;
};

/// Second constrained special case: as MiaoTypeI but {X_k, X_l} = 0 and
/// {P_k, X_gamma} = X_l/kappa_bar + P_l/kappa_tilde,
/// {P_l, X_gamma} = X_k/kappa_bar - P_k/kappa_tilde.
struct MiaoTypeII {
    double kappa = 1.0;
    double kappa_tilde = 1.0;
    double kappa_bar = 1.0;
    int k = 1;
    int l = 2;
    int gamma = 3;
};

using AlgebraSpec = std::variant<Canonical, SpaceTime, SpaceSpace, Generalized, MiaoTypeI, MiaoTypeII>;

enum class AlgebraKind { Canonical, SpaceTime, SpaceSpace, Generalized, MiaoTypeI, MiaoTypeII };

AlgebraKind kind_of(const AlgebraSpec& spec);
/// Stable snake_case name used in scenario files and reports.
std::string_view kind_name(AlgebraKind kind);

/// Throws ValidationError naming `field` (e.g. "algebra.tau") on the first
/// violated invariant.
void validate(const AlgebraSpec& spec, const std::string& field = "algebra");

struct PhaseState {
    std::vector<Vec3> x;
    std::vector<Vec3> p;
    double t = 0.0;

    PhaseState() = default;
    explicit PhaseState(std::size_t particles, double time = 0.0);

    std::size_t particles() const noexcept { return x.size(); }
    Eigen::VectorXd flatten() const;
    static PhaseState unflatten(const Eigen::VectorXd& z, double t);
    /// Throws ValidationError on size mismatch or non-finite entries.
    void validate(const std::string& field = "state") const;
};

inline Eigen::Index phase_dim(std::size_t particles) { return static_cast<Eigen::Index>(6 * particles); }
/// Index of X_axis (axis 0-based) of `particle` in the flattened phase vector.
inline Eigen::Index x_index(std::size_t particle, int axis) { return static_cast<Eigen::Index>(6 * particle) + axis; }
inline Eigen::Index p_index(std::size_t particle, int axis) { return static_cast<Eigen::Index>(6 * particle) + 3 + axis; }

using ParticleBlock = Eigen::Matrix<double, 6, 6>;

/// The 6x6 bracket table of a single particle at (x, p, t).
ParticleBlock particle_block(const AlgebraSpec& spec, const Vec3& x, const Vec3& p, double t);

StructureMatrix structure_matrix(std::span<const AlgebraSpec> specs, const PhaseState& state);

/// Tensor encoding whose structure matrix coincides with that of `spec`.
Generalized as_generalized(const AlgebraSpec& spec);

/// A smooth function of the full phase vector with an analytic gradient.
struct Observable {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

namespace obs {

/// f(z) = c . z
Observable linear(Eigen::VectorXd coefficients);
Observable coordinate(std::size_t particle, int axis, std::size_t particles);
Observable momentum(std::size_t particle, int axis, std::size_t particles);
Observable sum(Observable f, Observable g);
Observable product(Observable f, Observable g);
Observable scaled(double c, Observable f);

}  // namespace obs

/// {f, g} = grad f(z) . J . grad g(z)
double bracket(const Observable& f, const Observable& g, const StructureMatrix& J, const Eigen::VectorXd& z);
double bracket(const Observable& f, const Observable& g, std::span<const AlgebraSpec> specs,
               const PhaseState& state);

/// Structure matrix supplied as a callable, for algebras outside AlgebraSpec.
using StructureFunction = std::function<Eigen::MatrixXd(const Eigen::VectorXd& z, double t)>;

/// max over (a, b, c) of |sum_d J_ad d_d J_bc + J_bd d_d J_ca + J_cd d_d J_ab|.
///
/// Every AlgebraSpec variant is affine in z, so derivatives are exact and
/// `fd_step` only has to be positive.
double jacobi_residual(std::span<const AlgebraSpec> specs, const PhaseState& state, double fd_step = 1e-5);

/// Same residual with central finite differences of step `fd_step`.
double jacobi_residual(const StructureFunction& structure, const Eigen::VectorXd& z, double t,
                       double fd_step = 1e-5);

}  // namespace ncmech
