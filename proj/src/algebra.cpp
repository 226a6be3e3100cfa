#include "ncmech/algebra.hpp"

#include <algorithm>
#include <cmath>
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

void check_axis(int axis, const std::string& field) {
    if (axis < 1 || axis > 3) throw ValidationError(field, "axis index must be 1, 2 or 3");
}

void check_permutation(int k, int l, int gamma, const std::string& field) {
    check_axis(k, field + ".k");
    check_axis(l, field + ".l");
    check_axis(gamma, field + ".gamma");
    if (k == l || k == gamma || l == gamma) throw ValidationError(field + ".gamma", "k, l, gamma must be a permutation of 1, 2, 3");
}

void check_parameter(double v, const std::string& field) {
    if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
    if (v == 0.0) throw ValidationError(field, "must be nonzero");
}

void check_antisymmetric(const Tensor2& m, const std::string& field) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (!std::isfinite(m(i, j))) throw ValidationError(field, "entries must be finite");
            if (m(i, j) != -m(j, i)) throw ValidationError(field, "must be antisymmetric in its lower indices");
        }
}

void check_finite(const Tensor3& t, const std::string& field) {
    for (const auto& slice : t)
        if (!slice.allFinite()) throw ValidationError(field, "entries must be finite");
}

// Writes {X_i, X_j} = v and its mirror.
void set_xx(ParticleBlock& b, int i, int j, double v) {
    b(i, j) = v;
    b(j, i) = -v;
}

// Writes {X_i, P_j} = v and its mirror {P_j, X_i} = -v.
void set_xp(ParticleBlock& b, int i, int j, double v) {
    b(i, 3 + j) = v;
    b(3 + j, i) = -v;
}

ParticleBlock canonical_block() {
    ParticleBlock b = ParticleBlock::Zero();
    for (int i = 0; i < 3; ++i) set_xp(b, i, i, 1.0);
    return b;
}

// Momentum rotation shared by SpaceSpace and the Miao algebras:
// {P_k, X_gamma} = P_l / kappa_tilde + X_l / kappa_bar,
// {P_l, X_gamma} = -P_k / kappa_tilde + X_k / kappa_bar.
void set_gamma_row(ParticleBlock& b, int k, int l, int g, const Vec3& x, const Vec3& p, double inv_kt, double inv_kb) {
    set_xp(b, g, k, (0.0 + (-inv_kb) * x(l)) + (-inv_kt) * p(l));
    set_xp(b, g, l, (0.0 + (-inv_kb) * x(k)) + inv_kt * p(k));
}

ParticleBlock generalized_block(const Generalized& s, const Vec3& x, const Vec3& p, double t) {
    ParticleBlock b = ParticleBlock::Zero();
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            double lin = 0.0;
            for (int k = 0; k < 3; ++k) lin += s.theta[k](i, j) * x(k);
            set_xx(b, i, j, s.theta0(i, j) * t + lin);
        }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double bar = 0.0;
            double tilde = 0.0;
            for (int k = 0; k < 3; ++k) bar += s.theta_bar[k](i, j) * x(k);
            for (int k = 0; k < 3; ++k) tilde += s.theta_tilde[k](i, j) * p(k);
            set_xp(b, i, j, ((i == j ? 1.0 : 0.0) + bar) + tilde);
        }
    return b;
}

void set_anti(Tensor2& m, int i, int j, double v) {
    m(i, j) = v;
    m(j, i) = -v;
}

}  // namespace

Tensor3 zero_tensor3() { return {Tensor2::Zero(), Tensor2::Zero(), Tensor2::Zero()}; }

AlgebraKind kind_of(const AlgebraSpec& spec) { return static_cast<AlgebraKind>(spec.index()); }

std::string_view kind_name(AlgebraKind kind) {
    switch (kind) {
        case AlgebraKind::Canonical: return "canonical";
        case AlgebraKind::SpaceTime: return "space_time";
        case AlgebraKind::SpaceSpace: return "space_space";
        case AlgebraKind::Generalized: return "generalized";
        case AlgebraKind::MiaoTypeI: return "miao_type_i";
        case AlgebraKind::MiaoTypeII: return "miao_type_ii";
    }
    return "unknown";
}

void validate(const AlgebraSpec& spec, const std::string& field) {
    std::visit(overloaded{
                   [](const Canonical&) {},
                   [&](const SpaceTime& s) {
                       check_parameter(s.kappa, field + ".kappa");
                       if (s.kappa < 0.0) throw ValidationError(field + ".kappa", "must be positive");
                       check_axis(s.rho, field + ".rho");
                       check_axis(s.tau, field + ".tau");
                       if (s.rho == s.tau) throw ValidationError(field + ".tau", "must differ from rho");
                   },
                   [&](const SpaceSpace& s) {
                       check_parameter(s.kappa_tilde, field + ".kappa_tilde");
                       check_permutation(s.k, s.l, s.gamma, field);
                   },
                   [&](const Generalized& s) {
                       check_antisymmetric(s.theta0, field + ".theta0");
                       for (int k = 0; k < 3; ++k)
                           check_antisymmetric(s.theta[k], field + ".theta[" + std::to_string(k) + "]");
                       check_finite(s.theta_bar, field + ".theta_bar");
                       check_finite(s.theta_tilde, field + ".theta_tilde");
                   },
                   [&](const MiaoTypeI& s) {
                       check_parameter(s.kappa, field + ".kappa");
                       check_parameter(s.kappa_tilde, field + ".kappa_tilde");
                       check_permutation(s.k, s.l, s.gamma, field);
                   },
                   [&](const MiaoTypeII& s) {
                       check_parameter(s.kappa, field + ".kappa");
                       check_parameter(s.kappa_tilde, field + ".kappa_tilde");
                       check_parameter(s.kappa_bar, field + ".kappa_bar");
                       check_permutation(s.k, s.l, s.gamma, field);
                   },
               },
               spec);
}

PhaseState::PhaseState(std::size_t particles, double time)
    : x(particles, Vec3::Zero()), p(particles, Vec3::Zero()), t(time) {}

Eigen::VectorXd PhaseState::flatten() const {
    Eigen::VectorXd z(phase_dim(particles()));
    for (std::size_t a = 0; a < particles(); ++a) {
        z.segment<3>(x_index(a, 0)) = x[a];
        z.segment<3>(p_index(a, 0)) = p[a];
    }
    return z;
}

PhaseState PhaseState::unflatten(const Eigen::VectorXd& z, double t) {
    PhaseState s(static_cast<std::size_t>(z.size() / 6), t);
    for (std::size_t a = 0; a < s.particles(); ++a) {
        s.x[a] = z.segment<3>(x_index(a, 0));
        s.p[a] = z.segment<3>(p_index(a, 0));
    }
    return s;
}

void PhaseState::validate(const std::string& field) const {
    if (x.size() != p.size()) throw ValidationError(field, "coordinate and momentum counts differ");
    if (!std::isfinite(t)) throw ValidationError(field + ".t", "must be finite");
    for (std::size_t a = 0; a < x.size(); ++a) {
        if (!x[a].allFinite()) throw ValidationError(field + ".x[" + std::to_string(a) + "]", "must be finite");
        if (!p[a].allFinite()) throw ValidationError(field + ".p[" + std::to_string(a) + "]", "must be finite");
    }
}

ParticleBlock particle_block(const AlgebraSpec& spec, const Vec3& x, const Vec3& p, double t) {
    return std::visit(
        overloaded{
            [](const Canonical&) { return canonical_block(); },
            [&](const SpaceTime& s) {
                ParticleBlock b = canonical_block();
                set_xx(b, s.rho - 1, s.tau - 1, (1.0 / s.kappa) * t);
                return b;
            },
            [&](const SpaceSpace& s) {
                const int k = s.k - 1, l = s.l - 1, g = s.gamma - 1;
                const double inv = 1.0 / s.kappa_tilde;
                ParticleBlock b = canonical_block();
                set_xx(b, k, g, 0.0 + inv * x(l));
                set_xx(b, l, g, 0.0 + (-inv) * x(k));
                set_gamma_row(b, k, l, g, x, p, inv, 0.0);
                return b;
            },
            [&](const Generalized& s) { return generalized_block(s, x, p, t); },
            [&](const MiaoTypeI& s) {
                const int k = s.k - 1, l = s.l - 1, g = s.gamma - 1;
                const double inv_k = 1.0 / s.kappa, inv_kt = 1.0 / s.kappa_tilde;
                ParticleBlock b = canonical_block();
                set_xx(b, k, g, (-inv_k) * t + inv_kt * x(l));
                set_xx(b, l, g, inv_k * t + (-inv_kt) * x(k));
                set_xx(b, k, l, inv_k * t);
                set_gamma_row(b, k, l, g, x, p, inv_kt, 0.0);
                return b;
            },
            [&](const MiaoTypeII& s) {
                const int k = s.k - 1, l = s.l - 1, g = s.gamma - 1;
                const double inv_k = 1.0 / s.kappa, inv_kt = 1.0 / s.kappa_tilde, inv_kb = 1.0 / s.kappa_bar;
                ParticleBlock b = canonical_block();
                set_xx(b, k, g, (-inv_k) * t + inv_kt * x(l));
                set_xx(b, l, g, inv_k * t + (-inv_kt) * x(k));
                set_gamma_row(b, k, l, g, x, p, inv_kt, inv_kb);
                return b;
            },
        },
        spec);
}

StructureMatrix structure_matrix(std::span<const AlgebraSpec> specs, const PhaseState& state) {
    if (specs.size() != state.particles())
        throw ValidationError("state", "particle count " + std::to_string(state.particles()) + " does not match " +
                                           std::to_string(specs.size()) + " algebra specs");
    StructureMatrix J = StructureMatrix::Zero(phase_dim(specs.size()), phase_dim(specs.size()));
    for (std::size_t a = 0; a < specs.size(); ++a) {
        validate(specs[a], "specs[" + std::to_string(a) + "]");
        J.block<6, 6>(x_index(a, 0), x_index(a, 0)) = particle_block(specs[a], state.x[a], state.p[a], state.t);
    }
    return J;
}

Generalized as_generalized(const AlgebraSpec& spec) {
    return std::visit(
        overloaded{
            [](const Canonical&) { return Generalized{}; },
            [](const SpaceTime& s) {
                Generalized g;
                set_anti(g.theta0, s.rho - 1, s.tau - 1, 1.0 / s.kappa);
                return g;
            },
            [](const SpaceSpace& s) {
                const int k = s.k - 1, l = s.l - 1, gm = s.gamma - 1;
                const double inv = 1.0 / s.kappa_tilde;
                Generalized g;
                set_anti(g.theta[l], k, gm, inv);
                set_anti(g.theta[k], l, gm, -inv);
                g.theta_tilde[l](gm, k) = -inv;
                g.theta_tilde[k](gm, l) = inv;
                return g;
            },
            [](const Generalized& s) { return s; },
            [](const MiaoTypeI& s) {
                const int k = s.k - 1, l = s.l - 1, gm = s.gamma - 1;
                const double inv_k = 1.0 / s.kappa, inv_kt = 1.0 / s.kappa_tilde;
                Generalized g;
                set_anti(g.theta0, k, l, inv_k);
                set_anti(g.theta0, k, gm, -inv_k);
                set_anti(g.theta0, l, gm, inv_k);
                set_anti(g.theta[l], k, gm, inv_kt);
                set_anti(g.theta[k], l, gm, -inv_kt);
                g.theta_tilde[l](gm, k) = -inv_kt;
                g.theta_tilde[k](gm, l) = inv_kt;
                return g;
            },
            [](const MiaoTypeII& s) {
                const int k = s.k - 1, l = s.l - 1, gm = s.gamma - 1;
                const double inv_k = 1.0 / s.kappa, inv_kt = 1.0 / s.kappa_tilde, inv_kb = 1.0 / s.kappa_bar;
                Generalized g;
                set_anti(g.theta0, l, gm, inv_k);
                set_anti(g.theta0, k, gm, -inv_k);
                set_anti(g.theta[l], k, gm, inv_kt);
                set_anti(g.theta[k], l, gm, -inv_kt);
                g.theta_tilde[l](gm, k) = -inv_kt;
                g.theta_tilde[k](gm, l) = inv_kt;
                g.theta_bar[l](gm, k) = -inv_kb;
                g.theta_bar[k](gm, l) = -inv_kb;
                return g;
            },
        },
        spec);
}

namespace obs {

Observable linear(Eigen::VectorXd coefficients) {
    return {[c = coefficients](const Eigen::VectorXd& z) { return c.dot(z); },
            [c = coefficients](const Eigen::VectorXd&) { return c; }};
}

Observable coordinate(std::size_t particle, int axis, std::size_t particles) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(phase_dim(particles));
    c(x_index(particle, axis)) = 1.0;
    return linear(std::move(c));
}

Observable momentum(std::size_t particle, int axis, std::size_t particles) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(phase_dim(particles));
    c(p_index(particle, axis)) = 1.0;
    return linear(std::move(c));
}

Observable sum(Observable f, Observable g) {
    return {[f, g](const Eigen::VectorXd& z) { return f.value(z) + g.value(z); },
            [f, g](const Eigen::VectorXd& z) -> Eigen::VectorXd { return f.gradient(z) + g.gradient(z); }};
}

Observable product(Observable f, Observable g) {
    return {[f, g](const Eigen::VectorXd& z) { return f.value(z) * g.value(z); },
            [f, g](const Eigen::VectorXd& z) -> Eigen::VectorXd {
                return f.value(z) * g.gradient(z) + g.value(z) * f.gradient(z);
            }};
}

Observable scaled(double c, Observable f) {
    return {[c, f](const Eigen::VectorXd& z) { return c * f.value(z); },
            [c, f](const Eigen::VectorXd& z) -> Eigen::VectorXd { return c * f.gradient(z); }};
}

}  // namespace obs

double bracket(const Observable& f, const Observable& g, const StructureMatrix& J, const Eigen::VectorXd& z) {
    const Eigen::VectorXd df = f.gradient(z);
    const Eigen::VectorXd dg = g.gradient(z);
    if (df.size() != J.rows() || dg.size() != J.rows())
        throw ValidationError("observable", "gradient length does not match the phase dimension");
    return df.dot(J * dg);
}

double bracket(const Observable& f, const Observable& g, std::span<const AlgebraSpec> specs,
               const PhaseState& state) {
    return bracket(f, g, structure_matrix(specs, state), state.flatten());
}

namespace {

// Shared residual evaluation given J and its derivatives dJ[d] = d J / d z_d.
double residual_from(const Eigen::MatrixXd& J, const std::vector<Eigen::MatrixXd>& dJ) {
    const Eigen::Index n = J.rows();
    // G[a](b, c) = sum_d J_ad dJ_bc / dz_d
    std::vector<Eigen::MatrixXd> G(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index d = 0; d < n; ++d) {
            const double w = J(a, d);
            if (w != 0.0) G[static_cast<std::size_t>(a)] += w * dJ[static_cast<std::size_t>(d)];
        }
    double worst = 0.0;
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            for (Eigen::Index c = 0; c < n; ++c) {
                const double r = G[static_cast<std::size_t>(a)](b, c) + G[static_cast<std::size_t>(b)](c, a) +
                                 G[static_cast<std::size_t>(c)](a, b);
                worst = std::max(worst, std::abs(r));
            }
    return worst;
}

}  // namespace

double jacobi_residual(std::span<const AlgebraSpec> specs, const PhaseState& state, double fd_step) {
    if (!(fd_step > 0.0)) throw ValidationError("fd_step", "must be positive");
    const StructureMatrix J = structure_matrix(specs, state);
    const Eigen::Index n = J.rows();
    std::vector<Eigen::MatrixXd> dJ(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
    // Each block is affine in (x, p) with t entering only additively, so the
    // difference of the block at a unit vector and at the origin (t = 0) is
    // the exact derivative.
    for (std::size_t a = 0; a < specs.size(); ++a) {
        const ParticleBlock base = particle_block(specs[a], Vec3::Zero(), Vec3::Zero(), 0.0);
        for (int d = 0; d < 6; ++d) {
            Vec3 ex = Vec3::Zero(), ep = Vec3::Zero();
            (d < 3 ? ex : ep)(d % 3) = 1.0;
            const Eigen::Index col = x_index(a, 0);
            dJ[static_cast<std::size_t>(col + d)].block<6, 6>(col, col) = particle_block(specs[a], ex, ep, 0.0) - base;
        }
    }
    return residual_from(J, dJ);
}

double jacobi_residual(const StructureFunction& structure, const Eigen::VectorXd& z, double t, double fd_step) {
    if (!(fd_step > 0.0)) throw ValidationError("fd_step", "must be positive");
    const Eigen::MatrixXd J = structure(z, t);
    const Eigen::Index n = J.rows();
    std::vector<Eigen::MatrixXd> dJ;
    dJ.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index d = 0; d < n; ++d) {
        Eigen::VectorXd up = z, down = z;
        up(d) += fd_step;
        down(d) -= fd_step;
        dJ.push_back((structure(up, t) - structure(down, t)) / (2.0 * fd_step));
    }
    return residual_from(J, dJ);
}

}  // namespace ncmech
