#include "ncmech/composition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "ncmech/errors.hpp"

namespace ncmech {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Axis indices of the variants that have them; empty for the others.
std::vector<int> axes_of(const AlgebraSpec& spec) {
    return std::visit(overloaded{
                          [](const Canonical&) { return std::vector<int>{}; },
                          [](const Generalized&) { return std::vector<int>{}; },
                          [](const SpaceTime& s) { return std::vector<int>{s.rho, s.tau}; },
                          [](const SpaceSpace& s) { return std::vector<int>{s.k, s.l, s.gamma}; },
                          [](const MiaoTypeI& s) { return std::vector<int>{s.k, s.l, s.gamma}; },
                          [](const MiaoTypeII& s) { return std::vector<int>{s.k, s.l, s.gamma}; },
                      },
                      spec);
}

void append(std::vector<double>& out, const Tensor2& m, double factor) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.push_back(m(i, j) * factor);
}

void append(std::vector<double>& out, const Tensor3& t, double factor) {
    for (const auto& slice : t) append(out, slice, factor);
}

// Per-particle quantities that the scaling rule requires to be identical:
// mass-scaled parameters plus the shared ones.
std::vector<double> scaled_components(const AlgebraSpec& spec, double m) {
    std::vector<double> out;
    std::visit(overloaded{
                   [](const Canonical&) {},
                   [&](const SpaceTime& s) { out = {s.kappa / m}; },
                   [&](const SpaceSpace& s) { out = {s.kappa_tilde / m}; },
                   [&](const MiaoTypeI& s) { out = {s.kappa / m, s.kappa_tilde / m}; },
                   [&](const MiaoTypeII& s) { out = {s.kappa / m, s.kappa_tilde / m, s.kappa_bar}; },
                   [&](const Generalized& s) {
                       append(out, s.theta0, m);
                       append(out, s.theta, m);
                       append(out, s.theta_tilde, m);
                       append(out, s.theta_bar, 1.0);
                   },
               },
               spec);
    return out;
}

MassScalingRule rule_from_components(const AlgebraSpec& axes, const std::vector<double>& c) {
    MassScalingRule rule;
    rule.kind = kind_of(axes);
    rule.axes = axes;
    switch (rule.kind) {
        case AlgebraKind::Canonical: break;
        case AlgebraKind::SpaceTime: rule.gamma_kappa = c[0]; break;
        case AlgebraKind::SpaceSpace: rule.gamma_kappa_tilde = c[0]; break;
        case AlgebraKind::MiaoTypeII: rule.kappa_bar = c[2]; [[fallthrough]];
        case AlgebraKind::MiaoTypeI:
            rule.gamma_kappa = c[0];
            rule.gamma_kappa_tilde = c[1];
            break;
        case AlgebraKind::Generalized: {
            std::size_t n = 0;
            auto take2 = [&](Tensor2& m) {
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) m(i, j) = c[n++];
            };
            take2(rule.gamma0);
            for (auto& s : rule.gamma) take2(s);
            for (auto& s : rule.gamma_tilde) take2(s);
            for (auto& s : rule.theta_bar) take2(s);
            break;
        }
    }
    return rule;
}

Tensor2 eps_tensor(int rho, int tau) {
    Tensor2 e = Tensor2::Zero();
    e(rho - 1, tau - 1) = 1.0;
    e(tau - 1, rho - 1) = -1.0;
    return e;
}

std::string ax(int i) { return std::to_string(i + 1); }
std::string pt(std::size_t a) { return "(" + std::to_string(a + 1) + ")"; }

// Closed forms of every COM/relative bracket, indexed by key family.
struct ClosedForms {
    std::function<double(int, int)> xcm_xcm;
    std::function<double(int, int)> xcm_pcm;
    std::function<double(std::size_t, std::size_t, int, int)> dx_dx;
    std::function<double(std::size_t, std::size_t, int, int)> dx_dp;
    std::function<double(std::size_t, int, int)> dx_xcm;
    std::function<double(std::size_t, int, int)> pcm_dx;
    std::function<double(std::size_t, int, int)> dp_xcm;
};

// Composite brackets from per-particle tables A_a = {X(a), X(a)} and
// B_a = {X(a), P(a)} by bilinearity.
ClosedForms from_particle_tables(const ParticleSystem& sys, std::vector<Tensor2> A, std::vector<Tensor2> B) {
    Tensor2 S = Tensor2::Zero();  // sum mu_a^2 A_a
    Tensor2 T = Tensor2::Zero();  // sum mu_a B_a
    for (std::size_t a = 0; a < sys.size(); ++a) {
        S += sys.mu(a) * sys.mu(a) * A[a];
        T += sys.mu(a) * B[a];
    }
    std::vector<double> mu(sys.size());
    for (std::size_t a = 0; a < sys.size(); ++a) mu[a] = sys.mu(a);
    ClosedForms f;
    f.xcm_xcm = [S](int i, int j) { return S(i, j); };
    f.xcm_pcm = [T](int i, int j) { return T(i, j); };
    f.dx_dx = [=](std::size_t a, std::size_t b, int i, int j) {
        return (a == b ? A[a](i, j) : 0.0) - mu[a] * A[a](i, j) - mu[b] * A[b](i, j) + S(i, j);
    };
    f.dx_dp = [=](std::size_t a, std::size_t b, int i, int j) {
        return (a == b ? B[a](i, j) : 0.0) - mu[b] * B[a](i, j) - mu[b] * B[b](i, j) + mu[b] * T(i, j);
    };
    f.dx_xcm = [=](std::size_t a, int i, int j) { return mu[a] * A[a](i, j) - S(i, j); };
    f.pcm_dx = [=](std::size_t a, int i, int j) { return -B[a](j, i) + T(j, i); };
    f.dp_xcm = [=](std::size_t a, int i, int j) { return mu[a] * (-B[a](j, i) + T(j, i)); };
    return f;
}

ClosedForms space_time_forms(const ParticleSystem& sys, double t) {
    const auto& first = std::get<SpaceTime>(sys[0].spec);
    const Tensor2 eps = eps_tensor(first.rho, first.tau);
    std::vector<double> inv_kappa(sys.size()), mu(sys.size());
    double s = 0.0;  // 1 / kappa_eff
    for (std::size_t a = 0; a < sys.size(); ++a) {
        inv_kappa[a] = 1.0 / std::get<SpaceTime>(sys[a].spec).kappa;
        mu[a] = sys.mu(a);
        s += mu[a] * mu[a] * inv_kappa[a];
    }
    ClosedForms f;
    f.xcm_xcm = [=](int i, int j) { return t * s * eps(i, j); };
    f.xcm_pcm = [](int i, int j) { return i == j ? 1.0 : 0.0; };
    f.dx_dx = [=](std::size_t a, std::size_t b, int i, int j) {
        return t * ((a == b ? inv_kappa[a] : 0.0) - mu[a] * inv_kappa[a] - mu[b] * inv_kappa[b] + s) * eps(i, j);
    };
    f.dx_dp = [=](std::size_t a, std::size_t b, int i, int j) {
        return ((a == b ? 1.0 : 0.0) - mu[b]) * (i == j ? 1.0 : 0.0);
    };
    f.dx_xcm = [=](std::size_t a, int i, int j) { return t * (mu[a] * inv_kappa[a] - s) * eps(i, j); };
    f.pcm_dx = [](std::size_t, int, int) { return 0.0; };
    f.dp_xcm = [](std::size_t, int, int) { return 0.0; };
    return f;
}

ClosedForms space_space_forms(const ParticleSystem& sys, const PhaseState& st) {
    const auto& first = std::get<SpaceSpace>(sys[0].spec);
    const int k = first.k - 1, l = first.l - 1, g = first.gamma - 1;
    const std::size_t n = sys.size();
    std::vector<double> inv(n), mu(n);
    double sxl = 0.0, sxk = 0.0;  // sum mu_b^2 X_l(b) / kt_b, same for X_k
    double spl = 0.0, spk = 0.0;  // sum mu_b P_l(b) / kt_b, same for P_k
    for (std::size_t a = 0; a < n; ++a) {
        inv[a] = 1.0 / std::get<SpaceSpace>(sys[a].spec).kappa_tilde;
        mu[a] = sys.mu(a);
        sxl += mu[a] * mu[a] * st.x[a](l) * inv[a];
        sxk += mu[a] * mu[a] * st.x[a](k) * inv[a];
        spl += mu[a] * st.p[a](l) * inv[a];
        spk += mu[a] * st.p[a](k) * inv[a];
    }
    // Antisymmetric 3x3 built from the (k, gamma) and (l, gamma) entries.
    auto rot = [=](double kg, double lg) {
        Tensor2 m = Tensor2::Zero();
        m(k, g) = kg;
        m(g, k) = -kg;
        m(l, g) = lg;
        m(g, l) = -lg;
        return m;
    };
    // {X_i, P_j} = delta_ij except {X_gamma, P_k} = -pk_term, {X_gamma, P_l} = pl_term.
    auto xp = [=](double p_l_term, double p_k_term) {
        Tensor2 m = Tensor2::Identity();
        m(g, k) = -p_l_term;
        m(g, l) = p_k_term;
        return m;
    };

    const Tensor2 xcm_xcm = rot(sxl, -sxk);
    const Tensor2 xcm_pcm = xp(spl, spk);

    std::vector<Tensor2> A(n), B(n), dx_xcm(n), pcm_dx(n), dp_xcm(n);
    for (std::size_t a = 0; a < n; ++a) {
        A[a] = rot(st.x[a](l) * inv[a], -st.x[a](k) * inv[a]);
        B[a] = xp(st.p[a](l) * inv[a], st.p[a](k) * inv[a]);
        const double ck = mu[a] * st.x[a](l) * inv[a] - sxl;   // {dX_k, Xcm_gamma}
        const double cl = -mu[a] * st.x[a](k) * inv[a] + sxk;  // {dX_l, Xcm_gamma}
        dx_xcm[a] = Tensor2::Zero();
        dx_xcm[a](k, g) = ck;
        dx_xcm[a](l, g) = cl;
        dx_xcm[a](g, k) = -ck;  // {dX_gamma, Xcm_k} = -{Xcm_k, dX_gamma}
        dx_xcm[a](g, l) = -cl;
        pcm_dx[a] = Tensor2::Zero();
        pcm_dx[a](k, g) = st.p[a](l) * inv[a] - spl;
        pcm_dx[a](l, g) = -st.p[a](k) * inv[a] + spk;
        dp_xcm[a] = Tensor2::Zero();
        dp_xcm[a](k, g) = mu[a] * (st.p[a](l) * inv[a] - spl);
        dp_xcm[a](l, g) = -mu[a] * (st.p[a](k) * inv[a] - spk);
    }
    ClosedForms f = from_particle_tables(sys, A, B);
    f.xcm_xcm = [=](int i, int j) { return xcm_xcm(i, j); };
    f.xcm_pcm = [=](int i, int j) { return xcm_pcm(i, j); };
    f.dx_xcm = [=](std::size_t a, int i, int j) { return dx_xcm[a](i, j); };
    f.pcm_dx = [=](std::size_t a, int i, int j) { return pcm_dx[a](i, j); };
    f.dp_xcm = [=](std::size_t a, int i, int j) { return dp_xcm[a](i, j); };
    return f;
}

ClosedForms tensor_forms(const ParticleSystem& sys, const PhaseState& st) {
    std::vector<Tensor2> A(sys.size()), B(sys.size());
    for (std::size_t a = 0; a < sys.size(); ++a) {
        const Generalized g = as_generalized(sys[a].spec);
        A[a] = g.theta0 * st.t;
        B[a] = Tensor2::Identity();
        for (int k = 0; k < 3; ++k) {
            A[a] += g.theta[k] * st.x[a](k);
            B[a] += g.theta_bar[k] * st.x[a](k) + g.theta_tilde[k] * st.p[a](k);
        }
    }
    return from_particle_tables(sys, std::move(A), std::move(B));
}

ClosedForms closed_forms(const ParticleSystem& sys, const PhaseState& st) {
    switch (sys.kind()) {
        case AlgebraKind::SpaceTime: return space_time_forms(sys, st.t);
        case AlgebraKind::SpaceSpace: return space_space_forms(sys, st);
        default: return tensor_forms(sys, st);
    }
}

void check_sizes(const ParticleSystem& system, const PhaseState& state) {
    if (state.particles() != system.size())
        throw ValidationError("state", "particle count " + std::to_string(state.particles()) +
                                           " does not match system size " + std::to_string(system.size()));
    state.validate();
}

double pairwise_deviation(double va, double vb) {
    const double diff = std::abs(va - vb);
    return vb == 0.0 ? diff : diff / std::abs(vb);
}

}  // namespace

ParticleSystem::ParticleSystem(std::vector<Particle> particles) : particles_(std::move(particles)) {
    if (particles_.empty()) throw ValidationError("particles", "system must contain at least one particle");
    const AlgebraKind kind = kind_of(particles_.front().spec);
    const std::vector<int> axes = axes_of(particles_.front().spec);
    for (std::size_t a = 0; a < particles_.size(); ++a) {
        const std::string field = "particles[" + std::to_string(a) + "]";
        const double m = particles_[a].mass;
        if (!std::isfinite(m) || m <= 0.0) throw ValidationError(field + ".mass", "must be positive and finite");
        validate(particles_[a].spec, field);
        if (kind_of(particles_[a].spec) != kind)
            throw ValidationError(field, "mixes algebra variant " + std::string(kind_name(kind_of(particles_[a].spec))) +
                                             " with " + std::string(kind_name(kind)));
        if (axes_of(particles_[a].spec) != axes) throw ValidationError(field, "axis indices differ from particle 0");
        total_mass_ += m;
        specs_.push_back(particles_[a].spec);
    }
}

PhaseState ComCoordinates::com_state(double t) const {
    PhaseState s(1, t);
    s.x[0] = x_cm;
    s.p[0] = p_cm;
    return s;
}

ComCoordinates com_transform(const ParticleSystem& system, const PhaseState& state) {
    check_sizes(system, state);
    ComCoordinates c;
    for (std::size_t a = 0; a < system.size(); ++a) {
        c.x_cm += system.mu(a) * state.x[a];
        c.p_cm += state.p[a];
    }
    for (std::size_t a = 0; a < system.size(); ++a) {
        c.dx.push_back(state.x[a] - c.x_cm);
        c.dp.push_back(state.p[a] - system.mu(a) * c.p_cm);
    }
    return c;
}

namespace com {

Observable x_cm(const ParticleSystem& system, int axis) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(phase_dim(system.size()));
    for (std::size_t a = 0; a < system.size(); ++a) c(x_index(a, axis)) = system.mu(a);
    return obs::linear(std::move(c));
}

Observable p_cm(const ParticleSystem& system, int axis) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(phase_dim(system.size()));
    for (std::size_t a = 0; a < system.size(); ++a) c(p_index(a, axis)) = 1.0;
    return obs::linear(std::move(c));
}

Observable dx(const ParticleSystem& system, std::size_t particle, int axis) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(phase_dim(system.size()));
    for (std::size_t a = 0; a < system.size(); ++a) c(x_index(a, axis)) = -system.mu(a);
    c(x_index(particle, axis)) += 1.0;
    return obs::linear(std::move(c));
}

Observable dp(const ParticleSystem& system, std::size_t particle, int axis) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(phase_dim(system.size()));
    for (std::size_t a = 0; a < system.size(); ++a) c(p_index(a, axis)) = -system.mu(particle);
    c(p_index(particle, axis)) += 1.0;
    return obs::linear(std::move(c));
}

}  // namespace com

AlgebraSpec MassScalingRule::spec_for_mass(double m) const {
    return std::visit(overloaded{
                          [](const Canonical&) -> AlgebraSpec { return Canonical{}; },
                          [&](SpaceTime s) -> AlgebraSpec {
                              s.kappa = gamma_kappa * m;
                              return s;
                          },
                          [&](SpaceSpace s) -> AlgebraSpec {
                              s.kappa_tilde = gamma_kappa_tilde * m;
                              return s;
                          },
                          [&](MiaoTypeI s) -> AlgebraSpec {
                              s.kappa = gamma_kappa * m;
                              s.kappa_tilde = gamma_kappa_tilde * m;
                              return s;
                          },
                          [&](MiaoTypeII s) -> AlgebraSpec {
                              s.kappa = gamma_kappa * m;
                              s.kappa_tilde = gamma_kappa_tilde * m;
                              s.kappa_bar = kappa_bar;
                              return s;
                          },
                          [&](const Generalized&) -> AlgebraSpec {
                              Generalized g;
                              g.theta0 = gamma0 / m;
                              for (int k = 0; k < 3; ++k) {
                                  g.theta[k] = gamma[k] / m;
                                  g.theta_tilde[k] = gamma_tilde[k] / m;
                                  g.theta_bar[k] = theta_bar[k];
                              }
                              return g;
                          },
                      },
                      axes);
}

MassScalingRule scaling_rule_of(const AlgebraSpec& spec, double mass) {
    return rule_from_components(spec, scaled_components(spec, mass));
}

ScalingVerdict satisfies_mass_scaling(const ParticleSystem& system, double tol) {
    if (!(tol >= 0.0)) throw ValidationError("tol", "must be non-negative");
    std::vector<std::vector<double>> values;
    for (const auto& p : system.particles()) values.push_back(scaled_components(p.spec, p.mass));

    ScalingVerdict verdict;
    const std::size_t ncomp = values.front().size();
    std::vector<double> consensus(ncomp, 0.0);
    for (std::size_t c = 0; c < ncomp; ++c) {
        for (std::size_t a = 0; a < values.size(); ++a) {
            consensus[c] += system.mu(a) * values[a][c];
            for (std::size_t b = 0; b < values.size(); ++b)
                verdict.worst_relative_deviation =
                    std::max(verdict.worst_relative_deviation, pairwise_deviation(values[a][c], values[b][c]));
        }
    }
    verdict.holds = verdict.worst_relative_deviation <= tol;
    if (verdict.holds) verdict.rule = rule_from_components(system[0].spec, consensus);
    return verdict;
}

AlgebraSpec composition_weighted_spec(const ParticleSystem& system) {
    double inv_k = 0.0, inv_kt = 0.0, inv_kb = 0.0;
    Generalized weighted;
    for (std::size_t a = 0; a < system.size(); ++a) {
        const double mu = system.mu(a), mu2 = mu * mu;
        std::visit(overloaded{
                       [](const Canonical&) {},
                       [&](const SpaceTime& s) { inv_k += mu2 / s.kappa; },
                       [&](const SpaceSpace& s) { inv_kt += mu2 / s.kappa_tilde; },
                       [&](const MiaoTypeI& s) {
                           inv_k += mu2 / s.kappa;
                           inv_kt += mu2 / s.kappa_tilde;
                       },
                       [&](const MiaoTypeII& s) {
                           inv_k += mu2 / s.kappa;
                           inv_kt += mu2 / s.kappa_tilde;
                           inv_kb += mu / s.kappa_bar;
                       },
                       [&](const Generalized& s) {
                           weighted.theta0 += mu2 * s.theta0;
                           for (int k = 0; k < 3; ++k) {
                               weighted.theta[k] += mu2 * s.theta[k];
                               weighted.theta_tilde[k] += mu2 * s.theta_tilde[k];
                               weighted.theta_bar[k] += mu * s.theta_bar[k];
                           }
                       },
                   },
                   system[a].spec);
    }
    return std::visit(overloaded{
                          [](const Canonical&) -> AlgebraSpec { return Canonical{}; },
                          [&](SpaceTime s) -> AlgebraSpec {
                              s.kappa = 1.0 / inv_k;
                              return s;
                          },
                          [&](SpaceSpace s) -> AlgebraSpec {
                              s.kappa_tilde = 1.0 / inv_kt;
                              return s;
                          },
                          [&](MiaoTypeI s) -> AlgebraSpec {
                              s.kappa = 1.0 / inv_k;
                              s.kappa_tilde = 1.0 / inv_kt;
                              return s;
                          },
                          [&](MiaoTypeII s) -> AlgebraSpec {
                              s.kappa = 1.0 / inv_k;
                              s.kappa_tilde = 1.0 / inv_kt;
                              s.kappa_bar = 1.0 / inv_kb;
                              return s;
                          },
                          [&](const Generalized&) -> AlgebraSpec { return weighted; },
                      },
                      system[0].spec);
}

EffectiveParameters effective_parameters(const ParticleSystem& system, double tol) {
    const ScalingVerdict verdict = satisfies_mass_scaling(system, tol);
    EffectiveParameters out{composition_weighted_spec(system), false};
    switch (system.kind()) {
        case AlgebraKind::Canonical: break;
        case AlgebraKind::SpaceTime: out.composition_dependent = !verdict.holds; break;
        case AlgebraKind::Generalized: {
            bool linear_terms = false;
            bool shared_bar = true;
            const Generalized& first = std::get<Generalized>(system[0].spec);
            for (const auto& p : system.particles()) {
                const Generalized& g = std::get<Generalized>(p.spec);
                for (int k = 0; k < 3; ++k) {
                    linear_terms = linear_terms || !g.theta[k].isZero(0.0) || !g.theta_tilde[k].isZero(0.0);
                    shared_bar = shared_bar && g.theta_bar[k] == first.theta_bar[k];
                }
            }
            if (linear_terms && !verdict.holds)
                throw ScalingRequired("generalized algebra with coordinate- or momentum-dependent brackets closes "
                                      "only when theta0, theta, theta_tilde scale as 1/m and theta_bar is shared");
            if (!shared_bar && !verdict.holds)
                throw ScalingRequired("theta_bar must be the same for every particle");
            out.composition_dependent = !verdict.holds;
            break;
        }
        case AlgebraKind::SpaceSpace:
        case AlgebraKind::MiaoTypeI:
        case AlgebraKind::MiaoTypeII:
            if (!verdict.holds)
                throw ScalingRequired(std::string(kind_name(system.kind())) +
                                      " COM brackets close only under the mass-scaling condition (worst deviation " +
                                      std::to_string(verdict.worst_relative_deviation) + ")");
            break;
    }
    return out;
}

ComBracketReport com_bracket_report(const ParticleSystem& system, const PhaseState& state) {
    check_sizes(system, state);
    const StructureMatrix J = structure_matrix(system.specs(), state);
    const Eigen::VectorXd z = state.flatten();
    const ClosedForms cf = closed_forms(system, state);
    const std::size_t n = system.size();

    ComBracketReport report;
    auto put = [&](const std::string& key, const Observable& f, const Observable& g, double closed) {
        const double v = bracket(f, g, J, z);
        report.computed[key] = v;
        report.closed_form[key] = closed;
        report.max_abs_diff = std::max(report.max_abs_diff, std::abs(v - closed));
    };

    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            put("{Xcm_" + ax(i) + ",Xcm_" + ax(j) + "}", com::x_cm(system, i), com::x_cm(system, j), cf.xcm_xcm(i, j));
            put("{Xcm_" + ax(i) + ",Pcm_" + ax(j) + "}", com::x_cm(system, i), com::p_cm(system, j), cf.xcm_pcm(i, j));
            put("{Pcm_" + ax(i) + ",Pcm_" + ax(j) + "}", com::p_cm(system, i), com::p_cm(system, j), 0.0);
            for (std::size_t a = 0; a < n; ++a) {
                const std::string dxa = "dX" + pt(a) + "_" + ax(i);
                put("{" + dxa + ",Xcm_" + ax(j) + "}", com::dx(system, a, i), com::x_cm(system, j), cf.dx_xcm(a, i, j));
                put("{Pcm_" + ax(i) + ",dX" + pt(a) + "_" + ax(j) + "}", com::p_cm(system, i), com::dx(system, a, j),
                    cf.pcm_dx(a, i, j));
                put("{dP" + pt(a) + "_" + ax(i) + ",Xcm_" + ax(j) + "}", com::dp(system, a, i), com::x_cm(system, j),
                    cf.dp_xcm(a, i, j));
                for (std::size_t b = 0; b < n; ++b) {
                    put("{" + dxa + ",dX" + pt(b) + "_" + ax(j) + "}", com::dx(system, a, i), com::dx(system, b, j),
                        cf.dx_dx(a, b, i, j));
                    put("{" + dxa + ",dP" + pt(b) + "_" + ax(j) + "}", com::dx(system, a, i), com::dp(system, b, j),
                        cf.dx_dp(a, b, i, j));
                    put("{dP" + pt(a) + "_" + ax(i) + ",dP" + pt(b) + "_" + ax(j) + "}", com::dp(system, a, i),
                        com::dp(system, b, j), 0.0);
                }
            }
        }
    return report;
}

ReproductionResult reproduction_check(const ParticleSystem& system, const PhaseState& state) {
    check_sizes(system, state);
    const StructureMatrix J = structure_matrix(system.specs(), state);
    const Eigen::VectorXd z = state.flatten();
    const ComCoordinates c = com_transform(system, state);
    const ParticleBlock single = particle_block(composition_weighted_spec(system), c.x_cm, c.p_cm, state.t);

    ReproductionResult out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double xx = bracket(com::x_cm(system, i), com::x_cm(system, j), J, z);
            const double xp = bracket(com::x_cm(system, i), com::p_cm(system, j), J, z);
            const double pp = bracket(com::p_cm(system, i), com::p_cm(system, j), J, z);
            out.max_abs_diff = std::max({out.max_abs_diff, std::abs(xx - single(i, j)),
                                         std::abs(xp - single(i, 3 + j)), std::abs(pp - single(3 + i, 3 + j))});
        }
    out.closes = out.max_abs_diff <= 1e-12;
    return out;
}

RelativeCoupling com_relative_coupling(const ParticleSystem& system, const PhaseState& state) {
    check_sizes(system, state);
    const StructureMatrix J = structure_matrix(system.specs(), state);
    const Eigen::VectorXd z = state.flatten();
    RelativeCoupling out;
    for (std::size_t a = 0; a < system.size(); ++a) {
        Tensor2 dx_xcm, pcm_dx, dp_xcm;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                dx_xcm(i, j) = bracket(com::dx(system, a, i), com::x_cm(system, j), J, z);
                pcm_dx(i, j) = bracket(com::p_cm(system, i), com::dx(system, a, j), J, z);
                dp_xcm(i, j) = bracket(com::dp(system, a, i), com::x_cm(system, j), J, z);
            }
        out.max_abs = std::max({out.max_abs, dx_xcm.cwiseAbs().maxCoeff(), pcm_dx.cwiseAbs().maxCoeff(),
                                dp_xcm.cwiseAbs().maxCoeff()});
        out.dx_xcm.push_back(dx_xcm);
        out.pcm_dx.push_back(pcm_dx);
        out.dp_xcm.push_back(dp_xcm);
    }
    return out;
}

}  // namespace ncmech
