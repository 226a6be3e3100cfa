#pragma once

// Seeded generators of random algebras, systems and states for property
// tests and the acceptance suite.

#include <algorithm>
#include <array>
#include <random>
#include <vector>

#include "ncmech/algebra.hpp"
#include "ncmech/composition.hpp"

namespace ncmech::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Magnitude in [lo, hi] with a random sign.
inline double signed_magnitude(Rng& rng, double lo, double hi) {
    const double v = uniform(rng, lo, hi);
    return uniform_int(rng, 0, 1) ? v : -v;
}

inline std::array<int, 3> random_permutation(Rng& rng) {
    std::array<int, 3> axes{1, 2, 3};
    std::shuffle(axes.begin(), axes.end(), rng);
    return axes;
}

inline Tensor2 random_antisymmetric(Rng& rng, double scale) {
    Tensor2 m = Tensor2::Zero();
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            m(i, j) = uniform(rng, -scale, scale);
            m(j, i) = -m(i, j);
        }
    return m;
}

inline Tensor3 random_tensor3(Rng& rng, double scale, bool antisymmetric) {
    Tensor3 t;
    for (auto& slice : t) {
        if (antisymmetric) {
            slice = random_antisymmetric(rng, scale);
        } else {
            for (int i = 0; i < 9; ++i) slice.data()[i] = uniform(rng, -scale, scale);
        }
    }
    return t;
}

inline const std::vector<AlgebraKind>& all_kinds() {
    static const std::vector<AlgebraKind> kinds{AlgebraKind::Canonical,   AlgebraKind::SpaceTime,
                                                AlgebraKind::SpaceSpace,  AlgebraKind::Generalized,
                                                AlgebraKind::MiaoTypeI,   AlgebraKind::MiaoTypeII};
    return kinds;
}

// Kinds whose tables satisfy the Jacobi identity for every parameter choice.
inline const std::vector<AlgebraKind>& jacobi_kinds() {
    static const std::vector<AlgebraKind> kinds{AlgebraKind::Canonical, AlgebraKind::SpaceTime,
                                                AlgebraKind::SpaceSpace, AlgebraKind::MiaoTypeI,
                                                AlgebraKind::MiaoTypeII};
    return kinds;
}

inline const std::vector<AlgebraKind>& deformed_kinds() {
    static const std::vector<AlgebraKind> kinds{AlgebraKind::SpaceTime, AlgebraKind::SpaceSpace,
                                                AlgebraKind::Generalized, AlgebraKind::MiaoTypeI,
                                                AlgebraKind::MiaoTypeII};
    return kinds;
}

// Parameters such as kappa drawn with |kappa| in [0.5, 4]; the axis choice
// is passed in so that all particles of a system share it.
inline AlgebraSpec random_spec(AlgebraKind kind, Rng& rng, const std::array<int, 3>& axes) {
    switch (kind) {
        case AlgebraKind::Canonical: return Canonical{};
        case AlgebraKind::SpaceTime: return SpaceTime{uniform(rng, 0.5, 4.0), axes[0], axes[1]};
        case AlgebraKind::SpaceSpace: return SpaceSpace{signed_magnitude(rng, 0.5, 4.0), axes[0], axes[1], axes[2]};
        case AlgebraKind::Generalized: {
            Generalized g;
            g.theta0 = random_antisymmetric(rng, 1.0);
            g.theta = random_tensor3(rng, 1.0, true);
            g.theta_bar = random_tensor3(rng, 1.0, false);
            g.theta_tilde = random_tensor3(rng, 1.0, false);
            return g;
        }
        case AlgebraKind::MiaoTypeI:
            return MiaoTypeI{signed_magnitude(rng, 0.5, 4.0), signed_magnitude(rng, 0.5, 4.0), axes[0], axes[1],
                             axes[2]};
        case AlgebraKind::MiaoTypeII:
            return MiaoTypeII{signed_magnitude(rng, 0.5, 4.0), signed_magnitude(rng, 0.5, 4.0),
                              signed_magnitude(rng, 0.5, 4.0), axes[0], axes[1], axes[2]};
    }
    return Canonical{};
}

inline AlgebraSpec random_spec(AlgebraKind kind, Rng& rng) { return random_spec(kind, rng, random_permutation(rng)); }

inline PhaseState random_state(std::size_t n, Rng& rng, double bound = 10.0) {
    PhaseState s(n, uniform(rng, -bound, bound));
    for (std::size_t a = 0; a < n; ++a)
        for (int i = 0; i < 3; ++i) {
            s.x[a](i) = uniform(rng, -bound, bound);
            s.p[a](i) = uniform(rng, -bound, bound);
        }
    return s;
}

inline std::vector<AlgebraSpec> random_specs(AlgebraKind kind, std::size_t n, Rng& rng) {
    const auto axes = random_permutation(rng);
    std::vector<AlgebraSpec> specs;
    for (std::size_t a = 0; a < n; ++a) specs.push_back(random_spec(kind, rng, axes));
    return specs;
}

// Independent per-particle parameters (scaling generically violated).
inline ParticleSystem random_system(AlgebraKind kind, std::size_t n, Rng& rng) {
    const auto axes = random_permutation(rng);
    std::vector<Particle> parts;
    for (std::size_t a = 0; a < n; ++a) parts.push_back(Particle{uniform(rng, 0.5, 5.0), random_spec(kind, rng, axes)});
    return ParticleSystem(std::move(parts));
}

// Parameters obeying the mass-scaling condition exactly up to rounding.
inline ParticleSystem random_scaled_system(AlgebraKind kind, std::size_t n, Rng& rng) {
    const MassScalingRule rule = scaling_rule_of(random_spec(kind, rng), 1.0);
    std::vector<Particle> parts;
    for (std::size_t a = 0; a < n; ++a) {
        const double m = uniform(rng, 0.5, 5.0);
        parts.push_back(Particle{m, rule.spec_for_mass(m)});
    }
    return ParticleSystem(std::move(parts));
}

}  // namespace ncmech::testing
