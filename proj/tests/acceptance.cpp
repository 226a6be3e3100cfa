// Acceptance suite: one PASS/FAIL line per criterion.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ncmech/algebra.hpp"
#include "ncmech/composition.hpp"
#include "ncmech/dynamics.hpp"
#include "random_systems.hpp"

using namespace ncmech;
using namespace ncmech::testing;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

GravityScenario point(double m, AlgebraSpec spec, Potential v, Vec3 x0, Vec3 p0, TimeGrid grid) {
    PhaseState s(1, grid.t0);
    s.x[0] = x0;
    s.p[0] = p0;
    return GravityScenario{ParticleSystem({Particle{m, std::move(spec)}}), std::move(v), s, grid};
}

Outcome jacobi_suite() {
    Rng rng(101);
    double worst = 0.0;
    for (auto kind : jacobi_kinds())
        for (int draw = 0; draw < 100; ++draw) {
            const std::size_t n = 1 + static_cast<std::size_t>(draw % 3);
            const auto specs = random_specs(kind, n, rng);
            worst = std::max(worst, jacobi_residual(specs, random_state(n, rng, 10.0)));
        }
    // theta^1_23 = 1 (antisymmetric) with theta_bar^2_13 = 1 and nothing else
    Generalized g;
    g.theta[0](1, 2) = 1.0;
    g.theta[0](2, 1) = -1.0;
    g.theta_bar[1](0, 2) = 1.0;
    PhaseState s(1);
    s.x[0] = s.p[0] = Vec3(1, 1, 1);
    const std::vector<AlgebraSpec> teeth{g};
    const double violation = jacobi_residual(teeth, s);
    return {worst <= 1e-10 && violation > 1e-2,
            fmt("max residual %.3g over 500 states, unconstrained generalized %.3g", worst, violation)};
}

Outcome com_oracle() {
    Rng rng(202);
    double worst = 0.0;
    int systems = 0;
    for (auto kind : deformed_kinds())
        for (int draw = 0; draw < 200; ++draw, ++systems) {
            const std::size_t n = 1 + static_cast<std::size_t>(draw % 5);
            const ParticleSystem sys = random_system(kind, n, rng);
            worst = std::max(worst, com_bracket_report(sys, random_state(n, rng, 5.0)).max_abs_diff);
        }
    return {worst <= 1e-12, fmt("max |chain rule - closed form| %.3g over %g systems", worst, systems)};
}

Outcome effective_laws() {
    Rng rng(303);
    double law = 0.0, identical = 0.0, scaled = 0.0, tensors = 0.0;
    for (int draw = 0; draw < 200; ++draw) {
        const std::size_t n = 1 + static_cast<std::size_t>(draw % 6);
        const ParticleSystem sys = random_system(AlgebraKind::SpaceTime, n, rng);
        double inv = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            const double mu = sys[a].mass / sys.total_mass();
            inv += mu * mu / std::get<SpaceTime>(sys[a].spec).kappa;
        }
        const double kappa_eff = std::get<SpaceTime>(effective_parameters(sys).spec).kappa;
        law = std::max(law, std::abs(1.0 / kappa_eff - inv) / inv);

        const double kappa = uniform(rng, 0.5, 4.0), m = uniform(rng, 0.5, 5.0);
        std::vector<Particle> same(n, Particle{m, SpaceTime{kappa, 1, 2}});
        const double k_same = std::get<SpaceTime>(effective_parameters(ParticleSystem(same)).spec).kappa;
        identical = std::max(identical, std::abs(k_same - static_cast<double>(n) * kappa) / (static_cast<double>(n) * kappa));

        const ParticleSystem sc = random_scaled_system(AlgebraKind::SpaceTime, n, rng);
        const double gamma = std::get<SpaceTime>(sc[0].spec).kappa / sc[0].mass;
        const double k_sc = std::get<SpaceTime>(effective_parameters(sc).spec).kappa;
        scaled = std::max(scaled, std::abs(k_sc - gamma * sc.total_mass()) / (gamma * sc.total_mass()));

        const MassScalingRule rule = scaling_rule_of(random_spec(AlgebraKind::Generalized, rng), 1.0);
        std::vector<Particle> parts;
        double M = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            const double ma = uniform(rng, 0.5, 5.0);
            M += ma;
            parts.push_back({ma, rule.spec_for_mass(ma)});
        }
        const Generalized eff = std::get<Generalized>(effective_parameters(ParticleSystem(parts)).spec);
        tensors = std::max(tensors, (eff.theta0 - rule.gamma0 / M).cwiseAbs().maxCoeff());
        for (int k = 0; k < 3; ++k) {
            tensors = std::max(tensors, (eff.theta[k] - rule.gamma[k] / M).cwiseAbs().maxCoeff());
            tensors = std::max(tensors, (eff.theta_tilde[k] - rule.gamma_tilde[k] / M).cwiseAbs().maxCoeff());
            tensors = std::max(tensors, (eff.theta_bar[k] - rule.theta_bar[k]).cwiseAbs().maxCoeff());
        }
    }
    const double worst = std::max({law, identical, scaled, tensors});
    return {worst <= 1e-14, fmt("relative errors: sum law %.3g, N kappa %.3g, gamma M %.3g", law, identical, scaled) +
                                fmt(", gamma/M tensors %.3g", tensors)};
}

Outcome closure() {
    Rng rng(404);
    double worst = 0.0;
    bool all_close = true;
    for (auto kind : all_kinds())
        for (int draw = 0; draw < 50; ++draw) {
            const std::size_t n = 1 + static_cast<std::size_t>(draw % 5);
            const ReproductionResult r = reproduction_check(random_scaled_system(kind, n, rng), random_state(n, rng, 5.0));
            all_close = all_close && r.closes;
            worst = std::max(worst, r.max_abs_diff);
        }
    int open = 0, total = 0;
    for (int draw = 0; draw < 100; ++draw, ++total) {
        const std::size_t n = 2 + static_cast<std::size_t>(draw % 4);
        if (!reproduction_check(random_system(AlgebraKind::SpaceSpace, n, rng), random_state(n, rng, 5.0)).closes) ++open;
    }
    return {all_close && worst <= 1e-12 && open == total,
            fmt("scaled max diff %.3g, unscaled space-space open in %g of %g", worst, open, total)};
}

Outcome decoupling() {
    Rng rng(505);
    const Potential field = UniformField{Vec3(0.4, -1.0, 0.3)};
    double worst = 0.0;
    for (int draw = 0; draw < 200; ++draw) {
        const std::size_t n = 2 + static_cast<std::size_t>(draw % 4);
        worst = std::max(worst, decoupling_check(random_scaled_system(AlgebraKind::SpaceTime, n, rng),
                                                 random_state(n, rng, 3.0), field));
    }
    const ParticleSystem counter({{1.0, SpaceTime{1.0, 1, 2}}, {2.0, SpaceTime{1.0, 1, 2}}});
    PhaseState s(2, 1.0);
    s.x[0] = Vec3(1, 0, 0);
    s.x[1] = Vec3(0, 1, 0);
    s.p[0] = Vec3(0.5, 0, 0);
    const double coupled = decoupling_check(counter, s, field);
    return {worst <= 1e-12 && coupled > 1e-6, fmt("scaled max %.3g, kappa=(1,1) m=(1,2) gives %.3g", worst, coupled)};
}

Outcome eom_oracle() {
    Rng rng(606);
    double worst = 0.0;
    for (auto kind : all_kinds())
        for (int draw = 0; draw < 500; ++draw) {
            const AlgebraSpec spec = random_spec(kind, rng);
            const double m = uniform(rng, 0.5, 5.0);
            const PhaseState s = random_state(1, rng, 1.0);
            Potential v;
            switch (draw % 3) {
                case 0: v = UniformField{Vec3(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2))}; break;
                case 1: v = NewtonianField{uniform(rng, 0.5, 2.0), Vec3(0, 0, 10)}; break;
                default: {
                    PolynomialField f;
                    f.coefficients[{2, 0, 0}] = uniform(rng, -1, 1);
                    f.coefficients[{0, 1, 2}] = uniform(rng, -1, 1);
                    f.coefficients[{1, 1, 1}] = uniform(rng, -1, 1);
                    v = f;
                }
            }
            const auto sc = point(m, spec, v, s.x[0], s.p[0], TimeGrid{s.t, s.t + 1, 1e-3});
            worst = std::max(worst, (eom_rhs(sc, sc.initial) - closed_form_rhs(spec, m, v, s.x[0], s.p[0], s.t))
                                        .cwiseAbs()
                                        .maxCoeff());
        }
    return {worst <= 1e-12, fmt("max |J grad H - closed form| %.3g over 3000 states", worst)};
}

Outcome wep_recovery() {
    Rng rng(707);
    const TimeGrid grid{0, 1, 1e-3};
    double worst = 0.0;
    for (auto kind : all_kinds())
        for (const Potential& v : {Potential{UniformField{Vec3(0.2, -1.0, 0.1)}}, Potential{NewtonianField{1.0, Vec3(0, 0, -5)}}}) {
            const auto templ = point(1.0, random_spec(kind, rng), v, Vec3(0.3, -0.2, 0.1), Vec3(0.2, 0.1, -0.1), grid);
            worst = std::max(worst, wep_deviation(templ, {1, 2, 5, 10}, ScalingMode::MassScaled).max_position());
        }
    return {worst <= 1e-8, fmt("max position deviation %.3g (6 variants, 2 fields)", worst)};
}

Outcome wep_violation() {
    const auto templ =
        point(1.0, SpaceTime{1.0, 1, 2}, UniformField{Vec3(0, 1, 0)}, Vec3::Zero(), Vec3::Zero(), TimeGrid{0, 1, 1e-3});
    const WepResult r = wep_deviation(templ, {1, 2}, ScalingMode::Fixed);
    const double dx1 = r.pairs.front().final_position(0);
    return {std::abs(dx1 - 0.5) <= 1e-8, fmt("X1 deviation at t=1 is %.17g (expected 0.5)", dx1)};
}

Outcome composition_independence() {
    const auto templ = point(1.0, SpaceTime{1.0, 1, 2}, UniformField{Vec3(0, 1, 0)}, Vec3(0, 0.5, 0), Vec3(0.2, 0, 0),
                             TimeGrid{0, 1, 1e-3});
    const double same = body_deviation(templ, {{1, 3}, {2, 2}}, ScalingMode::MassScaled).max_position();
    const double differ = body_deviation(templ, {{1, 3}, {2, 2}}, ScalingMode::Fixed).max_position();
    return {same <= 1e-10 && differ > 1e-3, fmt("scaled %.3g, unscaled %.3g", same, differ)};
}

Outcome integrator_order() {
    // unit oscillator: X(t) = X0 cos t + P0 sin t
    PolynomialField osc;
    osc.coefficients[{2, 0, 0}] = 0.5;
    osc.coefficients[{0, 2, 0}] = 0.5;
    osc.coefficients[{0, 0, 2}] = 0.5;
    const Vec3 x0(1, 0, 0.5), p0(0, 1, 0);
    auto error = [&](double dt) {
        const auto sc = point(1.0, Canonical{}, osc, x0, p0, TimeGrid{0, 10, dt});
        const PhaseState end = integrate(sc).states.back();
        const Vec3 xe = x0 * std::cos(10.0) + p0 * std::sin(10.0);
        const Vec3 pe = -x0 * std::sin(10.0) + p0 * std::cos(10.0);
        return std::sqrt((end.x[0] - xe).squaredNorm() + (end.p[0] - pe).squaredNorm());
    };
    const double e1 = error(0.1), e2 = error(0.05);
    const double ratio = e1 / e2;
    return {ratio >= 12.0 && ratio <= 20.0, fmt("error ratio %.4f (%.3g -> %.3g)", ratio, e1, e2)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"Jacobi suite", jacobi_suite},
        {"COM bracket oracle", com_oracle},
        {"effective-parameter laws", effective_laws},
        {"closure under scaling", closure},
        {"COM decoupling", decoupling},
        {"EOM oracle", eom_oracle},
        {"WEP recovery", wep_recovery},
        {"WEP violation magnitude", wep_violation},
        {"composition independence", composition_independence},
        {"integrator order", integrator_order},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o{false, ""};
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    }
    std::fflush(stdout);
    return failed == 0 ? 0 : 1;
}
