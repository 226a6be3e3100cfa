#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ncmech/dynamics.hpp"
#include "ncmech/errors.hpp"
#include "random_systems.hpp"

using namespace ncmech;
using ncmech::testing::Rng;

namespace {

GravityScenario single(double m, AlgebraSpec spec, Potential v, Vec3 x0, Vec3 p0, TimeGrid grid) {
    PhaseState s(1, grid.t0);
    s.x[0] = x0;
    s.p[0] = p0;
    return GravityScenario{ParticleSystem({Particle{m, std::move(spec)}}), std::move(v), s, grid};
}

Potential random_potential(Rng& rng, int which) {
    using ncmech::testing::uniform;
    switch (which % 3) {
        case 0: return UniformField{Vec3(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2))};
        case 1: return NewtonianField{uniform(rng, 0.5, 3), Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), 50.0)};
        default: {
            PolynomialField f;
            f.coefficients[{2, 0, 0}] = uniform(rng, -1, 1);
            f.coefficients[{1, 1, 1}] = uniform(rng, -1, 1);
            f.coefficients[{0, 3, 1}] = uniform(rng, -0.1, 0.1);
            f.coefficients[{0, 0, 1}] = uniform(rng, -1, 1);
            return f;
        }
    }
}

}  // namespace

TEST_CASE("potentials") {
    PolynomialField f;
    f.coefficients[{2, 1, 0}] = 3.0;  // 3 x^2 y
    CHECK(potential_value(f, Vec3(2, 5, 7)) == 60.0);
    CHECK(potential_gradient(f, Vec3(2, 5, 7)) == Vec3(60, 12, 0));
    const NewtonianField n{2.0, Vec3(1, 0, 0)};
    CHECK(potential_value(n, Vec3(3, 0, 0)) == -1.0);
    CHECK(potential_gradient(n, Vec3(3, 0, 0))(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(potential_gradient(n, Vec3(1, 0, 0)), NumericalError);
    PolynomialField bad;
    bad.coefficients[{3, 2, 0}] = 1.0;
    CHECK_THROWS_AS(validate(Potential{bad}), ValidationError);
    CHECK_THROWS_AS(validate(Potential{NewtonianField{-1.0, Vec3::Zero()}}), ValidationError);
}

TEST_CASE("equations of motion examples") {
    const TimeGrid grid{0.0, 1.0, 1e-3};
    SUBCASE("canonical uniform field") {
        const auto sc = single(1.0, Canonical{}, UniformField{Vec3(0, -9.8, 0)}, Vec3::Zero(), Vec3(1, 0, 0), grid);
        const Eigen::VectorXd r = eom_rhs(sc, sc.initial);
        CHECK(r.head<3>() == Vec3(1, 0, 0));
        CHECK(r.tail<3>() == Vec3(0, 9.8, 0));
    }
    SUBCASE("space-time mass-dependent velocity") {
        TimeGrid g{1.0, 2.0, 1e-3};
        const auto sc = single(2.0, SpaceTime{1.0, 1, 2}, UniformField{Vec3(0, 1, 0)}, Vec3::Zero(), Vec3::Zero(), g);
        CHECK(eom_rhs(sc, sc.initial)(0) == 2.0);
    }
    SUBCASE("zero generalized tensors are canonical") {
        Rng rng(2);
        for (int draw = 0; draw < 50; ++draw) {
            const PhaseState s = ncmech::testing::random_state(1, rng);
            const Potential v = random_potential(rng, draw);
            TimeGrid g{s.t, s.t + 1, 1e-3};
            const auto a = single(1.5, Generalized{}, v, s.x[0], s.p[0], g);
            const auto b = single(1.5, Canonical{}, v, s.x[0], s.p[0], g);
            REQUIRE(eom_rhs(a, a.initial) == eom_rhs(b, b.initial));
        }
    }
}

TEST_CASE("structure-matrix EOM match the hand-written forms") {
    Rng rng(4);
    for (auto kind : ncmech::testing::all_kinds()) {
        double worst = 0.0;
        for (int draw = 0; draw < 500; ++draw) {
            const AlgebraSpec spec = ncmech::testing::random_spec(kind, rng);
            const double m = ncmech::testing::uniform(rng, 0.5, 5.0);
            const PhaseState s = ncmech::testing::random_state(1, rng, 1.0);
            const Potential v = random_potential(rng, draw);
            const auto sc = single(m, spec, v, s.x[0], s.p[0], TimeGrid{s.t, s.t + 1, 1e-3});
            const Eigen::VectorXd a = eom_rhs(sc, sc.initial);
            const Eigen::VectorXd b = closed_form_rhs(spec, m, v, s.x[0], s.p[0], s.t);
            worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
        }
        CAPTURE(kind_name(kind));
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("integration against exact solutions") {
    SUBCASE("canonical parabola") {
        const Vec3 g(0.3, -9.8, 0.1), x0(1, 2, 3), p0(0.5, 4, -1);
        const double m = 1.0;
        const auto traj = integrate(single(m, Canonical{}, UniformField{g}, x0, p0, TimeGrid{0, 1, 1e-3}));
        REQUIRE(traj.size() == 1001);
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const double t = traj.times[i];
            const Vec3 exact = x0 + p0 / m * t - 0.5 * g * t * t;
            worst = std::max(worst, (traj.states[i].x[0] - exact).cwiseAbs().maxCoeff());
        }
        CHECK(worst <= 1e-10);
    }
    SUBCASE("space-time drift quadratic in time") {
        const double m = 3.0, kappa = 1.5, g = 2.0;
        const auto traj =
            integrate(single(m, SpaceTime{kappa, 1, 2}, UniformField{Vec3(0, g, 0)}, Vec3(0.5, 0, 0), Vec3::Zero(),
                             TimeGrid{0, 1, 1e-3}));
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const double t = traj.times[i];
            worst = std::max(worst, std::abs(traj.states[i].x[0](0) - (0.5 + m * g * t * t / (2 * kappa))));
            REQUIRE(traj.states[i].p[0](0) == 0.0);
        }
        CHECK(worst <= 1e-10);
    }
    SUBCASE("free motion keeps momentum") {
        Rng rng(6);
        PolynomialField zero;
        for (auto kind : ncmech::testing::all_kinds()) {
            AlgebraSpec spec = ncmech::testing::random_spec(kind, rng);
            if (auto* g = std::get_if<Generalized>(&spec))
                for (int k = 0; k < 3; ++k) {
                    g->theta_bar[k].setZero();
                    g->theta_tilde[k].setZero();
                }
            const Vec3 p0(1, -2, 0.5);
            const auto traj = integrate(single(2.0, spec, zero, Vec3(1, 1, 1), p0, TimeGrid{0, 1, 0.01}));
            for (const auto& s : traj.states) REQUIRE(s.p[0] == p0);
        }
    }
}

TEST_CASE("grid and errors") {
    CHECK(TimeGrid{0, 1, 1e-3}.samples() == 1001);
    CHECK(TimeGrid{0, 1, 0.1}.samples() == 11);
    CHECK(TimeGrid{0, 1, 0.3}.samples() == 4);
    CHECK(TimeGrid{2, 3, 0.25}.samples() == 5);

    auto sc = single(1.0, Canonical{}, UniformField{}, Vec3::Zero(), Vec3::Zero(), TimeGrid{0, 1, 0.1});
    sc.initial.t = 0.5;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc.initial.t = 0.0;
    sc.grid.dt = -1;
    CHECK_THROWS_AS(sc.validate(), ValidationError);

    const auto at_centre = single(1.0, Canonical{}, NewtonianField{1.0, Vec3::Zero()}, Vec3(1e-10, 0, 0),
                                  Vec3::Zero(), TimeGrid{0, 1, 0.01});
    CHECK_THROWS_AS(integrate(at_centre), NumericalError);

    // V = -X1^4 escapes to infinity in finite time
    PolynomialField quartic;
    quartic.coefficients[{4, 0, 0}] = -1.0;
    const auto runaway = single(1.0, Canonical{}, quartic, Vec3(1, 0, 0), Vec3(1, 0, 0), TimeGrid{0, 100, 0.01});
    try {
        integrate(runaway);
        FAIL("expected a numerical failure");
    } catch (const NumericalError& e) {
        CHECK(e.step() > 0);
        CHECK(e.step() < 10000);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("determinism and csv") {
    const auto sc = single(2.0, SpaceTime{1.0, 1, 2}, UniformField{Vec3(0, 1, 0)}, Vec3::Zero(), Vec3(0.1, 0, 0),
                           TimeGrid{0, 0.02, 0.01});
    const Trajectory a = integrate(sc), b = integrate(sc);
    std::ostringstream ca, cb;
    write_csv(ca, a, true);
    write_csv(cb, b, true);
    CHECK(ca.str() == cb.str());
    CHECK(a.scenario_hash == scenario_hash(sc));
    CHECK(a.integrator == "rk4");
    std::istringstream in(ca.str());
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "t,X(1)_1,X(1)_2,X(1)_3,P(1)_1,P(1)_2,P(1)_3,Pr(1)_1,Pr(1)_2,Pr(1)_3");
    std::getline(in, row);
    CHECK(row.rfind("0,0,0,0,0.10000000000000001,0,0,0.050000000000000003,0,0", 0) == 0);
    int rows = 1;
    while (std::getline(in, row)) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("weak equivalence principle") {
    const TimeGrid grid{0, 1, 1e-3};
    SUBCASE("mass-scaled space-time recovers it") {
        const auto t = single(1.0, SpaceTime{2.0, 1, 2}, UniformField{Vec3(0, 1, 0)}, Vec3(0, 1, 0), Vec3(0.3, 0, 0), grid);
        const WepResult r = wep_deviation(t, {1, 10}, ScalingMode::MassScaled);
        CHECK(r.max_position() <= 1e-8);
        CHECK(r.max_reduced_momentum() <= 1e-8);
    }
    SUBCASE("fixed space-time violates it by m g t^2 / 2 kappa") {
        const auto t = single(1.0, SpaceTime{1.0, 1, 2}, UniformField{Vec3(0, 1, 0)}, Vec3::Zero(), Vec3::Zero(), grid);
        const WepResult r = wep_deviation(t, {1, 2, 5}, ScalingMode::Fixed);
        REQUIRE(r.pairs.size() == 3);
        CHECK(std::abs(r.pairs[0].final_position(0) - 0.5) <= 1e-10);
        CHECK(std::abs(r.pairs[1].final_position(0) - 2.0) <= 1e-10);
        CHECK(std::abs(r.pairs[2].final_position(0) - 1.5) <= 1e-10);
    }
    SUBCASE("identical masses are identical runs") {
        Rng rng(8);
        for (auto kind : ncmech::testing::all_kinds())
            for (auto mode : {ScalingMode::Fixed, ScalingMode::MassScaled}) {
                const auto t = single(1.0, ncmech::testing::random_spec(kind, rng), UniformField{Vec3(0.1, 1, 0)},
                                      Vec3(0.2, 0.1, 0), Vec3(0.1, 0, 0.2), TimeGrid{0, 0.2, 1e-3});
                const WepResult r = wep_deviation(t, {3.0, 3.0}, mode);
                REQUIRE(r.max_position() == 0.0);
            }
    }
    SUBCASE("every variant under mass scaling") {
        Rng rng(9);
        for (auto kind : ncmech::testing::all_kinds())
            for (int which = 0; which < 2; ++which) {
                const Potential v = which == 0 ? Potential{UniformField{Vec3(0.2, -1.0, 0.1)}}
                                               : Potential{NewtonianField{1.0, Vec3(0, 0, -5)}};
                const auto t = single(1.0, ncmech::testing::random_spec(kind, rng), v, Vec3(0.3, -0.2, 0.1),
                                      Vec3(0.2, 0.1, -0.1), grid);
                CAPTURE(kind_name(kind));
                CHECK(wep_deviation(t, {1, 2, 5, 10}, ScalingMode::MassScaled).max_position() <= 1e-8);
            }
    }
}

TEST_CASE("composite bodies") {
    SUBCASE("body rhs equals the pseudo-particle") {
        const double gamma = 1.7;
        std::vector<Particle> parts{{1.0, SpaceTime{gamma * 1.0, 1, 2}}, {3.0, SpaceTime{gamma * 3.0, 1, 2}}};
        PhaseState init(2, 0.4);
        GravityScenario sc{ParticleSystem(parts), UniformField{Vec3(0.3, 1, 0.2)}, init, TimeGrid{0.4, 1, 1e-3}, true};
        PhaseState com(1, 0.4);
        com.x[0] = Vec3(0.1, 0.2, 0.3);
        com.p[0] = Vec3(1, -1, 2);
        const auto pseudo = single(4.0, SpaceTime{gamma * 4.0, 1, 2}, sc.potential, com.x[0], com.p[0], sc.grid);
        CHECK((body_com_rhs(sc, com) - eom_rhs(pseudo, pseudo.initial)).cwiseAbs().maxCoeff() <= 1e-13);
    }
    SUBCASE("flag required where relative motion does not decouple") {
        std::vector<Particle> parts{{1.0, SpaceSpace{1.0, 1, 2, 3}}, {2.0, SpaceSpace{2.0, 1, 2, 3}}};
        GravityScenario sc{ParticleSystem(parts), UniformField{}, PhaseState(2), TimeGrid{0, 1, 0.1}, true};
        CHECK_THROWS_AS(body_particle(sc), ValidationError);
        sc.neglect_relative_motion = true;
        CHECK(std::get<SpaceSpace>(body_particle(sc).spec).kappa_tilde == doctest::Approx(3.0));
    }
    SUBCASE("composition independence") {
        const auto templ = single(1.0, SpaceTime{1.0, 1, 2}, UniformField{Vec3(0, 1, 0)}, Vec3(0, 0.5, 0),
                                  Vec3(0.2, 0, 0), TimeGrid{0, 1, 1e-3});
        const WepResult scaled = body_deviation(templ, {{1, 3}, {2, 2}}, ScalingMode::MassScaled);
        CHECK(scaled.max_position() <= 1e-10);
        const WepResult fixed = body_deviation(templ, {{1, 3}, {2, 2}}, ScalingMode::Fixed);
        // t M sum mu^2 / kappa with M = 4: 10/16 against 8/16, integrated to t^2/2
        CHECK(std::abs(fixed.pairs[0].final_position(0) + 4.0 * (10.0 - 8.0) / 16.0 / 2.0) <= 1e-10);
        CHECK(fixed.max_position() > 1e-3);
    }
}

TEST_CASE("decoupling of COM and relative motion") {
    Rng rng(11);
    const Potential field = UniformField{Vec3(0.4, -1.0, 0.3)};
    SUBCASE("scaled space-time") {
        for (int draw = 0; draw < 100; ++draw) {
            const std::size_t n = 2 + static_cast<std::size_t>(draw % 4);
            const ParticleSystem sys = ncmech::testing::random_scaled_system(AlgebraKind::SpaceTime, n, rng);
            REQUIRE(decoupling_check(sys, ncmech::testing::random_state(n, rng, 1.0), field) <= 1e-12);
        }
    }
    SUBCASE("unscaled counterexample") {
        const ParticleSystem sys({{1.0, SpaceTime{1.0, 1, 2}}, {2.0, SpaceTime{1.0, 1, 2}}});
        PhaseState s(2, 1.0);
        s.x[0] = Vec3(1, 0, 0);
        s.x[1] = Vec3(0, 1, 0);
        s.p[0] = Vec3(0.5, 0, 0);
        CHECK(decoupling_check(sys, s, field) > 1e-6);
        CHECK(decoupling_check(sys, s, UniformField{}) == 0.0);
    }
}

TEST_CASE("energy and order") {
    SUBCASE("energy drift for time-independent structure") {
        const std::vector<AlgebraSpec> specs{Canonical{}, SpaceSpace{2.0, 1, 2, 3}};
        for (const auto& spec : specs) {
            const auto sc = single(1.5, spec, NewtonianField{1.0, Vec3::Zero()}, Vec3(1, 0, 0.2), Vec3(0, 1.4, 0),
                                   TimeGrid{0, 1, 1e-3});
            const Trajectory traj = integrate(sc);
            const double h0 = hamiltonian(sc.system, sc.potential, traj.states.front());
            double drift = 0.0;
            for (const auto& s : traj.states) drift = std::max(drift, std::abs(hamiltonian(sc.system, sc.potential, s) - h0));
            CAPTURE(kind_name(kind_of(spec)));
            CHECK(drift <= 1e-10);
        }
    }
    SUBCASE("fourth order convergence") {
        PolynomialField osc;
        osc.coefficients[{2, 0, 0}] = 0.5;
        osc.coefficients[{0, 2, 0}] = 0.5;
        osc.coefficients[{0, 0, 2}] = 0.5;
        const auto sc = single(1.0, Canonical{}, osc, Vec3(1, 0, 0.5), Vec3(0, 1, 0), TimeGrid{0, 10, 0.1});
        auto error = [&](double dt) {
            GravityScenario s = sc;
            s.grid.dt = dt;
            const PhaseState end = integrate(s).states.back();
            const double t = 10.0;
            const Vec3 exact = sc.initial.x[0] * std::cos(t) + sc.initial.p[0] * std::sin(t);
            return (end.x[0] - exact).norm();
        };
        const double ratio = error(0.1) / error(0.05);
        CHECK(ratio >= 12.0);
        CHECK(ratio <= 20.0);
        const double rich = richardson_order_ratio(sc);
        CHECK(rich >= 12.0);
        CHECK(rich <= 20.0);
    }
}
