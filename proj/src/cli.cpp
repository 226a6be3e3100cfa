#include "ncmech/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "ncmech/errors.hpp"

namespace ncmech {

using nlohmann::json;

namespace {

// generated from scenarios/*.scn
#include "builtin_scenarios.inc"

json vec_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

json state_json(const PhaseState& s) {
    json x = json::array(), p = json::array();
    for (std::size_t a = 0; a < s.particles(); ++a) {
        x.push_back(vec_json(s.x[a]));
        p.push_back(vec_json(s.p[a]));
    }
    return json{{"t", s.t}, {"x", x}, {"p", p}};
}

class Checks {
public:
    void at_most(const std::string& name, double computed, double tolerance) {
        add(name, computed, 0.0, tolerance, "<=", std::abs(computed) <= tolerance);
    }
    void above(const std::string& name, double computed, double threshold) {
        add(name, computed, threshold, threshold, ">", computed > threshold);
    }
    void near(const std::string& name, double computed, double reference, double tolerance) {
        add(name, computed, reference, tolerance, "|computed - reference| <=",
            std::abs(computed - reference) <= tolerance);
    }
    void within(const std::string& name, double computed, double lo, double hi) {
        json c{{"name", name}, {"computed", computed}, {"reference", json::array({lo, hi})}, {"comparison", "in"},
               {"pass", computed >= lo && computed <= hi}};
        push(c);
    }
    void equals(const std::string& name, bool computed, bool reference) {
        json c{{"name", name}, {"computed", computed}, {"reference", reference}, {"comparison", "=="},
               {"pass", computed == reference}};
        push(c);
    }

    bool passed() const { return passed_; }
    const json& items() const { return items_; }

private:
    void add(const std::string& name, double computed, double reference, double tolerance, const char* cmp, bool ok) {
        push(json{{"name", name}, {"computed", computed}, {"reference", reference}, {"tolerance", tolerance},
                  {"comparison", cmp}, {"pass", ok && std::isfinite(computed)}});
    }
    void push(const json& c) {
        passed_ = passed_ && c["pass"].get<bool>();
        items_.push_back(c);
    }

    json items_ = json::array();
    bool passed_ = true;
};

struct TaskResult {
    json summary = json::object();
    std::map<std::string, std::string> artifacts;
};

std::vector<PhaseState> sample_states(const ScenarioFile& s) {
    std::vector<PhaseState> states{s.initial_state()};
    std::mt19937_64 rng(s.options.seed);
    std::uniform_real_distribution<double> u(-s.options.state_bound, s.options.state_bound);
    const std::size_t n = s.particles.size();
    for (int k = 0; k < s.options.samples; ++k) {
        PhaseState st(n, u(rng));
        for (std::size_t a = 0; a < n; ++a)
            for (int i = 0; i < 3; ++i) {
                st.x[a](i) = u(rng);
                st.p[a](i) = u(rng);
            }
        states.push_back(std::move(st));
    }
    return states;
}

double tolerance_or(const ScenarioFile& s, const RunFlags& f, double fallback) {
    if (f.tolerance) return *f.tolerance;
    return s.options.tolerance.value_or(fallback);
}

TaskResult check_algebra(const ScenarioFile& s, const RunFlags& flags, Checks& checks) {
    const ParticleSystem sys = s.system();
    const double tol = tolerance_or(s, flags, 1e-10);
    double antisym = 0.0, jacobi = 0.0, jacobi_min = INFINITY;
    std::size_t worst = 0;
    const auto states = sample_states(s);
    for (std::size_t k = 0; k < states.size(); ++k) {
        const StructureMatrix J = structure_matrix(sys.specs(), states[k]);
        antisym = std::max(antisym, (J + J.transpose()).cwiseAbs().maxCoeff());
        const double r = jacobi_residual(sys.specs(), states[k]);
        if (r > jacobi) {
            jacobi = r;
            worst = k;
        }
        jacobi_min = std::min(jacobi_min, r);
    }
    checks.at_most("antisymmetry", antisym, 0.0);
    if (s.options.expect_jacobi) {
        checks.at_most("jacobi_residual", jacobi, tol);
    } else {
        // every sampled state must expose the violation
        checks.above("jacobi_violation", jacobi_min, tol);
    }
    TaskResult r;
    r.summary = {{"algebra", std::string(kind_name(sys.kind()))},
                 {"states", states.size()},
                 {"max_antisymmetry_error", antisym},
                 {"max_jacobi_residual", jacobi},
                 {"min_jacobi_residual", jacobi_min},
                 {"worst_state", state_json(states[worst])}};
    return r;
}

double max_component_diff(const AlgebraSpec& a, const AlgebraSpec& b) {
    const Generalized ga = as_generalized(a), gb = as_generalized(b);
    double d = (ga.theta0 - gb.theta0).cwiseAbs().maxCoeff();
    for (int k = 0; k < 3; ++k) {
        d = std::max(d, (ga.theta[k] - gb.theta[k]).cwiseAbs().maxCoeff());
        d = std::max(d, (ga.theta_bar[k] - gb.theta_bar[k]).cwiseAbs().maxCoeff());
        d = std::max(d, (ga.theta_tilde[k] - gb.theta_tilde[k]).cwiseAbs().maxCoeff());
    }
    return d;
}

TaskResult com_brackets(const ScenarioFile& s, const RunFlags& flags, Checks& checks) {
    const ParticleSystem sys = s.system();
    const double tol = tolerance_or(s, flags, 1e-12);
    const auto states = sample_states(s);
    const PhaseState& state = states.front();

    const ComBracketReport report = com_bracket_report(sys, state);
    double worst = report.max_abs_diff;
    for (std::size_t k = 1; k < states.size(); ++k) worst = std::max(worst, com_bracket_report(sys, states[k]).max_abs_diff);
    checks.at_most("bracket_oracle", worst, tol);

    TaskResult r;
    json brackets{{"state", state_json(state)},
                  {"computed", report.computed},
                  {"closed_form", report.closed_form},
                  {"max_abs_diff", report.max_abs_diff}};
    r.artifacts["com_brackets.json"] = brackets.dump(2) + "\n";

    const ScalingVerdict verdict = satisfies_mass_scaling(sys, 1e-12);
    if (s.options.expect_scaling) checks.equals("mass_scaling", verdict.holds, *s.options.expect_scaling);
    const ReproductionResult closure = reproduction_check(sys, state);
    if (s.options.expect_closes) checks.equals("closure", closure.closes, *s.options.expect_closes);

    json effective = nullptr;
    std::string effective_error;
    try {
        const EffectiveParameters eff = effective_parameters(sys);
        effective = {{"spec", to_json(eff.spec)}, {"composition_dependent", eff.composition_dependent}};
        if (s.options.expected_effective)
            checks.at_most("effective_parameters", max_component_diff(eff.spec, *s.options.expected_effective), tol);
    } catch (const ScalingRequired& e) {
        effective_error = e.what();
        if (s.options.expected_effective)
            checks.equals("effective_parameters_exist", false, true);
    }

    const RelativeCoupling coupling = com_relative_coupling(sys, state);
    r.summary = {{"algebra", std::string(kind_name(sys.kind()))},
                 {"particles", sys.size()},
                 {"states", states.size()},
                 {"max_abs_diff", worst},
                 {"mass_scaling", {{"holds", verdict.holds}, {"worst_relative_deviation", verdict.worst_relative_deviation}}},
                 {"closure", {{"closes", closure.closes}, {"max_abs_diff", closure.max_abs_diff}}},
                 {"effective_parameters", effective},
                 {"com_relative_coupling", coupling.max_abs}};
    if (!effective_error.empty()) r.summary["effective_parameters_error"] = effective_error;

    if (s.potential && s.options.expect_decoupled) {
        const double d = decoupling_check(sys, state, *s.potential);
        r.summary["decoupling"] = d;
        if (*s.options.expect_decoupled)
            checks.at_most("decoupling", d, tol);
        else
            checks.above("decoupling_violation", d, 1e-6);
    }
    return r;
}

bool explicit_time_dependence(const ParticleSystem& sys) {
    for (const auto& p : sys.particles())
        if (!as_generalized(p.spec).theta0.isZero(0.0)) return true;
    return false;
}

TaskResult simulate(const ScenarioFile& s, const RunFlags& flags, Checks& checks) {
    GravityScenario g = s.gravity();
    if (flags.dt) g.grid.dt = *flags.dt;
    g.validate();
    const double tol = tolerance_or(s, flags, 1e-12);
    const Trajectory traj = integrate(g);

    TaskResult r;
    std::ostringstream csv;
    write_csv(csv, traj, s.options.reduced_momenta);
    r.artifacts["trajectory.csv"] = csv.str();

    const ParticleSystem tracked = g.body_mode ? ParticleSystem({body_particle(g)}) : g.system;

    // hand-written equations against J grad H along the whole trajectory
    double eom_err = 0.0;
    for (const auto& st : traj.states) {
        GravityScenario at = g;
        at.system = tracked;
        const Eigen::VectorXd rhs = eom_rhs(at, st);
        for (std::size_t a = 0; a < tracked.size(); ++a) {
            const Eigen::Matrix<double, 6, 1> ref = closed_form_rhs(tracked[a].spec, tracked[a].mass, g.potential, st.x[a], st.p[a], st.t);
            const Eigen::Matrix<double, 6, 1> diff = rhs.segment<6>(x_index(a, 0)) - ref;
            eom_err = std::max(eom_err, diff.cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff()));
        }
    }
    checks.at_most("eom_closed_form", eom_err, tol);

    const double h0 = hamiltonian(tracked, g.potential, traj.states.front());
    double drift = 0.0;
    for (const auto& st : traj.states) drift = std::max(drift, std::abs(hamiltonian(tracked, g.potential, st) - h0));
    const bool time_dependent = explicit_time_dependence(tracked);
    if (time_dependent)
        checks.at_most("energy_finite", std::isfinite(drift) ? 0.0 : INFINITY, 0.0);
    else
        checks.at_most("energy_drift", drift, s.options.energy_tolerance.value_or(1e-8));

    r.summary = {{"algebra", std::string(kind_name(tracked.kind()))},
                 {"body_mode", g.body_mode},
                 {"samples", traj.size()},
                 {"dt", traj.dt},
                 {"integrator", traj.integrator},
                 {"scenario_hash", traj.scenario_hash},
                 {"initial_energy", h0},
                 {"max_energy_drift", drift},
                 {"explicit_time_dependence", time_dependent},
                 {"final_state", state_json(traj.states.back())},
                 {"max_eom_relative_error", eom_err}};
    if (s.options.order_check) {
        const double ratio = richardson_order_ratio(g);
        r.summary["order_ratio"] = ratio;
        checks.within("order_ratio", ratio, 12.0, 20.0);
    }
    return r;
}

json pairs_json(const WepResult& res, const std::vector<std::string>& labels) {
    json out = json::array();
    for (const auto& p : res.pairs)
        out.push_back({{"first", labels[p.first]},
                       {"second", labels[p.second]},
                       {"max_position", p.max_position},
                       {"max_reduced_momentum", p.max_reduced_momentum},
                       {"final_position", vec_json(p.final_position)}});
    return out;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

TaskResult wep_test(const ScenarioFile& s, const RunFlags& flags, Checks& checks) {
    GravityScenario g = s.gravity();
    if (flags.dt) g.grid.dt = *flags.dt;
    g.validate();
    const double tol = tolerance_or(s, flags, 1e-8);

    std::vector<std::string> labels;
    auto run = [&](ScalingMode mode) {
        return g.body_mode ? body_deviation(g, s.options.bodies, mode) : wep_deviation(g, s.options.masses, mode);
    };
    if (g.body_mode) {
        for (const auto& b : s.options.bodies) {
            std::string l;
            for (double m : b) l += (l.empty() ? "" : "+") + fmt17(m);
            labels.push_back(l);
        }
    } else {
        for (double m : s.options.masses) labels.push_back(fmt17(m));
    }

    const WepResult scaled = run(ScalingMode::MassScaled);
    const WepResult fixed = run(ScalingMode::Fixed);
    checks.at_most("mass_scaled.max_position", scaled.max_position(), tol);
    checks.at_most("mass_scaled.max_reduced_momentum", scaled.max_reduced_momentum(), tol);
    if (s.options.expected_fixed_final_deviation) {
        const double d = (fixed.pairs.front().final_position - *s.options.expected_fixed_final_deviation).cwiseAbs().maxCoeff();
        checks.at_most("fixed.final_deviation_error", d, tol);
    }
    if (s.options.min_fixed_deviation) checks.above("fixed.max_position", fixed.max_position(), *s.options.min_fixed_deviation);

    TaskResult r;
    std::ostringstream table;
    table << "mode,first,second,max_position,max_reduced_momentum,final_dX_1,final_dX_2,final_dX_3\n";
    for (const auto* res : {&scaled, &fixed})
        for (const auto& p : res->pairs) {
            table << (res == &scaled ? "mass_scaled" : "fixed") << ',' << labels[p.first] << ',' << labels[p.second]
                  << ',' << fmt17(p.max_position) << ',' << fmt17(p.max_reduced_momentum);
            for (int i = 0; i < 3; ++i) table << ',' << fmt17(p.final_position(i));
            table << '\n';
        }
    r.artifacts["wep_deviation.csv"] = table.str();
    r.summary = {{"algebra", std::string(kind_name(g.system.kind()))},
                 {"body_mode", g.body_mode},
                 {"samples", g.grid.samples()},
                 {"mass_scaled", {{"pairs", pairs_json(scaled, labels)}, {"max_position", scaled.max_position()}}},
                 {"fixed", {{"pairs", pairs_json(fixed, labels)}, {"max_position", fixed.max_position()}}}};
    return r;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("scenario", "cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScenarioFile load(const std::string& ref) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::is_regular_file(ref, ec)) return parse_scenario_text(slurp(ref));
    std::string name = ref;
    if (name.size() > 4 && name.ends_with(".scn")) name.resize(name.size() - 4);
    if (const BuiltinScenario* b = find_builtin(name)) return parse_scenario_text(b->text);
    throw ValidationError("scenario", "cannot read '" + ref + "' and no bundled scenario has that name");
}

void write_artifacts(const std::string& dir, const std::map<std::string, std::string>& files) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& [name, text] : files) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    }
}

}  // namespace

RunOutcome run_scenario(const ScenarioFile& scenario, const RunFlags& flags) {
    if (flags.dt && !(*flags.dt > 0.0 && std::isfinite(*flags.dt))) throw ValidationError("--dt", "must be positive");
    if (flags.tolerance && !(*flags.tolerance >= 0.0)) throw ValidationError("--tol", "must be non-negative");
    const auto start = std::chrono::steady_clock::now();
    Checks checks;
    TaskResult r;
    switch (scenario.task) {
        case Task::CheckAlgebra: r = check_algebra(scenario, flags, checks); break;
        case Task::ComBrackets: r = com_brackets(scenario, flags, checks); break;
        case Task::Simulate: r = simulate(scenario, flags, checks); break;
        case Task::WepTest: r = wep_test(scenario, flags, checks); break;
    }
    RunOutcome out;
    out.passed = checks.passed();
    json flags_json = json::object();
    if (flags.dt) flags_json["dt"] = *flags.dt;
    if (flags.tolerance) flags_json["tol"] = *flags.tolerance;
    out.report = {{"schema_version", kSchemaVersion},
                  {"scenario", to_json(scenario)},
                  {"task", std::string(task_name(scenario.task))},
                  {"flags", flags_json},
                  {"checks", checks.items()},
                  {"summary", r.summary},
                  {"status", out.passed ? "pass" : "fail"}};
    if (flags.timing)
        out.report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.artifacts = std::move(r.artifacts);
    out.artifacts["report.json"] = out.report.dump(2) + "\n";
    return out;
}

const std::vector<BuiltinScenario>& builtin_scenarios() {
    static const std::vector<BuiltinScenario> catalog = [] {
        std::vector<BuiltinScenario> v;
        for (const char* text : kBuiltinScenarioTexts) {
            const ScenarioFile s = parse_scenario_text(text);
            v.push_back(BuiltinScenario{s.name, s.criterion, s.description, text});
        }
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
            return std::tie(a.criterion, a.name) < std::tie(b.criterion, b.name);
        });
        return v;
    }();
    return catalog;
}

const BuiltinScenario* find_builtin(const std::string& name) {
    for (const auto& b : builtin_scenarios())
        if (b.name == name) return &b;
    return nullptr;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Classical mechanics on Lie-algebraic noncommutative phase spaces", "ncmech"};
    app.require_subcommand(1);

    std::string scenario_ref, out_dir = "ncmech_out";
    double dt = 0.0, tol = 0.0;
    bool timing = false;
    auto* run = app.add_subcommand("run", "Run a scenario file or a bundled scenario by name");
    run->add_option("scenario", scenario_ref, "Scenario file (.scn) or bundled scenario name")->required();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    auto* dt_opt = run->add_option("--dt", dt, "Override the time step");
    auto* tol_opt = run->add_option("--tol", tol, "Override the task tolerance");
    run->add_flag("--timing", timing, "Record wall time in the report");
    auto* list = app.add_subcommand("list-builtin", "List bundled scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInvalid;
    }

    if (list->parsed()) {
        for (const auto& b : builtin_scenarios())
            out << b.name << "  [criterion " << b.criterion << "]  " << b.description << '\n';
        return kExitPass;
    }

    RunFlags flags;
    if (dt_opt->count()) flags.dt = dt;
    if (tol_opt->count()) flags.tolerance = tol;
    flags.timing = timing;
    try {
        const ScenarioFile scenario = load(scenario_ref);
        const RunOutcome outcome = run_scenario(scenario, flags);
        write_artifacts(out_dir, outcome.artifacts);
        for (const auto& c : outcome.report["checks"])
            out << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << " = "
                << c["computed"].dump() << '\n';
        out << scenario.name << ": " << outcome.report["status"].get<std::string>() << " (" << out_dir
            << "/report.json)\n";
        return outcome.passed ? kExitPass : kExitCheckFailed;
    } catch (const ValidationError& e) {
        err << "error: invalid scenario: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const ScalingRequired& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const NumericalError& e) {
        err << "error: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
}

}  // namespace ncmech
