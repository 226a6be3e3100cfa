#include "ncmech/scenario.hpp"

#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "ncmech/errors.hpp"

namespace ncmech {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path.empty() ? "scenario" : path, "must be an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ValidationError(join(path, it.key()), "unknown key");
}

const json& member(const json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(join(path, key), "missing");
    return *it;
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ValidationError(path, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(path, "must be finite");
    return d;
}

long long integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ValidationError(path, "must be an integer");
    return v.get<long long>();
}

bool boolean(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ValidationError(path, "must be true or false");
    return v.get<bool>();
}

std::string string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ValidationError(path, "must be a string");
    return v.get<std::string>();
}

const json& array(const json& v, const std::string& path, std::optional<std::size_t> size = std::nullopt) {
    if (!v.is_array()) throw ValidationError(path, "must be an array");
    if (size && v.size() != *size) throw ValidationError(path, "must have " + std::to_string(*size) + " entries");
    return v;
}

Vec3 vec3(const json& v, const std::string& path) {
    array(v, path, 3);
    return Vec3(number(v[0], at(path, 0)), number(v[1], at(path, 1)), number(v[2], at(path, 2)));
}

Tensor2 tensor2(const json& v, const std::string& path) {
    array(v, path, 3);
    Tensor2 m;
    for (int i = 0; i < 3; ++i) m.row(i) = vec3(v[i], at(path, i)).transpose();
    return m;
}

Tensor3 tensor3(const json& v, const std::string& path) {
    array(v, path, 3);
    Tensor3 t;
    for (int k = 0; k < 3; ++k) t[k] = tensor2(v[k], at(path, k));
    return t;
}

int axis(const json& j, const std::string& path, const char* key) {
    const long long v = integer(member(j, path, key), join(path, key));
    if (v < 1 || v > 3) throw ValidationError(join(path, key), "axis index must be 1, 2 or 3");
    return static_cast<int>(v);
}

double param(const json& j, const std::string& path, const char* key) {
    return number(member(j, path, key), join(path, key));
}

json vec_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

json tensor2_json(const Tensor2& m) {
    json out = json::array();
    for (int i = 0; i < 3; ++i) out.push_back(vec_json(m.row(i).transpose()));
    return out;
}

json tensor3_json(const Tensor3& t) {
    json out = json::array();
    for (const auto& slice : t) out.push_back(tensor2_json(slice));
    return out;
}

Task task_from(const std::string& s, const std::string& path) {
    if (s == "check-algebra") return Task::CheckAlgebra;
    if (s == "com-brackets") return Task::ComBrackets;
    if (s == "simulate") return Task::Simulate;
    if (s == "wep-test") return Task::WepTest;
    throw ValidationError(path, "unknown task '" + s + "'");
}

Potential potential_from_json(const json& j, const std::string& path) {
    require_object(j, path);
    const std::string type = string(member(j, path, "type"), join(path, "type"));
    Potential v;
    if (type == "uniform") {
        allow_keys(j, path, {"type", "g"});
        v = UniformField{vec3(member(j, path, "g"), join(path, "g"))};
    } else if (type == "newtonian") {
        allow_keys(j, path, {"type", "source_strength", "center"});
        NewtonianField n;
        n.source_strength = param(j, path, "source_strength");
        if (j.contains("center")) n.center = vec3(j["center"], join(path, "center"));
        v = n;
    } else if (type == "polynomial") {
        allow_keys(j, path, {"type", "terms"});
        PolynomialField f;
        const std::string tp = join(path, "terms");
        const json& terms = array(member(j, path, "terms"), tp);
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const std::string ip = at(tp, i);
            require_object(terms[i], ip);
            allow_keys(terms[i], ip, {"powers", "coefficient"});
            const json& pw = array(member(terms[i], ip, "powers"), join(ip, "powers"), 3);
            std::array<int, 3> e{};
            for (int k = 0; k < 3; ++k) e[k] = static_cast<int>(integer(pw[k], at(join(ip, "powers"), k)));
            if (f.coefficients.count(e)) throw ValidationError(join(ip, "powers"), "duplicate monomial");
            f.coefficients[e] = param(terms[i], ip, "coefficient");
        }
        v = f;
    } else {
        throw ValidationError(join(path, "type"), "unknown potential '" + type + "'");
    }
    validate(v, path);
    return v;
}

ScenarioOptions options_from_json(const json& j, const std::string& path) {
    require_object(j, path);
    allow_keys(j, path,
               {"tolerance", "samples", "seed", "state_bound", "expect_jacobi", "expect_scaling", "expect_closes",
                "expect_decoupled", "expected_effective", "reduced_momenta", "order_check", "energy_tolerance",
                "masses", "bodies", "expected_fixed_final_deviation", "min_fixed_deviation"});
    ScenarioOptions o;
    auto non_negative = [&](const char* key) {
        const double v = number(j[key], join(path, key));
        if (v < 0.0) throw ValidationError(join(path, key), "must be non-negative");
        return v;
    };
    auto positive_masses = [](const json& arr, const std::string& p) {
        std::vector<double> out;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const double m = number(arr[i], at(p, i));
            if (m <= 0.0) throw ValidationError(at(p, i), "mass must be positive");
            out.push_back(m);
        }
        return out;
    };
    if (j.contains("tolerance")) o.tolerance = non_negative("tolerance");
    if (j.contains("samples")) {
        const long long s = integer(j["samples"], join(path, "samples"));
        if (s < 0 || s > 1000000) throw ValidationError(join(path, "samples"), "must be in [0, 1000000]");
        o.samples = static_cast<int>(s);
    }
    if (j.contains("seed")) {
        const long long s = integer(j["seed"], join(path, "seed"));
        if (s < 0) throw ValidationError(join(path, "seed"), "must be non-negative");
        o.seed = static_cast<std::uint64_t>(s);
    }
    if (j.contains("state_bound")) {
        o.state_bound = number(j["state_bound"], join(path, "state_bound"));
        if (o.state_bound <= 0.0) throw ValidationError(join(path, "state_bound"), "must be positive");
    }
    if (j.contains("expect_jacobi")) o.expect_jacobi = boolean(j["expect_jacobi"], join(path, "expect_jacobi"));
    if (j.contains("expect_scaling")) o.expect_scaling = boolean(j["expect_scaling"], join(path, "expect_scaling"));
    if (j.contains("expect_closes")) o.expect_closes = boolean(j["expect_closes"], join(path, "expect_closes"));
    if (j.contains("expect_decoupled"))
        o.expect_decoupled = boolean(j["expect_decoupled"], join(path, "expect_decoupled"));
    if (j.contains("expected_effective"))
        o.expected_effective = algebra_from_json(j["expected_effective"], join(path, "expected_effective"));
    if (j.contains("reduced_momenta")) o.reduced_momenta = boolean(j["reduced_momenta"], join(path, "reduced_momenta"));
    if (j.contains("order_check")) o.order_check = boolean(j["order_check"], join(path, "order_check"));
    if (j.contains("energy_tolerance")) o.energy_tolerance = non_negative("energy_tolerance");
    if (j.contains("masses")) o.masses = positive_masses(array(j["masses"], join(path, "masses")), join(path, "masses"));
    if (j.contains("bodies")) {
        const std::string bp = join(path, "bodies");
        const json& bodies = array(j["bodies"], bp);
        for (std::size_t i = 0; i < bodies.size(); ++i) {
            o.bodies.push_back(positive_masses(array(bodies[i], at(bp, i)), at(bp, i)));
            if (o.bodies.back().empty()) throw ValidationError(at(bp, i), "body needs at least one constituent");
        }
    }
    if (j.contains("expected_fixed_final_deviation"))
        o.expected_fixed_final_deviation =
            vec3(j["expected_fixed_final_deviation"], join(path, "expected_fixed_final_deviation"));
    if (j.contains("min_fixed_deviation")) o.min_fixed_deviation = non_negative("min_fixed_deviation");
    return o;
}

json options_to_json(const ScenarioOptions& o) {
    const ScenarioOptions d;
    json j = json::object();
    if (o.tolerance) j["tolerance"] = *o.tolerance;
    if (o.samples != d.samples) j["samples"] = o.samples;
    if (o.seed != d.seed) j["seed"] = o.seed;
    if (o.state_bound != d.state_bound) j["state_bound"] = o.state_bound;
    if (o.expect_jacobi != d.expect_jacobi) j["expect_jacobi"] = o.expect_jacobi;
    if (o.expect_scaling) j["expect_scaling"] = *o.expect_scaling;
    if (o.expect_closes) j["expect_closes"] = *o.expect_closes;
    if (o.expect_decoupled) j["expect_decoupled"] = *o.expect_decoupled;
    if (o.expected_effective) j["expected_effective"] = to_json(*o.expected_effective);
    if (o.reduced_momenta) j["reduced_momenta"] = true;
    if (o.order_check) j["order_check"] = true;
    if (o.energy_tolerance) j["energy_tolerance"] = *o.energy_tolerance;
    if (!o.masses.empty()) j["masses"] = o.masses;
    if (!o.bodies.empty()) j["bodies"] = o.bodies;
    if (o.expected_fixed_final_deviation) j["expected_fixed_final_deviation"] = vec_json(*o.expected_fixed_final_deviation);
    if (o.min_fixed_deviation) j["min_fixed_deviation"] = *o.min_fixed_deviation;
    return j;
}

AlgebraSpec particle_spec(const ScenarioFile& s, std::size_t a) {
    const ParticleEntry& entry = s.particles[a];
    AlgebraSpec spec = s.algebra;
    if (!entry.overrides.empty()) {
        json merged = to_json(s.algebra);
        for (auto it = entry.overrides.begin(); it != entry.overrides.end(); ++it) merged[it.key()] = it.value();
        spec = algebra_from_json(merged, "particles[" + std::to_string(a) + "].overrides");
    }
    if (s.scale_parameters_by_mass) spec = scaling_rule_of(spec, 1.0).spec_for_mass(entry.mass);
    return spec;
}

}  // namespace

std::string_view task_name(Task task) {
    switch (task) {
        case Task::CheckAlgebra: return "check-algebra";
        case Task::ComBrackets: return "com-brackets";
        case Task::Simulate: return "simulate";
        case Task::WepTest: return "wep-test";
    }
    return "unknown";
}

AlgebraSpec algebra_from_json(const json& j, const std::string& path) {
    require_object(j, path);
    const std::string type = string(member(j, path, "type"), join(path, "type"));
    AlgebraSpec spec;
    if (type == "canonical") {
        allow_keys(j, path, {"type"});
        spec = Canonical{};
    } else if (type == "space_time") {
        allow_keys(j, path, {"type", "kappa", "rho", "tau"});
        spec = SpaceTime{param(j, path, "kappa"), axis(j, path, "rho"), axis(j, path, "tau")};
    } else if (type == "space_space") {
        allow_keys(j, path, {"type", "kappa_tilde", "k", "l", "gamma"});
        spec = SpaceSpace{param(j, path, "kappa_tilde"), axis(j, path, "k"), axis(j, path, "l"), axis(j, path, "gamma")};
    } else if (type == "generalized") {
        allow_keys(j, path, {"type", "theta0", "theta", "theta_bar", "theta_tilde"});
        Generalized g;
        if (j.contains("theta0")) g.theta0 = tensor2(j["theta0"], join(path, "theta0"));
        if (j.contains("theta")) g.theta = tensor3(j["theta"], join(path, "theta"));
        if (j.contains("theta_bar")) g.theta_bar = tensor3(j["theta_bar"], join(path, "theta_bar"));
        if (j.contains("theta_tilde")) g.theta_tilde = tensor3(j["theta_tilde"], join(path, "theta_tilde"));
        spec = g;
    } else if (type == "miao_type_i") {
        allow_keys(j, path, {"type", "kappa", "kappa_tilde", "k", "l", "gamma"});
        spec = MiaoTypeI{param(j, path, "kappa"), param(j, path, "kappa_tilde"), axis(j, path, "k"), axis(j, path, "l"),
                         axis(j, path, "gamma")};
    } else if (type == "miao_type_ii") {
        allow_keys(j, path, {"type", "kappa", "kappa_tilde", "kappa_bar", "k", "l", "gamma"});
        spec = MiaoTypeII{param(j, path, "kappa"),    param(j, path, "kappa_tilde"), param(j, path, "kappa_bar"),
                          axis(j, path, "k"),         axis(j, path, "l"),            axis(j, path, "gamma")};
    } else {
        throw ValidationError(join(path, "type"), "unknown algebra '" + type + "'");
    }
    validate(spec, path);
    return spec;
}

json to_json(const AlgebraSpec& spec) {
    json j = json::object();
    j["type"] = std::string(kind_name(kind_of(spec)));
    std::visit(overloaded{
                   [](const Canonical&) {},
                   [&](const SpaceTime& s) {
                       j["kappa"] = s.kappa;
                       j["rho"] = s.rho;
                       j["tau"] = s.tau;
                   },
                   [&](const SpaceSpace& s) {
                       j["kappa_tilde"] = s.kappa_tilde;
                       j["k"] = s.k;
                       j["l"] = s.l;
                       j["gamma"] = s.gamma;
                   },
                   [&](const Generalized& g) {
                       j["theta0"] = tensor2_json(g.theta0);
                       j["theta"] = tensor3_json(g.theta);
                       j["theta_bar"] = tensor3_json(g.theta_bar);
                       j["theta_tilde"] = tensor3_json(g.theta_tilde);
                   },
                   [&](const MiaoTypeI& s) {
                       j["kappa"] = s.kappa;
                       j["kappa_tilde"] = s.kappa_tilde;
                       j["k"] = s.k;
                       j["l"] = s.l;
                       j["gamma"] = s.gamma;
                   },
                   [&](const MiaoTypeII& s) {
                       j["kappa"] = s.kappa;
                       j["kappa_tilde"] = s.kappa_tilde;
                       j["kappa_bar"] = s.kappa_bar;
                       j["k"] = s.k;
                       j["l"] = s.l;
                       j["gamma"] = s.gamma;
                   },
               },
               spec);
    return j;
}

json to_json(const Potential& potential) {
    return std::visit(overloaded{
                          [](const UniformField& u) { return json{{"type", "uniform"}, {"g", vec_json(u.g)}}; },
                          [](const NewtonianField& n) {
                              return json{{"type", "newtonian"},
                                          {"source_strength", n.source_strength},
                                          {"center", vec_json(n.center)}};
                          },
                          [](const PolynomialField& f) {
                              json terms = json::array();
                              for (const auto& [e, c] : f.coefficients)
                                  terms.push_back({{"powers", {e[0], e[1], e[2]}}, {"coefficient", c}});
                              return json{{"type", "polynomial"}, {"terms", terms}};
                          },
                      },
                      potential);
}

ParticleSystem ScenarioFile::system() const {
    std::vector<Particle> parts;
    for (std::size_t a = 0; a < particles.size(); ++a) parts.push_back(Particle{particles[a].mass, particle_spec(*this, a)});
    return ParticleSystem(std::move(parts));
}

PhaseState ScenarioFile::initial_state() const {
    PhaseState s(particles.size(), t ? *t : (grid ? grid->t0 : 0.0));
    for (std::size_t a = 0; a < particles.size(); ++a) {
        if (a < x.size()) s.x[a] = x[a];
        if (a < p.size()) s.p[a] = reduced_momenta_input ? Vec3(particles[a].mass * p[a]) : p[a];
    }
    return s;
}

GravityScenario ScenarioFile::gravity() const {
    if (!potential) throw ValidationError("potential", "required by task " + std::string(task_name(task)));
    if (!grid) throw ValidationError("grid", "required by task " + std::string(task_name(task)));
    return GravityScenario{system(), *potential, initial_state(), *grid, body_mode, neglect_relative_motion};
}

void ScenarioFile::validate() const {
    if (schema_version != kSchemaVersion) throw ValidationError("schema_version", "must be 1");
    if (particles.empty()) throw ValidationError("particles", "at least one particle is required");
    if (!x.empty() && x.size() != particles.size())
        throw ValidationError("initial.x", "needs one entry per particle");
    if (!p.empty() && p.size() != particles.size())
        throw ValidationError("initial.p", "needs one entry per particle");
    const ParticleSystem sys = system();
    if (task == Task::Simulate || task == Task::WepTest) {
        const GravityScenario g = gravity();
        g.validate();
        if (task == Task::Simulate && body_mode) {
            try {
                body_particle(g);
            } catch (const ScalingRequired& e) {
                throw ValidationError("particles", e.what());
            }
        }
    }
    if (grid && t && *t != grid->t0) throw ValidationError("initial.t", "must equal grid.t0");
    if (task == Task::WepTest) {
        if (body_mode) {
            if (options.bodies.size() < 2) throw ValidationError("options.bodies", "needs at least two bodies");
        } else if (options.masses.size() < 2) {
            throw ValidationError("options.masses", "needs at least two masses");
        }
    }
    if (body_mode && task != Task::Simulate && task != Task::WepTest)
        throw ValidationError("body_mode", "only applies to simulate and wep-test");
}

ScenarioFile parse_scenario(const json& doc) {
    require_object(doc, "");
    allow_keys(doc, "",
               {"schema_version", "name", "description", "criterion", "task", "algebra", "scale_parameters_by_mass",
                "particles", "potential", "initial", "grid", "body_mode", "neglect_relative_motion", "options"});
    ScenarioFile s;
    const long long version = integer(member(doc, "", "schema_version"), "schema_version");
    if (version != kSchemaVersion) throw ValidationError("schema_version", "unsupported version " + std::to_string(version));
    s.name = string(member(doc, "", "name"), "name");
    if (s.name.empty()) throw ValidationError("name", "must not be empty");
    if (doc.contains("description")) s.description = string(doc["description"], "description");
    if (doc.contains("criterion")) s.criterion = static_cast<int>(integer(doc["criterion"], "criterion"));
    s.task = task_from(string(member(doc, "", "task"), "task"), "task");
    s.algebra = algebra_from_json(member(doc, "", "algebra"), "algebra");
    if (doc.contains("scale_parameters_by_mass"))
        s.scale_parameters_by_mass = boolean(doc["scale_parameters_by_mass"], "scale_parameters_by_mass");

    const json& parts = array(member(doc, "", "particles"), "particles");
    for (std::size_t a = 0; a < parts.size(); ++a) {
        const std::string pp = at("particles", a);
        require_object(parts[a], pp);
        allow_keys(parts[a], pp, {"mass", "overrides"});
        ParticleEntry e;
        e.mass = param(parts[a], pp, "mass");
        if (e.mass <= 0.0) throw ValidationError(join(pp, "mass"), "must be positive");
        if (parts[a].contains("overrides")) {
            const json& ov = parts[a]["overrides"];
            require_object(ov, join(pp, "overrides"));
            if (ov.contains("type")) throw ValidationError(join(pp, "overrides.type"), "the variant is shared by all particles");
            e.overrides = ov;
        }
        s.particles.push_back(std::move(e));
    }

    if (doc.contains("potential")) s.potential = potential_from_json(doc["potential"], "potential");

    if (doc.contains("initial")) {
        const json& ini = doc["initial"];
        require_object(ini, "initial");
        allow_keys(ini, "initial", {"momentum_units", "t", "x", "p"});
        if (ini.contains("momentum_units")) {
            const std::string u = string(ini["momentum_units"], "initial.momentum_units");
            if (u == "reduced") s.reduced_momenta_input = true;
            else if (u != "absolute") throw ValidationError("initial.momentum_units", "must be 'absolute' or 'reduced'");
        }
        if (ini.contains("t")) s.t = number(ini["t"], "initial.t");
        for (const char* key : {"x", "p"}) {
            if (!ini.contains(key)) continue;
            const std::string kp = join("initial", key);
            const json& rows = array(ini[key], kp);
            auto& dst = std::string(key) == "x" ? s.x : s.p;
            for (std::size_t a = 0; a < rows.size(); ++a) dst.push_back(vec3(rows[a], at(kp, a)));
        }
    }

    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        require_object(g, "grid");
        allow_keys(g, "grid", {"t0", "t_end", "dt"});
        s.grid = TimeGrid{param(g, "grid", "t0"), param(g, "grid", "t_end"), param(g, "grid", "dt")};
    }
    if (doc.contains("body_mode")) s.body_mode = boolean(doc["body_mode"], "body_mode");
    if (doc.contains("neglect_relative_motion"))
        s.neglect_relative_motion = boolean(doc["neglect_relative_motion"], "neglect_relative_motion");
    if (doc.contains("options")) s.options = options_from_json(doc["options"], "options");

    s.validate();
    return s;
}

ScenarioFile parse_scenario_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("scenario", std::string("malformed JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

json to_json(const ScenarioFile& s) {
    json j = json::object();
    j["schema_version"] = s.schema_version;
    j["name"] = s.name;
    if (!s.description.empty()) j["description"] = s.description;
    if (s.criterion) j["criterion"] = s.criterion;
    j["task"] = std::string(task_name(s.task));
    j["algebra"] = to_json(s.algebra);
    if (s.scale_parameters_by_mass) j["scale_parameters_by_mass"] = true;
    json parts = json::array();
    for (const auto& e : s.particles) {
        json pj{{"mass", e.mass}};
        if (!e.overrides.empty()) pj["overrides"] = e.overrides;
        parts.push_back(pj);
    }
    j["particles"] = parts;
    if (s.potential) j["potential"] = to_json(*s.potential);
    json ini = json::object();
    ini["momentum_units"] = s.reduced_momenta_input ? "reduced" : "absolute";
    if (s.t) ini["t"] = *s.t;
    if (!s.x.empty()) {
        ini["x"] = json::array();
        for (const auto& v : s.x) ini["x"].push_back(vec_json(v));
    }
    if (!s.p.empty()) {
        ini["p"] = json::array();
        for (const auto& v : s.p) ini["p"].push_back(vec_json(v));
    }
    j["initial"] = ini;
    if (s.grid) j["grid"] = json{{"t0", s.grid->t0}, {"t_end", s.grid->t_end}, {"dt", s.grid->dt}};
    if (s.body_mode) j["body_mode"] = true;
    if (s.neglect_relative_motion) j["neglect_relative_motion"] = true;
    const json opts = options_to_json(s.options);
    if (!opts.empty()) j["options"] = opts;
    return j;
}

}  // namespace ncmech
