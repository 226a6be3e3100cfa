#pragma once

// Scenario files: JSON text with an explicit schema_version. Parsing
// validates every field against the module invariants and reports the
// offending path through ValidationError::field().

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncmech/algebra.hpp"
#include "ncmech/composition.hpp"
#include "ncmech/dynamics.hpp"

namespace ncmech {

inline constexpr int kSchemaVersion = 1;

enum class Task { CheckAlgebra, ComBrackets, Simulate, WepTest };

std::string_view task_name(Task task);

struct ParticleEntry {
    double mass = 1.0;
    /// Parameter values replacing those of the shared algebra block, keyed
    /// like the algebra serialization (e.g. "kappa").
    nlohmann::json overrides = nlohmann::json::object();
};

struct ScenarioOptions {
    std::optional<double> tolerance;
    // check-algebra / com-brackets
    int samples = 0;
    std::uint64_t seed = 1;
    double state_bound = 1.0;
    bool expect_jacobi = true;
    std::optional<bool> expect_scaling;
    std::optional<bool> expect_closes;
    std::optional<bool> expect_decoupled;
    std::optional<AlgebraSpec> expected_effective;
    // simulate
    bool reduced_momenta = false;
    bool order_check = false;
    std::optional<double> energy_tolerance;
    // wep-test
    std::vector<double> masses;
    std::vector<std::vector<double>> bodies;
    std::optional<Vec3> expected_fixed_final_deviation;
    std::optional<double> min_fixed_deviation;
};

struct ScenarioFile {
    int schema_version = kSchemaVersion;
    std::string name;
    std::string description;
    /// Acceptance criterion reproduced by a bundled scenario, 0 if none.
    int criterion = 0;
    Task task = Task::CheckAlgebra;
    AlgebraSpec algebra = Canonical{};
    /// Algebra parameters are the unit-mass values and every particle gets
    /// scaling_rule_of(spec, 1).spec_for_mass(m).
    bool scale_parameters_by_mass = false;
    std::vector<ParticleEntry> particles;
    std::optional<Potential> potential;
    /// Momenta stored as given; `reduced_momenta_input` marks them as P/m.
    std::vector<Vec3> x;
    std::vector<Vec3> p;
    bool reduced_momenta_input = false;
    std::optional<double> t;
    std::optional<TimeGrid> grid;
    bool body_mode = false;
    bool neglect_relative_motion = false;
    ScenarioOptions options;

    /// Per-particle specs after overrides and mass scaling.
    ParticleSystem system() const;
    /// Initial state with absolute momenta; time is `t`, else grid.t0, else 0.
    PhaseState initial_state() const;
    /// Requires potential and grid.
    GravityScenario gravity() const;
    /// Cross-field checks; called by parse.
    void validate() const;
};

ScenarioFile parse_scenario(const nlohmann::json& doc);
/// Throws ValidationError with field "scenario" on malformed JSON.
ScenarioFile parse_scenario_text(const std::string& text);

nlohmann::json to_json(const ScenarioFile& scenario);
nlohmann::json to_json(const AlgebraSpec& spec);
nlohmann::json to_json(const Potential& potential);
AlgebraSpec algebra_from_json(const nlohmann::json& j, const std::string& field);

}  // namespace ncmech
