#pragma once

// Batch front-end: runs a scenario task and collects its checks into a
// report. `run_scenario` does no I/O; `cli_main` reads files, writes the
// artifacts and maps failures to exit codes.

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncmech/scenario.hpp"

namespace ncmech {

enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitInvalid = 2, kExitNumerical = 3 };

struct RunFlags {
    std::optional<double> dt;
    std::optional<double> tolerance;
    /// Adds wall_time_s to the report, which then differs between runs.
    bool timing = false;
};

struct RunOutcome {
    bool passed = false;
    nlohmann::json report;
    /// File name -> contents, report.json included.
    std::map<std::string, std::string> artifacts;
};

/// Throws ValidationError, ScalingRequired or NumericalError.
RunOutcome run_scenario(const ScenarioFile& scenario, const RunFlags& flags = {});

struct BuiltinScenario {
    std::string name;
    int criterion = 0;
    std::string description;
    std::string text;
};

/// Bundled scenarios ordered by criterion, then name.
const std::vector<BuiltinScenario>& builtin_scenarios();
const BuiltinScenario* find_builtin(const std::string& name);

/// `run <scenario|builtin> [--out DIR] [--dt X] [--tol X] [--timing]` and
/// `list-builtin`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ncmech
