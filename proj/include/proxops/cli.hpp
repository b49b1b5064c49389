#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "proxops/harness.hpp"

namespace proxops {

/// Raised for unknown scenario names and invalid configuration values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Known names: "single" (alias "single_agent_passes"), "standoff" (alias "three_agent_standoff").
ScenarioSpec scenario_by_name(const std::string& name, bool rta);

/// JSON with "scenario", "controller", "rta", "timing" and "seed" sections.
/// Missing sections keep their defaults; a scenario without an explicit
/// agent list takes the agents of the named scenario.
ScenarioSpec parse_config(const std::string& text);

/// Fully explicit configuration; parse_config(dump_config(s)) reproduces s.
std::string dump_config(const ScenarioSpec& spec);

/// Parses "baseline" or "policy:<path>".
ControllerChoice parse_controller(const std::string& text);

/// Entry point shared by the proxops executable and the tests.
/// Returns 0 on success, 1 on runtime failure, 2 on usage or configuration errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace proxops
