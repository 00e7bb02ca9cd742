#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "jqfsim/config.hpp"
#include "jqfsim/output.hpp"

namespace jqfsim {

/// Names of the subcommands, in help order.
const std::vector<std::string>& command_names();

struct CommandOutput {
    CsvTable table;
    nlohmann::json summary;
};

/// Runs one subcommand on a resolved configuration without touching disk.
CommandOutput run_command(const std::string& command, const RunConfig& config);

/// Runs a subcommand and writes <command>.csv, <command>.json and
/// resolved_config.json into out_dir.
void run(const std::string& command, const RunConfig& config, const std::filesystem::path& out_dir);

nlohmann::json error_json(const std::string& kind, const std::string& message);

/// Full command-line entry point. Failures print error JSON to stderr and
/// return a nonzero code.
int run_cli(int argc, char** argv);

}  // namespace jqfsim
