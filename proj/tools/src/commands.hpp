#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mslstm/run_config.hpp"

namespace mslstm::cli {

struct OptionSpec {
  std::string key;  // config key; the flag is --key with '_' spelled '-'
  std::string default_value;
  std::string help;
  bool is_flag = false;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<OptionSpec> options;
};

std::vector<CommandSpec> command_specs();
const CommandSpec& command_spec(const std::string& name);
RunConfig default_config(const CommandSpec& spec);

// Each command reads only `cfg`, writes results to `out` and progress to `log`.
void cmd_gen_data(const RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_dump_layers(const RunConfig& cfg, std::ostream& out, std::ostream& log);
void cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& log);

void run_command(const std::string& name, const RunConfig& cfg, std::ostream& out,
                 std::ostream& log);

}  // namespace mslstm::cli
