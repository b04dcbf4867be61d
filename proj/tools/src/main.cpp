#include <algorithm>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "commands.hpp"
#include "mslstm/error.hpp"
#include "mslstm/parallel.hpp"

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

struct Bound {
  const mslstm::cli::CommandSpec* spec;
  CLI::App* app;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::string config_path;
};

}  // namespace

int main(int argc, char** argv) {
  mslstm::init_threads_from_env();
  CLI::App app{"mslstm: multi-scale recurrent video prediction toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mslstm 0.1.0");

  const auto specs = mslstm::cli::command_specs();
  std::vector<Bound> bound(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Bound& b = bound[i];
    b.spec = &specs[i];
    b.app = app.add_subcommand(specs[i].name, specs[i].help);
    b.app->add_option("--config", b.config_path, "key = value file; flags override it");
    for (const auto& o : specs[i].options) {
      if (o.is_flag) {
        b.app->add_flag(flag_name(o.key), b.flags[o.key], o.help);
      } else {
        std::string help = o.help;
        if (!o.default_value.empty()) help += " [" + o.default_value + "]";
        b.app->add_option(flag_name(o.key), b.values[o.key], help);
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage_error: " << e.what() << "\n";
    return 2;
  }

  for (Bound& b : bound) {
    if (!b.app->parsed()) continue;
    try {
      mslstm::RunConfig cfg = mslstm::cli::default_config(*b.spec);
      if (!b.config_path.empty()) cfg.merge_file(b.config_path);
      for (const auto& o : b.spec->options) {
        if (b.app->count(flag_name(o.key)) == 0) continue;
        cfg.set(o.key, o.is_flag ? (b.flags[o.key] ? "true" : "false") : b.values[o.key]);
      }
      std::cerr << "# mslstm " << b.spec->name << "\n" << cfg.echo();
      mslstm::cli::run_command(b.spec->name, cfg, std::cout, std::cerr);
      return 0;
    } catch (const mslstm::Error& e) {
      std::cerr << mslstm::error_tag(e.code()) << ": " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "io_error: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}
