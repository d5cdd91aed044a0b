// soc-ising: command-line front end of the experiment runner.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "json.hpp"
#include "socising/experiments.hpp"

namespace ex = socising::experiments;

namespace {

int fail(const std::string& kind, const std::string& message, const std::string& key = {}) {
  nlohmann::ordered_json line = {{"error", kind}, {"message", message}};
  if (!key.empty()) line["key"] = key;
  std::cerr << line.dump() << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-organized critical Ising model experiments", "soc-ising"};
  app.set_version_flag("--version", SOCISING_VERSION);
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "flat key = value config file; flags override it");
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");

  // One flag per schema key, kept as text so the config does all parsing.
  std::map<std::string, std::string> overrides;
  for (const auto& key : ex::config_schema()) {
    if (key.name == "command") continue;
    std::string names = "--" + key.name;
    if (key.name.find('_') != std::string::npos) {
      std::string dashed = key.name;
      for (char& ch : dashed)
        if (ch == '_') ch = '-';
      names += ",--" + dashed;
    }
    app.add_option_function<std::string>(
           names, [&overrides, name = key.name](const std::string& v) { overrides[name] = v; },
           key.description + " (default: " + (key.default_value.empty() ? "none" : key.default_value) + ")")
        ->type_name("VALUE");
  }
  for (const auto& name : ex::command_names()) app.add_subcommand(name, "run the " + name + " experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    ex::ExperimentConfig config;
    if (!config_path.empty()) config.merge_file(config_path);
    for (const auto& [k, v] : overrides) config.set(k, v);
    if (auto subs = app.get_subcommands(); !subs.empty()) config.set("command", subs.front()->get_name());

    if (print_config) {
      std::cout << config.to_text();
      return 0;
    }
    if (config.get("command").empty()) return fail("usage", "no command given; see --help", "command");
    const auto outcome = ex::run_experiment(config);
    std::cout << outcome.summary_json;
    return 0;
  } catch (const ex::ConfigError& e) {
    return fail("config", e.what(), e.key());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
}
