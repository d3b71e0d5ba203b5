#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "tel/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::map<std::string, std::string> text;
  std::map<std::string, bool> switches;
  std::string config_path;
  bool force = false;
  bool no_cache = false;
};

void add_options(CLI::App* sub, Flags& flags) {
  sub->add_option("--config", flags.config_path, "flat key = value config file; flags override it")
      ->check(CLI::ExistingFile);
  sub->add_flag("--force", flags.force, "recompute even when the cache has this input hash");
  sub->add_flag("--no-cache", flags.no_cache, "neither read nor write the cache");
  for (const auto& key : tel::config_schema()) {
    if (key.name == "command") continue;
    if (key.type == tel::ConfigType::boolean) {
      sub->add_flag("--" + key.name, flags.switches[key.name], key.help);
    } else {
      sub->add_option("--" + key.name, flags.text[key.name], key.help);
    }
  }
}

int report_config_error(const tel::ConfigError& e) {
  std::cerr << e.what() << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree entropy laboratory"};
  app.require_subcommand(1);
  Flags flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : tel::command_names()) {
    subs[name] = app.add_subcommand(name, "run the " + name + " experiment");
    add_options(subs[name], flags);
  }
  CLI::App* run_sub = app.add_subcommand("run", "run the command named in the config file");
  add_options(run_sub, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  tel::ExperimentConfig config;
  try {
    std::vector<std::string> problems;
    if (!flags.config_path.empty()) config = tel::ExperimentConfig::load(flags.config_path);
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) config.set("command", name);
    }
    CLI::App* used = app.get_subcommands().front();
    for (const auto& [key, value] : flags.text) {
      if (used->count("--" + key) == 0) continue;
      try {
        config.set_from_text(key, value);
      } catch (const tel::ConfigError& e) {
        problems.insert(problems.end(), e.problems().begin(), e.problems().end());
      }
    }
    for (const auto& [key, on] : flags.switches) {
      if (used->count("--" + key) > 0) config.set(key, on);
    }
    for (auto& p : config.problems()) problems.push_back(std::move(p));
    if (!problems.empty()) throw tel::ConfigError(problems);
  } catch (const tel::ConfigError& e) {
    return report_config_error(e);
  }

  tel::RunOptions options;
  options.force = flags.force;
  options.threads = config.get_or("threads", 1);
  if (!flags.no_cache) options.cache_dir = tel::default_cache_dir();

  nlohmann::json record;
  try {
    record = tel::run(config, options);
  } catch (const tel::ConfigError& e) {
    return report_config_error(e);
  } catch (const std::exception& e) {
    std::cerr << "computation failed: " << e.what() << '\n';
    return 3;
  }

  const std::string text = record.dump(2) + "\n";
  if (!config.has("output")) {
    std::cout << text;
    return 0;
  }
  try {
    const fs::path out = config.at("output").get<std::string>();
    tel::write_atomically(out, text);
    try {
      fs::path csv = out;
      csv.replace_extension(".csv");
      tel::write_atomically(csv, tel::emit_plotdata(record));
      std::cerr << "wrote " << out.string() << " and " << csv.string() << '\n';
    } catch (const tel::NoPlotData&) {
      std::cerr << "wrote " << out.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "cannot write results: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
