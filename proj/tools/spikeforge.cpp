#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "spikeforge/harness.hpp"

namespace sf = spikeforge;

int main(int argc, char** argv) {
  CLI::App app{"spikeforge: LIF potential statistics and ANN-to-SNN conversion experiments"};
  app.set_version_flag("--version", std::string(sf::kToolVersion));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  for (const auto& [name, command] : sf::commands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sf::kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    auto cfg = sf::load_experiment_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    const auto result = sf::run_command(name, cfg);
    for (const auto& line : result.summary) std::cout << name << ": " << line << '\n';
    for (const auto& path : result.artifacts) std::cout << "wrote " << path.string() << '\n';
    return sf::kExitOk;
  } catch (const sf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return sf::kExitConfig;
  } catch (const sf::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return sf::kExitConfig;
  } catch (const sf::RejectedInput& e) {
    std::cerr << "rejected input: " << e.what() << '\n';
    return sf::kExitConfig;
  } catch (const sf::NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << '\n';
    return sf::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sf::kExitFailure;
  }
}
