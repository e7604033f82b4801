#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rkmp/errors.hpp"
#include "rkmp/io.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string ranks;
};

std::vector<std::size_t> parse_ranks(const std::string& text) {
  std::vector<std::size_t> ranks;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(start, comma - start);
    try {
      const long long v = std::stoll(item);
      if (v <= 0) throw rkmp::ConfigError("--ranks entries must be positive");
      ranks.push_back(static_cast<std::size_t>(v));
    } catch (const std::invalid_argument&) {
      throw rkmp::ConfigError("--ranks: cannot parse '" + item + "'");
    }
    start = comma + 1;
  }
  if (ranks.empty()) throw rkmp::ConfigError("--ranks: empty list");
  return ranks;
}

rkmp::ExperimentConfig resolve_config(const CliOptions& opts) {
  if (opts.config_path.empty() == opts.preset.empty())
    throw rkmp::ConfigError("provide exactly one of --config or --preset");
  rkmp::ExperimentConfig cfg = opts.config_path.empty()
                                   ? rkmp::preset_config(opts.preset)
                                   : rkmp::load_config_file(opts.config_path);
  // Apply overrides to the config and to its manifest echo.
  nlohmann::json echo = nlohmann::json::parse(cfg.echo_json);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    echo["seed"] = *opts.seed;
  }
  if (!opts.ranks.empty()) {
    cfg.ranks = parse_ranks(opts.ranks);
    echo["ranks"] = cfg.ranks;
  }
  cfg.echo_json = echo.dump(2);
  return cfg;
}

std::string resolve_out_dir(const CliOptions& opts, const rkmp::ExperimentConfig& cfg) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  return (std::filesystem::path(rkmp::default_out_root()) / cfg.experiment).string();
}

void add_common_options(CLI::App* sub, CliOptions& opts) {
  sub->add_option("--config", opts.config_path, "Path to a JSON experiment config");
  sub->add_option("--preset", opts.preset,
                  "Built-in config: paper-imaging|paper-swe|desk-swe|paper-finance");
  sub->add_option("--out", opts.out_dir, "Output directory (default $RKMP_OUT_DIR/<experiment>)");
  sub->add_option("--seed", opts.seed, "Override the config seed");
  sub->add_option("--ranks", opts.ranks, "Override ranks, e.g. 25,50,100");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rkmp: closed-form rank-constrained linear mappings and experiment runner"};
  app.require_subcommand(1);

  CliOptions opts;
  const char* verbs[] = {"generate", "fit", "evaluate", "sweep", "run"};
  const char* descriptions[] = {
      "Write dataset files only",
      "Generate data and write the fitted optimal map",
      "Fit and write metric tables",
      "Write the rank-sweep table",
      "Run the full pipeline for the configured experiment",
  };
  for (int i = 0; i < 5; ++i) add_common_options(app.add_subcommand(verbs[i], descriptions[i]), opts);

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string verb = app.get_subcommands().front()->get_name();
    const rkmp::ExperimentConfig cfg = resolve_config(opts);
    const std::string out_dir = resolve_out_dir(opts, cfg);
    rkmp::run_experiment(cfg, out_dir, rkmp::stage_from_verb(verb));
    std::cout << "wrote " << out_dir << "\n";
    return 0;
  } catch (const rkmp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const rkmp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
