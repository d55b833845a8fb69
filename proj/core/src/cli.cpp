#include "advntk/experiments.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <string>
#include <system_error>

namespace advntk {
namespace {

void print_error(const std::string& type, const std::string& message) {
  nlohmann::json err = {{"error", message}, {"type", type}};
  std::cerr << err.dump() << std::endl;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Adversarial-training kernel experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool has_seed = false;

  const std::vector<std::string> commands = {"kernel-check", "dynamics-check",
                                             "degeneration", "train-advntk",
                                             "train-at",     "eval"};
  for (const auto& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { has_seed = true; });
    sub->add_option("--out", out_override, "override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    print_error("usage", e.what());
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (cfg.experiment != command)
      throw std::invalid_argument("config is for experiment \"" + cfg.experiment +
                                  "\" but subcommand is \"" + command + "\"");
    if (has_seed) cfg.seed = seed_override;
    if (!out_override.empty()) cfg.output_dir = out_override;

    if (command == "kernel-check") {
      const auto res = run_kernel_check(cfg);
      std::cout << "kernel-check: ntk " << (res.ntk_strictly_decreasing ? "" : "NOT ")
                << "strictly decreasing, final error " << res.ntk_err.back() << "\n";
    } else if (command == "dynamics-check") {
      const auto res = run_dynamics_check(cfg);
      std::cout << "dynamics-check: max |closed - ode| = " << res.max_abs_diff
                << ", halving ratio " << res.halving_ratio << "\n";
    } else if (command == "degeneration") {
      const auto res = run_degeneration(cfg);
      std::cout << "degeneration: final norm " << res.final_norm << ", regime "
                << (res.report.degenerate_regime ? "degenerate" : "non-degenerate")
                << "\n";
    } else if (command == "train-advntk") {
      const auto res = run_train_advntk(cfg);
      std::cout << "train-advntk: robust acc " << res.advntk_robust << " (ntk baseline "
                << res.ntk_robust << "), model at " << res.model_path << "\n";
    } else if (command == "train-at") {
      const auto res = run_train_at(cfg);
      std::cout << "train-at: logged " << res.log.size() << " metric rows\n";
    } else if (command == "eval") {
      const auto res = run_eval(cfg);
      std::cout << "eval: clean " << res.clean_acc << ", robust " << res.robust_acc
                << "\n";
    }
    return 0;
  } catch (const std::system_error& e) {
    print_error("io", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    print_error("config", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return 1;
  }
}

}  // namespace advntk
