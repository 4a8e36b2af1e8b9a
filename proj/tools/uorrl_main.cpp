#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uor/cli_ops.hpp"
#include "uor/config.hpp"
#include "uor/errors.hpp"
#include "uor/metric.hpp"

namespace {

std::vector<double> parse_k_list(const std::string& text) {
  std::vector<double> ks;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      ks.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw uor::ValidationError("--k: cannot parse '" + text + "'");
    }
  }
  if (ks.empty()) throw uor::ValidationError("--k: empty list");
  return ks;
}

uor::ExperimentConfig load_with_overrides(const std::string& config_path,
                                          std::int64_t seed_override,
                                          const std::string& out_override) {
  uor::ExperimentConfig cfg = uor::load_config(config_path);
  if (seed_override >= 0) {
    cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
  }
  if (!out_override.empty()) cfg.output_dir = out_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"User-oriented robustness metrics and training for parameterized MDPs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  double delta = 0.0;
  std::string grid_text;  // empty => 10 cells per axis
  std::string k_text;
  std::vector<std::string> policy_files;

  auto* divide = app.add_subcommand("divide", "Divide the parameter space into blocks");
  divide->add_option("--config", config_path, "Experiment config")->required();
  divide->add_option("--delta", delta, "Diameter upper bound (defaults to metric.delta)");
  divide->add_option("--out", out_dir, "Directory for blocks.csv");

  auto* train = app.add_subcommand("train", "Train one policy per seed");
  train->add_option("--config", config_path, "Experiment config")->required();
  train->add_option("--seed", seed, "Override: train this single seed only");
  train->add_option("--out", out_dir, "Override output directory");

  auto* eval = app.add_subcommand("eval", "Heat map + summary for trained policies");
  eval->add_option("--config", config_path, "Experiment config")->required();
  eval->add_option("--grid", grid_text, "Per-axis cell counts, e.g. 10x10");
  eval->add_option("--k", k_text, "Comma-separated k values for summary metrics");
  eval->add_option("--seed", seed, "Evaluation seed (default: first config seed)");
  eval->add_option("--out", out_dir, "Override output directory");
  eval->add_option("policies", policy_files, "Policy files")->required();

  auto* art = app.add_subcommand("art-diff", "Sorted-group ART differences between k's");
  art->add_option("--config", config_path, "Experiment config")->required();
  art->add_option("--k", k_text, "Comma-separated k per policy, same order")->required();
  art->add_option("--seed", seed, "Evaluation seed (default: first config seed)");
  art->add_option("--out", out_dir, "Override output directory");
  art->add_option("policies", policy_files, "Policy files")->required();

  double epsilon = 0.0;
  double rho = 0.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double scale = 1.0;
  int dims = 1;
  auto* sizes = app.add_subcommand("suggest-sizes", "Sizing helpers for delta and n1/n2");
  sizes->add_option("--epsilon", epsilon, "Optimality requirement")->required();
  sizes->add_option("--rho", rho, "Confidence parameter in (0,1)")->required();
  sizes->add_option("--dims", dims, "Parameter dimension d")->required();
  sizes->add_option("--c1", c1, "n1 constant");
  sizes->add_option("--c2", c2, "n2 constant");
  sizes->add_option("--scale", scale, "delta = scale * epsilon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (divide->parsed()) {
      const uor::ExperimentConfig cfg = uor::load_config(config_path);
      const double d = delta > 0.0 ? delta : cfg.metric.delta;
      std::string csv;
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        csv = out_dir + "/blocks.csv";
      }
      uor::run_divide(cfg.make_space(), d, std::cout, csv);
    } else if (train->parsed()) {
      const uor::ExperimentConfig cfg = load_with_overrides(config_path, seed, out_dir);
      uor::run_train(cfg, cfg.output_dir, std::cout);
    } else if (eval->parsed()) {
      const uor::ExperimentConfig cfg = load_with_overrides(config_path, -1, out_dir);
      const int dims = static_cast<int>(cfg.space_lower.size());
      uor::GridSpec grid;
      if (grid_text.empty()) {
        grid.counts.assign(static_cast<std::size_t>(dims), 10);
      } else {
        grid = uor::parse_grid(grid_text, dims);
      }
      const std::vector<double> ks =
          k_text.empty() ? std::vector<double>{0.0, 1.0, 21.0} : parse_k_list(k_text);
      const std::uint64_t eval_seed =
          seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.seeds.front();
      uor::run_eval(cfg, policy_files, grid, ks, cfg.output_dir, eval_seed, std::cout);
    } else if (art->parsed()) {
      const uor::ExperimentConfig cfg = load_with_overrides(config_path, -1, out_dir);
      const std::vector<double> ks = parse_k_list(k_text);
      const std::uint64_t eval_seed =
          seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.seeds.front();
      uor::run_art_diff(cfg, policy_files, ks, cfg.output_dir, eval_seed, std::cout);
    } else if (sizes->parsed()) {
      const auto s = uor::suggest_cluster_sizes(epsilon, rho, dims, c1, c2);
      std::cout << "delta " << uor::suggest_delta(epsilon, scale) << "\n"
                << "n1 " << s.n1 << "\n"
                << "n2 " << s.n2 << "\n";
    }
  } catch (const uor::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const uor::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const uor::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
