#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "uor/config.hpp"
#include "uor/param_space.hpp"

namespace uor {

struct GridSpec {
  std::vector<int> counts;  // cells per axis
};

// "10" or "10x10" (one count per space axis).
GridSpec parse_grid(const std::string& text, int dims);

// Prints one line per block (id, bounds, representative, diameter) and
// writes the same table as CSV when csv_path is non-empty.
void run_divide(const ParameterSpace& space, double delta, std::ostream& out,
                const std::string& csv_path);

struct TrainArtifacts {
  std::vector<std::string> policy_files;
  std::vector<std::string> history_files;
  std::string resolved_config_file;
};

// One policy file and one history CSV per seed, plus the resolved config.
TrainArtifacts run_train(const ExperimentConfig& cfg, const std::string& out_dir,
                         std::ostream& log);

// Heat map of per-cell mean returns at cell centers (heatmap.csv), a per-cell
// metric map when a preference is configured (heatmap_metric.csv), the
// per-trajectory returns (trajectories.csv) and a summary table
// (summary.csv): metric at each requested k, average return, worst-10%
// average, with across-policy mean/std rows when several policies are given.
void run_eval(const ExperimentConfig& cfg,
              const std::vector<std::string>& policy_files, const GridSpec& grid,
              const std::vector<double>& k_list, const std::string& out_dir,
              std::uint64_t eval_seed, std::ostream& log);

// Sorted-group ART differences between policies trained at distinct k:
// trajectories sorted by return, split into 10 equal groups, per-group mean
// return, consecutive-k differences normalized by the global return range.
void run_art_diff(const ExperimentConfig& cfg,
                  const std::vector<std::string>& policy_files,
                  const std::vector<double>& k_values, const std::string& out_dir,
                  std::uint64_t eval_seed, std::ostream& log);

}  // namespace uor
