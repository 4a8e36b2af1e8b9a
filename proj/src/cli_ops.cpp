#include "uor/cli_ops.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>

#include "uor/csv.hpp"
#include "uor/errors.hpp"
#include "uor/rollout.hpp"

namespace uor {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir);
}

struct PolicyEval {
  std::string file;
  Policy policy;
  std::vector<double> returns;  // per-trajectory discounted returns
};

// Common-random-number evaluation: every policy sees the same parameter
// draws and the same per-trajectory noise stream, so identical policies
// produce identical returns.
std::vector<PolicyEval> collect_eval_returns(
    const ExperimentConfig& cfg, const std::vector<std::string>& policy_files,
    std::uint64_t eval_seed, std::vector<std::vector<double>>* params_out) {
  const auto env = cfg.make_env();
  const auto dist = cfg.make_distribution();
  const int n = cfg.eval.n_trajectories;
  if (n < 1) throw ValidationError("eval: n_trajectories must be >= 1");

  Rng param_rng = Rng(eval_seed).split(0x70);
  std::vector<std::vector<double>> params;
  params.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) params.push_back(dist.sample(param_rng));

  const Rng stream_base = Rng(eval_seed).split(0x72);
  std::vector<PolicyEval> evals;
  evals.reserve(policy_files.size());
  for (std::size_t pi = 0; pi < policy_files.size(); ++pi) {
    PolicyEval pe;
    pe.file = policy_files[pi];
    pe.policy = Policy::load(policy_files[pi]);
    if (pe.policy.env_name() != env->name()) {
      throw ValidationError("eval: policy " + policy_files[pi] + " was trained on env '" +
                            pe.policy.env_name() + "', config uses '" + env->name() + "'");
    }
    pe.returns.resize(static_cast<std::size_t>(n), 0.0);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      Rng stream = stream_base.split(i);
      pe.returns[i] =
          rollout(*env, pe.policy, params[i], cfg.metric.horizon, stream).discounted_return;
    });
    evals.push_back(std::move(pe));
  }
  if (params_out != nullptr) *params_out = std::move(params);
  return evals;
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// Equal-mass metric over individual trajectory returns (the n2 = 1 reading
// of the distribution-free estimator).
double trajectory_metric(std::span<const double> returns, const PreferenceSpec& pref) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(returns.size());
  const double mass = 1.0 / static_cast<double>(returns.size());
  for (double r : returns) pairs.emplace_back(r, mass);
  return exact_metric(pairs, pref).value;
}

double worst_decile_mean(std::span<const double> returns) {
  std::vector<double> sorted(returns.begin(), returns.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = std::max<std::size_t>(1, sorted.size() / 10);
  return mean_of(std::span<const double>(sorted.data(), k));
}

}  // namespace

GridSpec parse_grid(const std::string& text, int dims) {
  GridSpec grid;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      grid.counts.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ValidationError("grid: cannot parse '" + text + "'");
    }
    if (grid.counts.back() < 1) throw ValidationError("grid: counts must be >= 1");
  }
  if (grid.counts.empty()) throw ValidationError("grid: empty spec");
  if (static_cast<int>(grid.counts.size()) != dims) {
    throw ValidationError("grid: expected " + std::to_string(dims) + " axis counts, got " +
                          std::to_string(grid.counts.size()));
  }
  return grid;
}

void run_divide(const ParameterSpace& space, double delta, std::ostream& out,
                const std::string& csv_path) {
  const Division div = set_division(space, delta);
  std::vector<std::vector<std::string>> rows;
  out << "blocks: " << div.size() << "  cell_edge: " << div.cell_edge() << "\n";
  for (const Block& b : div.blocks()) {
    std::ostringstream line;
    line << b.id << "  [";
    for (std::size_t i = 0; i < b.lower.size(); ++i) {
      if (i) line << ", ";
      line << b.lower[i] << ".." << b.upper[i];
    }
    line << "]  rep (";
    for (std::size_t i = 0; i < b.representative.size(); ++i) {
      if (i) line << ", ";
      line << b.representative[i];
    }
    line << ")  diam " << b.diameter();
    out << line.str() << "\n";

    std::vector<std::string> row{std::to_string(b.id)};
    for (std::size_t i = 0; i < b.lower.size(); ++i) {
      row.push_back(csv::fmt(b.lower[i]));
      row.push_back(csv::fmt(b.upper[i]));
      row.push_back(csv::fmt(b.representative[i]));
    }
    row.push_back(csv::fmt(b.diameter()));
    rows.push_back(std::move(row));
  }
  if (!csv_path.empty()) {
    std::vector<std::string> header{"id"};
    for (int i = 0; i < space.dims(); ++i) {
      const std::string ax = std::to_string(i);
      header.push_back("lower_" + ax);
      header.push_back("upper_" + ax);
      header.push_back("representative_" + ax);
    }
    header.emplace_back("diameter");
    csv::write(csv_path, header, rows);
  }
}

TrainArtifacts run_train(const ExperimentConfig& cfg, const std::string& out_dir,
                         std::ostream& log) {
  ensure_dir(out_dir);
  const auto env = cfg.make_env();

  TrainArtifacts artifacts;
  artifacts.resolved_config_file = (fs::path(out_dir) / "resolved_config.json").string();
  {
    std::ofstream out(artifacts.resolved_config_file, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + artifacts.resolved_config_file);
    out << cfg.serialize();
  }
  if (cfg.mode == "df") {
    log << "df sizing: n1=" << cfg.metric.n1 << " n2=" << cfg.metric.n2 << "\n";
  } else {
    log << "db sizing: delta=" << cfg.metric.delta << "\n";
  }

  for (std::uint64_t seed : cfg.seeds) {
    const TrainSetup setup = cfg.make_train_setup(seed);
    const TrainOutput result = train(*env, setup);
    if (!result.completed) {
      throw NumericalError("train(seed=" + std::to_string(seed) + "): " + result.failure);
    }
    const std::string policy_file =
        (fs::path(out_dir) / ("policy_seed" + std::to_string(seed) + ".json")).string();
    const std::string history_file =
        (fs::path(out_dir) / ("history_seed" + std::to_string(seed) + ".csv")).string();
    result.policy.save(policy_file);

    std::vector<std::vector<std::string>> rows;
    rows.reserve(result.history.size());
    for (std::size_t i = 0; i < result.history.size(); ++i) {
      rows.push_back({std::to_string(i), csv::fmt(result.history[i].value),
                      csv::fmt(result.iter_seconds[i])});
    }
    csv::write(history_file, {"iteration", "metric_value", "wall_time_s"}, rows);

    log << "seed " << seed << ": " << result.history.size() << " iterations, final metric "
        << (result.history.empty() ? 0.0 : result.history.back().value) << "\n";
    artifacts.policy_files.push_back(policy_file);
    artifacts.history_files.push_back(history_file);
  }
  return artifacts;
}

void run_eval(const ExperimentConfig& cfg,
              const std::vector<std::string>& policy_files, const GridSpec& grid,
              const std::vector<double>& k_list, const std::string& out_dir,
              std::uint64_t eval_seed, std::ostream& log) {
  if (policy_files.empty()) throw ValidationError("eval: no policy files given");
  ensure_dir(out_dir);
  const auto env = cfg.make_env();
  const auto space = cfg.make_space();
  if (static_cast<int>(grid.counts.size()) != space.dims()) {
    throw ValidationError("eval: grid dims do not match the space");
  }

  // Load policies up front so dimension mismatches fail before any rollout.
  std::vector<Policy> policies;
  policies.reserve(policy_files.size());
  for (const auto& file : policy_files) {
    policies.push_back(Policy::load(file));
    if (policies.back().env_name() != env->name()) {
      throw ValidationError("eval: policy " + file + " env mismatch");
    }
  }

  // Heat map over grid cells; value is the across-policy mean of per-policy
  // mean returns at the cell center.
  const bool two_d = space.dims() >= 2;
  const int nx = grid.counts[0];
  const int ny = two_d ? grid.counts[1] : 1;
  if (space.dims() > 2) throw ValidationError("eval: heat maps support at most 2 axes");

  const PreferenceSpec pref = cfg.make_preference();
  std::vector<std::vector<std::string>> cell_rows;
  std::vector<std::vector<std::string>> cell_metric_rows;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const double cx =
          space.lower()[0] + (ix + 0.5) * (space.extent(0) / nx);
      const double cy =
          two_d ? space.lower()[1] + (iy + 0.5) * (space.extent(1) / ny) : 0.0;
      std::vector<double> p{cx};
      if (two_d) p.push_back(cy);

      std::vector<double> cell_returns;
      cell_returns.reserve(policies.size() * static_cast<std::size_t>(cfg.eval.rollouts_per_cell));
      double value = 0.0;
      for (std::size_t pi = 0; pi < policies.size(); ++pi) {
        Rng rng = Rng(eval_seed).split(mix64(0xce11 + static_cast<std::uint64_t>(iy) * 7919 +
                                             static_cast<std::uint64_t>(ix)) ^
                                       pi);
        double sum = 0.0;
        for (int r = 0; r < cfg.eval.rollouts_per_cell; ++r) {
          Rng stream = rng.fork();
          const double ret =
              rollout(*env, policies[pi], p, cfg.metric.horizon, stream).discounted_return;
          sum += ret;
          cell_returns.push_back(ret);
        }
        value += sum / cfg.eval.rollouts_per_cell;
      }
      value /= static_cast<double>(policies.size());
      if (!std::isfinite(value)) throw NumericalError("eval: non-finite cell value");
      cell_rows.push_back({std::to_string(ix), std::to_string(iy), csv::fmt(cx),
                           csv::fmt(cy), csv::fmt(value)});
      cell_metric_rows.push_back({std::to_string(ix), std::to_string(iy), csv::fmt(cx),
                                  csv::fmt(cy),
                                  csv::fmt(trajectory_metric(cell_returns, pref))});
    }
  }
  csv::write((fs::path(out_dir) / "heatmap.csv").string(),
             {"x_index", "y_index", "x_center", "y_center", "value"}, cell_rows);
  csv::write((fs::path(out_dir) / "heatmap_metric.csv").string(),
             {"x_index", "y_index", "x_center", "y_center", "value"}, cell_metric_rows);

  // Distribution-level summary from common-random-parameter trajectories.
  std::vector<std::vector<double>> params;
  const auto evals = collect_eval_returns(cfg, policy_files, eval_seed, &params);

  std::vector<std::vector<std::string>> traj_rows;
  for (std::size_t pi = 0; pi < evals.size(); ++pi) {
    for (std::size_t i = 0; i < evals[pi].returns.size(); ++i) {
      std::vector<std::string> row{evals[pi].file, std::to_string(i)};
      for (double c : params[i]) row.push_back(csv::fmt(c));
      row.push_back(csv::fmt(evals[pi].returns[i]));
      traj_rows.push_back(std::move(row));
    }
  }
  std::vector<std::string> traj_header{"policy", "trajectory"};
  for (int i = 0; i < space.dims(); ++i) traj_header.push_back("p_" + std::to_string(i));
  traj_header.emplace_back("return");
  csv::write((fs::path(out_dir) / "trajectories.csv").string(), traj_header, traj_rows);

  std::vector<std::string> header{"policy"};
  for (double k : k_list) header.push_back("metric_k_" + csv::fmt(k));
  header.emplace_back("avg_return");
  header.emplace_back("worst10_return");

  std::vector<std::vector<double>> numeric_rows;
  std::vector<std::vector<std::string>> summary_rows;
  for (const auto& pe : evals) {
    std::vector<double> nums;
    for (double k : k_list) {
      nums.push_back(trajectory_metric(pe.returns, PreferenceSpec::power(k)));
    }
    nums.push_back(mean_of(pe.returns));
    nums.push_back(worst_decile_mean(pe.returns));
    std::vector<std::string> row{pe.file};
    for (double v : nums) row.push_back(csv::fmt(v));
    summary_rows.push_back(std::move(row));
    numeric_rows.push_back(std::move(nums));
  }
  if (evals.size() > 1) {
    const std::size_t ncols = numeric_rows.front().size();
    std::vector<std::string> mean_row{"mean"};
    std::vector<std::string> std_row{"std"};
    for (std::size_t c = 0; c < ncols; ++c) {
      std::vector<double> col;
      col.reserve(numeric_rows.size());
      for (const auto& r : numeric_rows) col.push_back(r[c]);
      mean_row.push_back(csv::fmt(mean_of(col)));
      std_row.push_back(csv::fmt(std_of(col)));
    }
    summary_rows.push_back(std::move(mean_row));
    summary_rows.push_back(std::move(std_row));
  }
  csv::write((fs::path(out_dir) / "summary.csv").string(), header, summary_rows);
  log << "eval: " << cell_rows.size() << " cells, " << evals.size() << " policies, "
      << cfg.eval.n_trajectories << " trajectories each\n";
}

void run_art_diff(const ExperimentConfig& cfg,
                  const std::vector<std::string>& policy_files,
                  const std::vector<double>& k_values, const std::string& out_dir,
                  std::uint64_t eval_seed, std::ostream& log) {
  if (policy_files.size() < 2) {
    throw ValidationError("art-diff: need at least 2 policies trained at distinct k");
  }
  if (policy_files.size() != k_values.size()) {
    throw ValidationError("art-diff: one k value per policy required (--k list)");
  }
  ensure_dir(out_dir);

  auto evals = collect_eval_returns(cfg, policy_files, eval_seed, nullptr);
  const std::size_t n = evals.front().returns.size();
  if (n < 10) throw CapacityError("art-diff: fewer than 10 trajectories");

  // Sort policies by k ascending; differences are ART(k_high) - ART(k_low)
  // for consecutive pairs.
  std::vector<std::size_t> order(evals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return k_values[a] < k_values[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (k_values[order[i]] == k_values[order[i - 1]]) {
      throw ValidationError("art-diff: k values must be distinct");
    }
  }

  double global_min = std::numeric_limits<double>::infinity();
  double global_max = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> art(evals.size(), std::vector<double>(10, 0.0));
  const std::size_t group = n / 10;
  for (std::size_t pi = 0; pi < evals.size(); ++pi) {
    std::vector<double> sorted = evals[pi].returns;
    std::sort(sorted.begin(), sorted.end());
    global_min = std::min(global_min, sorted.front());
    global_max = std::max(global_max, sorted.back());
    for (int g = 0; g < 10; ++g) {
      const auto begin = static_cast<std::size_t>(g) * group;
      art[pi][static_cast<std::size_t>(g)] = mean_of(
          std::span<const double>(sorted.data() + begin, group));
    }
  }
  const double range = global_max - global_min;

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const std::size_t lo = order[i - 1];
    const std::size_t hi = order[i];
    for (int g = 0; g < 10; ++g) {
      const double diff = art[hi][static_cast<std::size_t>(g)] -
                          art[lo][static_cast<std::size_t>(g)];
      const double norm = range > 0.0 ? diff / range : 0.0;
      rows.push_back({std::to_string(g), csv::fmt(k_values[lo]), csv::fmt(k_values[hi]),
                      csv::fmt(art[lo][static_cast<std::size_t>(g)]),
                      csv::fmt(art[hi][static_cast<std::size_t>(g)]), csv::fmt(norm)});
    }
  }
  csv::write((fs::path(out_dir) / "art_diff.csv").string(),
             {"group", "k_low", "k_high", "art_low", "art_high", "norm_diff"}, rows);
  log << "art-diff: " << evals.size() << " policies, " << group * 10
      << " trajectories per policy\n";
}

}  // namespace uor
