#include "uor/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "uor/errors.hpp"

namespace uor {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& ctx) {
  if (!j.is_object()) {
    throw ValidationError("config: '" + ctx + "' must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ValidationError("config: unknown key '" + key + "' in " + ctx);
    }
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: bad value for '" + key + "'");
  }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) {
    throw ValidationError("config: missing key '" + key + "' in " + ctx);
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: bad value for '" + key + "' in " + ctx);
  }
}

DistributionSpec parse_distribution_spec(const json& j, const std::string& ctx) {
  check_keys(j, {"kind", "mean", "std", "points", "weights", "bounds", "components"}, ctx);
  DistributionSpec spec;
  spec.kind = require<std::string>(j, "kind", ctx);
  if (spec.kind == "uniform") {
    // no extra keys
  } else if (spec.kind == "truncated_gaussian") {
    spec.mean = require<std::vector<double>>(j, "mean", ctx);
    spec.stddev = require<std::vector<double>>(j, "std", ctx);
  } else if (spec.kind == "empirical") {
    spec.points = require<std::vector<std::vector<double>>>(j, "points", ctx);
    spec.weights = require<std::vector<double>>(j, "weights", ctx);
  } else if (spec.kind == "mixture") {
    if (!j.contains("components") || !j.at("components").is_array()) {
      throw ValidationError("config: mixture needs a 'components' array in " + ctx);
    }
    int i = 0;
    for (const auto& c : j.at("components")) {
      spec.components.push_back(
          parse_distribution_spec(c, ctx + ".components[" + std::to_string(i++) + "]"));
    }
    spec.weights = require<std::vector<double>>(j, "weights", ctx);
  } else {
    throw ValidationError("config: unknown distribution kind '" + spec.kind + "'");
  }
  return spec;
}

json distribution_to_json(const DistributionSpec& spec) {
  json j;
  j["kind"] = spec.kind;
  if (spec.kind == "truncated_gaussian") {
    j["mean"] = spec.mean;
    j["std"] = spec.stddev;
  } else if (spec.kind == "empirical") {
    j["points"] = spec.points;
    j["weights"] = spec.weights;
  } else if (spec.kind == "mixture") {
    j["weights"] = spec.weights;
    j["components"] = json::array();
    for (const auto& c : spec.components) j["components"].push_back(distribution_to_json(c));
  }
  return j;
}

ParamDistribution build_distribution(const DistributionSpec& spec,
                                     const ParameterSpace& space) {
  if (spec.kind == "uniform") return ParamDistribution::uniform(space);
  if (spec.kind == "truncated_gaussian") {
    return ParamDistribution::truncated_gaussian(space, spec.mean, spec.stddev);
  }
  if (spec.kind == "empirical") {
    return ParamDistribution::empirical(space, spec.points, spec.weights);
  }
  if (spec.kind == "mixture") {
    std::vector<ParamDistribution> comps;
    comps.reserve(spec.components.size());
    for (const auto& c : spec.components) comps.push_back(build_distribution(c, space));
    return ParamDistribution::mixture(std::move(comps), spec.weights);
  }
  throw ValidationError("config: unknown distribution kind '" + spec.kind + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: parse error: ") + e.what());
  }
  check_keys(j,
             {"version", "env", "space", "distribution", "preference", "mode",
              "metric", "trainer", "eval", "seeds", "output_dir"},
             "config");

  ExperimentConfig cfg;
  cfg.version = require<int>(j, "version", "config");
  if (cfg.version != 1) {
    throw ValidationError("config: unsupported version " + std::to_string(cfg.version));
  }

  // env ("env" is accepted as an alias of "name" for the selector key)
  const json& je = j.contains("env") ? j.at("env") : json::object();
  if (!j.contains("env")) throw ValidationError("config: missing 'env' block");
  const std::string selector = je.contains("name") ? "name" : "env";
  cfg.env_name = require<std::string>(je, selector, "env");
  if (cfg.env_name == "param_chain") {
    check_keys(je, {"name", "env", "n_states", "gamma", "goal_reward", "left_reward", "start_index"}, "env");
    cfg.chain.n_states = get_or<int>(je, "n_states", cfg.chain.n_states);
    cfg.chain.gamma = get_or<double>(je, "gamma", cfg.chain.gamma);
    cfg.chain.goal_reward = get_or<double>(je, "goal_reward", cfg.chain.goal_reward);
    cfg.chain.left_reward = get_or<double>(je, "left_reward", cfg.chain.left_reward);
    cfg.chain.start_index = get_or<int>(je, "start_index", cfg.chain.start_index);
  } else if (cfg.env_name == "param_mass") {
    check_keys(je,
               {"name", "env", "gamma", "horizon", "control_gain", "action_cost",
                "x0", "x_max", "u_max"},
               "env");
    cfg.mass.gamma = get_or<double>(je, "gamma", cfg.mass.gamma);
    cfg.mass.horizon = get_or<int>(je, "horizon", cfg.mass.horizon);
    cfg.mass.control_gain = get_or<double>(je, "control_gain", cfg.mass.control_gain);
    cfg.mass.action_cost = get_or<double>(je, "action_cost", cfg.mass.action_cost);
    cfg.mass.x0 = get_or<double>(je, "x0", cfg.mass.x0);
    cfg.mass.x_max = get_or<double>(je, "x_max", cfg.mass.x_max);
    cfg.mass.u_max = get_or<double>(je, "u_max", cfg.mass.u_max);
  } else {
    throw ValidationError("config: unknown env '" + cfg.env_name + "'");
  }

  // space
  if (!j.contains("space")) throw ValidationError("config: missing 'space' block");
  check_keys(j.at("space"), {"lower", "upper"}, "space");
  cfg.space_lower = require<std::vector<double>>(j.at("space"), "lower", "space");
  cfg.space_upper = require<std::vector<double>>(j.at("space"), "upper", "space");

  // distribution
  if (!j.contains("distribution")) throw ValidationError("config: missing 'distribution' block");
  cfg.distribution = parse_distribution_spec(j.at("distribution"), "distribution");
  if (j.at("distribution").contains("bounds")) {
    const json& b = j.at("distribution").at("bounds");
    check_keys(b, {"lower", "upper"}, "distribution.bounds");
    if (require<std::vector<double>>(b, "lower", "distribution.bounds") != cfg.space_lower ||
        require<std::vector<double>>(b, "upper", "distribution.bounds") != cfg.space_upper) {
      throw ValidationError("config: distribution bounds disagree with the space block");
    }
  }

  // preference
  if (!j.contains("preference")) throw ValidationError("config: missing 'preference' block");
  const json& jp = j.at("preference");
  check_keys(jp, {"kind", "k", "knots"}, "preference");
  cfg.preference.kind = require<std::string>(jp, "kind", "preference");
  if (cfg.preference.kind == "power") {
    if (jp.contains("k") && jp.at("k").is_string()) {
      const auto s = jp.at("k").get<std::string>();
      if (s != "inf") throw ValidationError("config: preference k must be a number or \"inf\"");
      cfg.preference.k = std::numeric_limits<double>::infinity();
    } else {
      cfg.preference.k = require<double>(jp, "k", "preference");
    }
  } else if (cfg.preference.kind == "table") {
    const auto knots = require<std::vector<std::vector<double>>>(jp, "knots", "preference");
    for (const auto& kn : knots) {
      if (kn.size() != 2) throw ValidationError("config: preference knots must be [x, w] pairs");
      cfg.preference.knots.emplace_back(kn[0], kn[1]);
    }
  } else {
    throw ValidationError("config: unknown preference kind '" + cfg.preference.kind + "'");
  }

  // mode + metric sizing
  cfg.mode = require<std::string>(j, "mode", "config");
  if (cfg.mode != "db" && cfg.mode != "df") {
    throw ValidationError("config: mode must be 'db' or 'df'");
  }
  if (!j.contains("metric")) throw ValidationError("config: missing 'metric' block");
  const json& jm = j.at("metric");
  check_keys(jm,
             {"delta", "n_rollouts_per_block", "n_mc_masses", "n1", "n2",
              "param_source", "step_bound", "horizon", "epsilon", "rho", "c1",
              "c2", "delta_scale"},
             "metric");
  cfg.metric.n_rollouts_per_block =
      get_or<int>(jm, "n_rollouts_per_block", cfg.metric.n_rollouts_per_block);
  cfg.metric.n_mc_masses = get_or<std::int64_t>(jm, "n_mc_masses", cfg.metric.n_mc_masses);
  cfg.metric.param_source = get_or<std::string>(jm, "param_source", cfg.metric.param_source);
  cfg.metric.step_bound = get_or<double>(jm, "step_bound", cfg.metric.step_bound);
  cfg.metric.horizon = get_or<int>(jm, "horizon", cfg.metric.horizon);
  if (cfg.metric.param_source != "iid" && cfg.metric.param_source != "drift") {
    throw ValidationError("config: param_source must be 'iid' or 'drift'");
  }

  const bool has_eps = jm.contains("epsilon");
  if (cfg.mode == "db") {
    if (jm.contains("delta")) {
      cfg.metric.delta = require<double>(jm, "delta", "metric");
    } else if (has_eps) {
      cfg.metric.delta = suggest_delta(require<double>(jm, "epsilon", "metric"),
                                       get_or<double>(jm, "delta_scale", 1.0));
    } else {
      throw ValidationError("config: db mode needs 'delta' or 'epsilon' sizing");
    }
  } else {
    if (jm.contains("n1") || jm.contains("n2")) {
      cfg.metric.n1 = require<std::int64_t>(jm, "n1", "metric");
      cfg.metric.n2 = require<std::int64_t>(jm, "n2", "metric");
    } else if (has_eps) {
      const auto sizes = suggest_cluster_sizes(
          require<double>(jm, "epsilon", "metric"), require<double>(jm, "rho", "metric"),
          static_cast<int>(cfg.space_lower.size()), get_or<double>(jm, "c1", 1.0),
          get_or<double>(jm, "c2", 1.0));
      cfg.metric.n1 = sizes.n1;
      cfg.metric.n2 = sizes.n2;
    } else {
      throw ValidationError("config: df mode needs 'n1'/'n2' or 'epsilon'/'rho' sizing");
    }
  }

  // trainer (learning-rate default is policy-kind dependent)
  cfg.trainer.learning_rate = cfg.env_name == "param_mass" ? 0.005 : 0.05;
  if (j.contains("trainer")) {
    const json& jt = j.at("trainer");
    check_keys(jt,
               {"max_iterations", "learning_rate", "baseline", "entropy_bonus",
                "accumulate_clusters"},
               "trainer");
    cfg.trainer.max_iterations = get_or<int>(jt, "max_iterations", cfg.trainer.max_iterations);
    cfg.trainer.learning_rate = get_or<double>(jt, "learning_rate", cfg.trainer.learning_rate);
    cfg.trainer.baseline = get_or<std::string>(jt, "baseline", cfg.trainer.baseline);
    cfg.trainer.entropy_bonus = get_or<double>(jt, "entropy_bonus", cfg.trainer.entropy_bonus);
    cfg.trainer.accumulate_clusters =
        get_or<bool>(jt, "accumulate_clusters", cfg.trainer.accumulate_clusters);
    if (cfg.trainer.baseline != "none" && cfg.trainer.baseline != "mean_return") {
      throw ValidationError("config: baseline must be 'none' or 'mean_return'");
    }
  }

  // eval
  if (j.contains("eval")) {
    const json& jv = j.at("eval");
    check_keys(jv, {"rollouts_per_cell", "n_trajectories"}, "eval");
    cfg.eval.rollouts_per_cell = get_or<int>(jv, "rollouts_per_cell", cfg.eval.rollouts_per_cell);
    cfg.eval.n_trajectories = get_or<int>(jv, "n_trajectories", cfg.eval.n_trajectories);
  }

  cfg.seeds = require<std::vector<std::uint64_t>>(j, "seeds", "config");
  if (cfg.seeds.empty()) throw ValidationError("config: seeds must be non-empty");
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);

  // Cross-checks: build everything once so dimension mismatches surface now.
  const auto env = cfg.make_env();
  const auto space = cfg.make_space();
  if (env->param_dims() != space.dims()) {
    throw ValidationError("config: env expects " + std::to_string(env->param_dims()) +
                          "-D parameters but the space has " +
                          std::to_string(space.dims()) + " dims");
  }
  cfg.make_distribution();
  cfg.make_preference();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::unique_ptr<Pmdp> ExperimentConfig::make_env() const {
  if (env_name == "param_chain") return std::make_unique<ParamChainEnv>(chain);
  if (env_name == "param_mass") return std::make_unique<ParamMassEnv>(mass);
  throw ValidationError("config: unknown env '" + env_name + "'");
}

ParameterSpace ExperimentConfig::make_space() const {
  return ParameterSpace(space_lower, space_upper);
}

ParamDistribution ExperimentConfig::make_distribution() const {
  return build_distribution(distribution, make_space());
}

PreferenceSpec ExperimentConfig::make_preference() const {
  return make_preference(std::numeric_limits<double>::quiet_NaN());
}

PreferenceSpec ExperimentConfig::make_preference(double k_override) const {
  if (!std::isnan(k_override)) return PreferenceSpec::power(k_override);
  if (preference.kind == "power") return PreferenceSpec::power(preference.k);
  return PreferenceSpec::tabulated(preference.knots);
}

Division ExperimentConfig::make_division() const {
  Division div = set_division(make_space(), metric.delta);
  // Fixed stream: masses are part of the experiment definition, not of any
  // seed's randomness (only mixtures actually consume it).
  Rng mass_rng(0x6d61737365734d43ULL);
  compute_masses(div, make_distribution(), mass_rng, metric.n_mc_masses);
  return div;
}

TrainSetup ExperimentConfig::make_train_setup(std::uint64_t seed) const {
  TrainSetup setup;
  setup.mode = mode == "db" ? MetricMode::DB : MetricMode::DF;
  setup.pref = make_preference();
  setup.max_iterations = trainer.max_iterations;
  setup.learning_rate = trainer.learning_rate;
  setup.baseline = trainer.baseline == "none" ? BaselineKind::None : BaselineKind::MeanReturn;
  setup.entropy_bonus = trainer.entropy_bonus;
  setup.seed = seed;
  setup.accumulate_clusters = trainer.accumulate_clusters;
  if (setup.mode == MetricMode::DB) {
    DbMetricConfig db;
    db.division = make_division();
    db.n_rollouts_per_block = metric.n_rollouts_per_block;
    db.horizon = metric.horizon;
    setup.db = std::move(db);
  } else {
    DfMetricConfig df;
    df.n1 = static_cast<int>(metric.n1);
    df.n2 = static_cast<int>(metric.n2);
    df.horizon = metric.horizon;
    setup.df = df;
    setup.df_dist = make_distribution();
    setup.df_source.iid = metric.param_source == "iid";
    setup.df_source.step_bound = metric.step_bound;
  }
  return setup;
}

std::string ExperimentConfig::serialize() const {
  json j;
  j["version"] = version;
  if (env_name == "param_chain") {
    j["env"] = {{"name", env_name},
                {"n_states", chain.n_states},
                {"gamma", chain.gamma},
                {"goal_reward", chain.goal_reward},
                {"left_reward", chain.left_reward},
                {"start_index", chain.start_index}};
  } else {
    j["env"] = {{"name", env_name},         {"gamma", mass.gamma},
                {"horizon", mass.horizon},  {"control_gain", mass.control_gain},
                {"action_cost", mass.action_cost}, {"x0", mass.x0},
                {"x_max", mass.x_max},      {"u_max", mass.u_max}};
  }
  j["space"] = {{"lower", space_lower}, {"upper", space_upper}};
  j["distribution"] = distribution_to_json(distribution);
  if (preference.kind == "power") {
    if (std::isinf(preference.k)) {
      j["preference"] = {{"kind", "power"}, {"k", "inf"}};
    } else {
      j["preference"] = {{"kind", "power"}, {"k", preference.k}};
    }
  } else {
    json knots = json::array();
    for (const auto& [x, w] : preference.knots) knots.push_back({x, w});
    j["preference"] = {{"kind", "table"}, {"knots", std::move(knots)}};
  }
  j["mode"] = mode;
  json jm;
  jm["n_rollouts_per_block"] = metric.n_rollouts_per_block;
  jm["n_mc_masses"] = metric.n_mc_masses;
  jm["param_source"] = metric.param_source;
  jm["step_bound"] = metric.step_bound;
  jm["horizon"] = metric.horizon;
  if (mode == "db") {
    jm["delta"] = metric.delta;
  } else {
    jm["n1"] = metric.n1;
    jm["n2"] = metric.n2;
  }
  j["metric"] = std::move(jm);
  j["trainer"] = {{"max_iterations", trainer.max_iterations},
                  {"learning_rate", trainer.learning_rate},
                  {"baseline", trainer.baseline},
                  {"entropy_bonus", trainer.entropy_bonus},
                  {"accumulate_clusters", trainer.accumulate_clusters}};
  j["eval"] = {{"rollouts_per_cell", eval.rollouts_per_cell},
               {"n_trajectories", eval.n_trajectories}};
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  return j.dump(2) + "\n";
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return version == other.version && env_name == other.env_name &&
         chain == other.chain && mass == other.mass &&
         space_lower == other.space_lower && space_upper == other.space_upper &&
         distribution == other.distribution && preference == other.preference &&
         mode == other.mode && metric == other.metric && trainer == other.trainer &&
         eval == other.eval && seeds == other.seeds && output_dir == other.output_dir;
}

}  // namespace uor
