#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "steinloss/experiment.hpp"

namespace {

using namespace steinloss;

constexpr int kExitPass = 0;
constexpr int kExitAssertionFailed = 1;
constexpr int kExitConfigError = 2;

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t flag_value,
                           const std::optional<std::uint64_t>& config_seed) {
  if (seed_opt->count() > 0) return flag_value;
  if (config_seed) return *config_seed;
  if (const char* env = std::getenv("STEINLOSS_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("STEINLOSS_SEED is not an integer");
    }
  }
  return 42;
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
}

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << content;
}

void emit_outputs(const std::string& csv_path, const std::string& json_path,
                  const std::string& csv, const json& summary) {
  if (!csv_path.empty()) write_file(csv_path, csv);
  if (!json_path.empty()) write_file(json_path, summary.dump(2) + "\n");
}

int cmd_risk_compare(const std::string& preset, const std::string& config_path,
                     const CLI::Option* seed_opt, std::uint64_t seed_flag,
                     int threads_flag, std::uint64_t n_flag,
                     const CLI::Option* n_opt, const std::string& csv_path,
                     const std::string& json_path) {
  ExperimentConfig config;
  std::optional<std::uint64_t> config_seed;
  if (!config_path.empty()) {
    const json j = load_json(config_path);
    config = experiment_from_json(j);
    if (j.contains("seed")) config_seed = config.seed;
  } else if (!preset.empty()) {
    config = make_risk_preset(preset);
  } else {
    throw ConfigError("risk-compare needs --preset or --config");
  }
  config.seed = resolve_seed(seed_opt, seed_flag, config_seed);
  config.threads = resolve_threads(threads_flag);
  if (n_opt->count() > 0) config.n = n_flag;

  const ExperimentResult res = run_risk_compare(config);
  emit_outputs(csv_path, json_path, res.csv, res.summary);
  if (csv_path.empty()) std::cout << res.csv;
  for (const auto& a : res.assertions) {
    std::cout << (a.pass ? "PASS " : "FAIL ") << a.description << " (value "
              << a.value << ", limit " << a.limit << ")\n";
  }
  if (res.summary.contains("warnings"))
    for (const auto& w : res.summary["warnings"])
      std::cout << "warning: " << w.get<std::string>() << '\n';
  std::cout << (res.pass ? "all assertions passed" : "ASSERTION FAILURE") << '\n';
  return res.pass ? kExitPass : kExitAssertionFailed;
}

int cmd_verify_identities(std::vector<std::string> identities,
                          const CLI::Option* seed_opt, std::uint64_t seed_flag,
                          int threads_flag, std::uint64_t n,
                          bool negative_control, const std::string& json_path) {
  const std::uint64_t seed = resolve_seed(seed_opt, seed_flag, std::nullopt);
  const IdentitySuiteResult suite = run_identity_suite(
      identities, n, seed, resolve_threads(threads_flag), negative_control);
  for (const auto& r : suite.reports) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": lhs " << r.lhs_mean
              << " rhs " << r.rhs_mean << " diff " << r.diff_mean << " (4se "
              << 4.0 * r.diff_se << ")\n";
  }
  if (!json_path.empty()) write_file(json_path, suite.summary.dump(2) + "\n");
  std::cout << (suite.pass ? "all identities verified" : "IDENTITY FAILURE")
            << '\n';
  return suite.pass ? kExitPass : kExitAssertionFailed;
}

int cmd_check_conditions(const std::string& preset, const std::string& config_path,
                         std::optional<int> p, std::optional<double> magnitude,
                         std::vector<double> radii, int directions,
                         std::vector<double> s_values, double tolerance,
                         const std::string& csv_path, const std::string& json_path) {
  std::string name = preset;
  ConditionOverrides overrides;
  if (!config_path.empty()) {
    const json j = load_json(config_path);
    name = j.value("preset", name);
    if (j.contains("p")) overrides.p = j.at("p").get<int>();
    if (j.contains("magnitude")) overrides.magnitude = j.at("magnitude").get<double>();
    if (j.contains("grid")) {
      GridSpec grid = GridSpec::defaults();
      const json& gj = j.at("grid");
      if (gj.contains("radii")) grid.radii = gj.at("radii").get<std::vector<double>>();
      if (gj.contains("directions"))
        grid.directions_per_radius = gj.at("directions").get<int>();
      if (gj.contains("s_values"))
        grid.s_values = gj.at("s_values").get<std::vector<double>>();
      if (gj.contains("tolerance")) grid.tolerance = gj.at("tolerance").get<double>();
      overrides.grid = grid;
    }
  }
  if (name.empty()) throw ConfigError("check-conditions needs --preset or --config");
  if (p) overrides.p = p;
  if (magnitude) overrides.magnitude = magnitude;
  if (!radii.empty() || directions > 0 || !s_values.empty() || tolerance != 0.0) {
    GridSpec grid = overrides.grid ? *overrides.grid : GridSpec::defaults();
    if (!radii.empty()) grid.radii = radii;
    if (directions > 0) grid.directions_per_radius = directions;
    if (!s_values.empty()) grid.s_values = s_values;
    if (tolerance != 0.0) grid.tolerance = tolerance;
    overrides.grid = grid;
  }

  const ConditionRun run = run_condition_preset(name, overrides);
  emit_outputs(csv_path, json_path, run.csv, run.summary);
  std::cout << run.summary.dump(2) << '\n';
  std::cout << (run.pass ? "condition holds on the grid (evidence, not proof)"
                         : "CONDITION FAILED on the grid")
            << '\n';
  return run.pass ? kExitPass : kExitAssertionFailed;
}

int cmd_model_select(const std::string& data_path, const std::string& response,
                     std::vector<double> lambdas, std::optional<double> sigma2,
                     const std::string& config_path, const std::string& csv_path,
                     const std::string& json_path) {
  std::string data = data_path;
  std::string resp = response;
  if (!config_path.empty()) {
    const json j = load_json(config_path);
    data = j.value("data", data);
    resp = j.value("response", resp);
    if (lambdas.empty() && j.contains("lambdas"))
      lambdas = j.at("lambdas").get<std::vector<double>>();
    if (!sigma2 && j.contains("sigma2")) sigma2 = j.at("sigma2").get<double>();
  }
  if (data.empty() || resp.empty())
    throw ConfigError("model-select needs --data and --response");
  if (lambdas.empty()) throw ConfigError("model-select needs a lambda grid");

  const LinearModelData model = read_csv_file(data, resp);
  const double s2 = sigma2 ? *sigma2 : sigma2_unbiased(model);
  const SelectionResult res = select(model, lambdas, s2);

  std::ostringstream csv;
  res.write_csv(csv);
  json summary{{"chosen_lambda", res.chosen_lambda},
               {"sigma2_hat", s2},
               {"n", model.n()},
               {"p", model.p()}};
  emit_outputs(csv_path, json_path, csv.str(), summary);
  if (csv_path.empty()) std::cout << csv.str();
  std::cout << "chosen lambda: " << res.chosen_lambda << " (sigma2_hat " << s2
            << ")\n";
  return kExitPass;
}

int cmd_list_presets(const std::string& filter) {
  const auto matches = [&](const std::string& name) {
    return filter.empty() || name.find(filter) != std::string::npos;
  };
  for (const auto& name : list_risk_presets())
    if (matches(name)) std::cout << "risk-compare: " << name << '\n';
  for (const auto& name : list_condition_presets())
    if (matches(name)) std::cout << "check-conditions: " << name << '\n';
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-estimation experiments for shrinkage estimators"};
  app.require_subcommand(1);

  std::uint64_t seed_flag = 42;
  int threads_flag = 0;

  // risk-compare
  auto* rc = app.add_subcommand("risk-compare",
                                "Monte Carlo risk comparison of loss estimators");
  std::string rc_preset, rc_config, rc_csv, rc_json;
  std::uint64_t rc_n = kDefaultRiskN;
  rc->add_option("--preset", rc_preset, "preset name (see list-presets)");
  rc->add_option("--config", rc_config, "JSON config file");
  auto* rc_seed = rc->add_option("--seed", seed_flag, "master seed");
  rc->add_option("--threads", threads_flag, "worker threads (0 = auto)");
  auto* rc_nopt = rc->add_option("--n", rc_n, "replications per point");
  rc->add_option("--csv", rc_csv, "write rows to this CSV file");
  rc->add_option("--json", rc_json, "write the JSON summary here");

  // verify-identities
  auto* vi = app.add_subcommand("verify-identities",
                                "Monte Carlo checks of the Stein-type identities");
  std::vector<std::string> vi_names;
  std::uint64_t vi_n = kDefaultIdentityN;
  bool vi_negative = false;
  std::string vi_json;
  vi->add_option("--identity", vi_names,
                 "stein | lemma-a1 | lemma-a5 | corollary-a (default: all)");
  auto* vi_seed = vi->add_option("--seed", seed_flag, "master seed");
  vi->add_option("--threads", threads_flag, "worker threads (0 = auto)");
  vi->add_option("--n", vi_n, "replications per identity");
  vi->add_flag("--negative-control", vi_negative,
               "run the broken-input controls instead (expected to fail)");
  vi->add_option("--json", vi_json, "write the JSON summary here");

  // check-conditions
  auto* cc = app.add_subcommand("check-conditions",
                                "grid checks of the domination inequalities");
  std::string cc_preset, cc_config, cc_csv, cc_json;
  int cc_p = 0, cc_directions = 0;
  double cc_magnitude = 0.0, cc_tolerance = 0.0;
  std::vector<double> cc_radii, cc_svalues;
  cc->add_option("--preset", cc_preset, "preset name (see list-presets)");
  cc->add_option("--config", cc_config, "JSON config file");
  auto* cc_popt = cc->add_option("--p", cc_p, "dimension override");
  auto* cc_mopt =
      cc->add_option("--magnitude", cc_magnitude, "correction magnitude override");
  cc->add_option("--radii", cc_radii, "grid radii")->delimiter(',');
  cc->add_option("--directions", cc_directions, "directions per radius");
  cc->add_option("--s-values", cc_svalues, "s grid (unknown variance)")
      ->delimiter(',');
  cc->add_option("--tolerance", cc_tolerance, "pass tolerance");
  cc->add_option("--csv", cc_csv, "write per-point LHS values here");
  cc->add_option("--json", cc_json, "write the JSON summary here");

  // model-select
  auto* ms = app.add_subcommand("model-select",
                                "SURE/Cp* ridge selection on a CSV data set");
  std::string ms_data, ms_response, ms_config, ms_csv, ms_json;
  std::vector<double> ms_lambdas;
  double ms_sigma2 = 0.0;
  ms->add_option("--data", ms_data, "CSV file with a header row");
  ms->add_option("--response", ms_response, "response column name");
  ms->add_option("--lambdas", ms_lambdas, "ridge penalty grid")->delimiter(',');
  auto* ms_s2opt = ms->add_option("--sigma2", ms_sigma2,
                                  "variance override (default: residual estimate)");
  ms->add_option("--config", ms_config, "JSON config file");
  ms->add_option("--csv", ms_csv, "write the Cp* table here");
  ms->add_option("--json", ms_json, "write the JSON summary here");

  // list-presets
  auto* lp = app.add_subcommand("list-presets", "list available presets");
  std::string lp_filter;
  lp->add_option("filter", lp_filter, "substring filter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (rc->parsed())
      return cmd_risk_compare(rc_preset, rc_config, rc_seed, seed_flag,
                              threads_flag, rc_n, rc_nopt, rc_csv, rc_json);
    if (vi->parsed())
      return cmd_verify_identities(vi_names, vi_seed, seed_flag, threads_flag,
                                   vi_n, vi_negative, vi_json);
    if (cc->parsed())
      return cmd_check_conditions(
          cc_preset, cc_config,
          cc_popt->count() ? std::optional<int>(cc_p) : std::nullopt,
          cc_mopt->count() ? std::optional<double>(cc_magnitude) : std::nullopt,
          cc_radii, cc_directions, cc_svalues, cc_tolerance, cc_csv, cc_json);
    if (ms->parsed())
      return cmd_model_select(
          ms_data, ms_response, ms_lambdas,
          ms_s2opt->count() ? std::optional<double>(ms_sigma2) : std::nullopt,
          ms_config, ms_csv, ms_json);
    if (lp->parsed()) return cmd_list_presets(lp_filter);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}
