#include "steinloss/experiment.hpp"

#include <cmath>
#include <sstream>

#include "steinloss/csv.hpp"

namespace steinloss {

namespace {

std::string estimator_label(const EstimatorSpec& est) {
  switch (est.kind) {
    case EstimatorSpec::Kind::mle: return "mle";
    case EstimatorSpec::Kind::james_stein: return "james_stein";
    case EstimatorSpec::Kind::pseudo_bayes: return "pseudo_bayes";
    case EstimatorSpec::Kind::js_unknown_var: return "js_unknown_var";
    case EstimatorSpec::Kind::residual_shrinkage: return "residual_shrinkage";
  }
  return "unknown";
}

json report_to_json(const RiskReport& r) {
  json j{{"mean", r.mean}, {"se", r.std_error}, {"n", r.n},
         {"seed", r.seed}, {"rejected", r.rejected}};
  if (r.paired_diff_mean) j["paired_diff_mean"] = *r.paired_diff_mean;
  if (r.paired_diff_se) j["paired_diff_se"] = *r.paired_diff_se;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

const LossEstimatorSpec& find_delta(const ExperimentConfig& config,
                                    const std::string& name) {
  for (const auto& d : config.deltas)
    if (d.name == name) return d;
  throw ConfigError("unknown loss estimator '" + name + "' in assertion");
}

}  // namespace

ExperimentResult run_risk_compare(const ExperimentConfig& config) {
  if (config.experiment == "bayes-paradox-1d") return run_bayes_paradox_1d(config);
  if (config.deltas.empty()) throw ConfigError("no loss estimators configured");
  if (config.theta_radii.empty()) throw ConfigError("theta sweep is empty");

  ExperimentResult res;
  std::ostringstream csv;
  csv << "theta_norm,estimator,loss_estimator,mean,se,n,seed,sigma2\n";

  std::vector<double> sigma2s = config.sigma2_values;
  if (sigma2s.empty()) sigma2s = {config.sampler.sigma2};

  json rows = json::array();
  json assertions = json::array();
  const std::string est_label = estimator_label(config.estimator);

  for (double sigma2 : sigma2s) {
    SamplerSpec sampler = config.sampler;
    sampler.sigma2 = sigma2;

    for (double r : config.theta_radii) {
      Vec theta = Vec::Zero(sampler.p);
      theta[0] = r;
      for (const auto& d : config.deltas) {
        const RiskReport rep = mc_loss_estimator_risk(
            d, config.estimator, sampler, theta, config.n, config.seed,
            config.threads);
        csv << csv_double(r) << ',' << est_label << ',' << d.name << ','
            << csv_double(rep.mean) << ',' << csv_double(rep.std_error) << ','
            << rep.n << ',' << rep.seed << ',' << csv_double(sigma2) << '\n';
        json row = report_to_json(rep);
        row["theta_norm"] = r;
        row["loss_estimator"] = d.name;
        row["sigma2"] = sigma2;
        rows.push_back(std::move(row));
      }
      for (const auto& [a_name, b_name] : config.assert_dominates) {
        const RiskReport diff = mc_risk_difference(
            find_delta(config, a_name), find_delta(config, b_name),
            config.estimator, sampler, theta, config.n, config.seed,
            config.threads);
        AssertionResult ar;
        ar.value = *diff.paired_diff_mean;
        ar.limit = 4.0 * *diff.paired_diff_se;
        ar.pass = ar.value <= ar.limit;
        std::ostringstream desc;
        desc << a_name << " dominates " << b_name << " at theta_norm=" << r
             << " sigma2=" << sigma2;
        ar.description = desc.str();
        res.assertions.push_back(ar);
        assertions.push_back(json{{"description", ar.description},
                                  {"paired_diff_mean", ar.value},
                                  {"limit_4se", ar.limit},
                                  {"pass", ar.pass}});
      }
    }

    // Equivariance spot check: risks at r e1 and at a rotated theta of the
    // same norm agree within 4 SE.
    const double rmax =
        *std::max_element(config.theta_radii.begin(), config.theta_radii.end());
    if (rmax > 0.0 && sampler.p >= 2) {
      Vec theta1 = Vec::Zero(sampler.p);
      theta1[0] = rmax;
      Vec theta2 = Vec::Zero(sampler.p);
      theta2[0] = rmax / std::sqrt(2.0);
      theta2[1] = rmax / std::sqrt(2.0);
      const auto& d = config.deltas.front();
      const RiskReport r1 = mc_loss_estimator_risk(d, config.estimator, sampler,
                                                   theta1, config.n, config.seed,
                                                   config.threads);
      const RiskReport r2 = mc_loss_estimator_risk(d, config.estimator, sampler,
                                                   theta2, config.n,
                                                   config.seed + 1, config.threads);
      AssertionResult ar;
      ar.value = std::abs(r1.mean - r2.mean);
      ar.limit = 4.0 * std::sqrt(r1.std_error * r1.std_error +
                                 r2.std_error * r2.std_error);
      ar.pass = ar.value <= ar.limit;
      ar.description = "rotated-theta spot check (sigma2=" + csv_double(sigma2) + ")";
      res.assertions.push_back(ar);
      assertions.push_back(json{{"description", ar.description},
                                {"abs_diff", ar.value},
                                {"limit_4se", ar.limit},
                                {"pass", ar.pass}});
    }
  }

  res.pass = true;
  for (const auto& a : res.assertions) res.pass = res.pass && a.pass;

  res.csv = csv.str();
  res.summary = json{{"experiment", config.experiment},
                     {"preset", config.name},
                     {"estimator", est_label},
                     {"n", config.n},
                     {"seed", config.seed},
                     {"rows", rows},
                     {"assertions", assertions},
                     {"pass", res.pass}};
  const auto warnings =
      finiteness_warnings(config.estimator, config.deltas, config.sampler);
  if (!warnings.empty()) res.summary["warnings"] = warnings;
  return res;
}

ExperimentResult run_bayes_paradox_1d(const ExperimentConfig& config) {
  // X ~ N(theta, 1); theta^2 estimated by X^2 + E0[X^2] (generalized Bayes,
  // uniform prior) and by the unbiased X^2 - E0[X^2]; E0[X^2] = 1 in closed form.
  const double e0x2 = 1.0;
  ExperimentResult res;
  std::ostringstream csv;
  csv << "theta_norm,estimator,loss_estimator,mean,se,n,seed,sigma2\n";
  json rows = json::array();
  json assertions = json::array();

  for (double theta : config.theta_radii) {
    const auto run = mc_paired_custom(
        config.n, config.seed, config.threads, [&](Rng& rng) {
          const double x = theta + rng.normal();
          const double target = theta * theta;
          const double d_bayes = x * x + e0x2;
          const double d_unb = x * x - e0x2;
          const double la = loss_estimation_loss(d_bayes, target);
          const double lb = loss_estimation_loss(d_unb, target);
          return std::array<double, 3>{la, lb, la - lb};
        });
    for (const auto& [label, acc] :
         {std::pair<const char*, const McAccum*>{"posterior", &run.a},
          std::pair<const char*, const McAccum*>{"unbiased", &run.b}}) {
      csv << csv_double(theta) << ",theta2," << label << ','
          << csv_double(acc->mean) << ',' << csv_double(acc->se()) << ','
          << config.n << ',' << config.seed << ",1\n";
      rows.push_back(json{{"theta_norm", theta},
                          {"loss_estimator", label},
                          {"mean", acc->mean},
                          {"se", acc->se()}});
    }
    // risk difference equals 4 (E0[X^2])^2 for every theta
    AssertionResult ar;
    ar.value = std::abs(run.diff.mean - 4.0 * e0x2 * e0x2);
    ar.limit = 4.0 * run.diff.se();
    ar.pass = ar.value <= ar.limit;
    ar.description = "risk difference equals 4 at theta=" + csv_double(theta);
    res.assertions.push_back(ar);
    assertions.push_back(json{{"description", ar.description},
                              {"abs_error", ar.value},
                              {"limit_4se", ar.limit},
                              {"pass", ar.pass}});
  }

  res.pass = true;
  for (const auto& a : res.assertions) res.pass = res.pass && a.pass;
  res.csv = csv.str();
  res.summary = json{{"experiment", "bayes-paradox-1d"},
                     {"preset", config.name},
                     {"n", config.n},
                     {"seed", config.seed},
                     {"rows", rows},
                     {"assertions", assertions},
                     {"pass", res.pass}};
  return res;
}

// JSON config ---------------------------------------------------------------

ScalarField scalar_field_from_json(const json& j) {
  const std::string name = j.at("name").get<std::string>();
  std::vector<double> params;
  if (j.contains("params")) params = j.at("params").get<std::vector<double>>();
  auto field = field_library(name, params);
  if (!std::holds_alternative<ScalarField>(field))
    throw ConfigError("field '" + name + "' is not scalar");
  ScalarField f = std::get<ScalarField>(field);
  if (j.contains("scale")) f = scale_field(f, j.at("scale").get<double>());
  return f;
}

VectorField vector_field_from_json(const json& j) {
  const std::string name = j.at("name").get<std::string>();
  std::vector<double> params;
  if (j.contains("params")) params = j.at("params").get<std::vector<double>>();
  auto field = field_library(name, params);
  if (!std::holds_alternative<VectorField>(field))
    throw ConfigError("field '" + name + "' is not vector-valued");
  VectorField g = std::get<VectorField>(field);
  if (j.contains("scale")) g = scale_field(g, j.at("scale").get<double>());
  return g;
}

namespace {

MixingSpec mixing_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "point_mass") return MixingSpec::point_mass(j.at("value").get<double>());
  if (kind == "two_point")
    return MixingSpec::two_point(j.at("s1").get<double>(), j.at("s2").get<double>(),
                                 j.at("w").get<double>());
  if (kind == "gamma")
    return MixingSpec::gamma_mixing(j.at("shape").get<double>(),
                                    j.at("rate").get<double>());
  throw ConfigError("unknown mixing kind '" + kind + "'");
}

RadialSpec radial_from_json(const json& j, int default_dof) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed") return RadialSpec::fixed(j.at("radius").get<double>());
  if (kind == "chi") {
    const double dof = j.contains("dof") ? j.at("dof").get<double>()
                                         : static_cast<double>(default_dof);
    const double scale = j.contains("scale") ? j.at("scale").get<double>() : 1.0;
    return RadialSpec::chi(dof, scale);
  }
  if (kind == "mixture_induced") {
    const double dof = j.contains("dof") ? j.at("dof").get<double>()
                                         : static_cast<double>(default_dof);
    return RadialSpec::mixture_induced(mixing_from_json(j.at("mixing")), dof);
  }
  throw ConfigError("unknown radial kind '" + kind + "'");
}

}  // namespace

SamplerSpec sampler_from_json(const json& j) {
  SamplerSpec s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "normal") s.kind = SamplerSpec::Kind::normal;
  else if (kind == "scale_mixture") s.kind = SamplerSpec::Kind::scale_mixture;
  else if (kind == "radial_spherical") s.kind = SamplerSpec::Kind::radial_spherical;
  else if (kind == "spherical_residual") s.kind = SamplerSpec::Kind::spherical_residual;
  else throw ConfigError("unknown sampler kind '" + kind + "'");
  s.p = j.at("p").get<int>();
  if (j.contains("k")) s.k = j.at("k").get<int>();
  if (j.contains("sigma2")) s.sigma2 = j.at("sigma2").get<double>();
  if (j.contains("mixing")) s.mixing = mixing_from_json(j.at("mixing"));
  if (j.contains("radial")) s.radial = radial_from_json(j.at("radial"), s.p + s.k);
  s.validate();
  return s;
}

EstimatorSpec estimator_from_json(const json& j, const SamplerSpec& sampler) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "mle") return EstimatorSpec::mle_spec(sampler.p);
  if (kind == "james_stein") return EstimatorSpec::james_stein_spec(sampler.p);
  if (kind == "pseudo_bayes")
    return EstimatorSpec::pseudo_bayes_spec(sampler.p,
                                            scalar_field_from_json(j.at("m")));
  if (kind == "js_unknown_var")
    return EstimatorSpec::js_unknown_var_spec(sampler.p, sampler.k);
  if (kind == "residual_shrinkage")
    return EstimatorSpec::residual_shrinkage_spec(
        sampler.p, sampler.k, vector_field_from_json(j.at("g")));
  throw ConfigError("unknown estimator kind '" + kind + "'");
}

LossEstimatorSpec loss_estimator_from_json(const json& j, const SamplerSpec& sampler) {
  LossEstimatorSpec d;
  d.name = j.value("name", "unnamed");
  const std::string base = j.at("base").get<std::string>();
  using Base = LossEstimatorSpec::Base;
  if (base == "sure_known_var") d.base = Base::sure_known_var;
  else if (base == "unbiased_unknown_var") d.base = Base::unbiased_unknown_var;
  else if (base == "constant_spherical") d.base = Base::constant_spherical;
  else if (base == "residual_ls") d.base = Base::residual_ls;
  else if (base == "residual_shrinkage") d.base = Base::residual_shrinkage;
  else if (base == "posterior_risk") d.base = Base::posterior_risk;
  else throw ConfigError("unknown loss estimator base '" + base + "'");

  if (d.base == Base::constant_spherical) {
    if (sampler.kind == SamplerSpec::Kind::scale_mixture)
      d.radial = RadialSpec::mixture_induced(sampler.mixing, sampler.p);
    else if (sampler.kind == SamplerSpec::Kind::radial_spherical)
      d.radial = sampler.radial;
    else
      throw ConfigError("constant_spherical loss estimator needs a spherical sampler");
  }
  if ((d.base == Base::residual_ls || d.base == Base::residual_shrinkage) &&
      sampler.kind != SamplerSpec::Kind::spherical_residual)
    throw ConfigError("residual loss estimators need a spherical_residual sampler");
  if (d.base == Base::unbiased_unknown_var &&
      (sampler.kind != SamplerSpec::Kind::normal || sampler.k < 1))
    throw ConfigError("unbiased_unknown_var needs a normal sampler with k >= 1");

  if (j.contains("correction")) {
    const json& c = j.at("correction");
    const std::string mode = c.value("mode", "fixed");
    if (mode == "fixed") {
      d.correction = CorrectionSpec::fixed(scalar_field_from_json(c.at("gamma")));
    } else if (mode == "sgn_laplacian") {
      d.correction = CorrectionSpec::sgn_laplacian(
          scalar_field_from_json(c.at("m")), scalar_field_from_json(c.at("xi")),
          c.at("alpha").get<double>());
    } else {
      throw ConfigError("unknown correction mode '" + mode + "'");
    }
  }
  if (j.contains("marginal")) d.marginal = scalar_field_from_json(j.at("marginal"));
  d.take_positive_part = j.value("positive_part", false);
  return d;
}

ExperimentConfig experiment_from_json(const json& j) {
  if (j.contains("preset")) {
    ExperimentConfig config = make_risk_preset(j.at("preset").get<std::string>());
    if (j.contains("n")) config.n = j.at("n").get<std::uint64_t>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) config.threads = j.at("threads").get<int>();
    if (j.contains("theta_radii"))
      config.theta_radii = j.at("theta_radii").get<std::vector<double>>();
    return config;
  }
  ExperimentConfig config;
  config.experiment = j.value("experiment", "risk-compare");
  if (config.experiment == "bayes-paradox-1d") {
    if (j.contains("theta_radii"))
      config.theta_radii = j.at("theta_radii").get<std::vector<double>>();
    config.n = j.value("n", kDefaultRiskN);
    config.seed = j.value("seed", std::uint64_t{42});
    config.threads = j.value("threads", 1);
    return config;
  }
  config.sampler = sampler_from_json(j.at("sampler"));
  config.estimator = estimator_from_json(j.at("estimator"), config.sampler);
  for (const auto& dj : j.at("loss_estimators"))
    config.deltas.push_back(loss_estimator_from_json(dj, config.sampler));
  if (j.contains("theta_radii"))
    config.theta_radii = j.at("theta_radii").get<std::vector<double>>();
  if (j.contains("sigma2_values"))
    config.sigma2_values = j.at("sigma2_values").get<std::vector<double>>();
  config.n = j.value("n", kDefaultRiskN);
  config.seed = j.value("seed", std::uint64_t{42});
  config.threads = j.value("threads", 1);
  if (j.contains("assert_dominates")) {
    for (const auto& pair : j.at("assert_dominates")) {
      config.assert_dominates.emplace_back(pair.at(0).get<std::string>(),
                                           pair.at(1).get<std::string>());
    }
  }
  return config;
}

// Presets --------------------------------------------------------------------

namespace {

ScalarField inverse_norm2_field(double coefficient) {
  // coefficient / ||x||^2
  return scale_field(norm_power_field(-2.0), coefficient);
}

LossEstimatorSpec delta_with_correction(std::string name,
                                        LossEstimatorSpec::Base base,
                                        ScalarField gamma) {
  LossEstimatorSpec d;
  d.name = std::move(name);
  d.base = base;
  d.correction = CorrectionSpec::fixed(std::move(gamma));
  return d;
}

// Largest admissible d for the residual-shrinkage correction family
// d/||x||^2 against g(x) = -a x/||x||^2 (grid-free reduction of the
// differential inequality; the grid scan cross-checks it).
double residual_shrink_d_bound(double a, int p, int k) {
  return 4.0 * (p - 4.0) / ((k + 4.0) * (k + 6.0)) -
         a * (4.0 * (p - 2.0) / (k + 2.0) - 4.0 * (p - 4.0) / (k + 6.0));
}

}  // namespace

std::vector<std::string> list_risk_presets() {
  return {"johnstone-mle", "johnstone-js", "wan-zou",        "mixture-t",
          "residual-ls",   "residual-js",  "bayes-paradox-1d"};
}

std::vector<std::string> list_condition_presets() {
  return {"thm21-js",    "thm21-mle",   "wan-zou",     "mixture-t",
          "residual-ls", "residual-js", "prior-power", "general-spherical"};
}

bool is_risk_preset(const std::string& name) {
  for (const auto& p : list_risk_presets())
    if (p == name) return true;
  return false;
}

bool is_condition_preset(const std::string& name) {
  for (const auto& p : list_condition_presets())
    if (p == name) return true;
  return false;
}

ExperimentConfig make_risk_preset(const std::string& name) {
  ExperimentConfig config;
  config.name = name;

  if (name == "johnstone-mle") {
    const int p = 5;
    config.sampler.kind = SamplerSpec::Kind::normal;
    config.sampler.p = p;
    config.estimator = EstimatorSpec::mle_spec(p);
    LossEstimatorSpec unbiased;
    unbiased.name = "unbiased";
    unbiased.base = LossEstimatorSpec::Base::sure_known_var;
    config.deltas.push_back(unbiased);
    // delta = p - 2(p-4)/||x||^2
    config.deltas.push_back(delta_with_correction(
        "corrected", LossEstimatorSpec::Base::sure_known_var,
        inverse_norm2_field(2.0 * (p - 4.0))));
    auto pp = config.deltas.back();
    pp.name = "corrected_pp";
    pp.take_positive_part = true;
    config.deltas.push_back(pp);
    config.assert_dominates = {{"corrected", "unbiased"},
                               {"corrected_pp", "corrected"}};
    return config;
  }

  if (name == "johnstone-js") {
    const int p = 5;
    config.sampler.kind = SamplerSpec::Kind::normal;
    config.sampler.p = p;
    config.estimator = EstimatorSpec::james_stein_spec(p);
    LossEstimatorSpec unbiased;
    unbiased.name = "unbiased";
    unbiased.base = LossEstimatorSpec::Base::sure_known_var;
    config.deltas.push_back(unbiased);
    // delta = delta0 + 2p/||x||^2, built through the sgn-Laplacian family
    LossEstimatorSpec corrected;
    corrected.name = "corrected";
    corrected.base = LossEstimatorSpec::Base::sure_known_var;
    corrected.correction = CorrectionSpec::sgn_laplacian(
        fundamental_harmonic_field(), norm_power_field(-static_cast<double>(p)),
        2.0 * p);
    config.deltas.push_back(corrected);
    config.assert_dominates = {{"corrected", "unbiased"}};
    return config;
  }

  if (name == "wan-zou") {
    const int p = 5, k = 3;
    config.sampler.kind = SamplerSpec::Kind::normal;
    config.sampler.p = p;
    config.sampler.k = k;
    config.sigma2_values = {0.5, 1.0, 2.0};
    config.estimator = EstimatorSpec::js_unknown_var_spec(p, k);
    LossEstimatorSpec unbiased;
    unbiased.name = "unbiased";
    unbiased.base = LossEstimatorSpec::Base::unbiased_unknown_var;
    config.deltas.push_back(unbiased);
    const double d = 2.0 / (k + 2.0) * (p + (p - 2.0) * (p - 2.0) / (k + 2.0));
    config.deltas.push_back(
        delta_with_correction("corrected", LossEstimatorSpec::Base::unbiased_unknown_var,
                              inverse_norm2_field(-d)));
    config.assert_dominates = {{"corrected", "unbiased"}};
    return config;
  }

  if (name == "mixture-t") {
    const int p = 6;
    const double nu = 6.0;  // multivariate t dof
    config.sampler.kind = SamplerSpec::Kind::scale_mixture;
    config.sampler.p = p;
    config.sampler.mixing = MixingSpec::gamma_mixing(0.5 * nu, 0.5 * nu);
    config.estimator = EstimatorSpec::mle_spec(p);
    LossEstimatorSpec unbiased;
    unbiased.name = "unbiased";
    unbiased.base = LossEstimatorSpec::Base::constant_spherical;
    unbiased.radial = RadialSpec::mixture_induced(config.sampler.mixing, p);
    config.deltas.push_back(unbiased);
    const double kc = mixture_k(config.sampler.mixing, p);
    auto corrected = delta_with_correction(
        "corrected", LossEstimatorSpec::Base::constant_spherical,
        inverse_norm2_field(kc * (p - 4.0)));
    corrected.radial = unbiased.radial;
    config.deltas.push_back(corrected);
    config.assert_dominates = {{"corrected", "unbiased"}};
    return config;
  }

  if (name == "residual-ls") {
    const int p = 6, k = 4;
    config.sampler.kind = SamplerSpec::Kind::spherical_residual;
    config.sampler.p = p;
    config.sampler.k = k;
    config.sampler.radial = RadialSpec::chi(p + k, 1.0);
    config.estimator = EstimatorSpec::mle_spec(p);
    LossEstimatorSpec unbiased;
    unbiased.name = "unbiased";
    unbiased.base = LossEstimatorSpec::Base::residual_ls;
    config.deltas.push_back(unbiased);
    const double d = 2.0 * (p - 4.0) / ((k + 4.0) * (k + 6.0));
    config.deltas.push_back(delta_with_correction(
        "corrected", LossEstimatorSpec::Base::residual_ls, inverse_norm2_field(d)));
    config.assert_dominates = {{"corrected", "unbiased"}};
    return config;
  }

  if (name == "residual-js") {
    const int p = 6, k = 4;
    const double a = 0.03;  // keeps the correction family nonempty, see bound
    config.sampler.kind = SamplerSpec::Kind::spherical_residual;
    config.sampler.p = p;
    config.sampler.k = k;
    config.sampler.radial = RadialSpec::chi(p + k, 1.0);
    config.estimator =
        EstimatorSpec::residual_shrinkage_spec(p, k, js_shrinkage_field(a));
    LossEstimatorSpec unbiased;
    unbiased.name = "unbiased";
    unbiased.base = LossEstimatorSpec::Base::residual_shrinkage;
    config.deltas.push_back(unbiased);
    const double d = 0.5 * residual_shrink_d_bound(a, p, k);
    config.deltas.push_back(delta_with_correction(
        "corrected", LossEstimatorSpec::Base::residual_shrinkage,
        inverse_norm2_field(d)));
    config.assert_dominates = {{"corrected", "unbiased"}};
    return config;
  }

  if (name == "bayes-paradox-1d") {
    config.experiment = "bayes-paradox-1d";
    config.theta_radii = {0.0, 1.0, 2.0};
    return config;
  }

  throw ConfigError("unknown preset '" + name + "'");
}

ConditionRun run_condition_preset(const std::string& name,
                                  const ConditionOverrides& overrides) {
  GridSpec grid = overrides.grid ? *overrides.grid : GridSpec::defaults();
  if (grid.radii.empty()) throw ConfigError("empty grid");

  ConditionRun run;
  run.name = name;
  std::ostringstream csv;

  const auto finish = [&](const ConditionReport& rep, json extra) {
    rep.write_csv(csv);
    run.csv = csv.str();
    run.pass = rep.pass;
    extra["condition"] = rep.condition;
    extra["pass"] = rep.pass;
    extra["boundary"] = rep.boundary;
    extra["max_lhs"] = rep.max_lhs;
    extra["note"] = rep.note;
    run.summary = std::move(extra);
  };

  if (name == "thm21-js") {
    const int p = overrides.p.value_or(5);
    const ScalarField m = fundamental_harmonic_field();
    const ScalarField xi = norm_power_field(-static_cast<double>(p));
    const double k0 = compute_K0(m, xi, grid, p);
    const auto range = alpha_range_thm21(m, xi, grid, p);
    const double alpha = overrides.magnitude.value_or(2.0 * p);
    // corrected estimator is delta0 + alpha/||x||^2, i.e. gamma = -alpha/||x||^2
    const auto rep = check_known_var(inverse_norm2_field(-alpha),
                                     js_shrinkage_field(p - 2.0), grid, p);
    finish(rep, json{{"p", p},
                     {"K0", k0},
                     {"alpha_range", {range.first, range.second}},
                     {"alpha", alpha}});
    return run;
  }

  if (name == "thm21-mle") {
    const int p = overrides.p.value_or(5);
    const ScalarField m = constant_field(1.0);
    const ScalarField xi = norm_power_field(-2.0);
    const double k0 = compute_K0(m, xi, grid, p);
    const auto range = alpha_range_thm21(m, xi, grid, p);
    const double alpha = overrides.magnitude.value_or(2.0 * (p - 4.0));
    // delta = p - alpha/||x||^2, i.e. gamma = +alpha/||x||^2
    const auto rep =
        check_known_var(inverse_norm2_field(alpha), zero_vector_field(), grid, p);
    finish(rep, json{{"p", p},
                     {"K0", k0},
                     {"alpha_range", {range.first, range.second}},
                     {"alpha", alpha}});
    return run;
  }

  if (name == "wan-zou") {
    const int p = overrides.p.value_or(5), k = 3;
    if (grid.s_values.size() <= 1) grid.s_values = {0.1, 0.5, 1.0, 2.0, 5.0};
    const double bound =
        4.0 / (k + 2.0) * (p + (p - 2.0) * (p - 2.0) / (k + 2.0));
    const double d = overrides.magnitude.value_or(0.5 * bound);
    const auto est = EstimatorSpec::js_unknown_var_spec(p, k);
    const auto rep = check_unknown_var(inverse_norm2_field(-d),
                                       est.unknown_var_g(), k, grid, p);
    finish(rep, json{{"p", p}, {"k", k}, {"d", d}, {"d_bound", bound}});
    return run;
  }

  if (name == "mixture-t") {
    const int p = overrides.p.value_or(6);
    const MixingSpec G = MixingSpec::gamma_mixing(3.0, 3.0);
    const double kc = mixture_k(G, p);
    const double c = overrides.magnitude.value_or(kc * (p - 4.0));
    const auto rep = check_mixture(inverse_norm2_field(c), kc, grid, p);
    finish(rep, json{{"p", p},
                     {"k_const", kc},
                     {"c", c},
                     {"c_bound", 2.0 * kc * (p - 4.0)}});
    return run;
  }

  if (name == "residual-ls") {
    const int p = overrides.p.value_or(6), k = 4;
    const double bound = 4.0 * (p - 4.0) / ((k + 4.0) * (k + 6.0));
    const double d = overrides.magnitude.value_or(0.5 * bound);
    const auto rep = check_residual_ls(inverse_norm2_field(d), k, grid, p);
    finish(rep, json{{"p", p}, {"k", k}, {"d", d}, {"d_bound", bound}});
    return run;
  }

  if (name == "residual-js") {
    const int p = overrides.p.value_or(6), k = 4;
    const double a = 0.03;
    const double bound = residual_shrink_d_bound(a, p, k);
    const double d = overrides.magnitude.value_or(0.5 * bound);
    const auto rep = check_residual_shrink(inverse_norm2_field(d),
                                           js_shrinkage_field(a), k, grid, p);
    finish(rep, json{{"p", p}, {"k", k}, {"a", a}, {"d", d}, {"d_bound", bound}});
    return run;
  }

  if (name == "prior-power") {
    const int p = overrides.p.value_or(8);
    const double a = 1.0, b = 1.0;
    const auto rep = check_prior_condition(prior_shifted_power_field(a, b), grid, p);
    finish(rep, json{{"p", p}, {"a", a}, {"b", b}, {"holds_for_p_at_least", 2 * (b + 3)}});
    return run;
  }

  if (name == "general-spherical") {
    const int p = overrides.p.value_or(6);
    RadialFn gen{"normal", [](double z) { return std::exp(-0.5 * z); }};
    std::vector<double> s_grid;
    for (int i = 0; i <= 30; ++i) s_grid.push_back(i);
    const double delta0 = p;  // E[R^2] of the unit normal law
    const auto rep = check_general_spherical(gen, delta0, p, s_grid);
    csv << "condition,s,lhs\n";
    for (const auto& v : rep.values)
      csv << "general_spherical," << csv_double(v.radius) << ','
          << csv_double(v.lhs) << '\n';
    run.csv = csv.str();
    run.pass = rep.pass;
    run.summary = json{{"condition", "general_spherical"},
                       {"p", p},
                       {"pass", rep.pass},
                       {"k_const", rep.k_const},
                       {"max_ratio", rep.max_ratio},
                       {"note", rep.note}};
    return run;
  }

  throw ConfigError("unknown condition preset '" + name + "'");
}

// Identity suite --------------------------------------------------------------

namespace {

VectorField gaussian_decay_field() {
  VectorField g;
  g.name = "gaussian_decay";
  g.eval = [](const Vec& x) {
    return Vec(std::exp(-0.5 * x.squaredNorm()) * x);
  };
  g.divergence = [](const Vec& x) {
    const double p = static_cast<double>(x.size());
    return (p - x.squaredNorm()) * std::exp(-0.5 * x.squaredNorm());
  };
  return g;
}

VectorField broken_divergence(VectorField g, double factor) {
  VectorField r = g;
  r.name = g.name + ".broken";
  r.divergence = [g, factor](const Vec& x) { return factor * g.divergence(x); };
  return r;
}

VectorField shift_field(const Vec& theta) {
  VectorField g;
  g.name = "identity_shift";
  g.eval = [theta](const Vec& x) { return Vec(x - theta); };
  g.divergence = [](const Vec& x) { return static_cast<double>(x.size()); };
  return g;
}

}  // namespace

IdentitySuiteResult run_identity_suite(const std::vector<std::string>& names,
                                       std::uint64_t n, std::uint64_t seed,
                                       int threads, bool negative_control) {
  const std::vector<std::string> all = {"stein", "lemma-a1", "lemma-a5",
                                        "corollary-a"};
  std::vector<std::string> selected = names.empty() ? all : names;
  for (const auto& name : selected) {
    bool known = false;
    for (const auto& a : all) known = known || a == name;
    if (!known) throw ConfigError("unknown identity '" + name + "'");
  }

  IdentitySuiteResult suite;
  const auto add = [&](IdentityReport rep, const std::string& label) {
    rep.name += ":" + label;
    suite.reports.push_back(std::move(rep));
  };

  for (const auto& name : selected) {
    if (name == "stein") {
      const int p = 5;
      Vec theta = Vec::Zero(p);
      theta[0] = 0.3;
      if (!negative_control) {
        add(verify_stein_identity(linear_field(Eigen::MatrixXd::Identity(p, p)),
                                  theta, 1.0, n, seed, threads),
            "identity_map");
        add(verify_stein_identity(js_shrinkage_field(p - 2.0), Vec(Vec::Zero(p)),
                                  1.0, n, seed, threads),
            "js_shrinkage");
        add(verify_stein_identity(gaussian_decay_field(), theta, 1.0, n, seed,
                                  threads),
            "gaussian_decay");
      } else {
        add(verify_stein_identity(
                broken_divergence(js_shrinkage_field(p - 2.0), 1.5),
                Vec(Vec::Zero(p)), 1.0, n, seed, threads),
            "negative_control");
      }
    } else if (name == "lemma-a1") {
      const int p = 5, k = 3;
      const double sigma2 = 2.0;
      Vec theta = Vec::Zero(p);
      theta[0] = 0.5;
      if (!negative_control) {
        const auto js = EstimatorSpec::js_unknown_var_spec(p, k).unknown_var_g();
        add(verify_lemma_a1_i(js, theta, sigma2, k, n, seed, threads),
            "i_js_shrinkage");
        VectorFieldXS gsx;
        gsx.name = "s_times_x";
        gsx.eval = [](const Vec& x, double s) { return Vec(s * x); };
        gsx.divergence_x = [](const Vec& x, double s) {
          return s * static_cast<double>(x.size());
        };
        add(verify_lemma_a1_i(gsx, theta, sigma2, k, n, seed, threads),
            "i_s_times_x");
        VectorFieldXS gdecay;
        gdecay.name = "x_over_1ps";
        gdecay.eval = [](const Vec& x, double s) { return Vec(x / (1.0 + s)); };
        gdecay.divergence_x = [](const Vec& x, double s) {
          return static_cast<double>(x.size()) / (1.0 + s);
        };
        add(verify_lemma_a1_i(gdecay, theta, sigma2, k, n, seed, threads),
            "i_x_over_1ps");
        ScalarFieldXS hs{"s", [](const Vec&, double s) { return s; },
                         [](const Vec&, double) { return 1.0; }};
        add(verify_lemma_a1_ii(hs, theta, sigma2, k, n, seed, threads), "ii_s");
        ScalarFieldXS hs2{"s^2", [](const Vec&, double s) { return s * s; },
                          [](const Vec&, double s) { return 2.0 * s; }};
        add(verify_lemma_a1_ii(hs2, theta, sigma2, k, n, seed, threads), "ii_s2");
        ScalarFieldXS hsx{"s||x||^2",
                          [](const Vec& x, double s) { return s * x.squaredNorm(); },
                          [](const Vec& x, double) { return x.squaredNorm(); }};
        add(verify_lemma_a1_ii(hsx, theta, sigma2, k, n, seed, threads),
            "ii_s_norm2");
      } else {
        ScalarFieldXS broken{"s^2_broken",
                             [](const Vec&, double s) { return s * s; },
                             [](const Vec&, double s) { return s; }};
        add(verify_lemma_a1_ii(broken, theta, sigma2, k, n, seed, threads),
            "negative_control");
      }
    } else if (name == "lemma-a5") {
      const int p = 6, k = 4;
      const double R = 3.0;
      Vec theta = Vec::Zero(p);
      theta[0] = 0.5;
      if (!negative_control) {
        add(verify_lemma_a5(shift_field(theta), 0, R, theta, k, n, seed, threads),
            "q0_identity_shift");
        add(verify_lemma_a5(js_shrinkage_field(p - 2.0), 2, R, theta, k, n, seed,
                            threads),
            "q2_js_shrinkage");
        add(verify_lemma_a5(js_shrinkage_field(p - 2.0), 0, R, theta, k, n, seed,
                            threads),
            "q0_js_shrinkage");
      } else {
        const int q = 0;
        RadialFn broken_H{"broken_H", [q, k](double t) {
                            return 2.0 * std::pow(t, 0.5 * (q + k)) / (q + k);
                          }};
        add(verify_lemma_a5(shift_field(theta), q, R, theta, k, n, seed, threads,
                            &broken_H),
            "negative_control");
      }
    } else if (name == "corollary-a") {
      const int p = 6, k = 4;
      const double R = 3.0;
      Vec theta = Vec::Zero(p);
      theta[0] = 0.5;
      if (!negative_control) {
        add(verify_corollary_a(constant_field(1.0), 0, R, theta, k, n, seed,
                               threads),
            "q0_constant");
        add(verify_corollary_a(norm_power_field(-2.0), 4, R, theta, k, n, seed,
                               threads),
            "q4_inverse_norm2");
        add(verify_corollary_a(norm_power_field(2.0), 2, R, theta, k, n, seed,
                               threads),
            "q2_norm2");
      } else {
        ScalarField broken = norm_power_field(2.0);
        broken.name = "norm2_broken";
        broken.laplacian = [](const Vec& x) {
          return static_cast<double>(x.size());  // true value is 2p
        };
        add(verify_corollary_a(broken, 2, R, theta, k, n, seed, threads),
            "negative_control");
      }
    }
  }

  suite.pass = !suite.reports.empty();
  json reports = json::array();
  for (const auto& r : suite.reports) {
    suite.pass = suite.pass && r.pass;
    reports.push_back(json{{"name", r.name},
                           {"lhs_mean", r.lhs_mean},
                           {"rhs_mean", r.rhs_mean},
                           {"diff_mean", r.diff_mean},
                           {"diff_se", r.diff_se},
                           {"n", r.n},
                           {"pass", r.pass}});
  }
  suite.summary = json{{"n", n},
                       {"seed", seed},
                       {"negative_control", negative_control},
                       {"reports", reports},
                       {"pass", suite.pass}};
  return suite;
}

}  // namespace steinloss
