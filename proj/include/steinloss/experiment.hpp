#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "steinloss/domination.hpp"
#include "steinloss/model_selection.hpp"
#include "steinloss/risk_engine.hpp"

namespace steinloss {

using json = nlohmann::json;

struct ExperimentConfig {
  std::string name = "custom";
  std::string experiment = "risk-compare";  // or "bayes-paradox-1d"
  SamplerSpec sampler;
  EstimatorSpec estimator;
  std::vector<LossEstimatorSpec> deltas;
  std::vector<double> theta_radii{0.0, 2.0, 5.0};
  std::vector<double> sigma2_values;  // empty: use sampler.sigma2 only
  std::uint64_t n = kDefaultRiskN;
  std::uint64_t seed = 42;
  int threads = 1;
  // Domination assertions: first must not exceed second by more than 4 paired SE.
  std::vector<std::pair<std::string, std::string>> assert_dominates;
};

struct AssertionResult {
  std::string description;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
};

struct ExperimentResult {
  std::string csv;  // theta_norm,estimator,loss_estimator,mean,se,n,seed,sigma2
  json summary;
  std::vector<AssertionResult> assertions;
  bool pass = true;
};

ExperimentResult run_risk_compare(const ExperimentConfig& config);

// Fields / specs from the JSON config format (also used by presets).
ScalarField scalar_field_from_json(const json& j);
VectorField vector_field_from_json(const json& j);
SamplerSpec sampler_from_json(const json& j);
EstimatorSpec estimator_from_json(const json& j, const SamplerSpec& sampler);
LossEstimatorSpec loss_estimator_from_json(const json& j, const SamplerSpec& sampler);
ExperimentConfig experiment_from_json(const json& j);

// Presets ------------------------------------------------------------------

std::vector<std::string> list_risk_presets();
std::vector<std::string> list_condition_presets();
bool is_risk_preset(const std::string& name);
bool is_condition_preset(const std::string& name);
ExperimentConfig make_risk_preset(const std::string& name);

struct ConditionRun {
  std::string name;
  std::string csv;
  json summary;
  bool pass = true;
};

struct ConditionOverrides {
  std::optional<int> p;
  std::optional<double> magnitude;  // alpha / d / c of the preset's correction
  std::optional<GridSpec> grid;
};

ConditionRun run_condition_preset(const std::string& name,
                                  const ConditionOverrides& overrides = {});

// Identity suite -------------------------------------------------------------

struct IdentitySuiteResult {
  std::vector<IdentityReport> reports;
  bool pass = true;
  json summary;
};

// names: any of {"stein", "lemma-a1", "lemma-a5", "corollary-a"}; empty = all.
IdentitySuiteResult run_identity_suite(const std::vector<std::string>& names,
                                       std::uint64_t n, std::uint64_t seed,
                                       int threads, bool negative_control);

// 1-D paradox: risk difference between X^2 + E0[X^2] and X^2 - E0[X^2].
ExperimentResult run_bayes_paradox_1d(const ExperimentConfig& config);

}  // namespace steinloss
