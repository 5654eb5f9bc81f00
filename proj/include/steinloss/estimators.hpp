#pragma once

#include <optional>

#include "steinloss/fields.hpp"

namespace steinloss {

// Observed data: x, plus a residual vector u and/or a variance statistic s
// when the distributional setting provides them.
struct Observation {
  Vec x;
  std::optional<Vec> u;
  std::optional<double> s;
};

struct EstimatorSpec {
  enum class Kind { mle, james_stein, pseudo_bayes, js_unknown_var, residual_shrinkage };
  Kind kind = Kind::mle;
  int p = 0;
  int k = 0;                          // js_unknown_var / residual settings
  std::optional<ScalarField> m;       // pseudo_bayes marginal
  std::optional<VectorField> g;       // residual_shrinkage
  std::optional<VectorFieldXS> g_xs;  // general unknown-variance shrinkage

  static EstimatorSpec mle_spec(int p);
  static EstimatorSpec james_stein_spec(int p);
  static EstimatorSpec pseudo_bayes_spec(int p, ScalarField m);
  static EstimatorSpec js_unknown_var_spec(int p, int k);
  static EstimatorSpec residual_shrinkage_spec(int p, int k, VectorField g);

  // Shrinkage term of the unknown-variance setting: phi = x + s g(x,s).
  // Defaults to the James-Stein choice -((p-2)/(k+2)) x/||x||^2.
  VectorFieldXS unknown_var_g() const;
};

// Guard value: ||x||^2 at or below this counts as a shrinkage singularity.
inline constexpr double kSingularNorm2 = 1e-280;

Vec estimate(const EstimatorSpec& spec, const Observation& obs);
Vec pseudo_bayes_shift(const ScalarField& m, const Vec& x);

}  // namespace steinloss
