#pragma once

#include <optional>
#include <string>

#include "steinloss/estimators.hpp"
#include "steinloss/samplers.hpp"

namespace steinloss {

// Losses ---------------------------------------------------------------

double quadratic_loss(const Vec& phi, const Vec& theta);
double invariant_loss(const Vec& phi, const Vec& theta, double sigma2);
double loss_estimation_loss(double delta, double loss);  // (delta - loss)^2
double stein_type_loss(double delta, double loss);       // L/d - log(L/d) - 1

// Unbiased loss estimators ----------------------------------------------

// Known variance: delta0 = p + 2 div g + ||g||^2.
double sure_known_var(const VectorField& g, const Vec& x);

// Unknown variance: delta0 = p + s{(k+2)||g||^2 + 2 div_x g + 2s d/ds ||g||^2}.
double unbiased_loss_unknown_var(const VectorFieldXS& g, const Vec& x, double s,
                                 int k);

// Pseudo-Bayes pair: posterior risk p + Dm/m - |grad m|^2/m^2 and the unbiased
// risk estimate p + 2 Dm/m - |grad m|^2/m^2.
double posterior_risk(const ScalarField& m, const Vec& x);
double unbiased_risk_bayes(const ScalarField& m, const Vec& x);

// gamma(x) = -alpha sgn(Delta xi(x)) xi(x)/m(x).
double theorem21_correction(const ScalarField& m, const ScalarField& xi,
                            double alpha, const Vec& x);

double residual_unbiased_ls(const Vec& u, int p, int k);  // p ||u||^2 / k
double residual_unbiased_shrink(const VectorField& g, const Vec& x, const Vec& u,
                                int p, int k);

// Constant unbiased estimate E[R^2] of a spherical law's loss.
double constant_spherical_unbiased(const RadialSpec& radial);

double apply_correction(double base, double gamma_value, double multiplier);
double positive_part(double delta);

// Assembled loss estimators ----------------------------------------------

struct CorrectionSpec {
  // fixed mode: gamma evaluated directly. sgn mode: theorem21_correction(m, xi, alpha).
  bool sgn_mode = false;
  ScalarField gamma;
  ScalarField m, xi;
  double alpha = 0.0;

  double value(const Vec& x) const;

  static CorrectionSpec fixed(ScalarField gamma);
  static CorrectionSpec sgn_laplacian(ScalarField m, ScalarField xi, double alpha);
};

struct LossEstimatorSpec {
  enum class Base {
    sure_known_var,
    unbiased_unknown_var,
    constant_spherical,
    residual_ls,
    residual_shrinkage,
    posterior_risk
  };

  std::string name = "unbiased";
  Base base = Base::sure_known_var;
  std::optional<CorrectionSpec> correction;
  bool take_positive_part = false;
  std::optional<RadialSpec> radial;      // constant_spherical
  std::optional<ScalarField> marginal;   // posterior_risk override of the
                                         // estimator's pseudo-Bayes marginal
};

// Correction multiplier of the setting: 1, S, or ||u||^4.
double correction_multiplier(LossEstimatorSpec::Base base, const Observation& obs);

// Full evaluation delta(obs) = base(obs) - multiplier * gamma(x), clamped at 0
// when the positive part is requested.
double evaluate_loss_estimator(const LossEstimatorSpec& d, const EstimatorSpec& est,
                               const Observation& obs);

}  // namespace steinloss
