#include "steinloss/loss_estimators.hpp"

#include <cmath>

namespace steinloss {

double quadratic_loss(const Vec& phi, const Vec& theta) {
  if (phi.size() != theta.size())
    throw DomainError("loss: dimension mismatch between phi and theta");
  return (phi - theta).squaredNorm();
}

double invariant_loss(const Vec& phi, const Vec& theta, double sigma2) {
  if (sigma2 <= 0.0) throw DomainError("invariant loss needs sigma2 > 0");
  return quadratic_loss(phi, theta) / sigma2;
}

double loss_estimation_loss(double delta, double loss) {
  const double d = delta - loss;
  return d * d;
}

double stein_type_loss(double delta, double loss) {
  if (!(delta > 0.0) || !(loss > 0.0))
    throw DomainError("Stein-type loss needs positive delta and loss");
  const double r = loss / delta;
  return r - std::log(r) - 1.0;
}

double sure_known_var(const VectorField& g, const Vec& x) {
  const double p = static_cast<double>(x.size());
  const Vec gx = g.eval(x);
  return p + 2.0 * divergence(g, x) + gx.squaredNorm();
}

double unbiased_loss_unknown_var(const VectorFieldXS& g, const Vec& x, double s,
                                 int k) {
  if (s <= 0.0) throw DomainError("unbiased unknown-variance loss needs s > 0");
  const double p = static_cast<double>(x.size());
  const double n2 = g.eval(x, s).squaredNorm();
  return p + s * ((k + 2.0) * n2 + 2.0 * divergence_x(g, x, s) +
                  2.0 * s * dnorm2_ds(g, x, s));
}

double posterior_risk(const ScalarField& m, const Vec& x) {
  const double mx = m.eval(x);
  if (!(mx > 0.0)) throw InvalidMarginal("posterior risk needs m(x) > 0");
  const double p = static_cast<double>(x.size());
  const double g2 = gradient(m, x).squaredNorm();
  return p + laplacian(m, x) / mx - g2 / (mx * mx);
}

double unbiased_risk_bayes(const ScalarField& m, const Vec& x) {
  const double mx = m.eval(x);
  if (!(mx > 0.0)) throw InvalidMarginal("unbiased risk estimate needs m(x) > 0");
  const double p = static_cast<double>(x.size());
  const double g2 = gradient(m, x).squaredNorm();
  return p + 2.0 * laplacian(m, x) / mx - g2 / (mx * mx);
}

double theorem21_correction(const ScalarField& m, const ScalarField& xi,
                            double alpha, const Vec& x) {
  const double mx = m.eval(x);
  if (mx == 0.0) throw InvalidMarginal("correction needs m(x) != 0");
  const double lap = laplacian(xi, x);
  const double sgn = lap > 0.0 ? 1.0 : (lap < 0.0 ? -1.0 : 0.0);
  return -alpha * sgn * xi.eval(x) / mx;
}

double residual_unbiased_ls(const Vec& u, int p, int k) {
  if (k < 1) throw DomainError("residual loss estimator needs k >= 1");
  return static_cast<double>(p) * u.squaredNorm() / static_cast<double>(k);
}

double residual_unbiased_shrink(const VectorField& g, const Vec& x, const Vec& u,
                                int p, int k) {
  if (k < 1) throw DomainError("residual loss estimator needs k >= 1");
  const double u2 = u.squaredNorm();
  const double bracket =
      g.eval(x).squaredNorm() + 2.0 / (k + 2.0) * divergence(g, x);
  return static_cast<double>(p) / k * u2 + bracket * u2 * u2;
}

double constant_spherical_unbiased(const RadialSpec& radial) {
  if (radial.kind == RadialSpec::Kind::mixture_induced &&
      !radial.mixing.moment_finite(-1.0))
    throw DomainError("radial law has no finite second moment");
  return radial.second_moment();
}

double apply_correction(double base, double gamma_value, double multiplier) {
  return base - multiplier * gamma_value;
}

double positive_part(double delta) { return delta > 0.0 ? delta : 0.0; }

CorrectionSpec CorrectionSpec::fixed(ScalarField gamma) {
  CorrectionSpec c;
  c.gamma = std::move(gamma);
  return c;
}

CorrectionSpec CorrectionSpec::sgn_laplacian(ScalarField m, ScalarField xi,
                                             double alpha) {
  CorrectionSpec c;
  c.sgn_mode = true;
  c.m = std::move(m);
  c.xi = std::move(xi);
  c.alpha = alpha;
  return c;
}

double CorrectionSpec::value(const Vec& x) const {
  if (sgn_mode) return theorem21_correction(m, xi, alpha, x);
  return gamma.eval(x);
}

double correction_multiplier(LossEstimatorSpec::Base base, const Observation& obs) {
  using Base = LossEstimatorSpec::Base;
  switch (base) {
    case Base::unbiased_unknown_var:
      if (!obs.s) throw MissingStatistic("unknown-variance correction needs s");
      return *obs.s;
    case Base::residual_ls:
    case Base::residual_shrinkage: {
      if (!obs.u) throw MissingStatistic("residual correction needs u");
      const double u2 = obs.u->squaredNorm();
      return u2 * u2;
    }
    default:
      return 1.0;
  }
}

double evaluate_loss_estimator(const LossEstimatorSpec& d, const EstimatorSpec& est,
                               const Observation& obs) {
  using Base = LossEstimatorSpec::Base;
  double base = 0.0;
  switch (d.base) {
    case Base::sure_known_var: {
      switch (est.kind) {
        case EstimatorSpec::Kind::mle:
          base = static_cast<double>(obs.x.size());
          break;
        case EstimatorSpec::Kind::james_stein: {
          const double p = static_cast<double>(obs.x.size());
          base = p - (p - 2.0) * (p - 2.0) / obs.x.squaredNorm();
          break;
        }
        case EstimatorSpec::Kind::pseudo_bayes:
          base = unbiased_risk_bayes(*est.m, obs.x);
          break;
        default:
          throw ConfigError("sure_known_var applies to known-variance estimators");
      }
      break;
    }
    case Base::unbiased_unknown_var: {
      if (est.kind != EstimatorSpec::Kind::js_unknown_var)
        throw ConfigError("unbiased_unknown_var needs an unknown-variance estimator");
      if (!obs.s) throw MissingStatistic("unbiased_unknown_var needs s");
      base = unbiased_loss_unknown_var(est.unknown_var_g(), obs.x, *obs.s, est.k);
      break;
    }
    case Base::constant_spherical: {
      if (!d.radial)
        throw ConfigError("constant_spherical loss estimator needs a radial law");
      base = constant_spherical_unbiased(*d.radial);
      break;
    }
    case Base::residual_ls: {
      if (!obs.u) throw MissingStatistic("residual_ls needs the residual u");
      base = residual_unbiased_ls(*obs.u, static_cast<int>(obs.x.size()), est.k);
      break;
    }
    case Base::residual_shrinkage: {
      if (!obs.u) throw MissingStatistic("residual_shrinkage needs the residual u");
      if (est.kind != EstimatorSpec::Kind::residual_shrinkage || !est.g)
        throw ConfigError("residual_shrinkage loss estimator needs the matching estimator");
      base = residual_unbiased_shrink(*est.g, obs.x, *obs.u,
                                      static_cast<int>(obs.x.size()), est.k);
      break;
    }
    case Base::posterior_risk: {
      const ScalarField* m = d.marginal ? &*d.marginal
                             : est.m    ? &*est.m
                                        : nullptr;
      if (!m) throw ConfigError("posterior_risk needs a marginal m");
      base = posterior_risk(*m, obs.x);
      break;
    }
  }

  double delta = base;
  if (d.correction) {
    delta = apply_correction(base, d.correction->value(obs.x),
                             correction_multiplier(d.base, obs));
  }
  if (d.take_positive_part) delta = positive_part(delta);
  return delta;
}

}  // namespace steinloss
