#include "steinloss/estimators.hpp"

#include <cmath>

namespace steinloss {

EstimatorSpec EstimatorSpec::mle_spec(int p) {
  EstimatorSpec e;
  e.kind = Kind::mle;
  e.p = p;
  return e;
}

EstimatorSpec EstimatorSpec::james_stein_spec(int p) {
  if (p < 3) throw ConfigError("James-Stein estimator needs p >= 3");
  EstimatorSpec e;
  e.kind = Kind::james_stein;
  e.p = p;
  return e;
}

EstimatorSpec EstimatorSpec::pseudo_bayes_spec(int p, ScalarField m) {
  EstimatorSpec e;
  e.kind = Kind::pseudo_bayes;
  e.p = p;
  e.m = std::move(m);
  return e;
}

EstimatorSpec EstimatorSpec::js_unknown_var_spec(int p, int k) {
  if (p < 3) throw ConfigError("James-Stein estimator needs p >= 3");
  if (k < 1) throw ConfigError("unknown-variance setting needs k >= 1");
  EstimatorSpec e;
  e.kind = Kind::js_unknown_var;
  e.p = p;
  e.k = k;
  return e;
}

EstimatorSpec EstimatorSpec::residual_shrinkage_spec(int p, int k, VectorField g) {
  if (k < 1) throw ConfigError("residual setting needs k >= 1");
  EstimatorSpec e;
  e.kind = Kind::residual_shrinkage;
  e.p = p;
  e.k = k;
  e.g = std::move(g);
  return e;
}

VectorFieldXS EstimatorSpec::unknown_var_g() const {
  if (g_xs) return *g_xs;
  const double a = static_cast<double>(p - 2) / static_cast<double>(k + 2);
  VectorFieldXS g;
  g.name = "js_unknown_var";
  g.singular_at_origin = true;
  g.eval = [a](const Vec& x, double) { return Vec(-a / x.squaredNorm() * x); };
  g.divergence_x = [a](const Vec& x, double) {
    const double pd = static_cast<double>(x.size());
    return -a * (pd - 2.0) / x.squaredNorm();
  };
  g.dnorm2_ds = [](const Vec&, double) { return 0.0; };  // S-separable
  return g;
}

Vec pseudo_bayes_shift(const ScalarField& m, const Vec& x) {
  const double mx = m.eval(x);
  if (!(mx > 0.0))
    throw InvalidMarginal("pseudo-Bayes marginal is nonpositive at x");
  return Vec(gradient(m, x) / mx);
}

namespace {

void require_off_origin(const Vec& x) {
  if (x.squaredNorm() <= kSingularNorm2)
    throw ShrinkageSingularity("shrinkage estimator evaluated at x = 0");
}

}  // namespace

Vec estimate(const EstimatorSpec& spec, const Observation& obs) {
  const Vec& x = obs.x;
  switch (spec.kind) {
    case EstimatorSpec::Kind::mle:
      return x;
    case EstimatorSpec::Kind::james_stein: {
      require_off_origin(x);
      const double p = static_cast<double>(x.size());
      return Vec((1.0 - (p - 2.0) / x.squaredNorm()) * x);
    }
    case EstimatorSpec::Kind::pseudo_bayes: {
      if (spec.m->singular_at_origin) require_off_origin(x);
      return Vec(x + pseudo_bayes_shift(*spec.m, x));
    }
    case EstimatorSpec::Kind::js_unknown_var: {
      if (!obs.s) throw MissingStatistic("js_unknown_var needs the statistic s");
      require_off_origin(x);
      const VectorFieldXS g = spec.unknown_var_g();
      return Vec(x + *obs.s * g.eval(x, *obs.s));
    }
    case EstimatorSpec::Kind::residual_shrinkage: {
      if (!obs.u) throw MissingStatistic("residual_shrinkage needs the residual u");
      if (spec.g->singular_at_origin) require_off_origin(x);
      return Vec(x + obs.u->squaredNorm() * spec.g->eval(x));
    }
  }
  throw ConfigError("unreachable estimator kind");
}

}  // namespace steinloss
