#include <doctest.h>

#include <cmath>

#include "steinloss/loss_estimators.hpp"
#include "steinloss/rng.hpp"

using namespace steinloss;

namespace {

Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("losses") {
  const Vec t = make_vec({0.0, 0.0});
  CHECK(quadratic_loss(t, t) == 0.0);
  CHECK(quadratic_loss(make_vec({3.0, 4.0}), t) == doctest::Approx(25.0));
  CHECK(invariant_loss(make_vec({3.0, 4.0}), t, 4.0) == doctest::Approx(6.25));

  CHECK(loss_estimation_loss(5.0, 5.0) == 0.0);
  CHECK(loss_estimation_loss(5.0, 3.0) == 4.0);
  CHECK(loss_estimation_loss(0.0, 2.0) == 4.0);

  CHECK(stein_type_loss(2.0, 2.0) == doctest::Approx(0.0));
  CHECK(stein_type_loss(1.0, std::exp(1.0)) ==
        doctest::Approx(std::exp(1.0) - 2.0));
  CHECK_THROWS_AS((void)stein_type_loss(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS((void)stein_type_loss(1.0, 0.0), DomainError);
}

TEST_CASE("sure_known_var") {
  const Vec x5 = make_vec({2.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(sure_known_var(zero_vector_field(), x5) == doctest::Approx(5.0));
  // g = -(p-2)x/||x||^2 at ||x||^2 = 4: p - (p-2)^2/||x||^2 = 2.75
  CHECK(sure_known_var(js_shrinkage_field(3.0), x5) == doctest::Approx(2.75));
  // finite differences when no analytic divergence is attached
  VectorField g = js_shrinkage_field(3.0);
  g.divergence = nullptr;
  CHECK(sure_known_var(g, x5) == doctest::Approx(2.75).epsilon(1e-8));
}

TEST_CASE("unbiased_loss_unknown_var") {
  const int p = 5, k = 3;
  const auto est = EstimatorSpec::js_unknown_var_spec(p, k);
  const auto g = est.unknown_var_g();
  const Vec x = make_vec({2.0, 0.0, 0.0, 0.0, 0.0});

  VectorFieldXS zero;
  zero.eval = [](const Vec& v, double) { return Vec(Vec::Zero(v.size())); };
  zero.divergence_x = [](const Vec&, double) { return 0.0; };
  zero.dnorm2_ds = [](const Vec&, double) { return 0.0; };
  CHECK(unbiased_loss_unknown_var(zero, x, 2.0, k) == doctest::Approx(5.0));

  // p - ((p-2)^2/(k+2)) s/||x||^2 = 5 - (9/5)(1/2) = 4.1
  CHECK(unbiased_loss_unknown_var(g, x, 2.0, k) == doctest::Approx(4.1));

  // general g(x,s) = c s x: term-by-term oracle with symbolic s-derivative
  const double c = 0.3;
  VectorFieldXS gs;
  gs.eval = [c](const Vec& v, double s) { return Vec(c * s * v); };
  gs.divergence_x = [c](const Vec& v, double s) {
    return c * s * static_cast<double>(v.size());
  };
  gs.dnorm2_ds = [c](const Vec& v, double s) {
    return 2.0 * c * c * s * v.squaredNorm();
  };
  const double s = 1.7;
  const double n2 = c * c * s * s * x.squaredNorm();
  const double expected =
      p + s * ((k + 2.0) * n2 + 2.0 * (c * s * p) +
               2.0 * s * (2.0 * c * c * s * x.squaredNorm()));
  CHECK(unbiased_loss_unknown_var(gs, x, s, k) == doctest::Approx(expected));

  // with the analytic s-derivative removed, the finite difference matches
  VectorFieldXS gs_fd = gs;
  gs_fd.dnorm2_ds = nullptr;
  CHECK(unbiased_loss_unknown_var(gs_fd, x, s, k) ==
        doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("posterior risk and unbiased Bayes risk") {
  const Vec x = make_vec({2.0, 0.0, 0.0, 0.0, 0.0});
  const ScalarField one = constant_field(1.0);
  CHECK(posterior_risk(one, x) == doctest::Approx(5.0));
  CHECK(unbiased_risk_bayes(one, x) == doctest::Approx(5.0));

  // harmonic m: both equal p - (p-2)^2/||x||^2
  const ScalarField fh = fundamental_harmonic_field();
  CHECK(posterior_risk(fh, x) == doctest::Approx(2.75).epsilon(1e-9));
  CHECK(unbiased_risk_bayes(fh, x) == doctest::Approx(2.75).epsilon(1e-9));

  // non-harmonic m: the two differ by Delta m/m
  const ScalarField m = shifted_norm_power_field(1.0, 1.0);
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    Vec y = rng.normal_vec(5) * 2.0;
    const double gap = unbiased_risk_bayes(m, y) - posterior_risk(m, y);
    CHECK(gap == doctest::Approx(m.laplacian(y) / m.eval(y)).epsilon(1e-9));
  }
}

TEST_CASE("theorem 2.1 correction values") {
  const Vec x = make_vec({2.0, 0.0, 0.0, 0.0, 0.0});
  const double alpha = 7.0;

  // JS family: m harmonic, xi = 1/||x||^p subharmonic -> gamma = -alpha/||x||^2
  const double g1 = theorem21_correction(fundamental_harmonic_field(),
                                         norm_power_field(-5.0), alpha, x);
  CHECK(g1 == doctest::Approx(-alpha / 4.0));

  // MLE family: m = 1, xi = 1/||x||^2 superharmonic -> gamma = +alpha/||x||^2
  const double g2 =
      theorem21_correction(constant_field(1.0), norm_power_field(-2.0), alpha, x);
  CHECK(g2 == doctest::Approx(alpha / 4.0));

  // shifted family (a > 0): gamma = +alpha/(||x||^2 + a)
  const double g3 = theorem21_correction(constant_field(1.0),
                                         shifted_norm_power_field(1.0, 1.0), alpha, x);
  CHECK(g3 == doctest::Approx(alpha / 5.0));
}

TEST_CASE("residual loss estimators") {
  const Vec u = make_vec({1.0, 1.0, 0.0, 0.0});
  CHECK(residual_unbiased_ls(u, 6, 4) == doctest::Approx(3.0));
  CHECK(residual_unbiased_ls(make_vec({0.0}), 6, 1) == 0.0);
  CHECK_THROWS_AS((void)residual_unbiased_ls(u, 6, 0), DomainError);

  // g == 0 reduces to the least-squares value
  const Vec x = make_vec({2.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(residual_unbiased_shrink(zero_vector_field(), x, u, 6, 4) ==
        doctest::Approx(3.0));

  // g = -a x/||x||^2 with a = (p-2)/(k+2): bracket simplifies to -a^2/||x||^2
  const int p = 6, k = 4;
  const double a = static_cast<double>(p - 2) / (k + 2);
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    Vec y = rng.normal_vec(p) * 2.0;
    Vec w = rng.normal_vec(k);
    const double u2 = w.squaredNorm();
    const double expected =
        static_cast<double>(p) / k * u2 - a * a / y.squaredNorm() * u2 * u2;
    CHECK(residual_unbiased_shrink(js_shrinkage_field(a), y, w, p, k) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("constant spherical unbiased value") {
  CHECK(constant_spherical_unbiased(RadialSpec::fixed(2.0)) == doctest::Approx(4.0));
  CHECK(constant_spherical_unbiased(RadialSpec::chi(5.0, 1.0)) == doctest::Approx(5.0));
  // point mass at vs: delta0 = p/vs
  CHECK(constant_spherical_unbiased(
            RadialSpec::mixture_induced(MixingSpec::point_mass(2.0), 5.0)) ==
        doctest::Approx(2.5));
  // t(6) mixing at p = 6: p E[1/vs] = p nu/(nu-2) = 9
  CHECK(constant_spherical_unbiased(RadialSpec::mixture_induced(
            MixingSpec::gamma_mixing(3.0, 3.0), 6.0)) == doctest::Approx(9.0));
}

TEST_CASE("apply_correction and positive part") {
  CHECK(apply_correction(5.0, 2.0, 1.0) == 3.0);
  CHECK(positive_part(-1.0) == 0.0);
  CHECK(positive_part(2.5) == 2.5);

  Observation obs;
  obs.x = make_vec({1.0, 0.0, 0.0, 0.0, 0.0});
  obs.u = make_vec({1.0, 1.0, 1.0});
  obs.s = 2.0;
  // residual setting: multiplier is ||u||^4
  CHECK(correction_multiplier(LossEstimatorSpec::Base::residual_ls, obs) ==
        doctest::Approx(9.0));
  CHECK(correction_multiplier(LossEstimatorSpec::Base::unbiased_unknown_var, obs) ==
        doctest::Approx(2.0));
  CHECK(correction_multiplier(LossEstimatorSpec::Base::sure_known_var, obs) == 1.0);
}

TEST_CASE("evaluate_loss_estimator end to end") {
  // Johnstone's corrected MLE estimator at ||x||^2 = 1, p = 5:
  // delta = p - 2(p-4)/||x||^2 = 3
  const auto mle = EstimatorSpec::mle_spec(5);
  LossEstimatorSpec d;
  d.base = LossEstimatorSpec::Base::sure_known_var;
  d.correction = CorrectionSpec::fixed(scale_field(norm_power_field(-2.0), 2.0));
  Observation obs;
  obs.x = make_vec({1.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(evaluate_loss_estimator(d, mle, obs) == doctest::Approx(3.0));

  // positive part clamps at zero once the correction overshoots
  LossEstimatorSpec dpp = d;
  dpp.correction = CorrectionSpec::fixed(scale_field(norm_power_field(-2.0), 9.0));
  dpp.take_positive_part = true;
  CHECK(evaluate_loss_estimator(dpp, mle, obs) == 0.0);

  // sgn-Laplacian mode reproduces delta0 + alpha/||x||^2 for the JS family
  const auto js = EstimatorSpec::james_stein_spec(5);
  LossEstimatorSpec djs;
  djs.base = LossEstimatorSpec::Base::sure_known_var;
  djs.correction = CorrectionSpec::sgn_laplacian(fundamental_harmonic_field(),
                                                 norm_power_field(-5.0), 10.0);
  Observation obs2;
  obs2.x = make_vec({2.0, 0.0, 0.0, 0.0, 0.0});
  // delta0 = 2.75, correction adds 10/4
  CHECK(evaluate_loss_estimator(djs, js, obs2) == doctest::Approx(5.25));
}
