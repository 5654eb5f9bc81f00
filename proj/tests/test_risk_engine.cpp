#include <doctest.h>

#include <cmath>

#include "steinloss/risk_engine.hpp"

using namespace steinloss;

namespace {

SamplerSpec normal_sampler(int p, double sigma2 = 1.0, int k = 0) {
  SamplerSpec s;
  s.kind = SamplerSpec::Kind::normal;
  s.p = p;
  s.k = k;
  s.sigma2 = sigma2;
  return s;
}

LossEstimatorSpec sure_delta(const std::string& name) {
  LossEstimatorSpec d;
  d.name = name;
  d.base = LossEstimatorSpec::Base::sure_known_var;
  return d;
}

}  // namespace

TEST_CASE("mc_point_risk: known values") {
  const int p = 5;
  const Vec zero = Vec::Zero(p);
  const auto sampler = normal_sampler(p);

  const auto mle = mc_point_risk(EstimatorSpec::mle_spec(p), sampler, zero, 100000, 1);
  CHECK(std::abs(mle.mean - 5.0) <= 4.0 * mle.std_error);

  // James-Stein at theta = 0: risk = p - (p-2)^2 E[1/chi2_p] = 2
  const auto js =
      mc_point_risk(EstimatorSpec::james_stein_spec(p), sampler, zero, 100000, 1);
  CHECK(std::abs(js.mean - 2.0) <= 4.0 * js.std_error);
  CHECK(js.mean < mle.mean - 4.0 * std::hypot(js.std_error, mle.std_error));

  // least squares under a spherical residual law: E||X-theta||^2 = p E[R^2]/(p+k)
  SamplerSpec res;
  res.kind = SamplerSpec::Kind::spherical_residual;
  res.p = 6;
  res.k = 4;
  res.radial = RadialSpec::fixed(2.0);
  const Vec zero6 = Vec::Zero(6);
  const auto ls = mc_point_risk(EstimatorSpec::mle_spec(6), res, zero6, 100000, 2);
  CHECK(std::abs(ls.mean - 6.0 * 4.0 / 10.0) <= 4.0 * ls.std_error);
}

TEST_CASE("mc_loss_estimator_risk") {
  const int p = 5;
  const Vec zero = Vec::Zero(p);
  const auto sampler = normal_sampler(p);
  const auto mle = EstimatorSpec::mle_spec(p);

  // delta == p against the MLE at theta = 0: risk is Var(chi2_p) = 2p
  const auto rep = mc_loss_estimator_risk(sure_delta("unbiased"), mle, sampler,
                                          zero, 200000, 3);
  CHECK(std::abs(rep.mean - 10.0) <= 4.0 * rep.std_error);

  // synthetic delta equal to the realized loss pointwise (theta = 0):
  // correction gamma(x) = p - ||x||^2 makes delta = ||x||^2 = L exactly
  ScalarField match;
  match.name = "p_minus_norm2";
  match.eval = [p](const Vec& x) { return p - x.squaredNorm(); };
  LossEstimatorSpec exact = sure_delta("exact");
  exact.correction = CorrectionSpec::fixed(match);
  const auto zero_risk =
      mc_loss_estimator_risk(exact, mle, sampler, zero, 20000, 4);
  CHECK(zero_risk.mean == doctest::Approx(0.0));
  CHECK(zero_risk.std_error == doctest::Approx(0.0));
}

TEST_CASE("mc_risk_difference: Johnstone MLE improvement formula") {
  // paired mean of (delta - L)^2 - (delta0 - L)^2 equals -4(p-4)^2 E[1/||X||^4]
  const int p = 5;
  const auto sampler = normal_sampler(p);
  const auto mle = EstimatorSpec::mle_spec(p);
  LossEstimatorSpec corrected = sure_delta("corrected");
  corrected.correction =
      CorrectionSpec::fixed(scale_field(norm_power_field(-2.0), 2.0 * (p - 4.0)));

  Vec theta = Vec::Zero(p);
  theta[0] = 2.0;
  const std::uint64_t n = 200000;
  const auto diff = mc_risk_difference(corrected, sure_delta("unbiased"), mle,
                                       sampler, theta, n, 5);
  REQUIRE(diff.paired_diff_mean.has_value());

  // independent estimate of -4(p-4)^2 E[1/||X||^4] on the same substreams
  McAccum inv4;
  for (std::uint64_t i = 0; i < n; ++i) {
    const Observation obs = draw_observation(
        [&] {
          SamplerSpec s = sampler;
          s.theta = theta;
          return s;
        }(),
        5, i);
    inv4.add(1.0 / (obs.x.squaredNorm() * obs.x.squaredNorm()));
  }
  const double expected = -4.0 * (p - 4.0) * (p - 4.0) * inv4.mean;
  CHECK(std::abs(*diff.paired_diff_mean - expected) <= 4.0 * *diff.paired_diff_se);
  CHECK(*diff.paired_diff_mean < 0.0);

  // paired SE is no larger than the unpaired one for this positive pair
  CHECK(*diff.paired_diff_se <= diff.std_error);

  // identical estimators: zero difference on every draw
  const auto same = mc_risk_difference(corrected, corrected, mle, sampler, theta,
                                       5000, 6);
  CHECK(*same.paired_diff_mean == 0.0);
  CHECK(*same.paired_diff_se == 0.0);
}

TEST_CASE("determinism: seeds and thread counts") {
  const int p = 5;
  const auto sampler = normal_sampler(p);
  const auto js = EstimatorSpec::james_stein_spec(p);
  const Vec zero = Vec::Zero(p);

  const auto a = mc_point_risk(js, sampler, zero, 50000, 42, 1);
  const auto b = mc_point_risk(js, sampler, zero, 50000, 42, 1);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);

  const auto c = mc_point_risk(js, sampler, zero, 50000, 42, 3);
  CHECK(a.mean == c.mean);  // bit-identical across thread counts
  CHECK(a.std_error == c.std_error);

  const auto d = mc_point_risk(js, sampler, zero, 50000, 43, 1);
  CHECK(a.mean != d.mean);
}

TEST_CASE("theta_sweep") {
  SweepConfig config;
  config.sampler = normal_sampler(5);
  config.est = EstimatorSpec::mle_spec(5);
  config.deltas = {sure_delta("unbiased")};
  config.n = 20000;
  config.seed = 7;

  const auto rows = theta_sweep(config, {0.0, 1.0, 2.0, 5.0, 10.0});
  // 5 plain rows plus the rotated spot check
  CHECK(rows.size() == 6);
  CHECK(rows.back().rotated);
  // equivariance: rotated row within 4 SE of the matching radius
  const auto& straight = rows[4];
  const auto& rotated = rows.back();
  CHECK(straight.theta_norm == rotated.theta_norm);
  CHECK(std::abs(straight.report.mean - rotated.report.mean) <=
        4.0 * std::hypot(straight.report.std_error, rotated.report.std_error) +
            1e-9);

  CHECK_THROWS_AS((void)theta_sweep(config, {}), DomainError);
}

TEST_CASE("identity verifiers: quick positive and negative cases") {
  const int p = 5;
  Vec theta = Vec::Zero(p);
  theta[0] = 0.3;
  const std::uint64_t n = 200000;

  const auto stein = verify_stein_identity(js_shrinkage_field(p - 2.0),
                                           Vec(Vec::Zero(p)), 1.0, n, 11);
  CHECK(stein.pass);

  VectorField broken = js_shrinkage_field(p - 2.0);
  broken.divergence = [inner = js_shrinkage_field(p - 2.0)](const Vec& x) {
    return 1.5 * inner.divergence(x);
  };
  const auto neg = verify_stein_identity(broken, Vec(Vec::Zero(p)), 1.0, n, 11);
  CHECK_FALSE(neg.pass);

  // Lemma A1(ii) with h = s: lhs has mean k, rhs is k exactly
  ScalarFieldXS hs{"s", [](const Vec&, double s) { return s; },
                   [](const Vec&, double) { return 1.0; }};
  const auto a1 = verify_lemma_a1_ii(hs, theta, 2.0, 3, n, 12);
  CHECK(a1.pass);
  CHECK(a1.rhs_mean == doctest::Approx(3.0));

  // Corollary A with gamma == 1, q = 0: exact sphere-moment identity
  const auto ca = verify_corollary_a(constant_field(1.0), 0, 3.0,
                                     Vec(Vec::Zero(6)), 4, n, 13);
  CHECK(ca.pass);
  // E||X-theta||^2 = (p/k) E||U||^2 = R^2 p/(p+k)
  CHECK(ca.lhs_mean == doctest::Approx(9.0 * 6.0 / 10.0).epsilon(1e-3));

  // Lemma A5, q = 0 with the shift field: weight reduces to ||u||^2/k
  const auto a5 = verify_lemma_a5(js_shrinkage_field(4.0), 0, 3.0,
                                  Vec(Vec::Zero(6)), 4, n, 14);
  CHECK(a5.pass);
}

TEST_CASE("finiteness warnings") {
  const auto sampler4 = normal_sampler(4);
  const auto sampler6 = normal_sampler(6);
  const auto mle = EstimatorSpec::mle_spec(4);

  LossEstimatorSpec d = sure_delta("corrected");
  d.correction = CorrectionSpec::fixed(scale_field(norm_power_field(-2.0), 1.0));
  // gamma ~ ||x||^-2 needs p > 4 for E[gamma^2] < infinity
  CHECK_FALSE(finiteness_warnings(mle, {d}, sampler4).empty());
  CHECK(finiteness_warnings(EstimatorSpec::mle_spec(6), {d}, sampler6).empty());
  CHECK(finiteness_warnings(mle, {sure_delta("plain")}, sampler4).empty());

  SamplerSpec heavy;
  heavy.kind = SamplerSpec::Kind::scale_mixture;
  heavy.p = 6;
  heavy.mixing = MixingSpec::gamma_mixing(1.5, 1.0);  // no varsigma^-2 moment
  CHECK_FALSE(
      finiteness_warnings(EstimatorSpec::mle_spec(6), {sure_delta("u")}, heavy)
          .empty());
}
