#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steinloss/loss_estimators.hpp"

namespace steinloss {

// Streaming mean/variance (Welford). Merging blocks in a fixed order makes the
// parallel reduction bit-identical to the serial one.
struct McAccum {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const McAccum& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double d = o.mean - mean;
    const double nn = static_cast<double>(n), on = static_cast<double>(o.n);
    mean += d * on / (nn + on);
    m2 += o.m2 + d * d * nn * on / (nn + on);
    n += o.n;
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double se() const {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

struct RiskReport {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  Vec theta;
  std::optional<double> paired_diff_mean;
  std::optional<double> paired_diff_se;
  std::uint64_t rejected = 0;  // singular draws redrawn with a seed bump
  std::vector<std::string> warnings;
};

// Number of sampling replications used by default; 4-paired-SE tolerances at
// these sizes give a ~6e-5 two-sided false-alarm rate per check.
inline constexpr std::uint64_t kDefaultRiskN = 200000;
inline constexpr std::uint64_t kDefaultIdentityN = 1000000;

// Draw one observation for the sampler's setting. Replication `index` uses the
// substream (seed, index); singular draws bump an attempt counter.
Observation draw_observation(const SamplerSpec& sampler, std::uint64_t seed,
                             std::uint64_t index);

// E[L(theta, phi(X))] by Monte Carlo; invariant loss in the unknown-variance
// setting, plain quadratic loss otherwise.
RiskReport mc_point_risk(const EstimatorSpec& est, const SamplerSpec& sampler,
                         const Vec& theta, std::uint64_t n, std::uint64_t seed,
                         int threads = 1);

// E[(delta - L)^2] by Monte Carlo.
RiskReport mc_loss_estimator_risk(const LossEstimatorSpec& delta,
                                  const EstimatorSpec& est,
                                  const SamplerSpec& sampler, const Vec& theta,
                                  std::uint64_t n, std::uint64_t seed,
                                  int threads = 1);

// Paired difference R(a) - R(b) on common draws. `mean` and `std_error` are the
// difference of means and the unpaired error; the paired fields carry the CRN
// statistics.
RiskReport mc_risk_difference(const LossEstimatorSpec& a, const LossEstimatorSpec& b,
                              const EstimatorSpec& est, const SamplerSpec& sampler,
                              const Vec& theta, std::uint64_t n, std::uint64_t seed,
                              int threads = 1);

struct SweepRow {
  double theta_norm = 0.0;
  bool rotated = false;
  std::string loss_name;
  RiskReport report;
};

struct SweepConfig {
  EstimatorSpec est;
  SamplerSpec sampler;
  std::vector<LossEstimatorSpec> deltas;
  std::uint64_t n = kDefaultRiskN;
  std::uint64_t seed = 42;
  int threads = 1;
};

// One row per (theta = r e1, loss estimator); a rotated spot-check row is
// appended for the largest nonzero radius.
std::vector<SweepRow> theta_sweep(const SweepConfig& config,
                                  const std::vector<double>& radii);

// Identity verifiers ------------------------------------------------------

struct IdentityReport {
  std::string name;
  double lhs_mean = 0.0;
  double rhs_mean = 0.0;
  double diff_mean = 0.0;
  double diff_se = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  bool pass = false;  // |diff_mean| <= 4 diff_se
};

// E[(X-theta)^t g(X)] = sigma2 E[div g(X)], X ~ N(theta, sigma2 I).
IdentityReport verify_stein_identity(const VectorField& g, const Vec& theta,
                                     double sigma2, std::uint64_t n,
                                     std::uint64_t seed, int threads = 1);

// E[(X-theta)^t g(X,S)/sigma2] = E[div_x g(X,S)], S ~ sigma2 chi2_k.
IdentityReport verify_lemma_a1_i(const VectorFieldXS& g, const Vec& theta,
                                 double sigma2, int k, std::uint64_t n,
                                 std::uint64_t seed, int threads = 1);

// E[h(X,S)/sigma2] = E[2 dh/dS + (k-2) h/S].
IdentityReport verify_lemma_a1_ii(const ScalarFieldXS& h, const Vec& theta,
                                  double sigma2, int k, std::uint64_t n,
                                  std::uint64_t seed, int threads = 1);

// E[h(||U||^2)(X-theta)^t g(X)] = E[H(||U||^2)/||U||^(k-2) div g(X)] at fixed
// radius R, with h(t) = t^(q/2) and H its closed-form antiderivative. A custom
// H can be supplied (negative controls).
IdentityReport verify_lemma_a5(const VectorField& g, int q, double R,
                               const Vec& theta, int k, std::uint64_t n,
                               std::uint64_t seed, int threads = 1,
                               const RadialFn* H_override = nullptr);

// E[||U||^q ||X-theta||^2 gamma(X)] =
//   p/(k+q) E[||U||^(q+2) gamma] + 1/((k+q)(k+q+2)) E[||U||^(q+4) Delta gamma].
IdentityReport verify_corollary_a(const ScalarField& gamma, int q, double R,
                                  const Vec& theta, int k, std::uint64_t n,
                                  std::uint64_t seed, int threads = 1);

// Heuristic moment checks (never hard errors): shrinkage singularity order vs
// dimension, mixture inverse moments.
std::vector<std::string> finiteness_warnings(const EstimatorSpec& est,
                                             const std::vector<LossEstimatorSpec>& deltas,
                                             const SamplerSpec& sampler);

// Paired run over a caller-supplied draw, for experiments outside the standard
// estimator/sampler pairs. per_draw returns (a, b, a - b); replication i sees a
// generator seeded from the substream (seed, i).
struct PairedCustomResult {
  McAccum a, b, diff;
};
PairedCustomResult mc_paired_custom(
    std::uint64_t n, std::uint64_t seed, int threads,
    const std::function<std::array<double, 3>(Rng&)>& per_draw);

}  // namespace steinloss
