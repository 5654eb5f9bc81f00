#include "steinloss/risk_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace steinloss {

namespace {

constexpr std::uint64_t kBlock = 8192;

template <std::size_t K>
struct RunResult {
  std::array<McAccum, K> accs;
  std::uint64_t rejected = 0;
};

// Deterministic parallel replication loop: fixed-size blocks are claimed
// dynamically, accumulated independently, then merged in block order, so the
// result is byte-identical for every thread count.
template <std::size_t K, typename PerDraw>
RunResult<K> mc_parallel(std::uint64_t n, int threads, const PerDraw& per_draw) {
  if (n == 0) throw DomainError("Monte Carlo run needs n >= 1");
  const std::uint64_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<std::array<McAccum, K>> block_accs(nblocks);
  std::vector<std::uint64_t> block_rej(nblocks, 0);

  const auto run_block = [&](std::uint64_t b) {
    const std::uint64_t lo = b * kBlock;
    const std::uint64_t hi = std::min(n, lo + kBlock);
    auto& accs = block_accs[b];
    for (std::uint64_t i = lo; i < hi; ++i) {
      const std::array<double, K> vals = per_draw(i, block_rej[b]);
      for (std::size_t k = 0; k < K; ++k) accs[k].add(vals[k]);
    }
  };

  threads = std::max(1, threads);
  if (threads == 1 || nblocks <= 1) {
    for (std::uint64_t b = 0; b < nblocks; ++b) run_block(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
      try {
        for (;;) {
          const std::uint64_t b = next.fetch_add(1);
          if (b >= nblocks) return;
          run_block(b);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    const auto nt = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), nblocks));
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }

  RunResult<K> out;
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    for (std::size_t k = 0; k < K; ++k) out.accs[k].merge(block_accs[b][k]);
    out.rejected += block_rej[b];
  }
  return out;
}

SamplerSpec with_theta(const SamplerSpec& sampler, const Vec& theta) {
  SamplerSpec s = sampler;
  s.theta = theta;
  if (s.theta.size() == 0) s.theta = Vec::Zero(s.p);
  if (s.theta.size() != s.p) throw ConfigError("theta dimension does not match p");
  return s;
}

Observation draw_observation_rng(const SamplerSpec& spec, Rng& rng) {
  Observation obs;
  switch (spec.kind) {
    case SamplerSpec::Kind::normal:
      obs.x = draw_normal(rng, spec.theta, spec.sigma2);
      if (spec.k >= 1) obs.s = spec.sigma2 * rng.chisq(spec.k);
      break;
    case SamplerSpec::Kind::scale_mixture:
      obs.x = draw_scale_mixture(rng, spec.theta, spec.mixing);
      break;
    case SamplerSpec::Kind::radial_spherical:
      obs.x = draw_radial_spherical(rng, spec.theta, spec.radial);
      break;
    case SamplerSpec::Kind::spherical_residual: {
      ResidualDraw d = draw_spherical_residual(rng, spec.theta, spec.k, spec.radial);
      obs.x = std::move(d.x);
      obs.u = std::move(d.u);
      break;
    }
  }
  return obs;
}

bool uses_invariant_loss(const EstimatorSpec& est) {
  return est.kind == EstimatorSpec::Kind::js_unknown_var;
}

// Draw + compute with the singularity guard: a draw that lands on a shrinkage
// singularity (probability zero) is redrawn from a bumped substream and counted.
template <std::size_t K, typename Fn>
std::array<double, K> guarded_draw(const SamplerSpec& spec, std::uint64_t seed,
                                   std::uint64_t index, std::uint64_t& rejected,
                                   const Fn& compute) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt > 100)
      throw DomainError("draw rejected 100 times; sampler looks degenerate");
    const std::uint64_t sub = substream_seed(seed, index);
    Rng rng(attempt == 0 ? sub : substream_seed(sub, attempt));
    Observation obs = draw_observation_rng(spec, rng);
    try {
      return compute(obs);
    } catch (const ShrinkageSingularity&) {
      ++rejected;
    }
  }
}

void flag_relative_se(RiskReport& rep) {
  if (rep.std_error > 0.0 && std::abs(rep.mean) > 0.0 &&
      rep.std_error > 0.2 * std::abs(rep.mean)) {
    rep.warnings.push_back("relative SE exceeds 20%");
  }
}

IdentityReport summarize_identity(const std::string& name,
                                  const RunResult<3>& res, std::uint64_t n,
                                  std::uint64_t seed) {
  IdentityReport rep;
  rep.name = name;
  rep.lhs_mean = res.accs[0].mean;
  rep.rhs_mean = res.accs[1].mean;
  rep.diff_mean = res.accs[2].mean;
  rep.diff_se = res.accs[2].se();
  rep.n = n;
  rep.seed = seed;
  rep.pass = std::abs(rep.diff_mean) <= 4.0 * rep.diff_se;
  return rep;
}

}  // namespace

Observation draw_observation(const SamplerSpec& sampler, std::uint64_t seed,
                             std::uint64_t index) {
  Rng rng(substream_seed(seed, index));
  return draw_observation_rng(sampler, rng);
}

RiskReport mc_point_risk(const EstimatorSpec& est, const SamplerSpec& sampler,
                         const Vec& theta, std::uint64_t n, std::uint64_t seed,
                         int threads) {
  const SamplerSpec spec = with_theta(sampler, theta);
  spec.validate();
  const bool invariant = uses_invariant_loss(est);
  const auto res = mc_parallel<1>(n, threads, [&](std::uint64_t i, std::uint64_t& rej) {
    return guarded_draw<1>(spec, seed, i, rej, [&](const Observation& obs) {
      const Vec phi = estimate(est, obs);
      return std::array<double, 1>{
          invariant ? invariant_loss(phi, spec.theta, spec.sigma2)
                    : quadratic_loss(phi, spec.theta)};
    });
  });
  RiskReport rep;
  rep.mean = res.accs[0].mean;
  rep.std_error = res.accs[0].se();
  rep.n = n;
  rep.seed = seed;
  rep.theta = spec.theta;
  rep.rejected = res.rejected;
  flag_relative_se(rep);
  return rep;
}

RiskReport mc_loss_estimator_risk(const LossEstimatorSpec& delta,
                                  const EstimatorSpec& est,
                                  const SamplerSpec& sampler, const Vec& theta,
                                  std::uint64_t n, std::uint64_t seed,
                                  int threads) {
  const SamplerSpec spec = with_theta(sampler, theta);
  spec.validate();
  const bool invariant = uses_invariant_loss(est);
  const auto res = mc_parallel<1>(n, threads, [&](std::uint64_t i, std::uint64_t& rej) {
    return guarded_draw<1>(spec, seed, i, rej, [&](const Observation& obs) {
      const Vec phi = estimate(est, obs);
      const double L = invariant ? invariant_loss(phi, spec.theta, spec.sigma2)
                                 : quadratic_loss(phi, spec.theta);
      return std::array<double, 1>{
          loss_estimation_loss(evaluate_loss_estimator(delta, est, obs), L)};
    });
  });
  RiskReport rep;
  rep.mean = res.accs[0].mean;
  rep.std_error = res.accs[0].se();
  rep.n = n;
  rep.seed = seed;
  rep.theta = spec.theta;
  rep.rejected = res.rejected;
  flag_relative_se(rep);
  return rep;
}

RiskReport mc_risk_difference(const LossEstimatorSpec& a, const LossEstimatorSpec& b,
                              const EstimatorSpec& est, const SamplerSpec& sampler,
                              const Vec& theta, std::uint64_t n, std::uint64_t seed,
                              int threads) {
  const SamplerSpec spec = with_theta(sampler, theta);
  spec.validate();
  const bool invariant = uses_invariant_loss(est);
  const auto res = mc_parallel<3>(n, threads, [&](std::uint64_t i, std::uint64_t& rej) {
    return guarded_draw<3>(spec, seed, i, rej, [&](const Observation& obs) {
      const Vec phi = estimate(est, obs);
      const double L = invariant ? invariant_loss(phi, spec.theta, spec.sigma2)
                                 : quadratic_loss(phi, spec.theta);
      const double da = loss_estimation_loss(evaluate_loss_estimator(a, est, obs), L);
      const double db = loss_estimation_loss(evaluate_loss_estimator(b, est, obs), L);
      return std::array<double, 3>{da, db, da - db};
    });
  });
  RiskReport rep;
  rep.mean = res.accs[0].mean - res.accs[1].mean;
  rep.std_error = std::sqrt(res.accs[0].se() * res.accs[0].se() +
                            res.accs[1].se() * res.accs[1].se());
  rep.paired_diff_mean = res.accs[2].mean;
  rep.paired_diff_se = res.accs[2].se();
  rep.n = n;
  rep.seed = seed;
  rep.theta = spec.theta;
  rep.rejected = res.rejected;
  return rep;
}

std::vector<SweepRow> theta_sweep(const SweepConfig& config,
                                  const std::vector<double>& radii) {
  if (radii.empty()) throw DomainError("theta sweep needs at least one radius");
  if (config.deltas.empty()) throw ConfigError("theta sweep needs loss estimators");
  std::vector<SweepRow> rows;
  const int p = config.sampler.p;
  for (double r : radii) {
    Vec theta = Vec::Zero(p);
    theta[0] = r;
    for (const auto& d : config.deltas) {
      SweepRow row;
      row.theta_norm = r;
      row.loss_name = d.name;
      row.report = mc_loss_estimator_risk(d, config.est, config.sampler, theta,
                                          config.n, config.seed, config.threads);
      rows.push_back(std::move(row));
    }
  }
  // Equivariance spot check at one rotated theta.
  const double rmax = *std::max_element(radii.begin(), radii.end());
  if (rmax > 0.0 && p >= 2) {
    Vec theta = Vec::Zero(p);
    theta[0] = rmax / std::sqrt(2.0);
    theta[1] = rmax / std::sqrt(2.0);
    for (const auto& d : config.deltas) {
      SweepRow row;
      row.theta_norm = rmax;
      row.rotated = true;
      row.loss_name = d.name;
      row.report = mc_loss_estimator_risk(d, config.est, config.sampler, theta,
                                          config.n, config.seed, config.threads);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

IdentityReport verify_stein_identity(const VectorField& g, const Vec& theta,
                                     double sigma2, std::uint64_t n,
                                     std::uint64_t seed, int threads) {
  SamplerSpec spec;
  spec.kind = SamplerSpec::Kind::normal;
  spec.p = static_cast<int>(theta.size());
  spec.theta = theta;
  spec.sigma2 = sigma2;
  const auto res = mc_parallel<3>(n, threads, [&](std::uint64_t i, std::uint64_t& rej) {
    return guarded_draw<3>(spec, seed, i, rej, [&](const Observation& obs) {
      const double lhs = (obs.x - theta).dot(g.eval(obs.x));
      const double rhs = sigma2 * divergence(g, obs.x);
      return std::array<double, 3>{lhs, rhs, lhs - rhs};
    });
  });
  return summarize_identity("stein_identity", res, n, seed);
}

IdentityReport verify_lemma_a1_i(const VectorFieldXS& g, const Vec& theta,
                                 double sigma2, int k, std::uint64_t n,
                                 std::uint64_t seed, int threads) {
  if (k < 1) throw DomainError("lemma A1 needs k >= 1");
  SamplerSpec spec;
  spec.kind = SamplerSpec::Kind::normal;
  spec.p = static_cast<int>(theta.size());
  spec.k = k;
  spec.theta = theta;
  spec.sigma2 = sigma2;
  const auto res = mc_parallel<3>(n, threads, [&](std::uint64_t i, std::uint64_t& rej) {
    return guarded_draw<3>(spec, seed, i, rej, [&](const Observation& obs) {
      const double s = *obs.s;
      const double lhs = (obs.x - theta).dot(g.eval(obs.x, s)) / sigma2;
      const double rhs = divergence_x(g, obs.x, s);
      return std::array<double, 3>{lhs, rhs, lhs - rhs};
    });
  });
  return summarize_identity("lemma_a1_i", res, n, seed);
}

IdentityReport verify_lemma_a1_ii(const ScalarFieldXS& h, const Vec& theta,
                                  double sigma2, int k, std::uint64_t n,
                                  std::uint64_t seed, int threads) {
  if (k < 1) throw DomainError("lemma A1 needs k >= 1");
  if (!h.ds) throw DomainError("lemma A1(ii) needs dh/ds");
  SamplerSpec spec;
  spec.kind = SamplerSpec::Kind::normal;
  spec.p = static_cast<int>(theta.size());
  spec.k = k;
  spec.theta = theta;
  spec.sigma2 = sigma2;
  const auto res = mc_parallel<3>(n, threads, [&](std::uint64_t i, std::uint64_t& rej) {
    return guarded_draw<3>(spec, seed, i, rej, [&](const Observation& obs) {
      const double s = *obs.s;
      const double lhs = h.eval(obs.x, s) / sigma2;
      const double rhs = 2.0 * h.ds(obs.x, s) + (k - 2.0) * h.eval(obs.x, s) / s;
      return std::array<double, 3>{lhs, rhs, lhs - rhs};
    });
  });
  return summarize_identity("lemma_a1_ii", res, n, seed);
}

IdentityReport verify_lemma_a5(const VectorField& g, int q, double R,
                               const Vec& theta, int k, std::uint64_t n,
                               std::uint64_t seed, int threads,
                               const RadialFn* H_override) {
  if (k < 1) throw DomainError("lemma A5 needs k >= 1");
  if (q < 0) throw DomainError("lemma A5 monomial exponent q must be >= 0");
  SamplerSpec spec;
  spec.kind = SamplerSpec::Kind::spherical_residual;
  spec.p = static_cast<int>(theta.size());
  spec.k = k;
  spec.theta = theta;
  spec.radial = RadialSpec::fixed(R);
  // h(t) = t^(q/2); H(t) = t^((q+k)/2) / (q+k), so H(u2)/u2^(k/2-1) = u^(q+2)/(k+q).
  const auto res = mc_parallel<3>(n, threads, [&](std::uint64_t i, std::uint64_t& rej) {
    return guarded_draw<3>(spec, seed, i, rej, [&](const Observation& obs) {
      const double u2 = obs.u->squaredNorm();
      const double lhs = std::pow(u2, 0.5 * q) * (obs.x - theta).dot(g.eval(obs.x));
      double weight;
      if (H_override) {
        weight = H_override->eval(u2) / std::pow(u2, 0.5 * k - 1.0);
      } else {
        weight = std::pow(u2, 0.5 * (q + 2)) / static_cast<double>(k + q);
      }
      const double rhs = weight * divergence(g, obs.x);
      return std::array<double, 3>{lhs, rhs, lhs - rhs};
    });
  });
  return summarize_identity("lemma_a5", res, n, seed);
}

IdentityReport verify_corollary_a(const ScalarField& gamma, int q, double R,
                                  const Vec& theta, int k, std::uint64_t n,
                                  std::uint64_t seed, int threads) {
  if (k < 1) throw DomainError("corollary A needs k >= 1");
  if (q < 0 || q % 2 != 0) throw DomainError("corollary A needs even q >= 0");
  SamplerSpec spec;
  spec.kind = SamplerSpec::Kind::spherical_residual;
  spec.p = static_cast<int>(theta.size());
  spec.k = k;
  spec.theta = theta;
  spec.radial = RadialSpec::fixed(R);
  const double c1 = static_cast<double>(spec.p) / (k + q);
  const double c2 = 1.0 / ((k + q) * (k + q + 2.0));
  const auto res = mc_parallel<3>(n, threads, [&](std::uint64_t i, std::uint64_t& rej) {
    return guarded_draw<3>(spec, seed, i, rej, [&](const Observation& obs) {
      const double u2 = obs.u->squaredNorm();
      const double gv = gamma.eval(obs.x);
      const double lhs =
          std::pow(u2, 0.5 * q) * (obs.x - theta).squaredNorm() * gv;
      const double rhs = c1 * std::pow(u2, 0.5 * (q + 2)) * gv +
                         c2 * std::pow(u2, 0.5 * (q + 4)) * laplacian(gamma, obs.x);
      return std::array<double, 3>{lhs, rhs, lhs - rhs};
    });
  });
  return summarize_identity("corollary_a", res, n, seed);
}

PairedCustomResult mc_paired_custom(
    std::uint64_t n, std::uint64_t seed, int threads,
    const std::function<std::array<double, 3>(Rng&)>& per_draw) {
  const auto res = mc_parallel<3>(n, threads, [&](std::uint64_t i, std::uint64_t&) {
    Rng rng(substream_seed(seed, i));
    return per_draw(rng);
  });
  return {res.accs[0], res.accs[1], res.accs[2]};
}

std::vector<std::string> finiteness_warnings(const EstimatorSpec& est,
                                             const std::vector<LossEstimatorSpec>& deltas,
                                             const SamplerSpec& sampler) {
  std::vector<std::string> warnings;
  const int p = sampler.p;

  // Singularity order of a library field at the origin: f ~ ||x||^(-order).
  const auto origin_order = [p](const ScalarField& f) -> double {
    if (f.name == "norm_power" && !f.params.empty())
      return f.params[0] < 0.0 ? -f.params[0] : 0.0;
    if (f.name == "fundamental_harmonic") return p - 2.0;
    if (f.name == "shifted_norm_power" && f.params.size() == 2 && f.params[0] == 0.0)
      return 2.0 * f.params[1];
    return 0.0;
  };

  for (const auto& d : deltas) {
    if (!d.correction || d.correction->sgn_mode) continue;
    const double order = origin_order(d.correction->gamma);
    if (order > 0.0 && 2.0 * order >= p) {
      warnings.push_back("second moment of correction '" + d.name +
                         "' may be infinite: gamma ~ ||x||^(-" +
                         std::to_string(order) + ") needs p > " +
                         std::to_string(2.0 * order));
    }
  }

  const bool shrinks = est.kind == EstimatorSpec::Kind::james_stein ||
                       est.kind == EstimatorSpec::Kind::js_unknown_var;
  if (shrinks && p < 3)
    warnings.push_back("shrinkage estimator needs p >= 3 for a finite risk");

  if (sampler.kind == SamplerSpec::Kind::scale_mixture &&
      !sampler.mixing.moment_finite(-2.0)) {
    warnings.push_back(
        "mixing law has an infinite varsigma^(-2) moment; the unbiased "
        "estimator's risk is infinite");
  }
  if (sampler.kind == SamplerSpec::Kind::scale_mixture &&
      !sampler.mixing.moment_finite(-1.0)) {
    warnings.push_back("mixing law has an infinite varsigma^(-1) moment; E[R^2] "
                       "does not exist");
  }
  return warnings;
}

}  // namespace steinloss
