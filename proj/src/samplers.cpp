#include "steinloss/samplers.hpp"

#include <cmath>

#include "steinloss/errors.hpp"

namespace steinloss {

MixingSpec MixingSpec::point_mass(double s) {
  if (s <= 0.0) throw DomainError("point_mass atom must be positive");
  MixingSpec G;
  G.kind = Kind::point_mass;
  G.s1 = s;
  return G;
}

MixingSpec MixingSpec::two_point(double s1, double s2, double w) {
  if (s1 <= 0.0 || s2 <= 0.0) throw DomainError("two_point atoms must be positive");
  if (w < 0.0 || w > 1.0) throw DomainError("two_point weight must lie in [0,1]");
  MixingSpec G;
  G.kind = Kind::two_point;
  G.s1 = s1;
  G.s2 = s2;
  G.w = w;
  return G;
}

MixingSpec MixingSpec::gamma_mixing(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0)
    throw DomainError("gamma mixing needs positive shape and rate");
  MixingSpec G;
  G.kind = Kind::gamma;
  G.shape = shape;
  G.rate = rate;
  return G;
}

bool MixingSpec::moment_finite(double m) const {
  if (kind == Kind::gamma) return shape + m > 0.0;
  return true;
}

double MixingSpec::moment(double m) const {
  switch (kind) {
    case Kind::point_mass:
      return std::pow(s1, m);
    case Kind::two_point:
      return w * std::pow(s1, m) + (1.0 - w) * std::pow(s2, m);
    case Kind::gamma:
      if (shape + m <= 0.0)
        throw DomainError("gamma mixing moment E[varsigma^" + std::to_string(m) +
                          "] is infinite (shape " + std::to_string(shape) + ")");
      return std::exp(std::lgamma(shape + m) - std::lgamma(shape)) /
             std::pow(rate, m);
  }
  throw DomainError("unreachable mixing kind");
}

RadialSpec RadialSpec::fixed(double R) {
  if (R <= 0.0) throw DomainError("fixed radius must be positive");
  RadialSpec r;
  r.kind = Kind::fixed;
  r.radius = R;
  return r;
}

RadialSpec RadialSpec::chi(double dof, double scale) {
  if (dof <= 0.0 || scale <= 0.0) throw DomainError("chi radial needs dof, scale > 0");
  RadialSpec r;
  r.kind = Kind::chi;
  r.dof = dof;
  r.scale = scale;
  return r;
}

RadialSpec RadialSpec::mixture_induced(MixingSpec G, double dof) {
  if (dof <= 0.0) throw DomainError("mixture-induced radial needs dof > 0");
  RadialSpec r;
  r.kind = Kind::mixture_induced;
  r.mixing = G;
  r.dof = dof;
  return r;
}

double RadialSpec::second_moment() const {
  switch (kind) {
    case Kind::fixed:
      return radius * radius;
    case Kind::chi:
      return scale * scale * dof;
    case Kind::mixture_induced:
      // E[R^2] = dof * E[1/varsigma]
      return dof * mixing.moment(-1.0);
  }
  throw DomainError("unreachable radial kind");
}

void SamplerSpec::validate() const {
  if (p < 1) throw ConfigError("sampler dimension p must be >= 1");
  if (k < 0) throw ConfigError("residual dimension k must be >= 0");
  if (theta.size() != 0 && theta.size() != p)
    throw ConfigError("theta dimension does not match p");
  if ((kind == Kind::normal) && sigma2 <= 0.0)
    throw ConfigError("sigma2 must be positive");
  if (kind == Kind::spherical_residual && k < 1)
    throw ConfigError("spherical_residual sampler needs k >= 1");
}

Vec draw_normal(Rng& rng, const Vec& theta, double sigma2) {
  const double sd = std::sqrt(sigma2);
  Vec x(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    x[i] = theta[i] + sd * rng.normal();
  return x;
}

double draw_mixing(Rng& rng, const MixingSpec& G) {
  switch (G.kind) {
    case MixingSpec::Kind::point_mass:
      return G.s1;  // consumes no randomness, so point_mass(1) reproduces the
                    // plain normal stream draw-for-draw
    case MixingSpec::Kind::two_point:
      return rng.uniform() < G.w ? G.s1 : G.s2;
    case MixingSpec::Kind::gamma:
      return rng.gamma(G.shape) / G.rate;
  }
  throw DomainError("unreachable mixing kind");
}

Vec draw_scale_mixture(Rng& rng, const Vec& theta, const MixingSpec& G) {
  const double vs = draw_mixing(rng, G);
  return draw_normal(rng, theta, 1.0 / vs);
}

Vec draw_uniform_sphere(Rng& rng, int p) {
  for (;;) {
    Vec z = rng.normal_vec(p);
    const double r = z.norm();
    if (r > 1e-100) return Vec(z / r);
    // degenerate draw (probability zero): resample
  }
}

double draw_radius(Rng& rng, const RadialSpec& radial) {
  switch (radial.kind) {
    case RadialSpec::Kind::fixed:
      return radial.radius;
    case RadialSpec::Kind::chi:
      return radial.scale * std::sqrt(rng.chisq(radial.dof));
    case RadialSpec::Kind::mixture_induced: {
      const double vs = draw_mixing(rng, radial.mixing);
      return std::sqrt(rng.chisq(radial.dof) / vs);
    }
  }
  throw DomainError("unreachable radial kind");
}

Vec draw_radial_spherical(Rng& rng, const Vec& theta, const RadialSpec& radial) {
  const double R = draw_radius(rng, radial);
  const int p = static_cast<int>(theta.size());
  return Vec(theta + R * draw_uniform_sphere(rng, p));
}

ResidualDraw draw_spherical_residual(Rng& rng, const Vec& theta, int k,
                                     const RadialSpec& radial) {
  const double R = draw_radius(rng, radial);
  const int p = static_cast<int>(theta.size());
  const Vec w = draw_uniform_sphere(rng, p + k);
  ResidualDraw d;
  d.x = theta + R * w.head(p);
  d.u = R * w.tail(k);
  return d;
}

namespace {

Vec theta_or_zero(const SamplerSpec& spec) {
  return spec.theta.size() == spec.p ? spec.theta : Vec(Vec::Zero(spec.p));
}

}  // namespace

std::vector<Vec> sample_normal(const SamplerSpec& spec, std::size_t n,
                               std::uint64_t seed) {
  spec.validate();
  if (spec.kind != SamplerSpec::Kind::normal)
    throw ConfigError("sample_normal requires a normal sampler spec");
  const Vec theta = theta_or_zero(spec);
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(substream_seed(seed, i));
    out.push_back(draw_normal(rng, theta, spec.sigma2));
  }
  return out;
}

std::vector<Vec> sample_uniform_sphere(int p, double R, const Vec& center,
                                       std::size_t n, std::uint64_t seed) {
  if (R <= 0.0) throw DomainError("sphere radius must be positive");
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(substream_seed(seed, i));
    out.push_back(Vec(center + R * draw_uniform_sphere(rng, p)));
  }
  return out;
}

std::vector<Vec> sample_scale_mixture(const SamplerSpec& spec, std::size_t n,
                                      std::uint64_t seed) {
  spec.validate();
  if (spec.kind != SamplerSpec::Kind::scale_mixture)
    throw ConfigError("sample_scale_mixture requires a scale_mixture spec");
  const Vec theta = theta_or_zero(spec);
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(substream_seed(seed, i));
    out.push_back(draw_scale_mixture(rng, theta, spec.mixing));
  }
  return out;
}

std::vector<ResidualDraw> sample_spherical_residual(const SamplerSpec& spec,
                                                    std::size_t n,
                                                    std::uint64_t seed) {
  spec.validate();
  if (spec.kind != SamplerSpec::Kind::spherical_residual)
    throw ConfigError("sample_spherical_residual requires a spherical_residual spec");
  const Vec theta = theta_or_zero(spec);
  std::vector<ResidualDraw> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(substream_seed(seed, i));
    out.push_back(draw_spherical_residual(rng, theta, spec.k, spec.radial));
  }
  return out;
}

std::vector<double> sample_variance_stat(double sigma2, int k, std::size_t n,
                                         std::uint64_t seed) {
  if (k < 1) throw DomainError("variance statistic needs k >= 1");
  if (sigma2 <= 0.0) throw DomainError("sigma2 must be positive");
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(substream_seed(seed, i));
    out.push_back(sigma2 * rng.chisq(k));
  }
  return out;
}

}  // namespace steinloss
