#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "steinloss/errors.hpp"
#include "steinloss/rng.hpp"

namespace steinloss {

// Mixing law G on (0, inf) for scale mixtures of normals.
struct MixingSpec {
  enum class Kind { point_mass, two_point, gamma };
  Kind kind = Kind::point_mass;
  double s1 = 1.0;      // point_mass value / first two_point atom
  double s2 = 1.0;      // second two_point atom
  double w = 0.5;       // weight on s1
  double shape = 1.0;   // gamma
  double rate = 1.0;

  static MixingSpec point_mass(double s);
  static MixingSpec two_point(double s1, double s2, double w);
  static MixingSpec gamma_mixing(double shape, double rate);

  // E[varsigma^m]; throws DomainError if the moment is infinite.
  double moment(double m) const;
  bool moment_finite(double m) const;
};

// Law of the radius R = ||X - theta|| (or of the full (p+k)-radius when a
// residual vector is present).
struct RadialSpec {
  enum class Kind { fixed, chi, mixture_induced };
  Kind kind = Kind::chi;
  double radius = 1.0;  // fixed
  double dof = 1.0;     // chi / mixture-induced chi^2 dof
  double scale = 1.0;   // chi: R = scale * chi_dof
  MixingSpec mixing;    // mixture_induced: varsigma ~ G, R^2 ~ chi^2_dof / varsigma

  static RadialSpec fixed(double R);
  static RadialSpec chi(double dof, double scale = 1.0);
  static RadialSpec mixture_induced(MixingSpec G, double dof);

  double second_moment() const;  // E[R^2], closed form
};

struct SamplerSpec {
  enum class Kind { normal, scale_mixture, radial_spherical, spherical_residual };
  Kind kind = Kind::normal;
  int p = 1;
  int k = 0;            // residual dimension; in the normal kind, k >= 1 also
                        // attaches S ~ sigma2 * chi^2_k to each draw
  Vec theta;
  double sigma2 = 1.0;
  MixingSpec mixing;
  RadialSpec radial;

  void validate() const;
};

struct ResidualDraw {
  Vec x;
  Vec u;
};

// One-draw primitives; the risk engine builds per-replication generators and
// calls these so that serial and parallel runs see identical streams.
Vec draw_normal(Rng& rng, const Vec& theta, double sigma2);
double draw_mixing(Rng& rng, const MixingSpec& G);
Vec draw_scale_mixture(Rng& rng, const Vec& theta, const MixingSpec& G);
Vec draw_uniform_sphere(Rng& rng, int p);
double draw_radius(Rng& rng, const RadialSpec& radial);
Vec draw_radial_spherical(Rng& rng, const Vec& theta, const RadialSpec& radial);
ResidualDraw draw_spherical_residual(Rng& rng, const Vec& theta, int k,
                                     const RadialSpec& radial);

// Batch operations; draw i uses the substream seed (seed, i).
std::vector<Vec> sample_normal(const SamplerSpec& spec, std::size_t n,
                               std::uint64_t seed);
std::vector<Vec> sample_uniform_sphere(int p, double R, const Vec& center,
                                       std::size_t n, std::uint64_t seed);
std::vector<Vec> sample_scale_mixture(const SamplerSpec& spec, std::size_t n,
                                      std::uint64_t seed);
std::vector<ResidualDraw> sample_spherical_residual(const SamplerSpec& spec,
                                                    std::size_t n,
                                                    std::uint64_t seed);
std::vector<double> sample_variance_stat(double sigma2, int k, std::size_t n,
                                         std::uint64_t seed);

}  // namespace steinloss
