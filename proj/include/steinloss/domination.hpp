#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "steinloss/fields.hpp"
#include "steinloss/samplers.hpp"

namespace steinloss {

// Radial x random-direction evaluation grid. All of the differential
// inequalities here are radially structured; the random directions are there
// to catch implementation mistakes, not to refine the mathematics.
struct GridSpec {
  std::vector<double> radii;
  int directions_per_radius = 64;
  std::vector<double> s_values = {1.0};
  double tolerance = 0.0;
  std::uint64_t seed = 1234;

  // 40 radii log-spaced in [0.1, 50], 64 directions.
  static GridSpec defaults();
};

std::vector<Vec> make_grid_points(const GridSpec& grid, int p);

struct GridValue {
  double radius;
  int direction;
  double s;      // NaN when the condition has no s component
  double lhs;
};

// Grid evidence for one differential inequality; never a proof.
struct ConditionReport {
  std::string condition;
  bool pass = false;
  bool boundary = false;  // max LHS within 1e-9 of zero
  double max_lhs = 0.0;
  double tolerance = 0.0;
  std::vector<GridValue> values;
  std::string note = "grid evidence, not proof";

  void write_csv(std::ostream& os) const;
};

// gamma^2 + 4 grad(gamma)^t g + 2 Delta(gamma) <= 0   (known variance)
ConditionReport check_known_var(const ScalarField& gamma, const VectorField& g,
                                const GridSpec& grid, int p);

// K0 = inf m |Delta xi| / xi^2, as a grid lower envelope.
double compute_K0(const ScalarField& m, const ScalarField& xi,
                  const GridSpec& grid, int p);

// Valid correction range (0, 2 K0) of the sgn-Laplacian family.
std::pair<double, double> alpha_range_thm21(const ScalarField& m,
                                            const ScalarField& xi,
                                            const GridSpec& grid, int p);

// gamma^2 + 2/(k+2) Delta(gamma) + 4 g(x,s)^t grad(gamma) + 4 gamma ||g(x,s)||^2 <= 0
ConditionReport check_unknown_var(const ScalarField& gamma, const VectorFieldXS& g,
                                  int k, const GridSpec& grid, int p);

// Moment-ratio constant of the scale-mixture setting:
// k = 2 E[vs^(p/2)] / E[vs^(p/2-2)].
double mixture_k(const MixingSpec& G, int p);

// k_const * Delta(gamma) + gamma^2 < 0
ConditionReport check_mixture(const ScalarField& gamma, double k_const,
                              const GridSpec& grid, int p);

// Conditions of the general spherical theorem on a generating function:
// tail(s)/(2 g(s)) <= delta0/p, and the admissible constant
// k < (int_s zg - s int_s g) / (2 g(s)) taken as a grid infimum.
struct GeneralSphericalReport {
  bool pass = false;
  double k_const = 0.0;
  double max_ratio = 0.0;  // max over the s-grid of tail/(2g) - delta0/p
  std::vector<GridValue> values;
  std::string note = "grid evidence, not proof";
};
GeneralSphericalReport check_general_spherical(const RadialFn& gen, double delta0,
                                               int p,
                                               const std::vector<double>& s_grid);

// gamma^2 + 2/((k+4)(k+6)) Delta(gamma) <= 0
ConditionReport check_residual_ls(const ScalarField& gamma, int k,
                                  const GridSpec& grid, int p);

// gamma^2 - 4/(k+2) gamma div g + 4/(k+6) div(gamma g)
//   + 2/((k+4)(k+6)) Delta(gamma) <= 0
ConditionReport check_residual_shrink(const ScalarField& gamma, const VectorField& g,
                                      int k, const GridSpec& grid, int p);

// (Delta pi / pi)^2 - 2 Delta^2 pi / pi <= 0
ConditionReport check_prior_condition(const ScalarField& pi, const GridSpec& grid,
                                      int p);

}  // namespace steinloss
