#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "steinloss/errors.hpp"

namespace steinloss {

using Vec = Eigen::VectorXd;

// Named, evaluable function on R^p with optional closed-form derivatives.
// Dimension is taken from the evaluation point, so one field serves every p.
// Evaluation is pointwise; weak differentiability off the singular set is an
// assumption carried by the caller, not something the library can check.
struct ScalarField {
  std::string name;
  std::vector<double> params;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;           // optional
  std::function<double(const Vec&)> laplacian;   // optional
  std::function<double(const Vec&)> bilaplacian; // optional
  bool singular_at_origin = false;
};

struct VectorField {
  std::string name;
  std::vector<double> params;
  std::function<Vec(const Vec&)> eval;
  std::function<double(const Vec&)> divergence;  // optional
  bool singular_at_origin = false;
};

// g(x, s) for the unknown-variance setting.
struct VectorFieldXS {
  std::string name;
  std::function<Vec(const Vec&, double)> eval;
  std::function<double(const Vec&, double)> divergence_x;  // optional
  std::function<double(const Vec&, double)> dnorm2_ds;     // optional, d/ds ||g||^2
  bool singular_at_origin = false;
};

// h(x, s), scalar-valued.
struct ScalarFieldXS {
  std::string name;
  std::function<double(const Vec&, double)> eval;
  std::function<double(const Vec&, double)> ds;  // optional, dh/ds
};

// Density-shape function on R+ (generating function of a spherical law).
struct RadialFn {
  std::string name;
  std::function<double(double)> eval;
};

// Default steps: cube-root scaling for first differences, fourth-root for
// second differences (truncation/rounding balance).
double fd_step1(const Vec& x);
double fd_step2(const Vec& x);

Vec gradient_fd(const ScalarField& f, const Vec& x, double h = 0.0);
double divergence_fd(const VectorField& g, const Vec& x, double h = 0.0);
double laplacian_fd(const ScalarField& f, const Vec& x, double h = 0.0);
double bilaplacian_fd(const ScalarField& f, const Vec& x, double h = 0.0);

// Analytic route when the field carries one, finite differences otherwise.
Vec gradient(const ScalarField& f, const Vec& x);
double divergence(const VectorField& g, const Vec& x);
double laplacian(const ScalarField& f, const Vec& x);
double bilaplacian(const ScalarField& f, const Vec& x);

double divergence_x(const VectorFieldXS& g, const Vec& x, double s);
// One-sided difference when s is near the support boundary at 0.
double dnorm2_ds(const VectorFieldXS& g, const Vec& x, double s);

// Field library. Names: constant, fundamental_harmonic, norm_power(a),
// shifted_norm_power(a,b), js_shrinkage(c), prior_shifted_power(a,b).
ScalarField constant_field(double c);
ScalarField fundamental_harmonic_field();            // ||x||^(2-p), harmonic off 0
ScalarField norm_power_field(double a);              // ||x||^a
ScalarField shifted_norm_power_field(double a, double b);  // (||x||^2 + a)^(-b)
ScalarField prior_shifted_power_field(double a, double b); // (||x||^2/2 + a)^(-b)
VectorField js_shrinkage_field(double c);            // -c x / ||x||^2
VectorField zero_vector_field();
VectorField linear_field(const Eigen::MatrixXd& A);  // x -> Ax

ScalarField scale_field(ScalarField f, double c);
VectorField scale_field(VectorField g, double c);
VectorField gradient_field(const ScalarField& f);    // grad f as a vector field

std::variant<ScalarField, VectorField> field_library(
    const std::string& name, const std::vector<double>& params = {});

}  // namespace steinloss
