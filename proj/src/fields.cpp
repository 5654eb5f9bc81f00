#include "steinloss/fields.hpp"

#include <cmath>
#include <limits>

namespace steinloss {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Reject evaluation within 10h of a declared singularity; weak derivatives
// there are measure-theoretic, not pointwise.
void check_off_singularity(bool singular_at_origin, const std::string& name,
                           const Vec& x, double h) {
  if (singular_at_origin && x.norm() < 10.0 * h) {
    throw StencilOnSingularity("finite-difference stencil for '" + name +
                               "' within 10h of the origin");
  }
}

}  // namespace

double fd_step1(const Vec& x) {
  return std::cbrt(kEps) * std::max(1.0, x.norm());
}

double fd_step2(const Vec& x) {
  // Fourth-root scaling; the 1/4 constant trades a little rounding headroom
  // for the truncation margin the steep shrinkage fields need near ||x|| = 0.5.
  return 0.25 * std::pow(kEps, 0.25) * std::max(1.0, x.norm());
}

Vec gradient_fd(const ScalarField& f, const Vec& x, double h) {
  if (h <= 0.0) h = fd_step1(x);
  check_off_singularity(f.singular_at_origin, f.name, x, h);
  const int p = static_cast<int>(x.size());
  Vec g(p);
  Vec xp = x;
  for (int i = 0; i < p; ++i) {
    xp[i] = x[i] + h;
    check_off_singularity(f.singular_at_origin, f.name, xp, h);
    const double fp = f.eval(xp);
    xp[i] = x[i] - h;
    check_off_singularity(f.singular_at_origin, f.name, xp, h);
    const double fm = f.eval(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double divergence_fd(const VectorField& g, const Vec& x, double h) {
  if (h <= 0.0) h = fd_step1(x);
  check_off_singularity(g.singular_at_origin, g.name, x, h);
  const int p = static_cast<int>(x.size());
  double div = 0.0;
  Vec xp = x;
  for (int i = 0; i < p; ++i) {
    xp[i] = x[i] + h;
    check_off_singularity(g.singular_at_origin, g.name, xp, h);
    const double fp = g.eval(xp)[i];
    xp[i] = x[i] - h;
    check_off_singularity(g.singular_at_origin, g.name, xp, h);
    const double fm = g.eval(xp)[i];
    xp[i] = x[i];
    div += (fp - fm) / (2.0 * h);
  }
  return div;
}

double laplacian_fd(const ScalarField& f, const Vec& x, double h) {
  if (h <= 0.0) h = fd_step2(x);
  check_off_singularity(f.singular_at_origin, f.name, x, h);
  const int p = static_cast<int>(x.size());
  const double fc = f.eval(x);
  double lap = 0.0;
  Vec xp = x;
  for (int i = 0; i < p; ++i) {
    xp[i] = x[i] + h;
    check_off_singularity(f.singular_at_origin, f.name, xp, h);
    const double fp = f.eval(xp);
    xp[i] = x[i] - h;
    check_off_singularity(f.singular_at_origin, f.name, xp, h);
    const double fm = f.eval(xp);
    xp[i] = x[i];
    lap += (fp - 2.0 * fc + fm) / (h * h);
  }
  return lap;
}

double bilaplacian_fd(const ScalarField& f, const Vec& x, double h) {
  if (f.laplacian) {
    // One finite-difference Laplacian on top of the closed-form one.
    ScalarField lap{f.name + ".laplacian", f.params, f.laplacian,
                    nullptr,    nullptr,   nullptr,
                    f.singular_at_origin};
    return laplacian_fd(lap, x, h);
  }
  // Pure double stencil; step widened for the fourth-order rounding error.
  if (h <= 0.0) h = std::pow(kEps, 1.0 / 6.0) * std::max(1.0, x.norm());
  ScalarField lap_fd{f.name + ".laplacian_fd",
                     f.params,
                     [f, h](const Vec& y) { return laplacian_fd(f, y, h); },
                     nullptr,
                     nullptr,
                     nullptr,
                     f.singular_at_origin};
  return laplacian_fd(lap_fd, x, h);
}

Vec gradient(const ScalarField& f, const Vec& x) {
  return f.grad ? f.grad(x) : gradient_fd(f, x);
}

double divergence(const VectorField& g, const Vec& x) {
  return g.divergence ? g.divergence(x) : divergence_fd(g, x);
}

double laplacian(const ScalarField& f, const Vec& x) {
  return f.laplacian ? f.laplacian(x) : laplacian_fd(f, x);
}

double bilaplacian(const ScalarField& f, const Vec& x) {
  return f.bilaplacian ? f.bilaplacian(x) : bilaplacian_fd(f, x);
}

double divergence_x(const VectorFieldXS& g, const Vec& x, double s) {
  if (g.divergence_x) return g.divergence_x(x, s);
  const double h = fd_step1(x);
  check_off_singularity(g.singular_at_origin, g.name, x, h);
  const int p = static_cast<int>(x.size());
  double div = 0.0;
  Vec xp = x;
  for (int i = 0; i < p; ++i) {
    xp[i] = x[i] + h;
    const double fp = g.eval(xp, s)[i];
    xp[i] = x[i] - h;
    const double fm = g.eval(xp, s)[i];
    xp[i] = x[i];
    div += (fp - fm) / (2.0 * h);
  }
  return div;
}

double dnorm2_ds(const VectorFieldXS& g, const Vec& x, double s) {
  if (g.dnorm2_ds) return g.dnorm2_ds(x, s);
  const double h = std::cbrt(kEps) * std::max(1.0, std::abs(s));
  const auto n2 = [&](double sv) { return g.eval(x, sv).squaredNorm(); };
  if (s > h) return (n2(s + h) - n2(s - h)) / (2.0 * h);
  return (n2(s + h) - n2(s)) / h;  // one-sided at the s = 0 boundary
}

ScalarField constant_field(double c) {
  ScalarField f;
  f.name = "constant";
  f.params = {c};
  f.eval = [c](const Vec&) { return c; };
  f.grad = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  f.laplacian = [](const Vec&) { return 0.0; };
  f.bilaplacian = [](const Vec&) { return 0.0; };
  return f;
}

ScalarField fundamental_harmonic_field() {
  ScalarField f;
  f.name = "fundamental_harmonic";
  f.singular_at_origin = true;
  f.eval = [](const Vec& x) {
    const double p = static_cast<double>(x.size());
    return std::pow(x.norm(), 2.0 - p);
  };
  f.grad = [](const Vec& x) {
    const double p = static_cast<double>(x.size());
    return Vec((2.0 - p) * std::pow(x.norm(), -p) * x);
  };
  f.laplacian = [](const Vec&) { return 0.0; };
  f.bilaplacian = [](const Vec&) { return 0.0; };
  return f;
}

ScalarField norm_power_field(double a) {
  ScalarField f;
  f.name = "norm_power";
  f.params = {a};
  f.singular_at_origin = true;
  f.eval = [a](const Vec& x) { return std::pow(x.norm(), a); };
  f.grad = [a](const Vec& x) {
    return Vec(a * std::pow(x.norm(), a - 2.0) * x);
  };
  // Delta ||x||^a = a (a + p - 2) ||x||^(a-2)
  f.laplacian = [a](const Vec& x) {
    const double p = static_cast<double>(x.size());
    return a * (a + p - 2.0) * std::pow(x.norm(), a - 2.0);
  };
  f.bilaplacian = [a](const Vec& x) {
    const double p = static_cast<double>(x.size());
    return a * (a + p - 2.0) * (a - 2.0) * (a + p - 4.0) *
           std::pow(x.norm(), a - 4.0);
  };
  return f;
}

namespace {

// Delta (||x||^2 + a)^(-c) = -2c(p-2c-2) t^(-c-1) - 4ac(c+1) t^(-c-2), t = ||x||^2 + a.
double shifted_lap(double a, double c, double p, double t) {
  return -2.0 * c * (p - 2.0 * c - 2.0) * std::pow(t, -c - 1.0) -
         4.0 * a * c * (c + 1.0) * std::pow(t, -c - 2.0);
}

// Delta (||x||^2/2 + a)^(-c) = c(2c+2-p) t^(-c-1) - 2ac(c+1) t^(-c-2), t = ||x||^2/2 + a.
double prior_lap(double a, double c, double p, double t) {
  return c * (2.0 * c + 2.0 - p) * std::pow(t, -c - 1.0) -
         2.0 * a * c * (c + 1.0) * std::pow(t, -c - 2.0);
}

}  // namespace

ScalarField shifted_norm_power_field(double a, double b) {
  ScalarField f;
  f.name = "shifted_norm_power";
  f.params = {a, b};
  f.singular_at_origin = (a == 0.0);
  f.eval = [a, b](const Vec& x) { return std::pow(x.squaredNorm() + a, -b); };
  f.grad = [a, b](const Vec& x) {
    return Vec(-2.0 * b * std::pow(x.squaredNorm() + a, -b - 1.0) * x);
  };
  f.laplacian = [a, b](const Vec& x) {
    const double p = static_cast<double>(x.size());
    return shifted_lap(a, b, p, x.squaredNorm() + a);
  };
  f.bilaplacian = [a, b](const Vec& x) {
    const double p = static_cast<double>(x.size());
    const double t = x.squaredNorm() + a;
    return -2.0 * b * (p - 2.0 * b - 2.0) * shifted_lap(a, b + 1.0, p, t) -
           4.0 * a * b * (b + 1.0) * shifted_lap(a, b + 2.0, p, t);
  };
  return f;
}

ScalarField prior_shifted_power_field(double a, double b) {
  ScalarField f;
  f.name = "prior_shifted_power";
  f.params = {a, b};
  f.singular_at_origin = (a == 0.0);
  f.eval = [a, b](const Vec& x) {
    return std::pow(0.5 * x.squaredNorm() + a, -b);
  };
  f.grad = [a, b](const Vec& x) {
    return Vec(-b * std::pow(0.5 * x.squaredNorm() + a, -b - 1.0) * x);
  };
  f.laplacian = [a, b](const Vec& x) {
    const double p = static_cast<double>(x.size());
    return prior_lap(a, b, p, 0.5 * x.squaredNorm() + a);
  };
  f.bilaplacian = [a, b](const Vec& x) {
    const double p = static_cast<double>(x.size());
    const double t = 0.5 * x.squaredNorm() + a;
    return b * (2.0 * b + 2.0 - p) * prior_lap(a, b + 1.0, p, t) -
           2.0 * a * b * (b + 1.0) * prior_lap(a, b + 2.0, p, t);
  };
  return f;
}

VectorField js_shrinkage_field(double c) {
  VectorField g;
  g.name = "js_shrinkage";
  g.params = {c};
  g.singular_at_origin = true;
  g.eval = [c](const Vec& x) { return Vec(-c / x.squaredNorm() * x); };
  g.divergence = [c](const Vec& x) {
    const double p = static_cast<double>(x.size());
    return -c * (p - 2.0) / x.squaredNorm();
  };
  return g;
}

VectorField zero_vector_field() {
  VectorField g;
  g.name = "zero";
  g.eval = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  g.divergence = [](const Vec&) { return 0.0; };
  return g;
}

VectorField linear_field(const Eigen::MatrixXd& A) {
  VectorField g;
  g.name = "linear";
  g.eval = [A](const Vec& x) { return Vec(A * x); };
  g.divergence = [tr = A.trace()](const Vec&) { return tr; };
  return g;
}

ScalarField scale_field(ScalarField f, double c) {
  ScalarField r = f;
  r.eval = [f, c](const Vec& x) { return c * f.eval(x); };
  if (f.grad) r.grad = [f, c](const Vec& x) { return Vec(c * f.grad(x)); };
  if (f.laplacian)
    r.laplacian = [f, c](const Vec& x) { return c * f.laplacian(x); };
  if (f.bilaplacian)
    r.bilaplacian = [f, c](const Vec& x) { return c * f.bilaplacian(x); };
  return r;
}

VectorField scale_field(VectorField g, double c) {
  VectorField r = g;
  r.eval = [g, c](const Vec& x) { return Vec(c * g.eval(x)); };
  if (g.divergence)
    r.divergence = [g, c](const Vec& x) { return c * g.divergence(x); };
  return r;
}

VectorField gradient_field(const ScalarField& f) {
  VectorField g;
  g.name = f.name + ".gradient";
  g.singular_at_origin = f.singular_at_origin;
  g.eval = [f](const Vec& x) { return gradient(f, x); };
  if (f.laplacian) g.divergence = f.laplacian;
  return g;
}

std::variant<ScalarField, VectorField> field_library(
    const std::string& name, const std::vector<double>& params) {
  const auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw UnknownField("field '" + name + "' expects " + std::to_string(n) +
                         " parameter(s)");
  };
  if (name == "constant") {
    if (params.empty()) return constant_field(1.0);
    need(1);
    return constant_field(params[0]);
  }
  if (name == "fundamental_harmonic") {
    need(0);
    return fundamental_harmonic_field();
  }
  if (name == "norm_power") {
    need(1);
    return norm_power_field(params[0]);
  }
  if (name == "shifted_norm_power") {
    need(2);
    return shifted_norm_power_field(params[0], params[1]);
  }
  if (name == "prior_shifted_power") {
    need(2);
    return prior_shifted_power_field(params[0], params[1]);
  }
  if (name == "js_shrinkage") {
    need(1);
    return js_shrinkage_field(params[0]);
  }
  throw UnknownField("unknown field '" + name + "'");
}

}  // namespace steinloss
