#include <doctest.h>

#include "steinloss/fields.hpp"
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

TEST_CASE("gradient_fd on library examples") {
  ScalarField norm2 = norm_power_field(2.0);
  const Vec x = make_vec({1.0, 2.0});
  const Vec g = gradient_fd(norm2, x);
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-8));

  ScalarField c = constant_field(3.5);
  const Vec gc = gradient_fd(c, make_vec({0.3, -0.7, 2.0}));
  CHECK(gc.norm() == doctest::Approx(0.0).epsilon(1e-12));

  // 1/||x||^(p-2) on R^5: gradient -(p-2) x / ||x||^p
  ScalarField fh = fundamental_harmonic_field();
  const Vec x5 = make_vec({1.0, 0.0, 0.0, 0.0, 0.0});
  const Vec gfh = gradient_fd(fh, x5);
  CHECK(gfh[0] == doctest::Approx(-3.0).epsilon(1e-6));
  for (int i = 1; i < 5; ++i) CHECK(gfh[i] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("divergence_fd on library examples") {
  const Eigen::MatrixXd I5 = Eigen::MatrixXd::Identity(5, 5);
  VectorField ident = linear_field(I5);
  const Vec x = make_vec({0.4, 1.0, -2.0, 0.1, 3.0});
  CHECK(divergence_fd(ident, x) == doctest::Approx(5.0).epsilon(1e-9));

  // g = -(p-2) x/||x||^2 has div = -(p-2)^2/||x||^2; check at 10 random points
  VectorField js = js_shrinkage_field(3.0);
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    Vec y = rng.normal_vec(5) * 2.0;
    if (y.norm() < 0.5) y *= 4.0;
    const double expected = -9.0 / y.squaredNorm();
    CHECK(divergence_fd(js, y) == doctest::Approx(expected).epsilon(1e-6));
  }

  VectorField zero = zero_vector_field();
  CHECK(divergence_fd(zero, x) == doctest::Approx(0.0));
}

TEST_CASE("laplacian_fd reproduces the harmonic and power examples") {
  // fundamental harmonic is harmonic off the origin
  ScalarField fh = fundamental_harmonic_field();
  const Vec x5 = make_vec({2.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(laplacian_fd(fh, x5) == doctest::Approx(0.0).epsilon(1e-5));

  // Delta(1/||x||^p) = 2p/||x||^(p+2) > 0
  ScalarField xi = norm_power_field(-5.0);
  const Vec x = make_vec({1.0, 1.0, 0.0, 0.0, 0.0});
  const double expected = 10.0 / std::pow(std::sqrt(2.0), 7.0);
  CHECK(laplacian_fd(xi, x) == doctest::Approx(expected).epsilon(1e-5));

  // Delta(c/||x||^2) = -2c(p-4)/||x||^4 at p = 6
  ScalarField inv2 = norm_power_field(-2.0);
  const Vec x6 = make_vec({1.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(laplacian_fd(inv2, x6) == doctest::Approx(-4.0).epsilon(1e-5));
}

TEST_CASE("bilaplacian_fd") {
  // ||x||^4 on R^3: Delta = (4p+8)||x||^2, Delta^2 = 2p(4p+8) = 120
  ScalarField f = norm_power_field(4.0);
  ScalarField f_no_analytic = f;
  f_no_analytic.laplacian = nullptr;
  f_no_analytic.bilaplacian = nullptr;
  const Vec x = make_vec({0.7, -0.2, 1.1});
  CHECK(bilaplacian_fd(f, x) == doctest::Approx(120.0).epsilon(1e-5));
  // pure double stencil: widened tolerance
  CHECK(bilaplacian_fd(f_no_analytic, x) == doctest::Approx(120.0).epsilon(1e-3));

  ScalarField fh = fundamental_harmonic_field();
  const Vec x5 = make_vec({1.5, 0.3, 0.0, 0.0, 0.2});
  CHECK(bilaplacian_fd(fh, x5) == doctest::Approx(0.0).epsilon(1e-4));

  // exp(-||x||^2/2) at 0 on R^2: Delta f = (||x||^2 - p) e^(-||x||^2/2),
  // Delta^2 f = (||x||^4 - (2p+4)||x||^2 + p(p+2)) e^(-...) -> p(p+2) = 8 at 0
  ScalarField gauss;
  gauss.name = "gauss";
  gauss.eval = [](const Vec& v) { return std::exp(-0.5 * v.squaredNorm()); };
  const Vec origin = make_vec({0.0, 0.0});
  CHECK(bilaplacian_fd(gauss, origin) == doctest::Approx(8.0).epsilon(1e-3));
}

TEST_CASE("singular-set guard rejects stencils near the origin") {
  ScalarField fh = fundamental_harmonic_field();
  Vec tiny = make_vec({1e-7, 0.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_AS((void)gradient_fd(fh, tiny), StencilOnSingularity);
  CHECK_THROWS_AS((void)laplacian_fd(fh, tiny), StencilOnSingularity);
  VectorField js = js_shrinkage_field(1.0);
  CHECK_THROWS_AS((void)divergence_fd(js, tiny), StencilOnSingularity);
}

TEST_CASE("field_library lookup and errors") {
  CHECK_THROWS_AS((void)field_library("no_such_field"), UnknownField);
  CHECK_THROWS_AS((void)field_library("norm_power", {}), UnknownField);

  auto fh = field_library("fundamental_harmonic");
  REQUIRE(std::holds_alternative<ScalarField>(fh));
  const Vec x5 = make_vec({2.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(std::get<ScalarField>(fh).eval(x5) == doctest::Approx(std::pow(2.0, -3)));
  CHECK(std::get<ScalarField>(fh).laplacian(x5) == 0.0);

  auto xi = field_library("shifted_norm_power", {1.0, 1.0});
  CHECK(std::get<ScalarField>(xi).eval(x5) == doctest::Approx(1.0 / 5.0));

  auto js = field_library("js_shrinkage", {3.0});
  REQUIRE(std::holds_alternative<VectorField>(js));
  const Vec g = std::get<VectorField>(js).eval(x5);
  CHECK(g[0] == doctest::Approx(-1.5));
}

TEST_CASE("analytic and finite-difference derivatives agree at random points") {
  Rng rng(123);
  const std::vector<ScalarField> fields = {
      fundamental_harmonic_field(), norm_power_field(-2.0), norm_power_field(3.0),
      shifted_norm_power_field(1.0, 1.5), prior_shifted_power_field(1.0, 1.0)};
  for (const auto& f : fields) {
    for (int t = 0; t < 100; ++t) {
      const int p = 5 + (t % 3);
      Vec dir = rng.normal_vec(p);
      dir /= dir.norm();
      const double r = 0.5 + 9.5 * rng.uniform();
      const Vec x = r * dir;
      const Vec ga = f.grad(x);
      const Vec gf = gradient_fd(f, x);
      const double scale = std::max(1.0, ga.norm());
      CHECK((ga - gf).norm() / scale < 1e-5);
      const double la = f.laplacian(x);
      const double lf = laplacian_fd(f, x);
      CHECK(std::abs(la - lf) / std::max(1.0, std::abs(la)) < 1e-5);
    }
  }
}

TEST_CASE("divergence of a linear field equals the trace") {
  Rng rng(99);
  for (int t = 0; t < 20; ++t) {
    const int p = 2 + (t % 5);
    Eigen::MatrixXd A(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) A(i, j) = rng.normal();
    VectorField f = linear_field(A);
    const Vec x = rng.normal_vec(p);
    CHECK(divergence_fd(f, x) == doctest::Approx(A.trace()).epsilon(1e-7));
  }
}

TEST_CASE("laplacian_fd equals divergence of the gradient field") {
  ScalarField f = shifted_norm_power_field(2.0, 1.0);
  f.laplacian = nullptr;  // force both level of stencils
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    Vec x = rng.normal_vec(4);
    if (x.norm() < 0.5) x *= 3.0;
    const double via_lap = laplacian_fd(f, x);
    const double via_div = divergence_fd(gradient_field(f), x);
    CHECK(via_lap == doctest::Approx(via_div).epsilon(2e-4));
  }
}

TEST_CASE("bilaplacian closed forms for the shifted power families") {
  // cross-check the recursive closed forms against nested finite differences
  const std::vector<ScalarField> fields = {shifted_norm_power_field(1.0, 1.0),
                                           shifted_norm_power_field(0.5, 2.0),
                                           prior_shifted_power_field(1.0, 1.0),
                                           prior_shifted_power_field(2.0, 1.5)};
  Rng rng(17);
  for (const auto& f : fields) {
    for (int t = 0; t < 5; ++t) {
      Vec x = rng.normal_vec(6);
      if (x.norm() < 0.8) x *= 3.0;
      ScalarField nofd = f;
      nofd.laplacian = nullptr;
      nofd.bilaplacian = nullptr;
      const double closed = f.bilaplacian(x);
      const double fd = bilaplacian_fd(nofd, x);
      CHECK(std::abs(closed - fd) / std::max(1.0, std::abs(closed)) < 1e-3);
    }
  }
}
