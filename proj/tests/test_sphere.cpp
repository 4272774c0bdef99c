#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "bubbleglue/sphere.hpp"

using namespace bubbleglue;
using doctest::Approx;

TEST_CASE("embedding of chart coordinates") {
  CHECK(embed(SpherePoint::north_coord(0.0)).isApprox(Eigen::Vector3d(0, 0, 1)));
  CHECK(embed(SpherePoint::infinity()).isApprox(Eigen::Vector3d(0, 0, -1)));
  CHECK(embed(SpherePoint::north_coord(1.0)).isApprox(Eigen::Vector3d(1, 0, 0)));
  CHECK(embed(SpherePoint::north_coord(cplx(0, 1))).isApprox(Eigen::Vector3d(0, 1, 0)));
  // unit norm everywhere
  for (double re : {-3.0, 0.25, 7.5})
    for (double im : {-0.5, 2.0}) {
      SpherePoint p = SpherePoint::north_coord({re, im});
      CHECK(embed(p).norm() == Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("chart transition round-trips and preserves the point") {
  for (double re : {-3.0, 0.25, 7.5, 1e-6, 1e6})
    for (double im : {-0.5, 2.0, 0.0}) {
      SpherePoint p = SpherePoint::north_coord({re, im});
      SpherePoint q = other_chart(p);
      CHECK(q.chart == Chart::south);
      CHECK((embed(q) - embed(p)).norm() < 1e-12);
      SpherePoint back = other_chart(q);
      CHECK(std::abs(back.coord - p.coord) <= 1e-12 * std::abs(p.coord));
    }
  CHECK_THROWS_AS(other_chart(SpherePoint::north_coord(0.0)), GeomError);
  CHECK_THROWS_AS(north_coordinate(SpherePoint::infinity()), GeomError);
}

TEST_CASE("translation chart") {
  CHECK(phi(cplx(1, 2), SpherePoint::north_coord(cplx(3, 0))) == cplx(2, -2));
  CHECK(phi(0.0, SpherePoint::south_coord(cplx(0, -0.5))) == cplx(0, -2));
  CHECK_THROWS_AS(phi(1.0, SpherePoint::infinity()), GeomError);
}

TEST_CASE("smooth step") {
  CHECK(beta(0.5) == 0.0);
  CHECK(beta(1.0) == 0.0);
  CHECK(beta(1.5) == Approx(0.5).epsilon(1e-15));  // symmetric construction
  CHECK(beta(2.0) == 1.0);
  CHECK(beta(3.0) == 1.0);
  // nondecreasing on [1, 2], strictly increasing away from the flat tails
  // (double precision saturates the quotient within ~0.01 of the endpoints)
  double prev = 0.0;
  for (int k = 1; k < 100; ++k) {
    double cur = beta(1.0 + 0.01 * k);
    CHECK(cur >= prev);
    if (k >= 3 && k <= 96) CHECK(cur > prev);
    prev = cur;
  }
  // analytic derivative matches central differences
  for (double t : {1.2, 1.5, 1.8}) {
    double fd = (beta(t + 1e-6) - beta(t - 1e-6)) / 2e-6;
    CHECK(beta_prime(t) == Approx(fd).epsilon(1e-7));
  }
  CHECK(beta_c0_constant() > 1.0);
  CHECK(beta_c0_constant() < 100.0);
}

TEST_CASE("scaled step derivative support") {
  const double r = 0.04;  // sqrt(r) = 0.2
  CHECK(beta_scaled(r, 0.1) == 0.0);
  CHECK(beta_scaled(r, 0.5) == 1.0);
  CHECK(beta_scaled_prime(r, 0.19) == 0.0);
  CHECK(beta_scaled_prime(r, 0.3) > 0.0);
  CHECK(beta_scaled_prime(r, 0.41) == 0.0);
  CHECK(beta_scaled(r, 0.3) == Approx(beta(1.5)).epsilon(1e-15));
}

TEST_CASE("plane quadrature") {
  QuadratureSpec q;
  // Gaussian: exact value pi
  auto gaussian = [](cplx z) { return std::exp(-std::norm(z)); };
  CHECK(integrate_plane_real(gaussian, q) == Approx(M_PI).epsilon(1e-12));
  QuadratureSpec qg = q;
  qg.scheme = "gauss";
  CHECK(integrate_plane_real(gaussian, qg) == Approx(M_PI).epsilon(1e-10));
  // rational decay: integral of (1+|z|^2)^{-2} is pi
  auto rat = [](cplx z) { return 1.0 / (1.0 + std::norm(z)) / (1.0 + std::norm(z)); };
  CHECK(integrate_plane_real(rat, q) == Approx(M_PI).epsilon(1e-10));
  // complex-valued integrand: z * exp(-|z|^2) integrates to 0 by symmetry
  CHECK(std::abs(integrate_plane([](cplx z) { return z * std::exp(-std::norm(z)); }, q)) <
        1e-12);
  QuadratureSpec bad = q;
  bad.scheme = "simpson";
  CHECK_THROWS_AS(integrate_plane_real(gaussian, bad), GeomError);
}

TEST_CASE("logarithmic ramp cutoff") {
  for (double eps : {0.5, 0.1, 0.01, 0.001}) {
    CHECK(beta_log_ramp(1.0, eps) == 1.0);
    CHECK(beta_log_ramp(2.0, eps) == 1.0);
    CHECK(beta_log_ramp(std::exp(-1.0 / eps), eps) == 0.0);
    CHECK(beta_log_ramp(0.0, eps) == 0.0);
    // mid-ramp slope: (eps / (1 - 0.02)) / r on the plateau
    const double r_mid = std::exp(-0.5 / eps);
    const double plateau = eps / (1.0 - 0.02);
    CHECK(beta_log_ramp_prime(r_mid, eps) == Approx(plateau / r_mid).epsilon(1e-12));
    // derivative consistent with the value by finite differences
    const double h = r_mid * 1e-6;
    const double fd = (beta_log_ramp(r_mid + h, eps) - beta_log_ramp(r_mid - h, eps)) / (2 * h);
    CHECK(beta_log_ramp_prime(r_mid, eps) == Approx(fd).epsilon(1e-7));
    // monotone nondecreasing
    double prev = -1.0;
    for (int k = 0; k <= 200; ++k) {
      double r = std::exp(-(1.0 / eps) * (1.0 - k / 200.0));
      double cur = beta_log_ramp(r, eps);
      CHECK(cur >= prev);
      prev = cur;
    }
  }
}

TEST_CASE("ramp cutoff energy bound and closed form") {
  QuadratureSpec q;
  for (double eps : {0.5, 0.1, 0.01, 0.001}) {
    const double w = 0.01 / eps;
    const double plateau = eps / (1.0 - 0.02);
    const double closed = 2.0 * M_PI * plateau * plateau * (1.0 / eps - 8.0 * w / 3.0);
    const double num = ms_cutoff_energy(eps, q);
    CHECK(num == Approx(closed).epsilon(1e-4));
    CHECK(num <= 8.0 * eps);
  }
}
