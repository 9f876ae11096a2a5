#include <doctest.h>

#include <cmath>

#include "fixture.hpp"
#include "polaron/errors.hpp"
#include "polaron/projection.hpp"

using namespace polaron;

TEST_SUITE("manifold_geometry") {
  TEST_CASE("phonon projection recovers translations") {
    const PekarSolution& s = fixture::coarse();
    for (Vec3 y : {Vec3{0, 0, 0}, Vec3{1.3, -0.7, 0.2}, Vec3{137.3, -250.7, 40.2}}) {
      PhononProjection p = project_phonon(translate(s.phi, y), s);
      for (int a = 0; a < 3; ++a) CHECK(std::abs(p.z[a] - y[a]) < 1e-8);
      CHECK(p.distance < 1e-10 * norm(s.phi));
    }
  }

  TEST_CASE("Jacobian at phi_P is a multiple of the identity") {
    const PekarSolution& s = fixture::coarse();
    PhononProjection p = project_phonon(s.phi, s);
    const double third = s.grid_scalars.grad_phi_sq / 3;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::abs(p.A(i, j) - (i == j ? third : 0.0)) < 1e-6 * third);
  }

  TEST_CASE("electron projection recovers translation and phase in both metrics") {
    const PekarSolution& s = fixture::coarse();
    const Vec3 y{0.5, -30.0, 12.0};
    ComplexField psi = scaled(translate(s.psi, y), std::polar(1.0, M_PI / 3));
    for (Metric m : {Metric::L2, Metric::H1}) {
      ElectronProjection e = project_electron(psi, s, m);
      for (int a = 0; a < 3; ++a) CHECK(std::abs(e.y[a] - y[a]) < 1e-8);
      CHECK(std::abs(std::remainder(e.theta - M_PI / 3, 2 * M_PI)) < 1e-10);
      CHECK(e.distance < 1e-9);
    }
  }

  TEST_CASE("projection refuses fields far from the manifold") {
    const PekarSolution& s = fixture::coarse();
    CHECK_THROWS_AS(project_phonon(scaled(s.phi, 0.5), s), ProjectionRefused);
  }

  TEST_CASE("F attains e_P at phi_P and grows off the manifold") {
    const PekarSolution& s = fixture::coarse();
    CHECK(std::abs(energy_F(s.phi, s) - s.e_P) < 1e-12 * std::abs(s.e_P));
    CHECK(energy_F(scaled(s.phi, 0.9), s) > s.e_P);
  }

  TEST_CASE("coercivity ratio is stable under shrinking perturbations") {
    auto cs = coercivity_spot_check(fixture::coarse(), {3e-2, 1e-2, 3e-3}, 5);
    REQUIRE(cs.size() == 3);
    for (const auto& c : cs) {
      CHECK(c.excess > 0);
      CHECK(c.ratio == doctest::Approx(cs.back().ratio).epsilon(0.05));
    }
  }
}
