#include <doctest.h>

#include <cmath>

#include "fixture.hpp"
#include "polaron/errors.hpp"
#include "polaron/pekar.hpp"

using namespace polaron;

TEST_SUITE("pekar_ground_state") {
  TEST_CASE("radial energy matches the known Choquard value") {
    // e_P = -0.1085128 for unit Coulomb coefficient; here the coefficient is 1/(4 pi)
    const RadialSolution& r = fixture::radial();
    CHECK(r.e_P * 16 * M_PI * M_PI == doctest::Approx(-0.1085128).epsilon(2e-6));
    CHECK(r.e_P == doctest::Approx(-6.871656995e-4).epsilon(1e-8));
    CHECK(r.half_width == doctest::Approx(48.8607).epsilon(1e-4));
  }

  TEST_CASE("radial virial family") {
    const PekarScalars& s = fixture::radial().scalars;
    const double e = s.e_P;
    CHECK(std::abs(e + s.grad_psi_sq) / std::abs(e) < 1e-5);
    CHECK(std::abs(s.mu_P - 3 * e) / std::abs(e) < 1e-5);
    CHECK(std::abs(s.phi_sq + 2 * e) / std::abs(e) < 1e-5);
    CHECK(std::abs(s.grad_phi_sq - s.psi4) / s.psi4 < 1e-6);
    CHECK(std::abs(3 * s.d1_phi_sq - s.grad_phi_sq) / s.grad_phi_sq < 1e-12);
  }

  TEST_CASE("coupling scale enters quadratically") {
    RadialOptions o;
    o.coupling = 2.0;
    RadialSolution r2 = solve_radial(o);
    CHECK(r2.e_P / fixture::radial().e_P == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(r2.half_width == doctest::Approx(fixture::radial().half_width / 2).epsilon(1e-3));
  }

  TEST_CASE("radial solver rejects bad options and unconverged runs") {
    RadialOptions o;
    o.mixing = 1.5;
    CHECK_THROWS_AS(solve_radial(o), Error);
    o = {};
    o.max_iter = 2;
    CHECK_THROWS_AS(solve_radial(o), ConvergenceError);
    o = {};
    o.R = 60;
    CHECK_THROWS_AS(solve_radial(o), ResolutionError);
  }

  TEST_CASE("lift on the coarse torus") {
    const PekarSolution& s = fixture::coarse();
    CHECK(norm(s.psi) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.el_residual < 1e-8);
    // torus value and the same with the finite-box terms removed
    CHECK(s.e_P == doctest::Approx(-3.387201034e-4).epsilon(1e-7));
    CHECK(s.e_P_box_corrected == doctest::Approx(-6.87135367e-4).epsilon(1e-7));
    CHECK(std::abs(s.e_P_box_corrected - fixture::radial().e_P) / std::abs(fixture::radial().e_P) < 1e-4);
    // the Parseval gap of the zero mode is exactly 1/L^3
    const PekarScalars& g = s.grid_scalars;
    CHECK(g.psi4 - g.grad_phi_sq == doctest::Approx(1.0 / (640.0 * 640.0 * 640.0)).epsilon(1e-6));
  }

  TEST_CASE("lift refuses an unresolved grid") {
    CHECK_THROWS_AS(lift(fixture::radial(), make_grid(640, 8)), ResolutionError);
  }

  TEST_CASE("H_P annihilates psi_P") {
    const PekarSolution& s = fixture::coarse();
    CHECK(norm(apply_HP(s, s.psi)) < 1e-8);
  }

  TEST_CASE("sandwich identities on the coarse torus") {
    SandwichReport r = sandwich_identities(fixture::coarse());
    CHECK(r.inverse_max_dev < 1e-3);
    CHECK(r.forward_max_dev < 1e-3);
    CHECK(r.residual_sawtooth < 1e-3);
  }
}
