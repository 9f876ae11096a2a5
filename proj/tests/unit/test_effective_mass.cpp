#include <doctest.h>

#include <cmath>

#include "fixture.hpp"
#include "polaron/effective_mass.hpp"
#include "polaron/errors.hpp"

using namespace polaron;

TEST_SUITE("effective_mass_lab") {
  TEST_CASE("fit recovers a synthetic quadratic plus quartic") {
    std::vector<double> v = {0.01, 0.02, 0.03, 0.05}, E;
    for (double x : v) E.push_back(-1.0 + 0.5 * 0.7 * x * x + 3.0 * std::pow(x, 4));
    MassFit f = fit_mass(v, E, -1.0);
    CHECK(f.mass == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(f.quartic == doctest::Approx(3.0).epsilon(1e-6));
  }

  TEST_CASE("fit rejects bad input") {
    CHECK_THROWS_AS(fit_mass({0.1, 0.2}, {1, 2}, 0.0), Error);
    CHECK_THROWS_AS(fit_mass({0.1, 0.2, 0.3}, {1, -2, 3}, 0.0), Error);
    CHECK_THROWS_AS(fit_mass({0.1, 0.1, 0.1}, {1, 1, 1}, 0.0), Error);
  }

  TEST_CASE("predicted masses") {
    const PekarScalars& s = fixture::radial().scalars;
    CHECK(predicted_mass(0.0, s) == 0.5);
    CHECK(predicted_mass(1.0, s) == doctest::Approx(0.5 + 2.0 / 3.0 * s.grad_phi_sq));
    for (double a : {1.0, 2.0, 4.0}) CHECK(predicted_mass_alt(a, s) < predicted_mass(a, s));
    CHECK(predicted_mass_alt(0.0, s) == doctest::Approx(0.461048474).epsilon(1e-7));
  }

  TEST_CASE("standard trial state is normalized and moves with velocity v") {
    const PekarSolution& s = fixture::coarse();
    const double v = default_velocities(s)[2];
    for (double alpha : {0.0, 1.0, 2.0}) {
      AdmissibilityReport r = admissibility_check(trial_state(v, alpha, s, Variant::standard), v, s, 1.0);
      CHECK(std::abs(r.norm_error) < 1e-12);
      CHECK(r.el_residual_max < 1e-8);
      CHECK(r.ph_residual_max < 1e-8);
      CHECK(!r.phonon_refused);
    }
  }

  TEST_CASE("velocity beyond the admissible range is refused") {
    const PekarSolution& s = fixture::coarse();
    CHECK_THROWS_AS(trial_coefficients(10.0, s, Variant::standard), AdmissibilityError);
  }

  TEST_CASE("grid and closed-form trial energies agree") {
    const PekarSolution& s = fixture::coarse();
    for (double v : default_velocities(s)) {
      TrialEnergy t = trial_energy(v, 1.0, s, Variant::standard);
      CHECK(std::abs(t.difference) < 1e-3 * t.excess_a);
    }
  }

  TEST_CASE("mass fits on the coarse torus") {
    const PekarSolution& s = fixture::coarse();
    auto reps = mass_report({0.0, 1.0}, s, default_velocities(s));
    CHECK(reps[0].m_pred == 0.5);
    for (const MassReport& m : reps) {
      CHECK(m.rel_err_std < 0.005);
      CHECK(m.rel_err_alt < 0.005);
    }
  }

  TEST_CASE("traveling wave linearization") {
    const PekarSolution& s = fixture::coarse();
    TravelingWave t = traveling_wave_linearization(1.0, s);
    CHECK(t.im_xi_residual < 1e-3);
    CHECK(std::abs(t.coefficient - t.theorem_coefficient) < 1e-10);
    CHECK(t.coefficient_grid == doctest::Approx(t.coefficient).epsilon(1e-3));
  }
}
