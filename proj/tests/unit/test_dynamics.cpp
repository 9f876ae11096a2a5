#include <doctest.h>

#include <cmath>

#include "fixture.hpp"
#include "polaron/dynamics.hpp"
#include "polaron/effective_mass.hpp"
#include "polaron/errors.hpp"
#include "polaron/minimizer.hpp"

using namespace polaron;

namespace {

PolaronState stationary(double alpha) {
  const PekarSolution& s = fixture::coarse();
  return PolaronState{.psi = s.psi, .phi = s.phi, .alpha = alpha, .t = 0};
}

double distance(const ComplexField& a, const ComplexField& b) {
  return norm(combine(1.0, a, -1.0, b, Role::auxiliary));
}

}  // namespace

TEST_SUITE("lp_dynamics") {
  TEST_CASE("integrator needs alpha > 0 and dt > 0") {
    CHECK_THROWS_AS(Integrator(stationary(0.0), 1e-3), Error);
    CHECK_THROWS_AS(Integrator(stationary(1.0), 0.0), Error);
  }

  TEST_CASE("stationary state only rotates its phase") {
    const PekarSolution& s = fixture::coarse();
    Observers obs;
    obs.phonon = false;
    PolaronState fin = stationary(1.0);
    ObservableSeries ser = integrate(stationary(1.0), 1.0, 1e-2, 10, obs, nullptr, {}, &fin);
    CHECK(ser.records.size() == 11);
    const double phase = std::arg(inner(s.psi, fin.psi));
    CHECK(std::abs(std::remainder(phase + s.mu_P * fin.t, 2 * M_PI)) < 1e-10);
    CHECK(distance(fin.phi, s.phi) < 1e-10 * norm(s.phi));
    for (const Record& r : ser.records) CHECK(std::abs(r.norm - 1) < 1e-13);
  }

  TEST_CASE("splitting is time reversible") {
    const PekarSolution& s = fixture::coarse();
    PolaronState a = trial_state(default_velocities(s)[3], 1.0, s, Variant::standard);
    PolaronState b = step(a, 0.5);
    PolaronState back{.psi = conjugate(b.psi), .phi = conjugate(b.phi), .alpha = 1.0, .t = 0};
    PolaronState c = step(back, 0.5);
    CHECK(distance(conjugate(c.psi), a.psi) < 1e-13);
    CHECK(distance(conjugate(c.phi), a.phi) < 1e-13 * norm(a.phi));
  }

  TEST_CASE("boosted state keeps its velocity over a short run") {
    const PekarSolution& s = fixture::coarse();
    const double v = default_velocities(s)[3];
    BoostOptions bo;
    bo.cadence = 10;
    bo.radii = {100};
    ObservableSeries ser = boost_experiment(v, 1.0, 1.0, 1e-2, s, bo);
    CHECK(ser.refused == 0);
    for (const Record& r : ser.records) {
      CHECK(r.phonon_ok);
      CHECK(r.V_el[0] == doctest::Approx(v).epsilon(1e-3));
      CHECK(r.V_ph[0] == doctest::Approx(v).epsilon(1e-2));
      CHECK(r.radiation.size() == 1);
    }
  }

  TEST_CASE("zero velocity control stays at rest") {
    const PekarSolution& s = fixture::coarse();
    ObservableSeries ser = boost_experiment(0.0, 1.0, 0.5, 1e-2, s, {.cadence = 10});
    for (const Record& r : ser.records) {
      for (int a = 0; a < 3; ++a) {
        CHECK(std::abs(r.V_el[a]) < 1e-12);
        CHECK(std::abs(r.V_ph[a]) < 1e-12);
      }
    }
  }
}

TEST_SUITE("effective_mass_lab") {
  TEST_CASE("energy gradient matches central differences") {
    const PekarSolution& s = fixture::coarse();
    GradientCheck gc = gradient_check(trial_state(default_velocities(s)[3], 1.0, s, Variant::standard), s, 3, 9);
    CHECK(gc.max_error < 1e-6);
  }

  TEST_CASE("constrained minimization at v = 0 returns the Pekar energy") {
    const PekarSolution& s = fixture::coarse();
    MinimizeResult r = constrained_minimize_Ev(0.0, 1.0, s);
    CHECK(std::abs(r.energy - s.e_P) < 1e-15);
  }

  TEST_CASE("constrained minimization stays below the trial energy") {
    const PekarSolution& s = fixture::coarse();
    const double v = default_velocities(s)[1];
    MinimizeResult r = constrained_minimize_Ev(v, 1.0, s);
    CHECK(r.energy <= r.seed_energy + 1e-14);
    CHECK(r.admissibility.el_residual_max < 1e-10);
    CHECK(r.admissibility.ph_residual_max < 1e-10);
    CHECK(!r.budget_exhausted);
    CHECK_THROWS_AS(constrained_minimize_Ev(v, 0.0, s), Error);
  }
}
