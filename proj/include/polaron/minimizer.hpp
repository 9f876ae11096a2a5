#pragma once

#include <cstdint>
#include <vector>

#include "polaron/effective_mass.hpp"
#include "polaron/state.hpp"

namespace polaron {

struct MinimizeOptions {
  int budget = 400;
  // stop when the Lagrangian gradient falls below this fraction of the raw gradient
  double grad_tol = 1e-7;
  // stop when the energy stalls in relative terms over `stall_window` iterations
  double stall_tol = 1e-15;
  int stall_window = 10;
  double initial_step = 1.0;
  int max_backtracks = 30;
};

struct MinimizeResult {
  PolaronState state;
  double energy = 0;
  double seed_energy = 0;
  int iterations = 0;
  double stationarity = 0;
  // stationarity below grad_tol
  bool converged = false;
  // stopped because no further decrease was resolvable
  bool stalled = false;
  bool budget_exhausted = false;
  std::vector<double> energy_log;
  AdmissibilityReport admissibility;
};

// Projected preconditioned descent on G over (psi, phi) with the velocity
// constraints V_el = V_ph = v e_1, seeded with the standard trial state.
MinimizeResult constrained_minimize_Ev(double v, double alpha, const PekarSolution& sol,
                                       const MinimizeOptions& opt = {});

// gradient of G: (2 h_phi psi, 2 (phi + sigma_psi)) in the real inner product Re<.,.>
struct Gradient {
  ComplexField psi, phi;
};
Gradient energy_gradient(const ComplexField& psi, const ComplexField& phi);

struct GradientCheck {
  std::vector<double> relative_errors;
  double max_error = 0;
};

GradientCheck gradient_check(const PolaronState& st, const PekarSolution& sol, int count, std::uint64_t seed,
                             double eps = 1e-4);

}  // namespace polaron
