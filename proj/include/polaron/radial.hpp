#pragma once

#include <functional>
#include <string>
#include <vector>

namespace polaron {

struct RadialOptions {
  double dr = 0.05;
  double R = 800.0;
  double tol = 1e-13;
  // relative change of u^2 between iterations
  double density_tol = 1e-11;
  int max_iter = 500;
  // multiplies the Coulomb coefficient 1/(4 pi)
  double coupling = 1.0;
  // phonon mixing in (0, 1]; 1 is plain alternating minimization
  double mixing = 1.0;
  double decay_threshold = 1e-10;
  // fraction of [0, R] at the outer end inspected by the decay check
  double decay_band = 0.05;
  // dr and R are given for coupling 1 and divided by the coupling
  bool scale_grid = true;
};

// Continuum scalars of the minimizer. Phonon quantities refer to
// phi_P = -sqrt(coupling) sigma_psi.
struct PekarScalars {
  double e_P = 0;
  double mu_P = 0;
  double grad_psi_sq = 0;
  double psi4 = 0;
  double phi_sq = 0;
  double grad_phi_sq = 0;
  double d1_psi_sq = 0;
  double d1_phi_sq = 0;
  double q = 0;
  double second_moment = 0;
};

struct RadialSolution {
  double dr = 0, R = 0, coupling = 1;
  std::vector<double> r, u;
  double e_P = 0, mu_P = 0;
  std::vector<double> energy_log;
  std::vector<double> residual_log;
  int iterations = 0;
  double el_residual = 0;
  double decay_ratio = 0;
  double half_width = 0;
  PekarScalars scalars;
  // Hankel-route quadrature bookkeeping
  double k_max = 0;
  double grad_phi_tail = 0;
};

RadialSolution solve_radial(const RadialOptions& opt);

// cubic B-spline of psi = u / r, even at the origin, zero beyond R
std::function<double(double)> radial_profile(const RadialSolution& sol);

// ||grad sigma_psi||^2 through the Fourier-Bessel route, with the analytic far tail
double radial_grad_sigma_sq(const RadialSolution& sol, double* k_max = nullptr, double* tail = nullptr);

void write_radial_csv(const RadialSolution& sol, const std::string& path);

}  // namespace polaron
