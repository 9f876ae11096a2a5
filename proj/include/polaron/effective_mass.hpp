#pragma once

#include <string>
#include <vector>

#include "polaron/pekar.hpp"
#include "polaron/projection.hpp"
#include "polaron/state.hpp"

namespace polaron {

enum class Variant { standard, alternative };
std::string variant_name(Variant v);

// which scalars feed the coefficients
enum class ScalarSource { grid, radial };

struct TrialCoefficients {
  Variant variant = Variant::standard;
  double v = 0;
  double f = 1, g = 0;
  // ||x_1 psi_P / 2||^2
  double q = 0;
  // <d_1 psi_P, -x_1 psi_P / 2>, 1/4 in the continuum
  double s = 0.25;
  // alternative variant: c = ||d_1 psi_P||^2 / ||d_1 phi_P||^2 and the norm of the unnormalized state
  double c = 0;
  double norm = 1;
  double kappa = 0;
};

TrialCoefficients trial_coefficients(double v, const PekarSolution& sol, Variant variant,
                                     ScalarSource src = ScalarSource::grid);

// Electron part f psi_P + i g x_1 psi_P / 2 (standard) or
// (f psi_P - i v c d_1 psi_P) / norm (alternative); phonon part phi_P - i v alpha^2 d_1 phi_P.
// Both move with velocity +v e_1.
PolaronState trial_state(double v, double alpha, const PekarSolution& sol, Variant variant);

struct AdmissibilityReport {
  double norm_error = 0;
  Vec3 V_el{}, V_ph{};
  Vec3 el_residual{}, ph_residual{};
  double el_residual_max = 0, ph_residual_max = 0;
  double excess = 0;  // G - e_P
  double delta_star = 0;
  bool energy_ok = false;
  bool phonon_refused = false;
};

AdmissibilityReport admissibility_check(const PolaronState& st, double v, const PekarSolution& sol,
                                        double delta_star);

struct TrialEnergy {
  double route_a = 0, route_b = 0;
  // excess energies over the matching e_P
  double excess_a = 0, excess_b = 0;
  double difference = 0;
};

TrialEnergy trial_energy(double v, double alpha, const PekarSolution& sol, Variant variant);

struct MassFit {
  double mass = 0;
  double quartic = 0;
  double residual = 0;
  std::vector<double> v, excess;
};

// least squares of E - e_P against v^2/2, with an optional v^4 column
MassFit fit_mass(const std::vector<double>& v, const std::vector<double>& E, double e_P, bool quartic = true);

// v in {0.005, 0.01, 0.02, 0.04} v_max with v_max = 1/(2 sqrt(q))
std::vector<double> default_velocities(const PekarSolution& sol);

struct MassReport {
  double alpha = 0;
  double e_P = 0;
  double m_pred = 0, m_alt_pred = 0;
  double tw_coefficient = 0;
  MassFit fit_std, fit_alt;
  double route_gap_std = 0, route_gap_alt = 0;
  double kappa_alt = 0;
  double rel_err_std = 0, rel_err_alt = 0;
};

double predicted_mass(double alpha, const PekarScalars& s);
double predicted_mass_alt(double alpha, const PekarScalars& s);

std::vector<MassReport> mass_report(const std::vector<double>& alphas, const PekarSolution& sol,
                                    const std::vector<double>& velocities);

struct TravelingWave {
  ComplexField xi, eta;
  // ||H_P Im xi - d_1 psi_P||
  double im_xi_residual = 0;
  // ||(H_P - 4 X_P) Re xi|| / ||Re xi||
  double re_xi_residual = 0;
  // 1/4 + alpha^4 ||d_1 phi_P||^2 from the continuum scalars
  double coefficient = 0;
  // <Im xi, H_P Im xi> + ||Im eta||^2 + real-part form, on the grid
  double coefficient_grid = 0;
  double theorem_coefficient = 0;
};

TravelingWave traveling_wave_linearization(double alpha, const PekarSolution& sol);

}  // namespace polaron
