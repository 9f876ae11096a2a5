#pragma once

#include <vector>

#include <Eigen/Dense>

#include "polaron/radial.hpp"
#include "polaron/spectral.hpp"

namespace polaron {

// simple cubic lattice constant for a point charge in a neutralizing background
inline constexpr double kMadelungCubic = 2.8372974794806;

struct LiftOptions {
  // dx must stay below this fraction of the profile half width
  double resolution_fraction = 0.5;
  bool polish = true;
  double polish_tol = 1e-10;
  int polish_max_iter = 500;
};

struct PekarSolution {
  GridPtr grid;
  ComplexField psi;
  ComplexField phi;
  RVec psi_r, phi_r;
  // torus values used with the grid operators
  double e_P = 0, mu_P = 0;
  PekarScalars grid_scalars;
  PekarScalars radial;
  double el_residual = 0;
  double lifted_el_residual = 0;
  int polish_iterations = 0;
  // grid e_P with the leading finite-box terms removed
  double e_P_box_corrected = 0;
};

PekarSolution lift(const RadialSolution& rad, GridPtr grid, const LiftOptions& opt = {});

struct GridStage {
  double L = 0;
  int N = 0;
  double e_P = 0, e_P_box_corrected = 0;
  double relative_change = 0;
};

struct GridCertificate {
  std::vector<GridStage> stages;
  bool certified = false;
  double tolerance = 0;
};

// Doubles L and N together from (L0, N0) until the box-corrected e_P moves by
// less than rel_tol. Returns the last lift; the certificate lists every stage.
PekarSolution certify_grid(const RadialSolution& rad, double L0, int N0, double rel_tol, int max_doublings,
                           GridCertificate& cert, const LiftOptions& opt = {});

// H_P f = (h_{phi_P} - mu_P) f
ComplexField apply_HP(const PekarSolution& sol, const ComplexField& f);
RVec apply_HP_real(const PekarSolution& sol, const RVec& f, const RVec& V);
RVec pekar_potential(const PekarSolution& sol);

struct SandwichReport {
  Eigen::Matrix3d inverse;  // <d_i psi, -x_j psi / 2>, target delta_ij / 4
  Eigen::Matrix3d forward;  // <d_i psi, H_P d_j psi>, target delta_ij ||d_j phi||^2
  double inverse_target = 0.25;
  double forward_target_radial = 0;
  double forward_target_grid = 0;
  double inverse_max_dev = 0;
  double forward_max_dev = 0;
  // ||H_P(-x_1 psi / 2) - d_1 psi|| with the sawtooth and the tapered coordinate
  double residual_sawtooth = 0;
  double residual_smooth = 0;
  double d1_psi_norm = 0;
};

SandwichReport sandwich_identities(const PekarSolution& sol);

}  // namespace polaron
