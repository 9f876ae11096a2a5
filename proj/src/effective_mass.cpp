#include "polaron/effective_mass.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "polaron/errors.hpp"
#include "polaron/hessian.hpp"

namespace polaron {

std::string variant_name(Variant v) { return v == Variant::standard ? "standard" : "alternative"; }

namespace {

// <d_1 psi_P, -x_1 psi_P / 2> on the grid
double grid_s(const PekarSolution& sol) {
  return inner(derivative(sol.psi, 0), scaled(times_coordinate(sol.psi, 0), -0.5)).real();
}

}  // namespace

TrialCoefficients trial_coefficients(double v, const PekarSolution& sol, Variant variant, ScalarSource src) {
  const PekarScalars& S = src == ScalarSource::grid ? sol.grid_scalars : sol.radial;
  TrialCoefficients tc;
  tc.variant = variant;
  tc.v = v;
  tc.q = S.q;
  if (variant == Variant::standard) {
    tc.s = src == ScalarSource::grid ? grid_s(sol) : 0.25;
    const double vp = v / (4.0 * tc.s);
    const double disc = 1.0 - 4.0 * tc.q * vp * vp;
    if (!(disc >= 0)) {
      std::ostringstream os;
      os << "velocity " << v << " outside the admissible range |v| <= " << 2.0 * tc.s / std::sqrt(tc.q);
      throw AdmissibilityError(os.str());
    }
    const double g2 = 2.0 * vp * vp / (1.0 + std::sqrt(disc));
    tc.g = std::copysign(std::sqrt(g2), v);
    tc.f = std::sqrt(1.0 - tc.q * g2);
  } else {
    tc.c = S.d1_psi_sq / S.d1_phi_sq;
    const double root = std::sqrt(1.0 + 4.0 * tc.c * tc.c * v * v * S.d1_psi_sq);
    tc.f = 0.5 * (1.0 + root);
    tc.norm = std::sqrt(tc.f * tc.f + v * v * tc.c * tc.c * S.d1_psi_sq);
    tc.kappa = -S.mu_P + (root - 1.0) / (2.0 * tc.c);
  }
  return tc;
}

PolaronState trial_state(double v, double alpha, const PekarSolution& sol, Variant variant) {
  TrialCoefficients tc = trial_coefficients(v, sol, variant, ScalarSource::grid);
  ComplexField psi(sol.grid, Role::electron);
  if (variant == Variant::standard) {
    psi = combine(tc.f, sol.psi, cplx(0, 0.5 * tc.g), times_coordinate(sol.psi, 0), Role::electron);
  } else {
    psi = combine(tc.f / tc.norm, sol.psi, cplx(0, -v * tc.c / tc.norm), derivative(sol.psi, 0), Role::electron);
  }
  ComplexField phi = combine(1.0, sol.phi, cplx(0, -v * alpha * alpha), derivative(sol.phi, 0), Role::phonon);
  return PolaronState{.psi = psi, .phi = phi, .alpha = alpha, .t = 0};
}

AdmissibilityReport admissibility_check(const PolaronState& st, double v, const PekarSolution& sol,
                                        double delta_star) {
  AdmissibilityReport r;
  ElectronObservables ob = electron_observables(st.psi);
  r.norm_error = ob.norm - 1.0;
  r.V_el = ob.V;
  try {
    PhononProjection pr = project_phonon(st.phi, sol);
    r.V_ph = phonon_velocity(st.psi, st.phi, st.alpha, pr, sol);
  } catch (const ProjectionRefused&) {
    r.phonon_refused = true;
  }
  for (int a = 0; a < 3; ++a) {
    const double target = a == 0 ? v : 0.0;
    r.el_residual[a] = r.V_el[a] - target;
    r.ph_residual[a] = r.V_ph[a] - target;
    r.el_residual_max = std::max(r.el_residual_max, std::abs(r.el_residual[a]));
    r.ph_residual_max = std::max(r.ph_residual_max, std::abs(r.ph_residual[a]));
  }
  if (r.phonon_refused) r.ph_residual_max = std::numeric_limits<double>::infinity();
  r.excess = energy_G(st.psi, st.phi).total - sol.e_P;
  r.delta_star = delta_star;
  r.energy_ok = r.excess <= delta_star;
  return r;
}

TrialEnergy trial_energy(double v, double alpha, const PekarSolution& sol, Variant variant) {
  TrialEnergy te;
  PolaronState st = trial_state(v, alpha, sol, variant);
  te.route_b = energy_G(st.psi, st.phi).total;
  te.excess_b = te.route_b - sol.e_P;

  const PekarScalars& R = sol.radial;
  TrialCoefficients tc = trial_coefficients(v, sol, variant, ScalarSource::radial);
  const double a4 = std::pow(alpha, 4);
  if (variant == Variant::standard) {
    te.route_a = tc.f * tc.f * R.mu_P + tc.g * tc.g * (0.25 + R.mu_P * tc.q) + R.phi_sq + v * v * a4 * R.d1_phi_sq;
  } else {
    const double vc2 = v * v * tc.c * tc.c;
    te.route_a = (tc.f * tc.f * R.mu_P + vc2 * (R.d1_phi_sq + R.mu_P * R.d1_psi_sq)) / (tc.norm * tc.norm) +
                 R.phi_sq + v * v * a4 * R.d1_phi_sq;
  }
  te.excess_a = te.route_a - R.e_P;
  te.difference = te.excess_b - te.excess_a;
  return te;
}

MassFit fit_mass(const std::vector<double>& v, const std::vector<double>& E, double e_P, bool quartic) {
  if (v.size() != E.size()) throw Error("fit_mass: size mismatch");
  const int n = int(v.size());
  const int cols = quartic ? 2 : 1;
  if (n < 3) throw Error("fit_mass needs at least three velocities");
  Eigen::MatrixXd A(n, cols);
  Eigen::VectorXd b(n);
  MassFit fit;
  for (int i = 0; i < n; ++i) {
    if (!(E[i] > e_P)) throw Error("fit_mass: energy not above e_P");
    A(i, 0) = 0.5 * v[i] * v[i];
    if (quartic) A(i, 1) = std::pow(v[i], 4);
    b(i) = E[i] - e_P;
    fit.v.push_back(v[i]);
    fit.excess.push_back(b(i));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < cols) throw Error("fit_mass: degenerate design matrix");
  Eigen::VectorXd x = qr.solve(b);
  fit.mass = x(0);
  fit.quartic = quartic ? x(1) : 0.0;
  fit.residual = (A * x - b).norm();
  return fit;
}

std::vector<double> default_velocities(const PekarSolution& sol) {
  const double vmax = 1.0 / (2.0 * std::sqrt(sol.radial.q));
  return {0.005 * vmax, 0.01 * vmax, 0.02 * vmax, 0.04 * vmax};
}

double predicted_mass(double alpha, const PekarScalars& s) {
  return 0.5 + 2.0 * std::pow(alpha, 4) / 3.0 * s.grad_phi_sq;
}

double predicted_mass_alt(double alpha, const PekarScalars& s) {
  return 2.0 * s.grad_psi_sq * s.grad_psi_sq / (3.0 * s.grad_phi_sq) + 2.0 * std::pow(alpha, 4) / 3.0 * s.grad_phi_sq;
}

std::vector<MassReport> mass_report(const std::vector<double>& alphas, const PekarSolution& sol,
                                    const std::vector<double>& velocities) {
  std::vector<MassReport> out;
  for (double alpha : alphas) {
    MassReport m;
    m.alpha = alpha;
    m.e_P = sol.e_P;
    m.m_pred = predicted_mass(alpha, sol.radial);
    m.m_alt_pred = predicted_mass_alt(alpha, sol.radial);
    m.tw_coefficient = 0.25 + std::pow(alpha, 4) * sol.radial.d1_phi_sq;
    for (Variant var : {Variant::standard, Variant::alternative}) {
      std::vector<double> E;
      double gap = 0;
      for (double v : velocities) {
        TrialEnergy te = trial_energy(v, alpha, sol, var);
        E.push_back(te.route_b);
        gap = std::max(gap, std::abs(te.difference) / te.excess_a);
      }
      MassFit f = fit_mass(velocities, E, sol.e_P);
      if (var == Variant::standard) {
        m.fit_std = f;
        m.route_gap_std = gap;
      } else {
        m.fit_alt = f;
        m.route_gap_alt = gap;
      }
    }
    m.kappa_alt = trial_coefficients(velocities.back(), sol, Variant::alternative).kappa;
    m.rel_err_std = std::abs(m.fit_std.mass - m.m_pred) / m.m_pred;
    m.rel_err_alt = std::abs(m.fit_alt.mass - m.m_alt_pred) / m.m_alt_pred;
    out.push_back(m);
  }
  return out;
}

TravelingWave traveling_wave_linearization(double alpha, const PekarSolution& sol) {
  const Grid& g = *sol.grid;
  const RVec V = pekar_potential(sol);
  RVec im_xi = scaled(times_coordinate(sol.psi, 0), -0.5).real_part();
  RVec re_xi = derivative_real(g, sol.psi_r, 0);
  RVec H_im = apply_HP_real(sol, im_xi, V);
  RVec H_re = apply_HP_real(sol, re_xi, V);

  TravelingWave tw{.xi = ComplexField(sol.grid, Role::auxiliary), .eta = ComplexField(sol.grid, Role::auxiliary)};
  RVec r(g.size());
  for (std::size_t n = 0; n < r.size(); ++n) r[n] = H_im[n] - re_xi[n];
  tw.im_xi_residual = std::sqrt(dot(g, r, r));
  RVec K = apply_hessian(sol, V, re_xi);
  tw.re_xi_residual = std::sqrt(dot(g, K, K) / dot(g, re_xi, re_xi));

  RVec pr(g.size());
  for (std::size_t n = 0; n < pr.size(); ++n) pr[n] = sol.psi_r[n] * re_xi[n];
  RVec re_eta = frac_laplacian_real(g, pr, -0.5);
  for (double& x : re_eta) x *= -2.0;
  RVec im_eta = derivative_real(g, sol.phi_r, 0);
  for (double& x : im_eta) x *= alpha * alpha;

  CVec xv(g.size()), ev(g.size());
  for (std::size_t n = 0; n < xv.size(); ++n) {
    xv[n] = cplx(re_xi[n], im_xi[n]);
    ev[n] = cplx(re_eta[n], im_eta[n]);
  }
  tw.xi = ComplexField(sol.grid, std::move(xv), Role::electron);
  tw.eta = ComplexField(sol.grid, std::move(ev), Role::phonon);

  // second variation of G along (xi, eta) with the mu_P shift
  RVec ve = frac_laplacian_real(g, re_eta, -0.5);
  tw.coefficient_grid = dot(g, re_xi, H_re) + dot(g, im_xi, H_im) + 4.0 * dot(g, pr, ve) + dot(g, re_eta, re_eta) +
                        dot(g, im_eta, im_eta);
  tw.coefficient = 0.25 + std::pow(alpha, 4) * sol.radial.d1_phi_sq;
  tw.theorem_coefficient = 0.25 + std::pow(alpha, 4) / 3.0 * sol.radial.grad_phi_sq;
  return tw;
}

}  // namespace polaron
