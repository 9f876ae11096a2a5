#include "polaron/minimizer.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "polaron/errors.hpp"
#include "polaron/hessian.hpp"
#include "polaron/projection.hpp"

namespace polaron {

namespace {

double rdot(const ComplexField& a, const ComplexField& b) { return inner(a, b).real(); }

ComplexField from_parts(const GridPtr& g, const RVec& re, const RVec& im, Role role) {
  CVec v(re.size());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = cplx(re[n], im[n]);
  return ComplexField(g, std::move(v), role);
}

// removes the span of `U` from f in the real inner product
ComplexField lagrange_residual(const ComplexField& f, const std::vector<ComplexField>& U) {
  const int m = int(U.size());
  Eigen::MatrixXd G(m, m);
  Eigen::VectorXd r(m);
  for (int i = 0; i < m; ++i) {
    r(i) = rdot(U[i], f);
    for (int j = i; j < m; ++j) G(i, j) = G(j, i) = rdot(U[i], U[j]);
  }
  Eigen::VectorXd c = G.ldlt().solve(r);
  CVec out = f.values();
  for (int i = 0; i < m; ++i)
    for (std::size_t n = 0; n < out.size(); ++n) out[n] -= c(i) * U[i][n];
  return ComplexField(f.grid(), std::move(out), f.role());
}

ComplexField precondition(const ComplexField& f, double s) {
  const Grid& g = f.g();
  const int N = g.N();
  CVec h = f.values();
  g.forward(h.data());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) h[g.index(i, j, l)] /= (g.k2(i, j, l) + s);
  g.backward(h.data());
  return ComplexField(f.grid(), std::move(h), f.role());
}

class Constraints {
 public:
  Constraints(const PekarSolution& sol, double v, double alpha) : sol_(sol), g_(*sol.grid), v_(v), alpha_(alpha) {
    for (int j = 0; j < 3; ++j) {
      dphi_[j] = derivative_real(g_, sol.phi_r, j);
      d2phi_[j] = derivative_real(g_, dphi_[0], j);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) gram_(i, j) = dot(g_, dphi_[i], dphi_[j]);
  }

  void electron(ComplexField& psi) const {
    for (int it = 0; it < 20; ++it) {
      psi = scaled(psi, 1.0 / norm(psi));
      RVec a = psi.real_part(), b = psi.imag_part();
      RVec Da[3];
      Eigen::Matrix3d G;
      Eigen::Vector3d r;
      for (int j = 0; j < 3; ++j) Da[j] = derivative_real(g_, a, j);
      for (int j = 0; j < 3; ++j) {
        r(j) = dot(g_, Da[j], b) + (j == 0 ? 0.25 * v_ : 0.0);
        for (int k = 0; k < 3; ++k) G(j, k) = dot(g_, Da[j], Da[k]);
      }
      if (r.norm() <= 1e-15 * (std::abs(v_) + 1e-300) || r.norm() < 1e-22) break;
      Eigen::Vector3d lam = G.ldlt().solve(r);
      for (std::size_t n = 0; n < b.size(); ++n) b[n] -= lam(0) * Da[0][n] + lam(1) * Da[1][n] + lam(2) * Da[2][n];
      psi = from_parts(psi.grid(), a, b, Role::electron);
    }
  }

  // phonon position to the origin, both fields moved together
  void recenter(ComplexField& psi, ComplexField& phi) const {
    PhononProjection pr = project_phonon(phi, sol_, Vec3{0, 0, 0});
    Vec3 back{-pr.z[0], -pr.z[1], -pr.z[2]};
    psi = translate(psi, back);
    phi = translate(phi, back);
  }

  // <Im phi, d_j phi_P> = -v alpha^2 A_j1(Re phi)
  void phonon(ComplexField& phi) const {
    RVec a = phi.real_part(), b = phi.imag_part();
    Eigen::Vector3d r;
    for (int j = 0; j < 3; ++j) {
      double A_j1 = -dot(g_, a, d2phi_[j]);
      r(j) = dot(g_, b, dphi_[j]) + v_ * alpha_ * alpha_ * A_j1;
    }
    Eigen::Vector3d lam = gram_.ldlt().solve(r);
    for (std::size_t n = 0; n < b.size(); ++n)
      b[n] -= lam(0) * dphi_[0][n] + lam(1) * dphi_[1][n] + lam(2) * dphi_[2][n];
    phi = from_parts(phi.grid(), a, b, Role::phonon);
  }

  void phase(ComplexField& psi) const {
    ElectronProjection ep = project_electron(psi, sol_, Metric::L2);
    psi = scaled(psi, std::polar(1.0, -ep.theta));
  }

  void apply(ComplexField& psi, ComplexField& phi) const {
    electron(psi);
    recenter(psi, phi);
    phonon(phi);
    phase(psi);
  }

  std::vector<ComplexField> psi_normals(const ComplexField& psi) const {
    RVec a = psi.real_part(), b = psi.imag_part();
    std::vector<ComplexField> U = {psi};
    for (int j = 0; j < 3; ++j) {
      RVec Db = derivative_real(g_, b, j), Da = derivative_real(g_, a, j);
      for (double& x : Db) x = -x;
      U.push_back(from_parts(psi.grid(), Db, Da, Role::auxiliary));
    }
    return U;
  }

  std::vector<ComplexField> phi_normals() const {
    std::vector<ComplexField> U;
    for (int j = 0; j < 3; ++j) {
      RVec re = d2phi_[j];
      for (double& x : re) x *= -v_ * alpha_ * alpha_;
      U.push_back(from_parts(sol_.grid, re, dphi_[j], Role::auxiliary));
    }
    return U;
  }

 private:
  const PekarSolution& sol_;
  const Grid& g_;
  double v_, alpha_;
  RVec dphi_[3], d2phi_[3];
  Eigen::Matrix3d gram_;
};

}  // namespace

Gradient energy_gradient(const ComplexField& psi, const ComplexField& phi) {
  ComplexField hpsi = apply_h(potential_of(phi), psi);
  ComplexField sig = sigma_of(psi);
  return Gradient{.psi = scaled(hpsi, 2.0).with_role(Role::auxiliary),
                  .phi = combine(2.0, phi, 2.0, sig, Role::auxiliary)};
}

MinimizeResult constrained_minimize_Ev(double v, double alpha, const PekarSolution& sol, const MinimizeOptions& opt) {
  if (!(alpha > 0)) throw Error("constrained_minimize_Ev needs alpha > 0");
  Constraints C(sol, v, alpha);
  PolaronState st = trial_state(v, alpha, sol, Variant::standard);
  MinimizeResult res{.state = st};
  res.seed_energy = energy_G(st.psi, st.phi).total;
  ComplexField psi = st.psi, phi = st.phi;
  C.apply(psi, phi);
  double E = energy_G(psi, phi).total;
  // the constraint pass must not lift the seed
  if (E > res.seed_energy) {
    psi = st.psi;
    phi = st.phi;
    E = res.seed_energy;
  }
  res.energy_log.push_back(E);
  const double shift = std::abs(sol.mu_P);
  double tau = opt.initial_step;
  int stall = 0;
  int it = 0;
  for (; it < opt.budget; ++it) {
    Gradient gr = energy_gradient(psi, phi);
    ComplexField rpsi = lagrange_residual(gr.psi, C.psi_normals(psi));
    ComplexField rphi = lagrange_residual(gr.phi, C.phi_normals());
    const double gnorm = std::sqrt(norm_sq(gr.psi) + norm_sq(gr.phi));
    res.stationarity = std::sqrt(norm_sq(rpsi) + norm_sq(rphi)) / gnorm;
    if (res.stationarity < opt.grad_tol) {
      res.converged = true;
      break;
    }
    ComplexField dpsi = scaled(precondition(rpsi, shift), -1.0);
    ComplexField dphi = scaled(rphi, -0.5);
    bool accepted = false;
    for (int b = 0; b < opt.max_backtracks; ++b, tau *= 0.5) {
      ComplexField pt = combine(1.0, psi, tau, dpsi, Role::electron);
      ComplexField ft = combine(1.0, phi, std::min(tau, 1.0), dphi, Role::phonon);
      C.apply(pt, ft);
      double Et = energy_G(pt, ft).total;
      if (Et < E) {
        stall = (E - Et) <= opt.stall_tol * std::abs(E) ? stall + 1 : 0;
        psi = std::move(pt);
        phi = std::move(ft);
        E = Et;
        accepted = true;
        break;
      }
    }
    res.energy_log.push_back(E);
    if (!accepted || stall >= opt.stall_window) {
      res.stalled = true;
      break;
    }
    tau = std::min(2.0 * tau, opt.initial_step);
  }
  res.iterations = it;
  res.budget_exhausted = it >= opt.budget;
  res.state = PolaronState{.psi = psi, .phi = phi, .alpha = alpha, .t = 0};
  res.energy = E;
  res.admissibility = admissibility_check(res.state, v, sol, std::abs(sol.e_P));
  return res;
}

GradientCheck gradient_check(const PolaronState& st, const PekarSolution& sol, int count, std::uint64_t seed,
                             double eps) {
  GradientCheck gc;
  Gradient gr = energy_gradient(st.psi, st.phi);
  std::vector<RVec> fields = smooth_random_fields(sol, 4 * count, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const double phi_scale = norm(st.phi);
  for (int c = 0; c < count; ++c) {
    RVec r0 = fields[4 * c], i0 = fields[4 * c + 1];
    const double w = nd(rng);
    for (std::size_t n = 0; n < r0.size(); ++n) r0[n] += w * sol.psi_r[n];
    ComplexField dpsi = from_parts(sol.grid, r0, i0, Role::electron);
    dpsi = scaled(dpsi, 1.0 / norm(dpsi));
    ComplexField dphi = from_parts(sol.grid, fields[4 * c + 2], fields[4 * c + 3], Role::phonon);
    dphi = scaled(dphi, phi_scale / norm(dphi));
    const double analytic = rdot(gr.psi, dpsi) + rdot(gr.phi, dphi);
    auto G = [&](double e) {
      return energy_G(combine(1.0, st.psi, e, dpsi, Role::electron), combine(1.0, st.phi, e, dphi, Role::phonon), 1.0)
          .total;
    };
    const double fd = (G(eps) - G(-eps)) / (2.0 * eps);
    const double rel = std::abs(fd - analytic) / std::abs(analytic);
    gc.relative_errors.push_back(rel);
    gc.max_error = std::max(gc.max_error, rel);
  }
  return gc;
}

}  // namespace polaron
