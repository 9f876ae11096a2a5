#include "polaron/pekar.hpp"

#include <cmath>
#include <sstream>

#include "polaron/errors.hpp"
#include "polaron/numerics.hpp"

namespace polaron {

namespace {

RVec laplacian_real(const Grid& g, const RVec& f) { return frac_laplacian_real(g, f, 1.0); }

// (-Delta + s)^-1 on a real field
RVec shifted_inverse(const Grid& g, const RVec& f, double s) {
  const int N = g.N(), nh = g.nh();
  CVec h(g.half_size());
  g.forward_r2c(f.data(), h.data());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      cplx* row = h.data() + (std::size_t(i) * N + j) * nh;
      for (int l = 0; l < nh; ++l) row[l] /= (g.k2(i, j, l) + s);
    }
  RVec out(g.size());
  g.backward_c2r(h.data(), out.data());
  return out;
}

RVec self_potential(const Grid& g, const RVec& psi) {
  RVec rho(psi.size());
  for (std::size_t n = 0; n < rho.size(); ++n) rho[n] = psi[n] * psi[n];
  RVec V = frac_laplacian_real(g, rho, -1.0);
  for (double& v : V) v *= -2.0;
  return V;
}

RVec apply_h_real(const Grid& g, const RVec& V, const RVec& f) {
  RVec out = laplacian_real(g, f);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] += V[n] * f[n];
  return out;
}

void axpy(RVec& y, double a, const RVec& x) {
  for (std::size_t n = 0; n < y.size(); ++n) y[n] += a * x[n];
}

void scale(RVec& y, double a) {
  for (double& v : y) v *= a;
}

// self-consistent refinement: each pass takes one block Rayleigh-Ritz step
// for the lowest state of h_V on span{psi, P r, previous step}, then refreshes V
int polish_ground_state(const Grid& g, RVec& psi, double shift, double tol, int max_iter,
                        double& residual) {
  RVec p;
  for (int it = 0; it < max_iter; ++it) {
    RVec V = self_potential(g, psi);
    RVec hpsi = apply_h_real(g, V, psi);
    double mu = dot(g, psi, hpsi);
    RVec r = hpsi;
    axpy(r, -mu, psi);
    residual = std::sqrt(dot(g, r, r));
    if (residual < tol) return it;
    RVec w = shifted_inverse(g, r, shift);
    axpy(w, -dot(g, psi, w), psi);
    scale(w, 1.0 / std::sqrt(dot(g, w, w)));
    std::vector<const RVec*> S = {&psi, &w};
    if (!p.empty()) {
      axpy(p, -dot(g, psi, p), psi);
      double pn = std::sqrt(dot(g, p, p));
      if (pn > 0) {
        scale(p, 1.0 / pn);
        S.push_back(&p);
      }
    }
    std::vector<RVec> HS;
    HS.push_back(hpsi);
    HS.push_back(apply_h_real(g, V, w));
    if (S.size() == 3) HS.push_back(apply_h_real(g, V, p));
    const int m = int(S.size());
    Eigen::MatrixXd Gm(m, m), Hm(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) {
        Gm(a, b) = Gm(b, a) = dot(g, *S[a], *S[b]);
        Hm(a, b) = Hm(b, a) = 0.5 * (dot(g, *S[a], HS[b]) + dot(g, *S[b], HS[a]));
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ge(Gm);
    Eigen::VectorXd gl = ge.eigenvalues();
    int keep0 = 0;
    while (keep0 < m && gl(keep0) <= 1e-14 * gl(m - 1)) ++keep0;
    Eigen::MatrixXd Z = ge.eigenvectors().rightCols(m - keep0);
    for (int c = 0; c < Z.cols(); ++c) Z.col(c) /= std::sqrt(gl(keep0 + c));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> he(Z.transpose() * Hm * Z);
    Eigen::VectorXd c = Z * he.eigenvectors().col(0);
    if (c(0) < 0) c = -c;
    RVec next(psi.size(), 0.0), step(psi.size(), 0.0);
    for (int a = 0; a < m; ++a) {
      axpy(next, c(a), *S[a]);
      if (a > 0) axpy(step, c(a), *S[a]);
    }
    scale(next, 1.0 / std::sqrt(dot(g, next, next)));
    psi = std::move(next);
    p = std::move(step);
  }
  std::ostringstream os;
  os << "ground-state refinement stalled at residual " << residual << " after " << max_iter << " iterations";
  throw ConvergenceError(os.str());
}

PekarScalars grid_scalars(const PekarSolution& s) {
  const Grid& g = *s.grid;
  PekarScalars c;
  c.e_P = s.e_P;
  c.mu_P = s.mu_P;
  c.grad_psi_sq = kinetic_energy(s.psi);
  c.psi4 = g.dv() * psum(g.size(), [&](std::size_t n) {
    double v = s.psi_r[n] * s.psi_r[n];
    return v * v;
  });
  c.phi_sq = norm_sq(s.phi);
  c.grad_phi_sq = kinetic_energy(s.phi);
  ComplexField d1phi = derivative(s.phi, 0);
  ComplexField d1psi = derivative(s.psi, 0);
  c.d1_phi_sq = norm_sq(d1phi);
  c.d1_psi_sq = norm_sq(d1psi);
  ComplexField xpsi = times_coordinate(s.psi, 0);
  c.q = 0.25 * norm_sq(xpsi);
  c.second_moment = 12.0 * c.q;
  return c;
}

}  // namespace

PekarSolution lift(const RadialSolution& rad, GridPtr grid, const LiftOptions& opt) {
  const Grid& g = *grid;
  if (rad.coupling != 1.0) throw Error("the grid lift supports unit coupling only");
  if (!(g.dx() < opt.resolution_fraction * rad.half_width)) {
    std::ostringstream os;
    os << "grid spacing " << g.dx() << " does not resolve the profile (half width " << rad.half_width
       << ", allowed fraction " << opt.resolution_fraction << ")";
    throw ResolutionError(os.str());
  }
  auto prof = radial_profile(rad);
  const int N = g.N();
  RVec psi(g.size());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        double r = std::sqrt(g.x(i) * g.x(i) + g.x(j) * g.x(j) + g.x(l) * g.x(l));
        psi[g.index(i, j, l)] = prof(r);
      }
  scale(psi, 1.0 / std::sqrt(dot(g, psi, psi)));

  double lifted_res = 0;
  {
    RVec V = self_potential(g, psi);
    RVec r = apply_h_real(g, V, psi);
    axpy(r, -dot(g, psi, r), psi);
    lifted_res = std::sqrt(dot(g, r, r));
  }
  double res = lifted_res;
  int iters = 0;
  if (opt.polish) iters = polish_ground_state(g, psi, std::abs(rad.mu_P), opt.polish_tol, opt.polish_max_iter, res);
  for (double& v : psi) v = std::abs(v);

  ComplexField psif = ComplexField::from_real(grid, psi, Role::electron);
  ComplexField sig = sigma_of(psif);
  RVec phi(g.size());
  for (std::size_t n = 0; n < phi.size(); ++n) phi[n] = -sig[n].real();
  PekarSolution s{.grid = grid,
                  .psi = psif,
                  .phi = ComplexField::from_real(grid, phi, Role::phonon),
                  .psi_r = psi,
                  .phi_r = phi};
  s.radial = rad.scalars;
  s.lifted_el_residual = lifted_res;
  s.polish_iterations = iters;

  ComplexField V = potential_of(s.phi);
  ComplexField hpsi = apply_h(V, s.psi);
  s.mu_P = inner(s.psi, hpsi).real();
  s.el_residual = norm(combine(1.0, hpsi, -s.mu_P, s.psi, Role::auxiliary));
  s.e_P = energy_G(s.psi, s.phi).total;
  s.grid_scalars = grid_scalars(s);
  const double L = g.L();
  s.e_P_box_corrected =
      s.e_P - kMadelungCubic / (4.0 * M_PI * L) + s.grid_scalars.second_moment / (3.0 * L * L * L);
  return s;
}

PekarSolution certify_grid(const RadialSolution& rad, double L0, int N0, double rel_tol, int max_doublings,
                           GridCertificate& cert, const LiftOptions& opt) {
  cert = GridCertificate{};
  cert.tolerance = rel_tol;
  double L = L0;
  int N = N0;
  PekarSolution sol = lift(rad, make_grid(L, N), opt);
  cert.stages.push_back({L, N, sol.e_P, sol.e_P_box_corrected, 0.0});
  for (int d = 0; d < max_doublings; ++d) {
    L *= 2;
    N *= 2;
    PekarSolution next = lift(rad, make_grid(L, N), opt);
    double change = std::abs(next.e_P_box_corrected - sol.e_P_box_corrected) / std::abs(next.e_P_box_corrected);
    cert.stages.push_back({L, N, next.e_P, next.e_P_box_corrected, change});
    sol = std::move(next);
    if (change < rel_tol) {
      cert.certified = true;
      break;
    }
  }
  return sol;
}

RVec pekar_potential(const PekarSolution& sol) {
  return self_potential(*sol.grid, sol.psi_r);
}

RVec apply_HP_real(const PekarSolution& sol, const RVec& f, const RVec& V) {
  RVec out = apply_h_real(*sol.grid, V, f);
  axpy(out, -sol.mu_P, f);
  return out;
}

ComplexField apply_HP(const PekarSolution& sol, const ComplexField& f) {
  RVec V = pekar_potential(sol);
  ComplexField Vf = ComplexField::from_real(sol.grid, V, Role::auxiliary);
  ComplexField hf = apply_h(Vf, f);
  return combine(1.0, hf, -sol.mu_P, f, f.role());
}

SandwichReport sandwich_identities(const PekarSolution& sol) {
  SandwichReport rep;
  ComplexField d[3] = {derivative(sol.psi, 0), derivative(sol.psi, 1), derivative(sol.psi, 2)};
  ComplexField Hd[3] = {apply_HP(sol, d[0]), apply_HP(sol, d[1]), apply_HP(sol, d[2])};
  ComplexField w[3] = {scaled(times_coordinate(sol.psi, 0), -0.5), scaled(times_coordinate(sol.psi, 1), -0.5),
                       scaled(times_coordinate(sol.psi, 2), -0.5)};
  rep.forward_target_radial = sol.radial.d1_phi_sq;
  rep.forward_target_grid = sol.grid_scalars.d1_phi_sq;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      rep.inverse(i, j) = inner(d[i], w[j]).real();
      rep.forward(i, j) = inner(d[i], Hd[j]).real();
      double ti = i == j ? 0.25 : 0.0;
      double tf = i == j ? rep.forward_target_radial : 0.0;
      rep.inverse_max_dev = std::max(rep.inverse_max_dev, std::abs(rep.inverse(i, j) - ti));
      rep.forward_max_dev = std::max(rep.forward_max_dev, std::abs(rep.forward(i, j) - tf));
    }
  rep.d1_psi_norm = norm(d[0]);
  ComplexField r1 = combine(1.0, apply_HP(sol, w[0]), -1.0, d[0], Role::auxiliary);
  rep.residual_sawtooth = norm(r1);
  ComplexField ws = scaled(times_coordinate(sol.psi, 0, Coordinate::smooth), -0.5);
  ComplexField r2 = combine(1.0, apply_HP(sol, ws), -1.0, d[0], Role::auxiliary);
  rep.residual_smooth = norm(r2);
  return rep;
}

}  // namespace polaron
