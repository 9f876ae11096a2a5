#include "polaron/projection.hpp"

#include <cmath>
#include <sstream>

#include "polaron/eigensolver.hpp"
#include "polaron/errors.hpp"
#include "polaron/hessian.hpp"

namespace polaron {

namespace {

CVec spectrum(const ComplexField& f) {
  CVec h = f.values();
  f.g().forward(h.data());
  return h;
}

CVec spectrum_real(const Grid& g, const RVec& f) {
  CVec h(f.begin(), f.end());
  g.forward(h.data());
  return h;
}

// phase factors exp(-i k_a y_a) per axis
std::array<std::vector<cplx>, 3> phases(const Grid& g, const Vec3& y, double sign) {
  std::array<std::vector<cplx>, 3> ph;
  for (int a = 0; a < 3; ++a) {
    ph[a].resize(g.N());
    for (int i = 0; i < g.N(); ++i) ph[a][i] = std::polar(1.0, sign * g.k(i) * y[a]);
  }
  return ph;
}

// wrap a lattice offset index into [-L/2, L/2)
double lattice_offset(const Grid& g, int i) { return (i < g.N() / 2 ? i : i - g.N()) * g.dx(); }

// Fourier sums of t_k = w_k conj(a_k) b_k exp(sign i k.y):
// S = sum t, S_i = sum i kd_i t, S_ij = -sum kd_i kd_j t
struct Moments {
  cplx S = 0;
  std::array<cplx, 3> S1{};
  Eigen::Matrix3cd S2 = Eigen::Matrix3cd::Zero();
};

template <class Weight>
Moments moments(const Grid& g, const CVec& a, const CVec& b, const Vec3& y, double sign, const Weight& weight) {
  const int N = g.N();
  auto ph = phases(g, y, sign);
  Moments m;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      cplx pij = ph[0][i] * ph[1][j];
      for (int l = 0; l < N; ++l) {
        std::size_t n = g.index(i, j, l);
        cplx t = weight(i, j, l) * std::conj(a[n]) * b[n] * pij * ph[2][l];
        const double kd[3] = {g.kd(i), g.kd(j), g.kd(l)};
        m.S += t;
        for (int p = 0; p < 3; ++p) {
          m.S1[p] += cplx(0, kd[p]) * t;
          for (int q = p; q < 3; ++q) m.S2(p, q) -= kd[p] * kd[q] * t;
        }
      }
    }
  const double w = g.fourier_weight();
  m.S *= w;
  for (auto& v : m.S1) v *= w;
  for (int p = 0; p < 3; ++p)
    for (int q = p; q < 3; ++q) {
      m.S2(p, q) *= w;
      m.S2(q, p) = m.S2(p, q);
    }
  return m;
}

// || a - c b exp(sign i k.y) ||^2 with Fourier weights
template <class Weight>
double distance_sq(const Grid& g, const CVec& a, const CVec& b, cplx c, const Vec3& y, double sign,
                   const Weight& weight) {
  const int N = g.N();
  auto ph = phases(g, y, sign);
  double s = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      cplx pij = c * ph[0][i] * ph[1][j];
      for (int l = 0; l < N; ++l) {
        std::size_t n = g.index(i, j, l);
        s += weight(i, j, l) * std::norm(a[n] - b[n] * pij * ph[2][l]);
      }
    }
  return s * g.fourier_weight();
}

// lattice offset maximizing score(sum_k w conj(b) a exp(i k.y))
template <class Weight, class Score>
Vec3 correlation_scan(const Grid& g, const CVec& a, const CVec& b, const Weight& weight, const Score& score) {
  const int N = g.N();
  CVec h(g.size());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        std::size_t n = g.index(i, j, l);
        h[n] = weight(i, j, l) * std::conj(b[n]) * a[n];
      }
  g.backward(h.data());
  std::size_t best = 0;
  double bs = -1e300;
  for (std::size_t n = 0; n < h.size(); ++n) {
    double s = score(h[n]);
    if (s > bs) {
      bs = s;
      best = n;
    }
  }
  const int i = int(best / (std::size_t(N) * N)), j = int((best / N) % N), l = int(best % N);
  return {lattice_offset(g, i), lattice_offset(g, j), lattice_offset(g, l)};
}

auto unit_weight = [](int, int, int) { return 1.0; };

double vnorm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

PhononProjection project_phonon(const ComplexField& phi, const PekarSolution& sol, std::optional<Vec3> guess,
                                const ProjectionOptions& opt) {
  const Grid& g = *sol.grid;
  require_same_grid(phi, sol.phi);
  const CVec a = spectrum(phi), b = spectrum(sol.phi);
  const double scale = norm(phi) * std::sqrt(sol.grid_scalars.grad_phi_sq);
  if (scale == 0) throw Error("project_phonon: zero field");

  Vec3 z = guess ? *guess : correlation_scan(g, a, b, unit_weight, [](cplx c) { return c.real(); });

  // F_i = Re <phi, d_i phi_P^z>, A_ij = -Re <phi, d_i d_j phi_P^z> = dF_i/dz_j
  auto eval = [&](const Vec3& zz, Vec3& F, Eigen::Matrix3d& A) {
    Moments m = moments(g, a, b, zz, -1.0, unit_weight);
    for (int p = 0; p < 3; ++p) F[p] = m.S1[p].real();
    A = -m.S2.real();
    return vnorm(F);
  };

  PhononProjection pr;
  Vec3 F;
  Eigen::Matrix3d A;
  double fn = eval(z, F, A);
  int it = 0;
  for (; it < opt.max_iter && fn > opt.tol * scale; ++it) {
    Eigen::Vector3d d = A.ldlt().solve(Eigen::Vector3d(F[0], F[1], F[2]));
    if (!d.allFinite()) throw ConvergenceError("project_phonon: singular Jacobian");
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
      Vec3 zt{z[0] - t * d(0), z[1] - t * d(1), z[2] - t * d(2)};
      Vec3 Ft;
      Eigen::Matrix3d At;
      double ft = eval(zt, Ft, At);
      if (ft < fn) {
        z = zt;
        F = Ft;
        A = At;
        fn = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (fn < 1e3 * opt.tol * scale) break;
      std::ostringstream os;
      os << "project_phonon: Newton stalled at residual " << fn / scale;
      throw ConvergenceError(os.str());
    }
  }
  if (fn > 1e3 * opt.tol * scale) {
    std::ostringstream os;
    os << "project_phonon: no convergence, residual " << fn / scale;
    throw ConvergenceError(os.str());
  }
  pr.z = z;
  pr.A = 0.5 * (A + A.transpose());
  pr.residual = F;
  pr.newton_iterations = it;
  pr.distance = std::sqrt(distance_sq(g, a, b, 1.0, z, -1.0, unit_weight));
  const double limit = opt.neighborhood * norm(sol.phi);
  if (pr.distance > limit) {
    std::ostringstream os;
    os << "project_phonon: distance " << pr.distance << " outside the neighborhood " << limit;
    throw ProjectionRefused(os.str(), pr.distance);
  }
  return pr;
}

ElectronProjection project_electron(const ComplexField& psi, const PekarSolution& sol, Metric metric,
                                    std::optional<Vec3> guess, const ProjectionOptions& opt) {
  const Grid& g = *sol.grid;
  require_same_grid(psi, sol.psi);
  const CVec a = spectrum(psi), b = spectrum(sol.psi);
  auto weight = [&](int i, int j, int l) { return metric == Metric::H1 ? 1.0 + g.k2(i, j, l) : 1.0; };
  // c(y) = <psi_P^y, psi>_w
  Vec3 y = guess ? *guess : correlation_scan(g, a, b, weight, [](cplx c) { return std::norm(c); });

  auto eval = [&](const Vec3& yy, cplx& c, Eigen::Vector3d& grad, Eigen::Matrix3d& H) {
    Moments m = moments(g, b, a, yy, +1.0, weight);
    c = m.S;
    for (int p = 0; p < 3; ++p) grad(p) = 2.0 * (std::conj(c) * m.S1[p]).real();
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) H(p, q) = 2.0 * (std::conj(m.S1[q]) * m.S1[p] + std::conj(c) * m.S2(p, q)).real();
    return grad.norm();
  };

  cplx c;
  Eigen::Vector3d grad;
  Eigen::Matrix3d H;
  double gn = eval(y, c, grad, H);
  const double kscale = std::sqrt(sol.grid_scalars.grad_psi_sq);
  auto scale = [&] { return std::norm(c) * kscale; };
  int it = 0;
  for (; it < opt.max_iter && gn > opt.tol * scale(); ++it) {
    Eigen::Vector3d d = -H.ldlt().solve(grad);
    // fall back to ascent when the Hessian is not negative definite
    if (!d.allFinite() || d.dot(grad) <= 0) d = grad / (kscale * kscale * std::max(std::norm(c), 1e-300));
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
      Vec3 yt{y[0] + t * d(0), y[1] + t * d(1), y[2] + t * d(2)};
      cplx ct;
      Eigen::Vector3d gt;
      Eigen::Matrix3d Ht;
      double g2 = eval(yt, ct, gt, Ht);
      if (g2 < gn || std::norm(ct) > std::norm(c)) {
        y = yt;
        c = ct;
        grad = gt;
        H = Ht;
        gn = g2;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (gn < 1e3 * opt.tol * scale()) break;
      std::ostringstream os;
      os << "project_electron: Newton stalled at residual " << gn / scale();
      throw ConvergenceError(os.str());
    }
  }
  if (gn > 1e3 * opt.tol * scale()) {
    std::ostringstream os;
    os << "project_electron: no convergence, residual " << gn / scale();
    throw ConvergenceError(os.str());
  }
  ElectronProjection pr;
  pr.metric = metric;
  pr.y = y;
  pr.theta = std::arg(c);
  if (pr.theta < 0) pr.theta += 2 * M_PI;
  pr.residual = {grad(0), grad(1), grad(2)};
  pr.newton_iterations = it;
  pr.distance = std::sqrt(distance_sq(g, a, b, std::polar(1.0, pr.theta), y, -1.0, weight));
  double ref = std::sqrt(distance_sq(g, b, b, 0.0, y, -1.0, weight));
  if (pr.distance > opt.neighborhood * ref) {
    std::ostringstream os;
    os << "project_electron: distance " << pr.distance << " outside the neighborhood " << opt.neighborhood * ref;
    throw ProjectionRefused(os.str(), pr.distance);
  }
  return pr;
}

namespace {

// <u, d_i phi_P^z> for a real field u given by its spectrum
Vec3 pair_with_grad_phiP(const Grid& g, const CVec& uh, const CVec& ph, const Vec3& z) {
  Moments m = moments(g, uh, ph, z, -1.0, unit_weight);
  return {m.S1[0].real(), m.S1[1].real(), m.S1[2].real()};
}

}  // namespace

Vec3 phonon_velocity(const ComplexField& psi, const ComplexField& phi, double alpha, const PhononProjection& proj,
                     const PekarSolution& sol) {
  const Grid& g = *sol.grid;
  const CVec ph = spectrum(sol.phi);
  Vec3 b;
  double pref;
  if (alpha > 0) {
    b = pair_with_grad_phiP(g, spectrum_real(g, phi.imag_part()), ph, proj.z);
    pref = -1.0 / (alpha * alpha);
  } else {
    // d/dt phi = -(-Delta)^{-1/2} d/dt |psi|^2 with d/dt |psi|^2 = 2 Im(conj psi h psi)
    ComplexField hpsi = apply_h(potential_of(phi.with_role(Role::phonon)), psi);
    RVec s(g.size());
    for (std::size_t n = 0; n < s.size(); ++n) s[n] = 2.0 * (std::conj(psi[n]) * hpsi[n]).imag();
    RVec u = frac_laplacian_real(g, s, -0.5);
    b = pair_with_grad_phiP(g, spectrum_real(g, u), ph, proj.z);
    pref = 1.0;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(proj.A);
  if (!lu.isInvertible()) throw Error("phonon_velocity: singular Jacobian");
  Eigen::Vector3d v = pref * lu.solve(Eigen::Vector3d(b[0], b[1], b[2]));
  return {v(0), v(1), v(2)};
}

double energy_F(const ComplexField& phi, const PekarSolution& sol) {
  const Grid& g = *sol.grid;
  const RVec V = potential_of(phi.with_role(Role::phonon)).real_part();
  RealOperator h = [&](const RVec& f) {
    RVec out = frac_laplacian_real(g, f, 1.0);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += V[n] * f[n];
    return out;
  };
  const double s = std::abs(sol.mu_P);
  RealOperator T = [&](const RVec& r) {
    const int N = g.N(), nh = g.nh();
    CVec hh(g.half_size());
    g.forward_r2c(r.data(), hh.data());
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        cplx* row = hh.data() + (std::size_t(i) * N + j) * nh;
        for (int l = 0; l < nh; ++l) row[l] /= (g.k2(i, j, l) + s);
      }
    RVec out(g.size());
    g.backward_c2r(hh.data(), out.data());
    return out;
  };
  // start from psi_P placed where phi sits
  PhononProjection pr = project_phonon(phi, sol);
  RVec seed = translate(sol.psi, pr.z).real_part();
  std::vector<RVec> X0 = {seed, smooth_random_fields(sol, 1, 7)[0]};
  LobpcgOptions lo;
  lo.want = 1;
  lo.extra = 1;
  lo.tol = 1e-11;
  LobpcgResult r = lobpcg(g, h, T, {}, X0, lo);
  return norm_sq(phi) + r.values[0];
}

ManifoldDiagnostics manifold_distances(const ComplexField& psi, const ComplexField& phi, const PekarSolution& sol,
                                       double on_manifold_tol) {
  ManifoldDiagnostics d;
  PhononProjection pp = project_phonon(phi, sol);
  ElectronProjection ep = project_electron(psi, sol, Metric::H1);
  d.dist_phonon_L2 = pp.distance;
  d.dist_electron_H1 = ep.distance;
  d.F_phi = energy_F(phi, sol);
  d.E_psi = energy_E(psi);
  d.phonon_on_manifold = pp.distance < on_manifold_tol * norm(sol.phi);
  d.electron_on_manifold = ep.distance < on_manifold_tol;
  d.ratio_phonon = d.phonon_on_manifold ? std::nan("") : (d.F_phi - sol.e_P) / (pp.distance * pp.distance);
  d.ratio_electron = d.electron_on_manifold ? std::nan("") : (d.E_psi - sol.e_P) / (ep.distance * ep.distance);
  return d;
}

std::vector<CoercivitySample> coercivity_spot_check(const PekarSolution& sol, const std::vector<double>& eps,
                                                    unsigned long seed) {
  const Grid& g = *sol.grid;
  RVec eta = smooth_random_fields(sol, 1, seed)[0];
  for (int a = 0; a < 3; ++a) {
    RVec d = derivative_real(g, sol.psi_r, a);
    double c = dot(g, d, eta) / dot(g, d, d);
    for (std::size_t n = 0; n < eta.size(); ++n) eta[n] -= c * d[n];
  }
  double en = std::sqrt(dot(g, eta, eta));
  for (double& v : eta) v /= en;
  std::vector<CoercivitySample> out;
  for (double e : eps) {
    RVec p = sol.psi_r;
    for (std::size_t n = 0; n < p.size(); ++n) p[n] += e * eta[n];
    double pn = std::sqrt(dot(g, p, p));
    for (double& v : p) v /= pn;
    ComplexField psi = ComplexField::from_real(sol.grid, p, Role::electron);
    ElectronProjection ep = project_electron(psi, sol, Metric::H1, Vec3{0, 0, 0});
    CoercivitySample s;
    s.eps = e;
    s.excess = energy_E(psi) - sol.e_P;
    s.dist_sq = ep.distance * ep.distance;
    s.ratio = s.excess / s.dist_sq;
    out.push_back(s);
  }
  return out;
}

}  // namespace polaron
