#include "polaron/radial.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "polaron/errors.hpp"

namespace polaron {

namespace {

struct Tridiag {
  double h2inv;  // 1/dr^2
  std::vector<double> diag;  // V_i + 2/dr^2 for interior nodes
};

// number of eigenvalues below s
int sturm_count(const Tridiag& T, double s) {
  const double e2 = T.h2inv * T.h2inv;
  int count = 0;
  double q = T.diag[0] - s;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < T.diag.size(); ++i) {
    if (q == 0.0) q = 1e-300;
    q = T.diag[i] - s - e2 / q;
    if (q < 0) ++count;
  }
  return count;
}

// solves (T - s) y = b, T - s positive definite
std::vector<double> shifted_solve(const Tridiag& T, double s, const std::vector<double>& b) {
  const std::size_t n = T.diag.size();
  const double off = -T.h2inv;
  std::vector<double> c(n), y(n);
  double piv = T.diag[0] - s;
  c[0] = off / piv;
  y[0] = b[0] / piv;
  for (std::size_t i = 1; i < n; ++i) {
    piv = T.diag[i] - s - off * c[i - 1];
    c[i] = off / piv;
    y[i] = (b[i] - off * y[i - 1]) / piv;
  }
  for (std::size_t i = n - 1; i-- > 0;) y[i] -= c[i] * y[i + 1];
  return y;
}

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double rayleigh(const Tridiag& T, const std::vector<double>& x) {
  const std::size_t n = x.size();
  double num = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double ax = T.diag[i] * x[i];
    if (i > 0) ax -= T.h2inv * x[i - 1];
    if (i + 1 < n) ax -= T.h2inv * x[i + 1];
    num += x[i] * ax;
  }
  return num / dotv(x, x);
}

// lowest eigenpair: Sturm bisection to bracket, then shift-inverted iteration
double lowest_eigenpair(const Tridiag& T, std::vector<double>& x) {
  double lo = *std::min_element(T.diag.begin(), T.diag.end()) - 2.0 * T.h2inv;
  double hi = rayleigh(T, x);
  double span = std::max(std::abs(hi), 1e-300);
  while (sturm_count(T, hi) < 1) {
    span *= 2;
    hi += span;
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (sturm_count(T, mid) >= 1) hi = mid;
    else lo = mid;
    if (hi - lo <= 1e-9 * std::max(std::abs(lo), std::abs(hi))) break;
  }
  // lo sits below the lowest eigenvalue, so the shifted matrix stays definite
  const double s = lo;
  double lam = hi, prev = 0;
  for (int it = 0; it < 50; ++it) {
    double nx = std::sqrt(dotv(x, x));
    for (double& v : x) v /= nx;
    std::vector<double> y = shifted_solve(T, s, x);
    lam = s + dotv(y, x) / dotv(y, y);
    x = std::move(y);
    if (it > 0 && std::abs(lam - prev) < 1e-15 * std::abs(lam) + 1e-300) break;
    prev = lam;
  }
  double nx = std::sqrt(dotv(x, x));
  double sign = 0;
  for (double v : x) sign += v;
  if (sign < 0) nx = -nx;
  for (double& v : x) v /= nx;
  return lam;
}

// Newton shell potential of the shell masses m_i = u_i^2 (r_0 = 0 excluded)
std::vector<double> shell_potential(const std::vector<double>& r, const std::vector<double>& m, double dr) {
  const std::size_t M = r.size();
  std::vector<double> inner(M, 0.0), outer(M, 0.0), W(M, 0.0);
  double acc = 0;
  for (std::size_t i = 1; i < M; ++i) {
    acc += m[i] * dr;
    inner[i] = acc;
  }
  acc = 0;
  for (std::size_t i = M - 1; i >= 1; --i) {
    outer[i] = acc;
    acc += m[i] / r[i] * dr;
  }
  for (std::size_t i = 1; i < M; ++i) W[i] = inner[i] / r[i] + outer[i];
  W[0] = outer[0] = acc;
  return W;
}

double coulomb_form(const std::vector<double>& m, const std::vector<double>& W, double dr) {
  double s = 0;
  for (std::size_t i = 1; i < m.size(); ++i) s += m[i] * W[i];
  return 4.0 * M_PI * dr * s;
}

double kinetic_form(const std::vector<double>& u, double dr) {
  double s = 0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    double d = u[i + 1] - u[i];
    s += d * d;
  }
  return 4.0 * M_PI * s / dr;
}

double spherical_j1(double x) {
  if (std::abs(x) < 1e-3) return x / 3.0 - x * x * x / 30.0;
  return std::sin(x) / (x * x) - std::cos(x) / x;
}

double spherical_j0(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace

std::function<double(double)> radial_profile(const RadialSolution& sol) {
  const auto& r = sol.r;
  std::vector<double> p(r.size());
  for (std::size_t i = 1; i < r.size(); ++i) p[i] = sol.u[i] / r[i];
  p[0] = (4.0 * p[1] - p[2]) / 3.0;
  auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      p.begin(), p.end(), 0.0, sol.dr, 0.0, 0.0);
  const double R = sol.R;
  return [spline, R](double radius) { return radius >= R ? 0.0 : (*spline)(radius); };
}

RadialSolution solve_radial(const RadialOptions& opt) {
  if (!(opt.dr > 0) || !(opt.R > 0) || !(opt.tol > 0) || opt.max_iter < 1)
    throw Error("radial solver needs dr > 0, R > 0, tol > 0, max_iter >= 1");
  if (!(opt.coupling > 0)) throw Error("coupling scale must be positive");
  if (!(opt.mixing > 0) || opt.mixing > 1) throw Error("mixing parameter must lie in (0, 1]");

  RadialSolution sol;
  const double lam = opt.coupling;
  sol.coupling = lam;
  sol.dr = opt.scale_grid ? opt.dr / lam : opt.dr;
  sol.R = opt.scale_grid ? opt.R / lam : opt.R;
  const double dr = sol.dr;
  const std::size_t M = std::size_t(std::llround(sol.R / dr));
  if (M < 16) throw Error("radial grid too small");
  sol.R = M * dr;
  sol.r.resize(M + 1);
  for (std::size_t i = 0; i <= M; ++i) sol.r[i] = i * dr;
  const auto& r = sol.r;

  // start from a broad exponential profile
  const double kappa = 0.05 * lam;
  std::vector<double> u(M + 1, 0.0);
  for (std::size_t i = 1; i < M; ++i) u[i] = r[i] * std::exp(-kappa * r[i]);
  {
    double nn = 0;
    for (double v : u) nn += v * v;
    nn = std::sqrt(4.0 * M_PI * dr * nn);
    for (double& v : u) v /= nn;
  }
  std::vector<double> mix(M + 1);
  for (std::size_t i = 0; i <= M; ++i) mix[i] = u[i] * u[i];

  Tridiag T;
  T.h2inv = 1.0 / (dr * dr);
  T.diag.assign(M - 1, 0.0);
  std::vector<double> x(u.begin() + 1, u.end() - 1);
  double mu = 0, G = 0, Gprev = 0;
  std::vector<double> V(M + 1);
  bool converged = false;
  for (int it = 0; it < opt.max_iter; ++it) {
    std::vector<double> W = shell_potential(r, mix, dr);
    for (std::size_t i = 0; i <= M; ++i) V[i] = -2.0 * lam * W[i];
    for (std::size_t i = 1; i < M; ++i) T.diag[i - 1] = 2.0 * T.h2inv + V[i];
    lowest_eigenpair(T, x);
    double nx = 0;
    for (double v : x) nx += v * v;
    nx = std::sqrt(4.0 * M_PI * dr * nx);
    for (std::size_t i = 1; i < M; ++i) u[i] = x[i - 1] / nx;
    // energy form of the Rayleigh quotient avoids the 2/dr^2 cancellation
    double pv = 0;
    for (std::size_t i = 1; i < M; ++i) pv += V[i] * u[i] * u[i];
    mu = kinetic_form(u, dr) + 4.0 * M_PI * dr * pv;
    G = mu + lam * coulomb_form(mix, W, dr);
    sol.energy_log.push_back(G);
    double change = 0, peak = 0;
    for (std::size_t i = 0; i <= M; ++i) {
      change = std::max(change, std::abs(u[i] * u[i] - mix[i]));
      peak = std::max(peak, u[i] * u[i]);
    }
    change /= peak;
    sol.residual_log.push_back(change);
    sol.iterations = it + 1;
    if (it > 0 && std::abs(G - Gprev) < opt.tol && change < opt.density_tol) {
      converged = true;
      break;
    }
    Gprev = G;
    for (std::size_t i = 0; i <= M; ++i) mix[i] = (1.0 - opt.mixing) * mix[i] + opt.mixing * u[i] * u[i];
  }
  if (!converged) {
    std::ostringstream os;
    os << "radial fixed point did not converge in " << opt.max_iter << " iterations (last change "
       << std::abs(G - Gprev) << ")";
    throw ConvergenceError(os.str());
  }

  double umax = 0, tail = 0;
  const std::size_t band0 = std::size_t((1.0 - opt.decay_band) * M);
  for (std::size_t i = 0; i <= M; ++i) {
    umax = std::max(umax, std::abs(u[i]));
    if (i >= band0) tail = std::max(tail, std::abs(u[i]));
  }
  sol.decay_ratio = tail / umax;
  if (!(sol.decay_ratio < opt.decay_threshold)) {
    std::ostringstream os;
    os << "radial cutoff too small: max|u| over the outer band is " << sol.decay_ratio
       << " of max|u| (threshold " << opt.decay_threshold << ")";
    throw ResolutionError(os.str());
  }
  sol.u = u;

  std::vector<double> rho(M + 1);
  for (std::size_t i = 0; i <= M; ++i) rho[i] = u[i] * u[i];
  std::vector<double> W = shell_potential(r, rho, dr);
  for (std::size_t i = 0; i <= M; ++i) V[i] = -2.0 * lam * W[i];
  const double kin = kinetic_form(u, dr);
  const double coul = lam * coulomb_form(rho, W, dr);
  double pot = 0;
  for (std::size_t i = 1; i < M; ++i) pot += V[i] * u[i] * u[i];
  pot *= 4.0 * M_PI * dr;
  sol.e_P = kin - coul;
  sol.mu_P = kin + pot;

  double res = 0;
  for (std::size_t i = 1; i < M; ++i) {
    double hu = -(u[i + 1] - 2.0 * u[i] + u[i - 1]) * T.h2inv + (V[i] - sol.mu_P) * u[i];
    res += hu * hu;
  }
  sol.el_residual = std::sqrt(4.0 * M_PI * dr * res);

  double p0 = (4.0 * u[1] / r[1] - u[2] / r[2]) / 3.0;
  for (std::size_t i = 1; i <= M; ++i)
    if (u[i] / r[i] <= 0.5 * p0) {
      double a = u[i - 1] / std::max(r[i - 1], 1e-300), b = u[i] / r[i];
      if (i == 1) a = p0;
      sol.half_width = r[i - 1] + dr * (a - 0.5 * p0) / (a - b);
      break;
    }

  PekarScalars& s = sol.scalars;
  s.e_P = sol.e_P;
  s.mu_P = sol.mu_P;
  s.grad_psi_sq = kin;
  s.phi_sq = coul;
  double p4 = 0, m2 = 0;
  for (std::size_t i = 1; i < M; ++i) {
    p4 += u[i] * u[i] * u[i] * u[i] / (r[i] * r[i]);
    m2 += u[i] * u[i] * r[i] * r[i];
  }
  s.psi4 = 4.0 * M_PI * dr * p4;
  s.second_moment = 4.0 * M_PI * dr * m2;
  s.q = s.second_moment / 12.0;
  s.d1_psi_sq = kin / 3.0;
  s.grad_phi_sq = lam * radial_grad_sigma_sq(sol, &sol.k_max, &sol.grad_phi_tail);
  s.d1_phi_sq = s.grad_phi_sq / 3.0;
  return sol;
}

double radial_grad_sigma_sq(const RadialSolution& sol, double* k_max, double* tail_out) {
  const auto& r = sol.r;
  const auto& u = sol.u;
  const double dr = sol.dr, R = sol.R;
  const std::size_t M = r.size() - 1;
  // Fourier transform of rho: 4 pi int u^2 j0(k r) dr
  const double dk = M_PI / (4.0 * R);
  const double kcap = M_PI / dr;
  std::vector<double> rhohat;
  int quiet = 0;
  for (std::size_t n = 0;; ++n) {
    double k = n * dk;
    double s = 0;
    for (std::size_t i = 1; i < M; ++i) s += u[i] * u[i] * spherical_j0(k * r[i]);
    s *= 4.0 * M_PI * dr;
    rhohat.push_back(s);
    quiet = std::abs(s) < 1e-17 ? quiet + 1 : 0;
    if (quiet > 200 || k > kcap) break;
  }
  const std::size_t K = rhohat.size();
  if (k_max) *k_max = (K - 1) * dk;
  // sigma'(r) = -(1 / 2 pi^2) int k^2 rhohat(k) j1(k r) dk
  double acc = 0;
  for (std::size_t i = 1; i <= M; ++i) {
    double s = 0;
    for (std::size_t n = 1; n < K; ++n) {
      double k = n * dk;
      s += k * k * rhohat[n] * spherical_j1(k * r[i]);
    }
    double ds = -s * dk / (2.0 * M_PI * M_PI);
    double w = (i == M) ? 0.5 : 1.0;
    acc += w * ds * ds * r[i] * r[i];
  }
  double inside = 4.0 * M_PI * dr * acc;
  double m2 = 0;
  for (std::size_t i = 1; i < M; ++i) m2 += u[i] * u[i] * r[i] * r[i];
  m2 *= 4.0 * M_PI * dr;
  double tail = 4.0 / (M_PI * M_PI * M_PI) * (1.0 / (3.0 * R * R * R) + 4.0 * m2 / (15.0 * std::pow(R, 5)));
  if (tail_out) *tail_out = tail;
  return inside + tail;
}

void write_radial_csv(const RadialSolution& sol, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << "r,u\n" << std::setprecision(17);
  for (std::size_t i = 0; i < sol.r.size(); ++i) os << sol.r[i] << "," << sol.u[i] << "\n";
  if (!os) throw Error("write failed for " + path);
}

}  // namespace polaron
