#include "polaron/spectral.hpp"

#include <cmath>
#include <sstream>

#include "polaron/errors.hpp"
#include "polaron/numerics.hpp"

namespace polaron {

std::string role_name(Role r) {
  switch (r) {
    case Role::electron: return "electron";
    case Role::phonon: return "phonon";
    case Role::auxiliary: return "auxiliary";
  }
  return "auxiliary";
}

Role role_from_name(const std::string& s) {
  if (s == "electron") return Role::electron;
  if (s == "phonon") return Role::phonon;
  if (s == "auxiliary") return Role::auxiliary;
  throw Error("unknown field role '" + s + "'");
}

ComplexField::ComplexField(GridPtr grid, Role role)
    : grid_(std::move(grid)), values_(grid_->size(), cplx(0.0, 0.0)), role_(role) {}

ComplexField::ComplexField(GridPtr grid, CVec values, Role role)
    : grid_(std::move(grid)), values_(std::move(values)), role_(role) {
  if (values_.size() != grid_->size())
    throw GridError("field has " + std::to_string(values_.size()) + " values, grid needs " +
                    std::to_string(grid_->size()));
}

ComplexField ComplexField::from_real(GridPtr grid, const RVec& values, Role role) {
  if (values.size() != grid->size()) throw GridError("real field size does not match grid");
  CVec c(values.size());
  for (std::size_t n = 0; n < values.size(); ++n) c[n] = cplx(values[n], 0.0);
  return ComplexField(std::move(grid), std::move(c), role);
}

RVec ComplexField::real_part() const {
  RVec r(values_.size());
  for (std::size_t n = 0; n < r.size(); ++n) r[n] = values_[n].real();
  return r;
}

RVec ComplexField::imag_part() const {
  RVec r(values_.size());
  for (std::size_t n = 0; n < r.size(); ++n) r[n] = values_[n].imag();
  return r;
}

void require_same_grid(const ComplexField& a, const ComplexField& b) {
  if (!a.g().same_as(b.g())) throw GridError("fields live on different grids");
}

namespace {

void require_role(const ComplexField& f, Role r, const char* what) {
  if (f.role() != r)
    throw RoleError(std::string(what) + " expects a " + role_name(r) + " field, got " + role_name(f.role()));
}

double multiplier(double k2, double p) {
  if (k2 == 0.0) return 0.0;
  if (p == -1.0) return 1.0 / k2;
  if (p == -0.5) return 1.0 / std::sqrt(k2);
  if (p == 0.5) return std::sqrt(k2);
  return k2;
}

void check_power(double p) {
  if (p != -1.0 && p != -0.5 && p != 0.5 && p != 1.0) {
    std::ostringstream os;
    os << "unsupported fractional Laplacian power " << p;
    throw Error(os.str());
  }
}

// applies a real multiplier m(k2) in place on a half spectrum
template <class M>
void scale_half(const Grid& g, CVec& h, const M& m) {
  const int N = g.N(), nh = g.nh();
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double kij = g.k(i) * g.k(i) + g.k(j) * g.k(j);
      cplx* row = h.data() + (std::size_t(i) * N + j) * nh;
      for (int l = 0; l < nh; ++l) row[l] *= m(kij + g.k(l) * g.k(l));
    }
}

template <class M>
void scale_full(const Grid& g, CVec& h, const M& m) {
  const int N = g.N();
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double kij = g.k(i) * g.k(i) + g.k(j) * g.k(j);
      cplx* row = h.data() + (std::size_t(i) * N + j) * N;
      for (int l = 0; l < N; ++l) row[l] *= m(kij + g.k(l) * g.k(l));
    }
}

template <class M>
RVec real_multiplier(const Grid& g, const RVec& f, const M& m) {
  CVec h(g.half_size());
  g.forward_r2c(f.data(), h.data());
  scale_half(g, h, m);
  RVec out(g.size());
  g.backward_c2r(h.data(), out.data());
  return out;
}

// sum over the full spectrum of w(k2) |F|^2, from a half spectrum
template <class W>
double half_spectrum_sum(const Grid& g, const CVec& h, const W& w) {
  const int N = g.N(), nh = g.nh();
  return psum(h.size(), [&](std::size_t n) {
    int l = int(n % nh);
    std::size_t ij = n / nh;
    int j = int(ij % N), i = int(ij / N);
    double mult = (l == 0 || l == N / 2) ? 1.0 : 2.0;
    double k2 = g.k2(i, j, l);
    return mult * w(k2) * std::norm(h[n]);
  });
}

RVec density(const ComplexField& psi) {
  RVec rho(psi.size());
  for (std::size_t n = 0; n < rho.size(); ++n) rho[n] = std::norm(psi[n]);
  return rho;
}

void check_normalized(const ComplexField& psi, double tol) {
  double nn = norm(psi);
  if (!(std::abs(nn - 1.0) <= tol)) {
    std::ostringstream os;
    os.precision(17);
    os << "electron field is not normalized: ||psi|| = " << nn;
    throw NormalizationError(os.str(), nn);
  }
}

}  // namespace

cplx inner(const ComplexField& f, const ComplexField& g) {
  require_same_grid(f, g);
  cplx s = pairwise_sum<cplx>(0, f.size(), [&](std::size_t n) { return std::conj(f[n]) * g[n]; });
  return s * f.g().dv();
}

double norm_sq(const ComplexField& f) {
  return f.g().dv() * psum(f.size(), [&](std::size_t n) { return std::norm(f[n]); });
}

double norm(const ComplexField& f) { return std::sqrt(norm_sq(f)); }

double dot(const Grid& g, const RVec& a, const RVec& b) {
  return g.dv() * psum(a.size(), [&](std::size_t n) { return a[n] * b[n]; });
}

ComplexField scaled(const ComplexField& f, cplx a) {
  CVec v(f.size());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = a * f[n];
  return ComplexField(f.grid(), std::move(v), f.role());
}

ComplexField combine(cplx a, const ComplexField& f, cplx b, const ComplexField& h, Role role) {
  require_same_grid(f, h);
  CVec v(f.size());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = a * f[n] + b * h[n];
  return ComplexField(f.grid(), std::move(v), role);
}

ComplexField conjugate(const ComplexField& f) {
  CVec v(f.size());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = std::conj(f[n]);
  return ComplexField(f.grid(), std::move(v), f.role());
}

ComplexField frac_laplacian_apply(const ComplexField& f, double p) {
  check_power(p);
  const Grid& g = f.g();
  CVec h = f.values();
  g.forward(h.data());
  scale_full(g, h, [p](double k2) { return multiplier(k2, p); });
  g.backward(h.data());
  return ComplexField(f.grid(), std::move(h), f.role());
}

RVec frac_laplacian_real(const Grid& g, const RVec& f, double p) {
  check_power(p);
  return real_multiplier(g, f, [p](double k2) { return multiplier(k2, p); });
}

ComplexField sigma_of(const ComplexField& psi) {
  require_role(psi, Role::electron, "sigma_of");
  RVec s = frac_laplacian_real(psi.g(), density(psi), -0.5);
  return ComplexField::from_real(psi.grid(), s, Role::auxiliary);
}

ComplexField potential_of(const ComplexField& phi) {
  require_role(phi, Role::phonon, "potential_of");
  RVec re = phi.real_part();
  RVec v = real_multiplier(phi.g(), re, [](double k2) { return 2.0 * multiplier(k2, -0.5); });
  return ComplexField::from_real(phi.grid(), v, Role::auxiliary);
}

ComplexField apply_h(const ComplexField& V, const ComplexField& psi) {
  require_same_grid(V, psi);
  double vmax = 0, imax = 0;
  for (std::size_t n = 0; n < V.size(); ++n) {
    vmax = std::max(vmax, std::abs(V[n].real()));
    imax = std::max(imax, std::abs(V[n].imag()));
  }
  if (imax > 1e-10 * (vmax + 1e-300)) throw Error("apply_h: potential is not real-valued");
  ComplexField lap = frac_laplacian_apply(psi, 1.0);
  CVec out(psi.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = lap[n] + V[n].real() * psi[n];
  return ComplexField(psi.grid(), std::move(out), psi.role());
}

double kinetic_energy(const ComplexField& psi) {
  const Grid& g = psi.g();
  CVec h = psi.values();
  g.forward(h.data());
  const int N = g.N();
  double s = psum(h.size(), [&](std::size_t n) {
    int l = int(n % N);
    std::size_t ij = n / N;
    return g.k2(int(ij / N), int(ij % N), l) * std::norm(h[n]);
  });
  return s * g.fourier_weight();
}

double coulomb_energy(const ComplexField& psi) {
  const Grid& g = psi.g();
  RVec rho = density(psi);
  CVec h(g.half_size());
  g.forward_r2c(rho.data(), h.data());
  double s = half_spectrum_sum(g, h, [](double k2) { return multiplier(k2, -1.0); });
  return s * g.fourier_weight();
}

EnergyBreakdown energy_G(const ComplexField& psi, const ComplexField& phi, double norm_tol) {
  require_same_grid(psi, phi);
  require_role(psi, Role::electron, "energy_G");
  if (phi.role() == Role::electron) throw RoleError("energy_G expects a phonon field, got electron");
  check_normalized(psi, norm_tol);
  EnergyBreakdown e;
  e.kinetic = kinetic_energy(psi);
  ComplexField V = potential_of(phi.with_role(Role::phonon));
  const double dv = psi.g().dv();
  e.interaction = dv * psum(psi.size(), [&](std::size_t n) { return V[n].real() * std::norm(psi[n]); });
  e.field = norm_sq(phi);
  e.total = e.kinetic + e.interaction + e.field;
  return e;
}

double energy_E(const ComplexField& psi, double norm_tol) {
  require_role(psi, Role::electron, "energy_E");
  check_normalized(psi, norm_tol);
  return kinetic_energy(psi) - coulomb_energy(psi);
}

ElectronObservables electron_observables(const ComplexField& psi) {
  const Grid& g = psi.g();
  const int N = g.N();
  const double dv = g.dv();
  ElectronObservables o;
  double n2 = psum(psi.size(), [&](std::size_t n) { return std::norm(psi[n]); }) * dv;
  o.norm = std::sqrt(n2);
  const double edge = 0.4 * g.L();
  for (int a = 0; a < 3; ++a) {
    o.X[a] = dv * psum(psi.size(), [&](std::size_t n) {
      int idx[3] = {int(n / (std::size_t(N) * N)), int((n / N) % N), int(n % N)};
      return g.x(idx[a]) * std::norm(psi[n]);
    });
  }
  o.boundary_mass = dv * psum(psi.size(), [&](std::size_t n) {
    int i = int(n / (std::size_t(N) * N)), j = int((n / N) % N), l = int(n % N);
    bool outer = std::abs(g.x(i)) >= edge || std::abs(g.x(j)) >= edge || std::abs(g.x(l)) >= edge;
    return outer ? std::norm(psi[n]) : 0.0;
  });
  o.boundary_warning = o.boundary_mass > kBoundaryMassThreshold * n2;

  CVec h = psi.values();
  g.forward(h.data());
  const double w = g.fourier_weight();
  for (int a = 0; a < 3; ++a) {
    o.V[a] = 2.0 * w * psum(h.size(), [&](std::size_t n) {
      int idx[3] = {int(n / (std::size_t(N) * N)), int((n / N) % N), int(n % N)};
      return g.kd(idx[a]) * std::norm(h[n]);
    });
  }
  o.kinetic = w * psum(h.size(), [&](std::size_t n) {
    return g.k2(int(n / (std::size_t(N) * N)), int((n / N) % N), int(n % N)) * std::norm(h[n]);
  });
  return o;
}

ComplexField apply_XP(const ComplexField& psiP, const ComplexField& f) {
  require_same_grid(psiP, f);
  CVec t(f.size());
  for (std::size_t n = 0; n < t.size(); ++n) t[n] = psiP[n] * f[n];
  ComplexField u = frac_laplacian_apply(ComplexField(f.grid(), std::move(t), Role::auxiliary), -1.0);
  CVec out(f.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = psiP[n] * u[n];
  return ComplexField(f.grid(), std::move(out), f.role());
}

RVec apply_XP_real(const Grid& g, const RVec& psiP, const RVec& f) {
  RVec t(f.size());
  for (std::size_t n = 0; n < t.size(); ++n) t[n] = psiP[n] * f[n];
  RVec u = frac_laplacian_real(g, t, -1.0);
  for (std::size_t n = 0; n < u.size(); ++n) u[n] *= psiP[n];
  return u;
}

ComplexField translate(const ComplexField& f, const Vec3& y) {
  const Grid& g = f.g();
  const int N = g.N();
  std::vector<cplx> ph[3];
  for (int a = 0; a < 3; ++a) {
    ph[a].resize(N);
    for (int i = 0; i < N; ++i) ph[a][i] = std::polar(1.0, -g.k(i) * y[a]);
  }
  CVec h = f.values();
  g.forward(h.data());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      cplx pij = ph[0][i] * ph[1][j];
      cplx* row = h.data() + g.index(i, j, 0);
      for (int l = 0; l < N; ++l) row[l] *= pij * ph[2][l];
    }
  g.backward(h.data());
  return ComplexField(f.grid(), std::move(h), f.role());
}

ComplexField derivative(const ComplexField& f, int axis) {
  const Grid& g = f.g();
  const int N = g.N();
  CVec h = f.values();
  g.forward(h.data());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      cplx* row = h.data() + g.index(i, j, 0);
      for (int l = 0; l < N; ++l) {
        int idx[3] = {i, j, l};
        row[l] *= cplx(0.0, g.kd(idx[axis]));
      }
    }
  g.backward(h.data());
  return ComplexField(f.grid(), std::move(h), f.role());
}

RVec derivative_real(const Grid& g, const RVec& f, int axis) {
  const int N = g.N(), nh = g.nh();
  CVec h(g.half_size());
  g.forward_r2c(f.data(), h.data());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      cplx* row = h.data() + (std::size_t(i) * N + j) * nh;
      for (int l = 0; l < nh; ++l) {
        int idx[3] = {i, j, l};
        double k = (l == N / 2 && axis == 2) ? 0.0 : g.kd(idx[axis]);
        row[l] *= cplx(0.0, k);
      }
    }
  RVec out(g.size());
  g.backward_c2r(h.data(), out.data());
  return out;
}

std::vector<double> coordinate_axis(const Grid& g, Coordinate kind, double band) {
  std::vector<double> x(g.N());
  const double half = 0.5 * g.L();
  const double x0 = (0.5 - band) * g.L();
  for (int i = 0; i < g.N(); ++i) {
    double xi = g.x(i);
    if (kind == Coordinate::smooth && std::abs(xi) > x0) {
      double t = (std::abs(xi) - x0) / (half - x0);
      xi *= 0.5 * (1.0 + std::cos(M_PI * t));
    }
    x[i] = xi;
  }
  return x;
}

ComplexField times_coordinate(const ComplexField& f, int axis, Coordinate kind) {
  const Grid& g = f.g();
  const int N = g.N();
  std::vector<double> x = coordinate_axis(g, kind);
  CVec out(f.size());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        int idx[3] = {i, j, l};
        std::size_t n = g.index(i, j, l);
        out[n] = x[idx[axis]] * f[n];
      }
  return ComplexField(f.grid(), std::move(out), f.role());
}

}  // namespace polaron
