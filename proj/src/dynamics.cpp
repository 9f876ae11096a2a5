#include "polaron/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "polaron/effective_mass.hpp"
#include "polaron/errors.hpp"

namespace polaron {

Integrator::Integrator(const PolaronState& s, double dt, AbsorbingMask mask)
    : grid_(s.psi.grid()), alpha_(s.alpha), dt_(dt), t_(s.t), psi_(s.psi.values()), phi_hat_(s.phi.values()),
      mask_(mask) {
  require_same_grid(s.psi, s.phi);
  if (!(alpha_ > 0)) throw Error("the integrator needs alpha > 0");
  if (!(dt_ > 0)) throw Error("the integrator needs dt > 0");
  const Grid& g = *grid_;
  const int N = g.N();
  g.forward(phi_hat_.data());
  kin_half_.resize(g.size());
  inv_k_.resize(g.size());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        std::size_t n = g.index(i, j, l);
        double k2 = g.k2(i, j, l);
        kin_half_[n] = std::polar(1.0, -0.5 * dt_ * k2);
        inv_k_[n] = g.is_zero_mode(i, j, l) ? 0.0 : 1.0 / std::sqrt(k2);
      }
  if (mask_.active) {
    mask_factor_.resize(g.size());
    const double inner = (1.0 - mask_.band) * 0.5 * g.L(), width = mask_.band * 0.5 * g.L();
    auto ramp = [&](double x) {
      double r = (std::abs(x) - inner) / width;
      return r <= 0 ? 0.0 : std::min(r, 1.0);
    };
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l) {
          double p = std::max({ramp(g.x(i)), ramp(g.x(j)), ramp(g.x(l))});
          mask_factor_[g.index(i, j, l)] = std::exp(-mask_.rate * dt_ * p * p);
        }
  }
  refresh_sigma();
}

void Integrator::refresh_sigma() {
  const Grid& g = *grid_;
  sigma_hat_.resize(g.size());
  for (std::size_t n = 0; n < psi_.size(); ++n) sigma_hat_[n] = std::norm(psi_[n]);
  g.forward(sigma_hat_.data());
  for (std::size_t n = 0; n < sigma_hat_.size(); ++n) sigma_hat_[n] *= inv_k_[n];
}

// phi <- exp(-i tau / alpha^2) (phi + sigma) - sigma, tau = dt / 2
void Integrator::phonon_half() {
  const cplx rot = std::polar(1.0, -0.5 * dt_ / (alpha_ * alpha_));
  for (std::size_t n = 0; n < phi_hat_.size(); ++n)
    phi_hat_[n] = rot * (phi_hat_[n] + sigma_hat_[n]) - sigma_hat_[n];
}

void Integrator::apply_mask() {
  const Grid& g = *grid_;
  CVec phi = phi_hat_, sig = sigma_hat_;
  g.backward(phi.data());
  g.backward(sig.data());
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const double s = sig[n].real();
    phi[n] = (phi[n] + s) * mask_factor_[n] - s;
  }
  g.forward(phi.data());
  phi_hat_ = std::move(phi);
}

void Integrator::advance(int steps) {
  const Grid& g = *grid_;
  const int N = g.N();
  CVec V(g.size());
  for (int s = 0; s < steps; ++s) {
    phonon_half();
    // V_k = (phi_k + conj phi_{-k}) / |k|
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l) {
          std::size_t n = g.index(i, j, l), m = g.index(g.mirror(i), g.mirror(j), g.mirror(l));
          V[n] = (phi_hat_[n] + std::conj(phi_hat_[m])) * inv_k_[n];
        }
    g.backward(V.data());
    g.forward(psi_.data());
    for (std::size_t n = 0; n < psi_.size(); ++n) psi_[n] *= kin_half_[n];
    g.backward(psi_.data());
    for (std::size_t n = 0; n < psi_.size(); ++n) psi_[n] *= std::polar(1.0, -dt_ * V[n].real());
    g.forward(psi_.data());
    for (std::size_t n = 0; n < psi_.size(); ++n) psi_[n] *= kin_half_[n];
    g.backward(psi_.data());
    refresh_sigma();
    phonon_half();
    if (mask_.active) apply_mask();
    t_ += dt_;
  }
}

PolaronState Integrator::state() const {
  CVec phi = phi_hat_;
  grid_->backward(phi.data());
  return PolaronState{.psi = ComplexField(grid_, psi_, Role::electron),
                      .phi = ComplexField(grid_, std::move(phi), Role::phonon),
                      .alpha = alpha_,
                      .t = t_};
}

PolaronState step(const PolaronState& s, double dt) {
  Integrator it(s, dt);
  it.advance(1);
  return it.state();
}

double default_dt(double alpha) { return std::min(1e-3, alpha * alpha / 50.0); }

namespace {

// ||phi + sigma_psi||^2 outside periodic balls of radius R around c
std::vector<double> radiation_profile(const PolaronState& s, const Vec3& c, const std::vector<double>& radii) {
  const Grid& g = s.psi.g();
  const int N = g.N();
  ComplexField sig = sigma_of(s.psi);
  std::vector<double> out(radii.size(), 0.0);
  auto wrap = [&](double d) { return d - g.L() * std::round(d / g.L()); };
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        std::size_t n = g.index(i, j, l);
        double dx = wrap(g.x(i) - c[0]), dy = wrap(g.x(j) - c[1]), dz = wrap(g.x(l) - c[2]);
        double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        double e = std::norm(s.phi[n] + sig[n].real());
        for (std::size_t a = 0; a < radii.size(); ++a)
          if (r > radii[a]) out[a] += e;
      }
  for (double& v : out) v *= g.dv();
  return out;
}

}  // namespace

ObservableSeries integrate(const PolaronState& s, double T, double dt, int cadence, const Observers& obs,
                           const PekarSolution* sol, AbsorbingMask mask, PolaronState* final_state) {
  if (!(T > 0)) throw Error("integrate: T must be positive");
  if (cadence < 1) throw Error("integrate: cadence must be at least 1");
  const long steps = std::lround(T / dt);
  ObservableSeries series;
  series.radii = obs.radii;
  series.mask_active = mask.active;
  Integrator it(s, dt, mask);
  std::optional<Vec3> guess;
  auto sample = [&](const PolaronState& st) {
    Record r;
    r.t = st.t;
    if (obs.energy) r.G = energy_G(st.psi, st.phi);
    ElectronObservables eo = electron_observables(st.psi);
    r.norm = eo.norm;
    if (obs.electron) {
      r.X_el = eo.X;
      r.V_el = eo.V;
      r.boundary_warning = eo.boundary_warning;
    }
    Vec3 centre = eo.X;
    if (obs.phonon && sol) {
      try {
        PhononProjection pr = project_phonon(st.phi, *sol, guess);
        r.z = pr.z;
        r.V_ph = phonon_velocity(st.psi, st.phi, st.alpha, pr, *sol);
        r.dist_phonon = pr.distance;
        r.phonon_ok = true;
        guess = pr.z;
        centre = pr.z;
      } catch (const ProjectionRefused&) {
        ++series.refused;
      } catch (const ConvergenceError&) {
        ++series.refused;
      }
    }
    if (!obs.radii.empty()) r.radiation = radiation_profile(st, centre, obs.radii);
    series.records.push_back(std::move(r));
  };
  sample(it.state());
  for (long k = 1; k <= steps; ++k) {
    it.advance(1);
    if (k % cadence == 0 || k == steps) sample(it.state());
  }
  if (final_state) *final_state = it.state();
  return series;
}

void write_series_csv(const ObservableSeries& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << "t,G,kinetic,interaction,field,norm,X_el_1,X_el_2,X_el_3,V_el_1,V_el_2,V_el_3,boundary_warning,"
        "phonon_ok,z_1,z_2,z_3,V_ph_1,V_ph_2,V_ph_3,dist_phonon";
  for (double R : s.radii) {
    char b[64];
    std::snprintf(b, sizeof b, ",radiation_outside_%g", R);
    os << b;
  }
  os << ",mask_active\n";
  char buf[64];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, ",%.17g", x);
    os << buf;
  };
  for (const Record& r : s.records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.t);
    os << buf;
    for (double x : {r.G.total, r.G.kinetic, r.G.interaction, r.G.field, r.norm}) put(x);
    for (double x : r.X_el) put(x);
    for (double x : r.V_el) put(x);
    os << ',' << int(r.boundary_warning) << ',' << int(r.phonon_ok);
    const double nan = std::nan("");
    for (double x : r.z) put(r.phonon_ok ? x : nan);
    for (double x : r.V_ph) put(r.phonon_ok ? x : nan);
    put(r.phonon_ok ? r.dist_phonon : nan);
    for (double x : r.radiation) put(x);
    os << ',' << int(s.mask_active) << '\n';
  }
}

ObservableSeries boost_experiment(double v, double alpha, double T, double dt, const PekarSolution& sol,
                                  const BoostOptions& opt) {
  PolaronState st = trial_state(v, alpha, sol, Variant::standard);
  Observers obs;
  obs.radii = opt.radii;
  return integrate(st, T, dt, opt.cadence, obs, &sol, opt.mask);
}

}  // namespace polaron
