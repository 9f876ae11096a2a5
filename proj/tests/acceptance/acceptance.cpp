// One line per criterion: "criterion N PASS|FAIL: detail".
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "polaron/dynamics.hpp"
#include "polaron/effective_mass.hpp"
#include "polaron/hessian.hpp"
#include "polaron/minimizer.hpp"
#include "polaron/pekar.hpp"
#include "polaron/projection.hpp"
#include "polaron/radial.hpp"

using namespace polaron;

namespace {

struct Outcome {
  int id;
  bool pass;
  bool gating;
  std::string detail;
};

std::vector<Outcome> outcomes;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int id, bool pass, const std::string& detail, bool gating = true) {
  outcomes.push_back({id, pass, gating, detail});
  std::printf("criterion %d %s: %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string f(const char* fmt, auto... args) {
  char b[1024];
  std::snprintf(b, sizeof b, fmt, args...);
  return b;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

template <class F>
void guarded(int id, F&& body, bool gating = true) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("raised: ") + e.what(), gating);
  }
}

double state_distance(const PolaronState& a, const PolaronState& b) {
  return std::sqrt(norm_sq(combine(1.0, a.psi, -1.0, b.psi, Role::auxiliary)) +
                   norm_sq(combine(1.0, a.phi, -1.0, b.phi, Role::auxiliary)));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();

  auto t0 = std::chrono::steady_clock::now();
  const RadialSolution rad = solve_radial({});
  const double t_radial = seconds_since(t0);
  const PekarScalars& S = rad.scalars;
  const double e = S.e_P;

  // 1
  {
    const double a = std::abs(e + S.grad_psi_sq) / std::abs(e), b = std::abs(S.mu_P - 3 * e) / std::abs(e),
                 c = std::abs(S.phi_sq + 2 * e) / std::abs(e);
    report(1, a < 1e-5 && b < 1e-5 && c < 1e-5 && t_radial < 5,
           f("kinetic %.2e, mu %.2e, field %.2e (tol 1e-5), radial solve %.2fs", a, b, c, t_radial));
  }

  GridCertificate cert;
  const PekarSolution sol = certify_grid(rad, 640, 32, 1e-6, 3, cert);
  std::printf("# default grid L=%g N=%d certified=%d (last relative change %.2e)\n", sol.grid->L(), sol.grid->N(),
              int(cert.certified), cert.stages.back().relative_change);

  // 2
  {
    const double r = rel(S.grad_phi_sq, S.psi4);
    const double g = rel(sol.grid_scalars.grad_phi_sq, sol.grid_scalars.psi4);
    report(2, r < 1e-6 && g < 1e-4 && cert.certified,
           f("radial %.2e (tol 1e-6), grid L=%g N=%d %.2e (tol 1e-4)", r, sol.grid->L(), sol.grid->N(), g));
  }

  // 3
  guarded(3, [&] {
    SandwichReport sw = sandwich_identities(sol);
    report(3, sw.inverse_max_dev < 1e-3 && sw.forward_max_dev < 1e-3 && sw.residual_sawtooth < 1e-3,
           f("max |<d_i psi, -x_j psi/2> - delta/4| %.2e, max |<d_i psi, H_P d_j psi> - delta |d_j phi|^2| %.2e, "
             "residual %.2e (tol 1e-3)",
             sw.inverse_max_dev, sw.forward_max_dev, sw.residual_sawtooth));
  });

  // 4
  guarded(4, [&] {
    const PekarSolution h1 = lift(rad, make_grid(1280, 64));
    const PekarSolution h2 = lift(rad, make_grid(1280, 80));
    HessianSpectrum a = hessian_spectrum(h1, 4), b = hessian_spectrum(h2, 4);
    double k = 0;
    for (int i = 0; i < 3; ++i) k = std::max({k, std::abs(a.values[i]), std::abs(b.values[i])});
    const double change = rel(b.values[3], a.values[3]);
    report(4, k < 1e-3 && a.values[3] > 0 && b.values[3] > 0 && change < 0.1,
           f("kernel max |lambda| %.2e, lambda_4 %.6e (N=64) %.6e (N=80), change %.2e", k, a.values[3], b.values[3],
             change));
  });

  const std::vector<double> vs = default_velocities(sol);
  std::vector<MassReport> masses;
  guarded(5, [&] {
    masses = mass_report({0.0, 1.0, 2.0, 4.0}, sol, vs);
    double worst = 0;
    std::string d;
    for (const MassReport& m : masses) {
      if (m.alpha > 2) continue;
      worst = std::max(worst, m.rel_err_std);
      d += f("alpha=%g fit %.8f pred %.8f; ", m.alpha, m.fit_std.mass, m.m_pred);
    }
    const double zero = std::abs(masses[0].fit_std.mass - 0.5) / 0.5;
    report(5, worst < 0.005 && zero < 0.005 && masses[0].m_pred == 0.5,
           d + f("max rel err %.2e, alpha=0 vs 1/2 %.2e (tol 5e-3)", worst, zero));
  });

  // 6
  guarded(6, [&] {
    if (masses.empty()) throw std::runtime_error("mass report unavailable");
    double worst = 0;
    bool below = true, increasing = true;
    double prev = -1;
    std::string d;
    for (const MassReport& m : masses) {
      worst = std::max(worst, m.rel_err_alt);
      below = below && m.m_alt_pred < m.m_pred && m.fit_alt.mass < m.fit_std.mass;
      const double ratio = m.m_alt_pred / m.m_pred;
      if (m.alpha >= 1) {
        increasing = increasing && ratio > prev;
        prev = ratio;
      }
      d += f("alpha=%g ratio %.9f; ", m.alpha, ratio);
    }
    report(6, worst < 0.005 && below && increasing,
           d + f("max rel err %.2e (tol 5e-3), m_alt < m: %s, increasing: %s", worst, below ? "yes" : "no",
                 increasing ? "yes" : "no"));
  });

  // 7
  guarded(7, [&] {
    double res = 0, gap = 0;
    for (double a : {0.0, 1.0, 2.0}) {
      TravelingWave t = traveling_wave_linearization(a, sol);
      res = std::max(res, t.im_xi_residual);
      gap = std::max(gap, std::abs(t.coefficient - t.theorem_coefficient));
    }
    report(7, res < 1e-3 && gap < 1e-10,
           f("|H_P Im xi - d_1 psi_P| %.2e (tol 1e-3), coefficient gap %.2e (tol 1e-10)", res, gap));
  });

  // 8
  guarded(8, [&] {
    double el = 0, ph = 0;
    bool refused = false;
    for (double a : {0.0, 1.0, 2.0, 4.0})
      for (double v : vs) {
        AdmissibilityReport r = admissibility_check(trial_state(v, a, sol, Variant::standard), v, sol, std::abs(e));
        el = std::max(el, r.el_residual_max);
        ph = std::max(ph, r.ph_residual_max);
        refused = refused || r.phonon_refused;
      }
    report(8, el < 1e-8 && ph < 1e-8 && !refused, f("max V_el residual %.2e, max V_ph residual %.2e (tol 1e-8)", el, ph));
  });

  const PekarSolution coarse = lift(rad, make_grid(640, 32));

  // 9
  guarded(9, [&] {
    PolaronState s0{.psi = coarse.psi, .phi = coarse.phi, .alpha = 1.0, .t = 0};
    Observers obs;
    obs.phonon = false;
    PolaronState fin = s0;
    ObservableSeries ser = integrate(s0, 10.0, 1e-3, 100, obs, nullptr, {}, &fin);
    const double G0 = ser.records.front().G.total;
    double drift = 0, ndrift = 0;
    for (const Record& r : ser.records) {
      drift = std::max(drift, std::abs(r.G.total - G0) / std::abs(G0));
      ndrift = std::max(ndrift, std::abs(r.norm - 1.0));
    }
    const double phase = std::abs(std::remainder(std::arg(inner(coarse.psi, fin.psi)) + coarse.mu_P * fin.t, 2 * M_PI));

    // convergence order on a perturbed moving state
    RVec eta = smooth_random_fields(coarse, 1, 3)[0];
    const double en = std::sqrt(dot(*coarse.grid, eta, eta));
    PolaronState tr = trial_state(0.25 / (2 * std::sqrt(coarse.grid_scalars.q)), 1.0, coarse, Variant::standard);
    CVec p = tr.psi.values();
    for (std::size_t n = 0; n < p.size(); ++n) p[n] += 0.3 * eta[n] / en;
    ComplexField pp(coarse.grid, std::move(p), Role::electron);
    PolaronState ps{.psi = scaled(pp, 1.0 / norm(pp)), .phi = tr.phi, .alpha = 1.0, .t = 0};
    std::vector<PolaronState> ends;
    for (double dt : {0.2, 0.1, 0.05}) {
      Integrator it(ps, dt);
      it.advance(int(std::lround(4.0 / dt)));
      ends.push_back(it.state());
    }
    const double order = std::log2(state_distance(ends[0], ends[1]) / state_distance(ends[1], ends[2]));
    report(9, ndrift < 1e-12 && drift < 1e-8 && order >= 1.8 && order <= 2.2 && phase < 1e-6,
           f("norm drift %.2e, G drift %.2e (tol 1e-8), order %.3f (range [1.8, 2.2]), phase error %.2e (tol 1e-6)",
             ndrift, drift, order, phase));
  });

  // 10
  guarded(10, [&] {
    double zerr = 0;
    for (Vec3 y : {Vec3{0, 0, 0}, Vec3{1.3, -0.7, 0.2}, Vec3{137.3, -250.7, 40.2}}) {
      PhononProjection pr = project_phonon(translate(coarse.phi, y), coarse);
      for (int a = 0; a < 3; ++a) zerr = std::max(zerr, std::abs(pr.z[a] - y[a]));
    }
    PhononProjection p0 = project_phonon(coarse.phi, coarse);
    const double gp = coarse.grid_scalars.grad_phi_sq;
    double dev9 = 0, dev3 = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        dev9 = std::max(dev9, std::abs(p0.A(i, j) - (i == j ? gp / 9 : 0.0)) / (gp / 9));
        dev3 = std::max(dev3, std::abs(p0.A(i, j) - (i == j ? gp / 3 : 0.0)) / (gp / 3));
      }

    const double v = 0.25 / (2 * std::sqrt(coarse.grid_scalars.q));
    Observers obs;
    obs.energy = false;
    ObservableSeries ser =
        integrate(trial_state(v, 1.0, coarse, Variant::standard), 2.0, 0.01, 10, obs, &coarse);
    const auto& rec = ser.records;
    double fd_err = 0;
    for (std::size_t k = 1; k + 1 < rec.size(); ++k) {
      const double fd = (rec[k + 1].z[0] - rec[k - 1].z[0]) / (rec[k + 1].t - rec[k - 1].t);
      fd_err = std::max(fd_err, std::abs(fd - rec[k].V_ph[0]) / std::abs(rec[k].V_ph[0]));
    }
    report(10, zerr < 1e-8 && dev9 < 1e-6 && fd_err < 1e-3 && ser.refused == 0,
           f("z recovery %.2e (tol 1e-8); Jacobian vs |grad phi_P|^2/9 I %.2e (tol 1e-6), vs |grad phi_P|^2/3 I "
             "%.2e; V_ph vs finite-difference z(t) %.2e (tol 1e-3)",
             zerr, dev9, dev3, fd_err));
  });

  // 11
  guarded(11, [&] {
    auto tm = std::chrono::steady_clock::now();
    const std::vector<double> mv = default_velocities(coarse);
    std::vector<double> E;
    double worst = -1;
    for (double v : mv) {
      MinimizeResult r = constrained_minimize_Ev(v, 1.0, coarse);
      E.push_back(r.energy);
      worst = std::max(worst, r.energy - r.seed_energy);
    }
    MassFit fit = fit_mass(mv, E, coarse.e_P);
    const double target = 0.25 + coarse.radial.d1_phi_sq;
    const double err = rel(0.5 * fit.mass, target);
    const double tmin = seconds_since(tm);
    report(11, worst <= 1e-10 && err < 0.05 && tmin < 600,
           f("max E - trial %.2e (tol 1e-10), coefficient %.8f target %.8f rel %.2e (tol 0.05), %.1fs", worst,
             0.5 * fit.mass, target, err, tmin));
  });

  // 12
  guarded(
      12,
      [&] {
        const double vmax = 1.0 / (2 * std::sqrt(coarse.grid_scalars.q));
        BoostOptions bo;
        bo.cadence = 100;
        bo.radii = {100, 200};
        ObservableSeries ctrl = boost_experiment(0.0, 1.0, 20.0, 0.01, coarse, bo);
        ObservableSeries moving = boost_experiment(0.25 * vmax, 1.0, 20.0, 0.01, coarse, bo);
        bool monotone = true;
        double vctrl = 0;
        for (const ObservableSeries* s : {&ctrl, &moving})
          for (std::size_t k = 1; k < s->records.size(); ++k) monotone = monotone && s->records[k].t > s->records[k - 1].t;
        for (const Record& r : ctrl.records)
          for (int a = 0; a < 3; ++a) vctrl = std::max({vctrl, std::abs(r.V_el[a]), std::abs(r.V_ph[a])});
        const Record& a = moving.records.front();
        const Record& b = moving.records.back();
        report(12, monotone && vctrl < 1e-8 && ctrl.refused == 0,
               f("monotone %s, control max |V| %.2e (tol 1e-8); exploratory v=%.4e: V_el %.6e -> %.6e, V_ph %.6e -> "
                 "%.6e over T=20, field outside R=100 %.3e",
                 monotone ? "yes" : "no", vctrl, 0.25 * vmax, a.V_el[0], b.V_el[0], a.V_ph[0], b.V_ph[0],
                 b.radiation[0]),
               false);
      },
      false);

  int failed = 0;
  for (const Outcome& o : outcomes) failed += (!o.pass && o.gating);
  std::printf("# %zu criteria, %d gating failures, %.1fs\n", outcomes.size(), failed, seconds_since(start));
  return failed == 0 ? 0 : 1;
}
