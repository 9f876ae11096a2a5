#include "polaron/harness.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "polaron/dynamics.hpp"
#include "polaron/effective_mass.hpp"
#include "polaron/errors.hpp"
#include "polaron/field_io.hpp"
#include "polaron/hessian.hpp"
#include "polaron/minimizer.hpp"
#include "polaron/pekar.hpp"
#include "polaron/projection.hpp"
#include "polaron/radial.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace polaron {

namespace {

// Runs fn(0..n-1) on up to fft_threads() workers. Tasks must not plan FFTs.
template <class F>
void parallel_for(int n, const F& fn) {
  const int workers = std::min(n, std::max(1, fft_threads()));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string fmt(double x) {
  char b[64];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

std::string tag(double x) {
  char b[64];
  std::snprintf(b, sizeof b, "%g", x);
  return b;
}

class Run {
 public:
  Run(const RunConfig& cfg, std::string command, fs::path dir)
      : cfg_(cfg), command_(std::move(command)), dir_(std::move(dir)), hash_(cfg.hash()) {
    fs::create_directories(dir_);
    fs::remove(dir_ / "error.json");
  }

  std::string path(const std::string& name) {
    outputs_.push_back(name);
    return (dir_ / name).string();
  }
  const fs::path& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }

  void check(const std::string& name, double value, double threshold, bool passed) {
    if (!cfg_.flag("run.checks")) return;
    checks_.push_back({{"name", name}, {"value", value}, {"threshold", threshold}, {"passed", passed}});
    if (!passed) failed_ = true;
    std::fprintf(stderr, "[%s] %s: %.6g (threshold %.3g)\n", passed ? "pass" : "FAIL", name.c_str(), value,
                 threshold);
  }
  // value below threshold passes
  void below(const std::string& name, double value, double threshold) {
    check(name, value, threshold, std::isfinite(value) && value < threshold);
  }

  void write_json(const std::string& name, json j) {
    j["config_hash"] = hash_;
    std::ofstream os(path(name));
    os << j.dump(2) << '\n';
    if (!os) throw Error("cannot write " + name);
  }

  void snapshot(const ComplexField& f, const std::string& base) {
    std::string b = (dir_ / base).string();
    write_snapshot(f, b);
    outputs_.push_back(base + ".bin");
    outputs_.push_back(base + ".json");
    std::ifstream is(b + ".json");
    json j = json::parse(is);
    is.close();
    j["config_hash"] = hash_;
    std::ofstream(b + ".json") << j.dump(2) << '\n';
  }

  void set_summary(const std::string& key, json v) { summary_[key] = std::move(v); }

  int finish(const std::string& status_override = "") {
    const std::string status = !status_override.empty() ? status_override : failed_ ? "failed" : "passed";
    json m = {{"tool", "polaron_lab"},
              {"command", command_},
              {"config", cfg_.to_json()},
              {"config_hash", hash_},
              {"threads", fft_threads()},
              {"fourier_convention", kFourierConvention},
              {"outputs", outputs_},
              {"checks", checks_},
              {"summary", summary_},
              {"status", status}};
    std::ofstream os(dir_ / "manifest.json");
    os << m.dump(2) << '\n';
    if (!os) throw Error("cannot write manifest");
    return status == "passed" ? 0 : 1;
  }

  bool failed() const { return failed_; }

 private:
  const RunConfig& cfg_;
  std::string command_;
  fs::path dir_;
  std::string hash_;
  std::vector<std::string> outputs_;
  json checks_ = json::array();
  json summary_ = json::object();
  bool failed_ = false;
};

// solutions shared between commands of one invocation
class Lab {
 public:
  explicit Lab(const RunConfig& cfg) : cfg_(cfg) {}

  RadialOptions radial_options(double coupling) const {
    RadialOptions o;
    o.dr = cfg_.real("radial.dr");
    o.R = cfg_.real("radial.R");
    o.tol = cfg_.real("radial.tol");
    o.density_tol = cfg_.real("radial.density_tol");
    o.max_iter = cfg_.integer("radial.max_iter");
    o.mixing = cfg_.real("radial.mixing");
    o.coupling = coupling;
    return o;
  }

  const RadialSolution& radial() {
    if (!rad_) rad_ = solve_radial(radial_options(1.0));
    return *rad_;
  }

  LiftOptions lift_options() const {
    LiftOptions o;
    o.polish = cfg_.flag("pekar.polish");
    return o;
  }

  // the default-grid solution: certified when grid.L = auto
  const PekarSolution& main() {
    if (!main_) {
      if (cfg_.is_auto("grid.L")) {
        main_ = std::make_shared<PekarSolution>(certify_grid(radial(), cfg_.real("grid.start_L"),
                                                             cfg_.integer("grid.start_N"),
                                                             cfg_.real("grid.certify_tol"),
                                                             cfg_.integer("grid.max_doublings"), cert_,
                                                             lift_options()));
      } else {
        main_ = std::make_shared<PekarSolution>(
            lift(radial(), make_grid(cfg_.real("grid.L"), cfg_.integer("grid.N")), lift_options()));
      }
    }
    return *main_;
  }

  const PekarSolution& at(double L, int N) {
    auto key = std::make_pair(L, N);
    auto it = sols_.find(key);
    if (it != sols_.end()) return *it->second;
    if (main_ && main_->grid->L() == L && main_->grid->N() == N) return *main_;
    auto s = std::make_shared<PekarSolution>(lift(radial(), make_grid(L, N), lift_options()));
    sols_[key] = s;
    return *s;
  }

  const GridCertificate& certificate() const { return cert_; }

 private:
  const RunConfig& cfg_;
  std::optional<RadialSolution> rad_;
  std::shared_ptr<PekarSolution> main_;
  std::map<std::pair<double, int>, std::shared_ptr<PekarSolution>> sols_;
  GridCertificate cert_;
};

void require_unit_coupling(const RunConfig& cfg) {
  if (cfg.real("radial.coupling_scale") != 1.0)
    throw ConfigError("key 'radial.coupling_scale' is only used by solve-pekar", "radial.coupling_scale");
}

json scalars_json(const PekarScalars& s) {
  return {{"e_P", s.e_P},
          {"mu_P", s.mu_P},
          {"grad_psi_sq", s.grad_psi_sq},
          {"psi4", s.psi4},
          {"phi_sq", s.phi_sq},
          {"grad_phi_sq", s.grad_phi_sq},
          {"d1_psi_sq", s.d1_psi_sq},
          {"d1_phi_sq", s.d1_phi_sq},
          {"q", s.q},
          {"second_moment", s.second_moment}};
}

json grid_json(const Grid& g) { return {{"L", g.L()}, {"N", g.N()}, {"dx", g.dx()}}; }

json matrix_json(const Eigen::Matrix3d& m) {
  json out = json::array();
  for (int i = 0; i < 3; ++i) out.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

void solve_pekar_into(Run& run, Lab& lab, const RunConfig& cfg) {
  const double coupling = cfg.real("radial.coupling_scale");
  RadialSolution rad = coupling == 1.0 ? lab.radial() : solve_radial(lab.radial_options(coupling));
  write_radial_csv(rad, run.path("radial.csv"));
  const PekarScalars& S = rad.scalars;
  const double e = S.e_P;
  json rj = {{"coupling_scale", coupling},
             {"dr", rad.dr},
             {"R", rad.R},
             {"iterations", rad.iterations},
             {"el_residual", rad.el_residual},
             {"decay_ratio", rad.decay_ratio},
             {"half_width", rad.half_width},
             {"k_max", rad.k_max},
             {"grad_phi_tail", rad.grad_phi_tail},
             {"scalars", scalars_json(S)},
             {"energy_log", rad.energy_log}};
  run.write_json("radial.json", rj);

  json report;
  report["e_P"] = e;
  report["mu_P"] = S.mu_P;
  report["mu_over_e"] = S.mu_P / e;
  json virial = {{"kinetic", std::abs(e + S.grad_psi_sq) / std::abs(e)},
                 {"mu", std::abs(S.mu_P - 3 * e) / std::abs(e)},
                 {"field", std::abs(S.phi_sq + 2 * e) / std::abs(e)}};
  report["virial"] = virial;
  run.below("virial e_P = -|grad psi|^2", virial["kinetic"], 1e-5);
  run.below("virial mu_P = 3 e_P", virial["mu"], 1e-5);
  run.below("virial |phi|^2 = -2 e_P", virial["field"], 1e-5);
  const double ident_r = rel(S.grad_phi_sq, coupling * S.psi4);
  report["identity_radial"] = ident_r;
  run.below("|grad phi_P|^2 = |psi_P|_4^4 radial", ident_r, 1e-6);

  if (coupling != 1.0) {
    const RadialSolution& unit = lab.radial();
    const double ratio = e / unit.e_P;
    report["e_P_unit"] = unit.e_P;
    report["scaling_ratio"] = ratio;
    report["scaling_target"] = coupling * coupling;
    run.below("e_P scaling with coupling", std::abs(ratio - coupling * coupling) / (coupling * coupling), 1e-6);
    report["grid"] = nullptr;
    run.write_json("pekar.json", report);
    return;
  }

  const PekarSolution& sol = lab.main();
  const GridCertificate& cert = lab.certificate();
  json stages = json::array();
  for (const GridStage& s : cert.stages)
    stages.push_back({{"L", s.L},
                      {"N", s.N},
                      {"e_P", s.e_P},
                      {"e_P_box_corrected", s.e_P_box_corrected},
                      {"relative_change", s.relative_change}});
  report["grid"] = grid_json(*sol.grid);
  report["grid_certificate"] = {{"stages", stages}, {"certified", cert.certified}, {"tolerance", cert.tolerance}};
  if (cfg.is_auto("grid.L")) run.check("grid certificate", cert.stages.back().relative_change, cert.tolerance,
                                       cert.certified);
  const PekarScalars& G = sol.grid_scalars;
  report["grid_scalars"] = scalars_json(G);
  report["e_P_grid"] = sol.e_P;
  report["mu_P_grid"] = sol.mu_P;
  report["e_P_box_corrected"] = sol.e_P_box_corrected;
  report["el_residual_grid"] = sol.el_residual;
  report["polish_iterations"] = sol.polish_iterations;
  const double ident_g = rel(G.grad_phi_sq, G.psi4);
  report["identity_grid"] = ident_g;
  run.below("|grad phi_P|^2 = |psi_P|_4^4 grid", ident_g, 1e-4);

  SandwichReport sw = sandwich_identities(sol);
  report["sandwich"] = {{"inverse", matrix_json(sw.inverse)},
                        {"forward", matrix_json(sw.forward)},
                        {"inverse_target", sw.inverse_target},
                        {"forward_target", sw.forward_target_radial},
                        {"inverse_max_dev", sw.inverse_max_dev},
                        {"forward_max_dev", sw.forward_max_dev},
                        {"residual", sw.residual_sawtooth},
                        {"residual_tapered", sw.residual_smooth}};
  run.below("sandwich <d_i psi, -x_j psi/2>", sw.inverse_max_dev, 1e-3);
  run.below("sandwich <d_i psi, H_P d_j psi>", sw.forward_max_dev, 1e-3);
  run.below("|H_P(-x_1 psi/2) - d_1 psi|", sw.residual_sawtooth, 1e-3);

  const int count = cfg.integer("pekar.hessian_count");
  if (count > 0) {
    HessianOptions ho;
    ho.tol = cfg.real("pekar.hessian_tol");
    ho.seed = std::uint64_t(cfg.integer("run.seed"));
    const double hL = cfg.real("pekar.hessian_L");
    const PekarSolution& hs = lab.at(hL, cfg.integer("pekar.hessian_N"));
    HessianSpectrum sp = hessian_spectrum(hs, count, ho);
    json hj = {{"grid", grid_json(*hs.grid)},
               {"values", sp.values},
               {"residuals", sp.residuals},
               {"iterations", sp.iterations},
               {"rayleigh_d1", sp.rayleigh_d1},
               {"kernel_residual_d1", sp.kernel_residual_d1}};
    double kmax = 0;
    for (int i = 0; i < std::min(3, count); ++i) kmax = std::max(kmax, std::abs(sp.values[i]));
    run.below("Hessian kernel |lambda_1..3|", kmax, 1e-3);
    if (count >= 4) {
      run.check("Hessian lambda_4 > 0", sp.values[3], 0.0, sp.values[3] > 0);
      const int rN = cfg.integer("pekar.hessian_refine_N");
      if (rN > 0) {
        HessianSpectrum sr = hessian_spectrum(lab.at(hL, rN), count, ho);
        const double change = rel(sr.values[3], sp.values[3]);
        hj["refined"] = {{"N", rN}, {"values", sr.values}, {"lambda_4_relative_change", change}};
        run.below("Hessian lambda_4 refinement change", change, 0.1);
      }
    }
    report["hessian"] = hj;
  }
  if (cfg.flag("pekar.snapshots")) {
    run.snapshot(sol.psi, "psi_P");
    run.snapshot(sol.phi, "phi_P");
  }
  run.write_json("pekar.json", report);
  run.set_summary("e_P", e);
  run.set_summary("mu_P", S.mu_P);
}

std::vector<double> velocities(const RunConfig& cfg, const PekarSolution& sol) {
  if (cfg.is_auto("mass.v")) return default_velocities(sol);
  std::vector<double> v = cfg.reals("mass.v");
  if (v.size() < 3) throw ConfigError("key 'mass.v' needs at least three velocities", "mass.v");
  return v;
}

void effective_mass_into(Run& run, Lab& lab, const RunConfig& cfg) {
  require_unit_coupling(cfg);
  const std::vector<double> alphas = cfg.reals("mass.alpha");
  if (alphas.empty()) throw ConfigError("key 'mass.alpha' is empty", "mass.alpha");
  const PekarSolution& sol = lab.main();
  const std::vector<double> vs = velocities(cfg, sol);
  const int na = int(alphas.size()), nv = int(vs.size());

  std::vector<MassReport> reports(na);
  std::vector<AdmissibilityReport> adm(std::size_t(na) * nv);
  parallel_for(na, [&](int a) {
    reports[a] = mass_report({alphas[a]}, sol, vs).front();
    for (int i = 0; i < nv; ++i)
      adm[std::size_t(a) * nv + i] =
          admissibility_check(trial_state(vs[i], alphas[a], sol, Variant::standard), vs[i], sol, std::abs(sol.e_P));
  });

  {
    std::ofstream os(run.path("mass_report.csv"));
    os << "alpha,m_pred,m_fit_std,rel_err_std,quartic_std,route_gap_std,m_alt_pred,m_fit_alt,rel_err_alt,"
          "quartic_alt,route_gap_alt,kappa_alt,ratio_alt_over_std,tw_coefficient\n";
    for (const MassReport& m : reports)
      os << fmt(m.alpha) << ',' << fmt(m.m_pred) << ',' << fmt(m.fit_std.mass) << ',' << fmt(m.rel_err_std) << ','
         << fmt(m.fit_std.quartic) << ',' << fmt(m.route_gap_std) << ',' << fmt(m.m_alt_pred) << ','
         << fmt(m.fit_alt.mass) << ',' << fmt(m.rel_err_alt) << ',' << fmt(m.fit_alt.quartic) << ','
         << fmt(m.route_gap_alt) << ',' << fmt(m.kappa_alt) << ',' << fmt(m.m_alt_pred / m.m_pred) << ','
         << fmt(m.tw_coefficient) << '\n';
  }
  {
    std::ofstream os(run.path("mass_fits.csv"));
    os << "alpha,variant,v,excess\n";
    for (const MassReport& m : reports)
      for (const MassFit* f : {&m.fit_std, &m.fit_alt})
        for (std::size_t i = 0; i < f->v.size(); ++i)
          os << fmt(m.alpha) << ',' << (f == &m.fit_std ? "standard" : "alternative") << ',' << fmt(f->v[i]) << ','
             << fmt(f->excess[i]) << '\n';
  }
  {
    std::ofstream os(run.path("admissibility.csv"));
    os << "alpha,v,norm_error,V_el_1,V_el_2,V_el_3,V_ph_1,V_ph_2,V_ph_3,el_residual_max,ph_residual_max,excess,"
          "energy_ok,phonon_refused\n";
    for (int a = 0; a < na; ++a)
      for (int i = 0; i < nv; ++i) {
        const AdmissibilityReport& r = adm[std::size_t(a) * nv + i];
        os << fmt(alphas[a]) << ',' << fmt(vs[i]) << ',' << fmt(r.norm_error);
        for (double x : r.V_el) os << ',' << fmt(x);
        for (double x : r.V_ph) os << ',' << fmt(x);
        os << ',' << fmt(r.el_residual_max) << ',' << fmt(r.ph_residual_max) << ',' << fmt(r.excess) << ','
           << int(r.energy_ok) << ',' << int(r.phonon_refused) << '\n';
      }
  }

  json rows = json::array();
  const double tol = cfg.real("mass.admissibility_tol");
  double adm_max = 0;
  for (const AdmissibilityReport& r : adm) adm_max = std::max({adm_max, r.el_residual_max, r.ph_residual_max});
  run.below("admissibility V_el, V_ph residual", adm_max, tol);
  std::vector<std::pair<double, double>> ratios;
  for (const MassReport& m : reports) {
    rows.push_back({{"alpha", m.alpha},
                    {"m_pred", m.m_pred},
                    {"m_fit_std", m.fit_std.mass},
                    {"rel_err_std", m.rel_err_std},
                    {"m_alt_pred", m.m_alt_pred},
                    {"m_fit_alt", m.fit_alt.mass},
                    {"rel_err_alt", m.rel_err_alt},
                    {"route_gap_std", m.route_gap_std},
                    {"route_gap_alt", m.route_gap_alt},
                    {"kappa_alt", m.kappa_alt}});
    const std::string a = tag(m.alpha);
    run.below("standard mass fit alpha=" + a, m.rel_err_std, 0.005);
    run.below("alternative mass fit alpha=" + a, m.rel_err_alt, 0.005);
    if (m.alpha == 0) run.check("m_pred = 1/2 at alpha=0", m.m_pred, 0.5, m.m_pred == 0.5);
    if (m.alpha > 0) {
      run.check("m_alt < m alpha=" + a, m.m_alt_pred / m.m_pred, 1.0, m.m_alt_pred < m.m_pred);
      ratios.emplace_back(m.alpha, m.m_alt_pred / m.m_pred);
    }
  }
  std::sort(ratios.begin(), ratios.end());
  bool increasing = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) increasing = increasing && ratios[i].second > ratios[i - 1].second;
  if (ratios.size() > 1) run.check("m_alt/m increases with alpha", ratios.back().second, 1.0, increasing);

  json j = {{"grid", grid_json(*sol.grid)}, {"e_P", sol.e_P}, {"velocities", vs}, {"reports", rows}};

  if (cfg.flag("mass.minimize")) {
    const PekarSolution& ms = lab.at(cfg.real("mass.minimize_L"), cfg.integer("mass.minimize_N"));
    const std::vector<double> mv = cfg.is_auto("mass.v") ? default_velocities(ms) : vs;
    MinimizeOptions mo;
    mo.budget = cfg.integer("mass.minimize_budget");
    std::ofstream os(run.path("minimize.csv"));
    os << "alpha,v,energy,trial_energy,difference,iterations,stationarity,converged,stalled,budget_exhausted\n";
    json mj = json::array();
    for (double alpha : alphas) {
      if (!(alpha > 0)) continue;
      std::vector<std::optional<MinimizeResult>> res(mv.size());
      parallel_for(int(mv.size()), [&](int i) { res[i] = constrained_minimize_Ev(mv[i], alpha, ms, mo); });
      std::vector<double> E;
      double worst = -1e300;
      for (std::size_t i = 0; i < mv.size(); ++i) {
        const MinimizeResult& r = *res[i];
        E.push_back(r.energy);
        worst = std::max(worst, r.energy - r.seed_energy);
        os << fmt(alpha) << ',' << fmt(mv[i]) << ',' << fmt(r.energy) << ',' << fmt(r.seed_energy) << ','
           << fmt(r.energy - r.seed_energy) << ',' << r.iterations << ',' << fmt(r.stationarity) << ','
           << int(r.converged) << ',' << int(r.stalled) << ',' << int(r.budget_exhausted) << '\n';
      }
      MassFit f = fit_mass(mv, E, ms.e_P);
      const double coefficient = 0.5 * f.mass;
      const double target = 0.25 + std::pow(alpha, 4) * ms.radial.d1_phi_sq;
      mj.push_back({{"alpha", alpha}, {"coefficient", coefficient}, {"target", target}, {"max_E_minus_trial", worst}});
      const std::string a = tag(alpha);
      run.below("minimized E <= trial + 1e-10 alpha=" + a, worst, 1e-10);
      run.below("minimized quadratic coefficient alpha=" + a, rel(coefficient, target), 0.05);
    }
    j["minimization"] = {{"grid", grid_json(*ms.grid)}, {"results", mj}};
  }
  run.write_json("mass_report.json", j);
}

void traveling_wave_into(Run& run, Lab& lab, const RunConfig& cfg) {
  require_unit_coupling(cfg);
  const std::vector<double> alphas = cfg.reals("tw.alpha");
  if (alphas.empty()) throw ConfigError("key 'tw.alpha' is empty", "tw.alpha");
  const PekarSolution& sol = lab.main();
  std::vector<TravelingWave> tws;
  for (double a : alphas) tws.push_back(traveling_wave_linearization(a, sol));
  std::ofstream os(run.path("traveling_wave.csv"));
  os << "alpha,im_xi_residual,re_xi_residual,coefficient,coefficient_grid,theorem_coefficient\n";
  json rows = json::array();
  for (std::size_t i = 0; i < tws.size(); ++i) {
    const TravelingWave& t = tws[i];
    os << fmt(alphas[i]) << ',' << fmt(t.im_xi_residual) << ',' << fmt(t.re_xi_residual) << ',' << fmt(t.coefficient)
       << ',' << fmt(t.coefficient_grid) << ',' << fmt(t.theorem_coefficient) << '\n';
    rows.push_back({{"alpha", alphas[i]},
                    {"im_xi_residual", t.im_xi_residual},
                    {"re_xi_residual", t.re_xi_residual},
                    {"coefficient", t.coefficient},
                    {"coefficient_grid", t.coefficient_grid},
                    {"theorem_coefficient", t.theorem_coefficient}});
    const std::string a = tag(alphas[i]);
    run.below("|H_P Im xi - d_1 psi_P| alpha=" + a, t.im_xi_residual, 1e-3);
    run.below("E^TW coefficient vs mass coefficient alpha=" + a,
              std::abs(t.coefficient - t.theorem_coefficient), 1e-10);
  }
  run.write_json("traveling_wave.json", {{"grid", grid_json(*sol.grid)}, {"results", rows}});
}

double dynamics_dt(const RunConfig& cfg, double alpha) {
  return cfg.is_auto("dynamics.dt") ? default_dt(alpha) : cfg.real("dynamics.dt");
}

AbsorbingMask mask_of(const RunConfig& cfg) {
  return AbsorbingMask{.active = cfg.flag("dynamics.mask"),
                       .band = cfg.real("dynamics.mask_band"),
                       .rate = cfg.real("dynamics.mask_rate")};
}

void simulate_into(Run& run, Lab& lab, const RunConfig& cfg) {
  require_unit_coupling(cfg);
  const double alpha = cfg.real("dynamics.alpha");
  const PekarSolution& sol = lab.at(cfg.real("dynamics.L"), cfg.integer("dynamics.N"));
  const bool stationary = cfg.str("dynamics.initial") == "stationary";
  PolaronState s0 = stationary ? PolaronState{.psi = sol.psi, .phi = sol.phi, .alpha = alpha, .t = 0}
                               : trial_state(cfg.real("dynamics.v"), alpha, sol, Variant::standard);
  const double dt = dynamics_dt(cfg, alpha);
  Observers obs;
  obs.radii = cfg.reals("dynamics.radii");
  PolaronState fin = s0;
  ObservableSeries series =
      integrate(s0, cfg.real("dynamics.T"), dt, cfg.integer("dynamics.cadence"), obs, &sol, mask_of(cfg), &fin);
  write_series_csv(series, run.path("series.csv"));
  if (cfg.flag("dynamics.snapshots")) {
    run.snapshot(s0.psi, "psi_initial");
    run.snapshot(s0.phi, "phi_initial");
    run.snapshot(fin.psi, "psi_final");
    run.snapshot(fin.phi, "phi_final");
  }
  const double G0 = series.records.front().G.total;
  double drift = 0, norm_drift = 0;
  for (const Record& r : series.records) {
    drift = std::max(drift, std::abs(r.G.total - G0) / std::abs(G0));
    norm_drift = std::max(norm_drift, std::abs(r.norm - series.records.front().norm));
  }
  json j = {{"grid", grid_json(*sol.grid)},
            {"alpha", alpha},
            {"dt", dt},
            {"initial", cfg.str("dynamics.initial")},
            {"samples", series.records.size()},
            {"projection_refusals", series.refused},
            {"max_relative_energy_drift", drift},
            {"max_norm_drift", norm_drift}};
  if (stationary) {
    const double phase = std::arg(inner(sol.psi, fin.psi));
    const double expected = std::remainder(-sol.mu_P * fin.t, 2 * M_PI);
    const double perr = std::abs(std::remainder(phase - expected, 2 * M_PI));
    j["phase_error"] = perr;
    run.below("stationary phase arg<psi_P, psi_T> + mu_P T", perr, 1e-6);
  }
  if (!cfg.flag("dynamics.mask")) {
    run.below("relative energy drift", drift, cfg.real("dynamics.drift_tol"));
    run.below("norm drift", norm_drift, 1e-10);
  }
  run.write_json("simulate.json", j);
}

void damping_into(Run& run, Lab& lab, const RunConfig& cfg) {
  require_unit_coupling(cfg);
  const std::vector<double> vs = cfg.reals("damping.v");
  if (vs.empty()) throw ConfigError("key 'damping.v' is empty", "damping.v");
  const double alpha = cfg.real("dynamics.alpha");
  const PekarSolution& sol = lab.at(cfg.real("dynamics.L"), cfg.integer("dynamics.N"));
  const double dt = dynamics_dt(cfg, alpha);
  BoostOptions bo;
  bo.cadence = cfg.integer("damping.cadence");
  bo.radii = cfg.reals("dynamics.radii");
  bo.mask = mask_of(cfg);
  const int n = int(vs.size());
  std::vector<ObservableSeries> series(n);
  parallel_for(n, [&](int i) { series[i] = boost_experiment(vs[i], alpha, cfg.real("damping.T"), dt, sol, bo); });
  json rows = json::array();
  for (int i = 0; i < n; ++i) {
    const std::string name = "series_" + std::to_string(i) + ".csv";
    write_series_csv(series[i], run.path(name));
    const auto& rec = series[i].records;
    bool monotone = true;
    double vmax = 0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
      if (k > 0) monotone = monotone && rec[k].t > rec[k - 1].t;
      for (int a = 0; a < 3; ++a) {
        vmax = std::max(vmax, std::abs(rec[k].V_el[a]));
        if (rec[k].phonon_ok) vmax = std::max(vmax, std::abs(rec[k].V_ph[a]));
      }
    }
    json row = {{"v", vs[i]},
                {"file", name},
                {"samples", rec.size()},
                {"projection_refusals", series[i].refused},
                {"V_el_1_initial", rec.front().V_el[0]},
                {"V_el_1_final", rec.back().V_el[0]},
                {"V_ph_1_initial", rec.front().phonon_ok ? json(rec.front().V_ph[0]) : json(nullptr)},
                {"V_ph_1_final", rec.back().phonon_ok ? json(rec.back().V_ph[0]) : json(nullptr)},
                {"radiation_final", rec.back().radiation}};
    rows.push_back(row);
    run.check("monotone time grid v=" + tag(vs[i]), double(rec.size()), 0, monotone);
    if (vs[i] == 0) {
      run.check("v=0 control velocities", vmax, cfg.real("damping.control_tol"),
                vmax < cfg.real("damping.control_tol") && series[i].refused == 0);
    }
  }
  run.write_json("damping.json", {{"grid", grid_json(*sol.grid)},
                                  {"alpha", alpha},
                                  {"dt", dt},
                                  {"T", cfg.real("damping.T")},
                                  {"mask_active", bo.mask.active},
                                  {"runs", rows}});
}

using Body = void (*)(Run&, Lab&, const RunConfig&);

fs::path out_dir(const RunConfig& cfg) { return fs::path(cfg.str("run.out")); }

void write_error(const fs::path& dir, const std::string& command, const std::string& kind, const std::string& what,
                 const std::string& key, const std::string& hash) {
  json e = {{"command", command}, {"error", kind}, {"message", what}, {"config_hash", hash}};
  if (!key.empty()) e["key"] = key;
  std::cerr << e.dump() << '\n';
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return;
  std::ofstream(dir / "error.json") << e.dump(2) << '\n';
}

// runs one command; solver errors become an error record and status 1
int execute(const RunConfig& cfg, Lab& lab, const std::string& command, Body body, const fs::path& dir) {
  Run run(cfg, command, dir);
  try {
    body(run, lab, cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    write_error(dir, command, "solver", e.what(), "", run.hash());
    run.path("error.json");
    run.finish("error");
    return 1;
  }
  return run.finish();
}

int run_one(const RunConfig& cfg, const std::string& command, Body body) {
  cfg.validate();
  Lab lab(cfg);
  return execute(cfg, lab, command, body, out_dir(cfg));
}

}  // namespace

int cmd_solve_pekar(const RunConfig& cfg) { return run_one(cfg, "solve-pekar", solve_pekar_into); }
int cmd_effective_mass(const RunConfig& cfg) { return run_one(cfg, "effective-mass", effective_mass_into); }
int cmd_simulate(const RunConfig& cfg) { return run_one(cfg, "simulate", simulate_into); }
int cmd_damping(const RunConfig& cfg) { return run_one(cfg, "damping", damping_into); }
int cmd_traveling_wave(const RunConfig& cfg) { return run_one(cfg, "traveling-wave", traveling_wave_into); }

int cmd_check(const RunConfig& cfg) {
  cfg.validate();
  require_unit_coupling(cfg);
  Lab lab(cfg);
  const fs::path root = out_dir(cfg);
  const std::vector<std::pair<std::string, Body>> steps = {{"solve-pekar", solve_pekar_into},
                                                           {"effective-mass", effective_mass_into},
                                                           {"traveling-wave", traveling_wave_into},
                                                           {"simulate", simulate_into},
                                                           {"damping", damping_into}};
  Run top(cfg, "check", root);
  json status = json::object();
  bool ok = true;
  for (const auto& [name, body] : steps) {
    std::fprintf(stderr, "== %s\n", name.c_str());
    int rc = execute(cfg, lab, name, body, root / name);
    status[name] = rc == 0 ? "passed" : "failed";
    ok = ok && rc == 0;
  }
  top.set_summary("commands", status);
  return top.finish(ok ? "passed" : "failed");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Landau-Pekar polaron laboratory"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> named = {
      {"--coupling-scale", "radial.coupling_scale"},
      {"--grid-L", "grid.L"},
      {"--grid-N", "grid.N"},
      {"--alpha", "mass.alpha"},
      {"--v", "mass.v"},
      {"--dt", "dynamics.dt"},
      {"--T", "dynamics.T"},
      {"--cadence", "dynamics.cadence"},
      {"--out", "run.out"},
      {"--seed", "run.seed"},
  };
  const std::vector<std::pair<std::string, int (*)(const RunConfig&)>> commands = {
      {"solve-pekar", cmd_solve_pekar},     {"effective-mass", cmd_effective_mass},
      {"simulate", cmd_simulate},           {"damping", cmd_damping},
      {"traveling-wave", cmd_traveling_wave}, {"check", cmd_check}};

  std::string config_path;
  std::vector<std::string> assignments;
  std::vector<std::optional<std::string>> values(named.size());
  std::vector<CLI::App*> subs;
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("config", config_path, "INI configuration or a manifest.json to replay");
    sub->add_option("--set", assignments, "section.key=value override")->type_name("KEY=VALUE");
    for (std::size_t i = 0; i < named.size(); ++i)
      sub->add_option(named[i].first, values[i], "overrides " + named[i].second);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::size_t which = 0;
  for (; which < subs.size(); ++which)
    if (subs[which]->parsed()) break;
  const std::string command = commands[which].first;

  RunConfig cfg = RunConfig::defaults();
  fs::path dir = "out";
  for (std::size_t i = 0; i < named.size(); ++i)
    if (values[i] && named[i].second == "run.out") dir = *values[i];
  try {
    if (!config_path.empty()) cfg = RunConfig::from_file(config_path);
    for (const std::string& a : assignments) cfg.set_assignment(a);
    for (std::size_t i = 0; i < named.size(); ++i)
      if (values[i]) cfg.set(named[i].second, *values[i]);
    dir = out_dir(cfg);
    return commands[which].second(cfg);
  } catch (const ConfigError& e) {
    write_error(dir, command, "config", e.what(), e.key, cfg.hash());
    return 2;
  } catch (const std::exception& e) {
    write_error(dir, command, "internal", e.what(), "", cfg.hash());
    return 1;
  }
}

}  // namespace polaron
