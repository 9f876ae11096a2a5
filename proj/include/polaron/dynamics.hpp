#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polaron/pekar.hpp"
#include "polaron/projection.hpp"
#include "polaron/state.hpp"

namespace polaron {

struct AbsorbingMask {
  bool active = false;
  // outer fraction of each half box where phi + sigma is damped
  double band = 0.15;
  // damping rate at the box edge
  double rate = 0.05;
};

// Strang splitting: exact phonon half step, electron step (kinetic half,
// potential phase, kinetic half), exact phonon half step.
class Integrator {
 public:
  Integrator(const PolaronState& s, double dt, AbsorbingMask mask = {});
  void advance(int steps);
  PolaronState state() const;
  double dt() const { return dt_; }

 private:
  void phonon_half();
  void refresh_sigma();
  void apply_mask();

  GridPtr grid_;
  double alpha_, dt_, t_;
  CVec psi_;       // real space
  CVec phi_hat_;   // Fourier space
  CVec sigma_hat_; // Fourier space, for the current psi
  std::vector<cplx> kin_half_;
  std::vector<double> inv_k_;
  AbsorbingMask mask_;
  RVec mask_factor_;
};

PolaronState step(const PolaronState& s, double dt);

double default_dt(double alpha);

struct Observers {
  bool energy = true;
  bool electron = true;
  bool phonon = true;
  // field energy ||phi + sigma_psi||^2 outside balls around z
  std::vector<double> radii;
};

struct Record {
  double t = 0;
  EnergyBreakdown G;
  double norm = 0;
  Vec3 X_el{}, V_el{};
  bool boundary_warning = false;
  bool phonon_ok = false;
  Vec3 z{}, V_ph{};
  double dist_phonon = 0;
  std::vector<double> radiation;
};

struct ObservableSeries {
  std::vector<Record> records;
  std::vector<double> radii;
  bool mask_active = false;
  int refused = 0;
};

ObservableSeries integrate(const PolaronState& s, double T, double dt, int cadence, const Observers& obs,
                           const PekarSolution* sol, AbsorbingMask mask = {}, PolaronState* final_state = nullptr);

void write_series_csv(const ObservableSeries& s, const std::string& path);

struct BoostOptions {
  int cadence = 100;
  std::vector<double> radii;
  AbsorbingMask mask;
};

ObservableSeries boost_experiment(double v, double alpha, double T, double dt, const PekarSolution& sol,
                                  const BoostOptions& opt = {});

}  // namespace polaron
