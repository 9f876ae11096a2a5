#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "polaron/pekar.hpp"

namespace polaron {

struct ProjectionOptions {
  // first-order residual relative to ||phi|| ||grad phi_P||
  double tol = 1e-12;
  int max_iter = 60;
  int max_halvings = 40;
  // refuse when the distance exceeds this fraction of ||phi_P||
  double neighborhood = 0.25;
};

struct PhononProjection {
  Vec3 z{};
  double distance = 0;
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Vec3 residual{};
  int newton_iterations = 0;
};

enum class Metric { L2, H1 };

struct ElectronProjection {
  Vec3 y{};
  double theta = 0;
  Metric metric = Metric::L2;
  double distance = 0;
  // gradient of |<psi_P^y, psi>|^2 in y at the optimum
  Vec3 residual{};
  int newton_iterations = 0;
};

PhononProjection project_phonon(const ComplexField& phi, const PekarSolution& sol,
                                std::optional<Vec3> guess = std::nullopt, const ProjectionOptions& opt = {});

ElectronProjection project_electron(const ComplexField& psi, const PekarSolution& sol, Metric metric,
                                    std::optional<Vec3> guess = std::nullopt, const ProjectionOptions& opt = {});

// Velocity of z along the flow. For alpha > 0 the right-hand side is
// alpha^-2 <Im phi, grad phi_P^z>; at alpha = 0 the field is slaved to the
// electron and the time derivative of sigma_psi is used instead.
Vec3 phonon_velocity(const ComplexField& psi, const ComplexField& phi, double alpha, const PhononProjection& proj,
                     const PekarSolution& sol);

struct ManifoldDiagnostics {
  double dist_phonon_L2 = 0;
  double dist_electron_H1 = 0;
  double F_phi = 0, E_psi = 0;
  double ratio_phonon = 0, ratio_electron = 0;
  // distances below this are treated as on-manifold and the ratios are not formed
  bool phonon_on_manifold = false, electron_on_manifold = false;
};

// inf over normalized psi of G(psi, phi): ||phi||^2 + lowest eigenvalue of h_phi
double energy_F(const ComplexField& phi, const PekarSolution& sol);

ManifoldDiagnostics manifold_distances(const ComplexField& psi, const ComplexField& phi, const PekarSolution& sol,
                                       double on_manifold_tol = 1e-9);

struct CoercivitySample {
  double eps = 0;
  double excess = 0;  // E(psi) - e_P
  double dist_sq = 0;
  double ratio = 0;
};

// psi_P + eps eta with eta a smooth random real field orthogonal to psi_P and grad psi_P
std::vector<CoercivitySample> coercivity_spot_check(const PekarSolution& sol, const std::vector<double>& eps,
                                                    unsigned long seed);

}  // namespace polaron
