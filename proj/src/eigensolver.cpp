#include "polaron/eigensolver.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "polaron/errors.hpp"
#include "polaron/spectral.hpp"

namespace polaron {

namespace {

void remove_constraints(const Grid& g, RVec& x, const std::vector<RVec>& C) {
  for (const RVec& c : C) {
    double a = dot(g, c, x);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] -= a * c[n];
  }
}

RVec combination(const std::vector<const RVec*>& S, const Eigen::VectorXd& c, int from, int to) {
  RVec out(S[0]->size(), 0.0);
  for (int a = from; a < to; ++a) {
    const double w = c(a);
    const RVec& s = *S[a];
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += w * s[n];
  }
  return out;
}

}  // namespace

LobpcgResult lobpcg(const Grid& g, const RealOperator& A, const RealOperator& precond,
                    const std::vector<RVec>& constraints, std::vector<RVec> X, const LobpcgOptions& opt) {
  const int m = int(X.size());
  if (m < opt.want || opt.want < 1) throw Error("lobpcg: initial block smaller than the wanted count");
  for (RVec& x : X) remove_constraints(g, x, constraints);
  std::vector<RVec> AX(m), W(m), AW(m), P, AP;
  for (int i = 0; i < m; ++i) AX[i] = A(X[i]);

  LobpcgResult res;
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(m);
  bool first = true;
  for (int it = 0; it <= opt.max_iter; ++it) {
    // basis [X, W, P] with unit columns
    std::vector<const RVec*> S, AS;
    for (int i = 0; i < m; ++i) {
      S.push_back(&X[i]);
      AS.push_back(&AX[i]);
    }
    if (!first) {
      for (int i = 0; i < m; ++i) {
        S.push_back(&W[i]);
        AS.push_back(&AW[i]);
      }
      for (std::size_t i = 0; i < P.size(); ++i) {
        S.push_back(&P[i]);
        AS.push_back(&AP[i]);
      }
    }
    const int k = int(S.size());
    Eigen::MatrixXd G(k, k), H(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = a; b < k; ++b) {
        G(a, b) = G(b, a) = dot(g, *S[a], *S[b]);
        H(a, b) = H(b, a) = 0.5 * (dot(g, *S[a], *AS[b]) + dot(g, *S[b], *AS[a]));
      }
    Eigen::VectorXd d(k);
    for (int a = 0; a < k; ++a) d(a) = G(a, a) > 0 ? 1.0 / std::sqrt(G(a, a)) : 0.0;
    G = d.asDiagonal() * G * d.asDiagonal();
    H = d.asDiagonal() * H * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ge(G);
    const Eigen::VectorXd gl = ge.eigenvalues();
    int drop = 0;
    while (drop < k && gl(drop) <= 1e-12 * gl(k - 1)) ++drop;
    if (k - drop < m) throw ConvergenceError("lobpcg: search space collapsed");
    Eigen::MatrixXd Z = ge.eigenvectors().rightCols(k - drop);
    for (int c = 0; c < Z.cols(); ++c) Z.col(c) /= std::sqrt(gl(drop + c));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> he(Z.transpose() * H * Z);
    Eigen::MatrixXd C = d.asDiagonal() * Z * he.eigenvectors().leftCols(m);
    lam = he.eigenvalues().head(m);

    std::vector<RVec> Xn(m), AXn(m), Pn, APn;
    for (int i = 0; i < m; ++i) {
      Xn[i] = combination(S, C.col(i), 0, k);
      AXn[i] = combination(AS, C.col(i), 0, k);
      if (!first) {
        Pn.push_back(combination(S, C.col(i), m, k));
        APn.push_back(combination(AS, C.col(i), m, k));
      }
    }
    X = std::move(Xn);
    AX = std::move(AXn);
    P = std::move(Pn);
    AP = std::move(APn);
    first = false;

    // residuals of the new Ritz pairs
    bool done = true;
    res.residuals.assign(m, 0.0);
    std::vector<RVec> R(m);
    for (int i = 0; i < m; ++i) {
      R[i] = AX[i];
      for (std::size_t n = 0; n < R[i].size(); ++n) R[i][n] -= lam(i) * X[i][n];
      res.residuals[i] = std::sqrt(dot(g, R[i], R[i]) / dot(g, X[i], X[i]));
      if (i < opt.want && res.residuals[i] > opt.tol) done = false;
    }
    res.iterations = it;
    if (done) {
      res.converged = true;
      break;
    }
    for (int i = 0; i < m; ++i) {
      W[i] = precond(R[i]);
      remove_constraints(g, W[i], constraints);
      double wn = std::sqrt(dot(g, W[i], W[i]));
      if (wn > 0)
        for (double& v : W[i]) v /= wn;
      AW[i] = A(W[i]);
    }
  }
  if (!res.converged) {
    std::ostringstream os;
    os << "lobpcg did not converge in " << opt.max_iter << " iterations (residual " << res.residuals[0] << ")";
    throw ConvergenceError(os.str());
  }
  for (int i = 0; i < opt.want; ++i) {
    double xn = std::sqrt(dot(g, X[i], X[i]));
    for (double& v : X[i]) v /= xn;
    res.values.push_back(lam(i));
    res.vectors.push_back(std::move(X[i]));
  }
  res.residuals.resize(opt.want);
  return res;
}

}  // namespace polaron
