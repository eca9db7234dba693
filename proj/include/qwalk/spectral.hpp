#pragma once

// Spectral structure of the walk R_B R_A and its classical counterparts.
//
// Two independent routes to the spectrum are kept side by side:
//   - dense route: Schur form of the (T+1)-dimensional product R_B R_A;
//   - discriminant route: singular values of the A x B block L = A^T B,
//     where a singular value cos(theta/2) pairs with eigenvalues
//     e^{+-i theta} of the walk.
// K = (I - L L^T)^{-1} links the walk gap to an absorbing random walk on
// the doubly extended graph G'' (anchor edge weighted alpha^-2, second
// anchor weighted d_1): K = diag(a) (N~_AA - d_1^{-1} J) diag(a), with N~
// the degree-scaled fundamental matrix. On trees N~[i,j] is exactly
// alpha^2 + 1/d_1 + depth(lca(i,j)); on layered DAGs it is bounded by the
// same expression with the lca depth replaced by n (electric-network
// monotonicity). The verify_* operations check these statements
// numerically and report the worst violation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qwalk/errors.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/phase_estimation.hpp"
#include "qwalk/walk_operators.hpp"

namespace qwalk {

inline Eigen::MatrixXd k_matrix(const GramData& gd) {
  Eigen::Index a = gd.l_mat.rows();
  Eigen::MatrixXd w =
      Eigen::MatrixXd::Identity(a, a) - gd.l_mat * gd.l_mat.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(w);
  if (llt.info() != Eigen::Success)
    throw NumericError("I - LL^T is not positive definite (singular value >= 1?)");
  return llt.solve(Eigen::MatrixXd::Identity(a, a));
}

struct SpectralSummary {
  Eigen::VectorXd eigenphases;      // in (-pi, pi], one per basis direction
  Eigen::MatrixXcd eigenvectors;    // orthonormal columns (Schur basis)
  double theta_min = 0.0;           // smallest |phase| above the 1-eigenspace tolerance
  double lambda_l = 0.0;            // largest singular value of L
  Eigen::MatrixXd k_mat;            // (I - LL^T)^{-1}
  double lambda_k = 0.0;            // largest eigenvalue of K = 1/sin^2(theta_min/2)
  double q2_overlap = 0.0;          // <e0|q2> from the top singular pair
  int top_multiplicity = 1;
  Eigen::VectorXd singular_values;  // of L, descending
};

// Phases with |theta| <= this tolerance count as the 1-eigenspace; two
// phases form a +- pair when they cancel to within it.
inline constexpr double kOnePhaseTol = 1e-8;

namespace detail {

struct SchurEig {
  Eigen::VectorXd phases;
  Eigen::MatrixXcd vectors;
};

inline SchurEig schur_eigensystem(const Eigen::MatrixXd& product) {
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(product.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) throw NumericError("walk eigendecomposition failed");
  const auto& t = schur.matrixT();
  double offdiag = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = i + 1; j < t.cols(); ++j) offdiag = std::max(offdiag, std::abs(t(i, j)));
  if (offdiag > 1e-8)
    throw NumericError("walk operator product is not normal; Schur form not diagonal");
  SchurEig e;
  e.phases.resize(t.rows());
  for (Eigen::Index i = 0; i < t.rows(); ++i) e.phases[i] = std::arg(t(i, i));
  e.vectors = schur.matrixU();
  return e;
}

}  // namespace detail

inline SpectralSummary eigendecompose_walk(const WalkOperators& ops, const GramData& gd) {
  SpectralSummary s;
  Eigen::MatrixXd product = ops.r_b * ops.r_a;
  detail::SchurEig eig = detail::schur_eigensystem(product);
  s.eigenphases = eig.phases;
  s.eigenvectors = eig.vectors;

  s.theta_min = kPi;
  bool found = false;
  for (Eigen::Index i = 0; i < s.eigenphases.size(); ++i) {
    double a = std::abs(s.eigenphases[i]);
    if (a > kOnePhaseTol && a < s.theta_min) {
      s.theta_min = a;
      found = true;
    }
  }
  if (!found) s.theta_min = 0.0;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(gd.l_mat, Eigen::ComputeThinU);
  s.singular_values = svd.singularValues();
  s.lambda_l = s.singular_values.size() > 0 ? s.singular_values[0] : 0.0;
  s.k_mat = k_matrix(gd);
  s.lambda_k = 1.0 / (1.0 - s.lambda_l * s.lambda_l);

  s.top_multiplicity = 1;
  while (s.top_multiplicity < s.singular_values.size() &&
         s.lambda_l - s.singular_values[s.top_multiplicity] <= 1e-9)
    s.top_multiplicity++;

  double rho = 1.0 / std::sqrt(1.0 + gd.alpha * gd.alpha * gd.root_degree);
  double acc = 0.0;
  for (int k = 0; k < s.top_multiplicity; ++k) {
    double sigma = s.singular_values[k];
    double u1 = svd.matrixU()(0, k);
    acc += u1 * u1 / (1.0 - sigma * sigma);
  }
  s.q2_overlap = rho * std::sqrt(acc);
  return s;
}

struct OneEigenspaceReport {
  double e0_projection_norm = 0.0;
  int intersection_dim = 0;
  bool pass = false;
};

// Lemma-level check: the anchor state is orthogonal to the full
// 1-eigenspace of R_B R_A, and the even/odd subspaces intersect trivially.
inline OneEigenspaceReport verify_one_eigenspace(const WalkOperators& ops, const GramData& gd) {
  OneEigenspaceReport r;
  Eigen::MatrixXd product = ops.r_b * ops.r_a;
  detail::SchurEig eig = detail::schur_eigensystem(product);

  Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(ops.dim);
  e0[ops.dim - 1] = 1.0;
  double norm_sq = 0.0;
  for (Eigen::Index i = 0; i < eig.phases.size(); ++i)
    if (std::abs(eig.phases[i]) <= kOnePhaseTol)
      norm_sq += std::norm(eig.vectors.col(i).dot(e0));
  r.e0_projection_norm = std::sqrt(norm_sq);

  Eigen::Index na = gd.a_hat.cols(), nb = gd.b_hat.cols();
  Eigen::MatrixXd stacked(gd.a_hat.rows(), na + nb);
  stacked << gd.a_hat, gd.b_hat;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-8 * sv[0]) rank++;
  r.intersection_dim = static_cast<int>(na + nb - rank);

  r.pass = r.e0_projection_norm <= 1e-9 && r.intersection_dim == 0;
  return r;
}

// Absorbing random walk on G'': G plus the anchor edge (weight alpha^-2)
// plus a second anchor edge (v_{V+2}, v_{V+1}) of weight d_1; v_{V+2}
// absorbs. Q is the transient block over v_1..v_{V+1}; row V+1 leaks 1-beta.
struct AbsorbingWalk {
  double alpha = 0.0;
  double beta = 0.0;  // (d_1 alpha^2 + 1)^{-1}
  int d1 = 0;
  Eigen::MatrixXd q_mat;
  Eigen::MatrixXd n_mat;    // (I - Q)^{-1}
  Eigen::MatrixXd n_tilde;  // N diag(p)^{-2}, symmetric
  Eigen::VectorXd p_vec;    // p[i] = sqrt(d''(i))
};

inline AbsorbingWalk fundamental_matrix(const LayeredDag& g, double alpha) {
  if (alpha <= 0) throw ParameterError("alpha must be positive");
  if (g.edge_count() < 1) throw DomainError("absorbing walk needs at least one edge");
  int v_count = g.vertex_count();
  int d1 = g.root_degree();

  AbsorbingWalk w;
  w.alpha = alpha;
  w.d1 = d1;
  w.beta = 1.0 / (d1 * alpha * alpha + 1.0);

  int dim = v_count + 1;
  w.q_mat = Eigen::MatrixXd::Zero(dim, dim);
  for (int e : g.incident_edges(1)) {
    auto [a, b] = g.edge(e);
    int nb = (a == 1) ? b : a;
    w.q_mat(0, nb - 1) += w.beta * alpha * alpha;
  }
  w.q_mat(0, dim - 1) = w.beta;
  for (int v = 2; v <= v_count; ++v) {
    double inv = 1.0 / g.degree(v);
    for (int e : g.incident_edges(v)) {
      auto [a, b] = g.edge(e);
      int nb = (a == v) ? b : a;
      w.q_mat(v - 1, nb - 1) += inv;
    }
  }
  w.q_mat(dim - 1, 0) = w.beta;

  Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(dim, dim) - w.q_mat;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
  w.n_mat = lu.solve(Eigen::MatrixXd::Identity(dim, dim));
  double residual = (w.n_mat * sys - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-9)) throw NumericError("fundamental matrix solve lost precision");

  w.p_vec.resize(dim);
  w.p_vec[0] = std::sqrt(d1 + 1.0 / (alpha * alpha));
  for (int v = 2; v <= v_count; ++v) w.p_vec[v - 1] = std::sqrt(static_cast<double>(g.degree(v)));
  w.p_vec[dim - 1] = w.p_vec[0];

  w.n_tilde = w.n_mat * w.p_vec.cwiseAbs2().cwiseInverse().asDiagonal();
  return w;
}

// Discrete harmonic potential with phi(s) = 1, phi(t) = 0 over the
// unit-conductance undirected view of the graph; returned as a full
// per-vertex vector (index v-1).
inline Eigen::VectorXd harmonic_potential(const LayeredDag& g, int s, int t) {
  g.check_vertex(s);
  g.check_vertex(t);
  if (s == t) throw ParameterError("boundary vertices must differ");
  int v_count = g.vertex_count();

  std::vector<int> col(v_count + 1, -1);
  std::vector<int> unknowns;
  for (int v = 1; v <= v_count; ++v)
    if (v != s && v != t) {
      col[v] = static_cast<int>(unknowns.size());
      unknowns.push_back(v);
    }

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(v_count);
  phi[s - 1] = 1.0;
  if (unknowns.empty()) return phi;

  Eigen::Index m = static_cast<Eigen::Index>(unknowns.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    int v = unknowns[static_cast<std::size_t>(i)];
    a(i, i) = g.degree(v);
    for (int e : g.incident_edges(v)) {
      auto [x, y] = g.edge(e);
      int nb = (x == v) ? y : x;
      if (nb == s)
        b[i] += 1.0;
      else if (nb != t)
        a(i, col[nb]) -= 1.0;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd x = lu.solve(b);
  if (!((a * x - b).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff())))
    throw NumericError("harmonic system is singular");
  for (Eigen::Index i = 0; i < m; ++i) phi[unknowns[static_cast<std::size_t>(i)] - 1] = x[i];
  return phi;
}

// Effective resistance between v_i and the root; equals the depth of v_i
// on trees and can only shrink when extra edges are present.
inline double effective_resistance(const LayeredDag& g, int i) {
  if (i == g.root()) throw ParameterError("resistance to the root itself is zero");
  Eigen::VectorXd phi = harmonic_potential(g, g.root(), i);
  double s = 0.0;
  for (int e : g.incident_edges(i)) {
    auto [x, y] = g.edge(e);
    int nb = (x == i) ? y : x;
    s += phi[nb - 1];
  }
  if (s <= 0.0) throw NumericError("degenerate escape probability");
  return 1.0 / s;
}

struct LemmaReport {
  std::string lemma;
  int instances = 0;
  double max_violation = 0.0;
  bool pass = false;
};

// K = diag(a) (N~_AA - d_1^{-1} J) diag(a), max-norm tolerance 1e-8.
inline LemmaReport verify_K_identity(const LayeredDag& g, double alpha) {
  GramData gd = build_gram(g, alpha);
  Eigen::MatrixXd k = k_matrix(gd);
  AbsorbingWalk w = fundamental_matrix(g, alpha);

  Eigen::Index na = static_cast<Eigen::Index>(gd.vertices_a.size());
  Eigen::MatrixXd ntaa(na, na);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j)
      ntaa(i, j) = w.n_tilde(gd.vertices_a[static_cast<std::size_t>(i)] - 1,
                             gd.vertices_a[static_cast<std::size_t>(j)] - 1);
  Eigen::MatrixXd rhs = gd.a_vec.asDiagonal() *
                        (ntaa - Eigen::MatrixXd::Constant(na, na, 1.0 / w.d1)) *
                        gd.a_vec.asDiagonal();
  LemmaReport r;
  r.lemma = "lemma17";
  r.instances = 1;
  r.max_violation = (k - rhs).cwiseAbs().maxCoeff();
  r.pass = r.max_violation <= 1e-8;
  return r;
}

// Entrywise alpha^2 a_i a_j <= K_ij <= (alpha^2+n) a_i a_j with first
// row/column equality, and alpha^2 T <= lambda_K <= (alpha^2+n) T; the
// extremal eigenvalue is recomputed from K itself. Relative tolerance 1e-9.
inline LemmaReport verify_K_bounds(const LayeredDag& g, double alpha) {
  GramData gd = build_gram(g, alpha);
  Eigen::MatrixXd k = k_matrix(gd);
  double n = g.depth();
  double a2 = alpha * alpha;

  LemmaReport r;
  r.lemma = "lemma9-10";
  r.instances = 1;
  Eigen::Index na = k.rows();
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j) {
      double prod = gd.a_vec[i] * gd.a_vec[j];
      double lo = a2 * prod, hi = (a2 + n) * prod;
      double scale = std::max(1.0, hi);
      r.max_violation = std::max(r.max_violation, (lo - k(i, j)) / scale);
      r.max_violation = std::max(r.max_violation, (k(i, j) - hi) / scale);
      if (i == 0 || j == 0)
        r.max_violation = std::max(r.max_violation, std::abs(k(i, j) - lo) / scale);
    }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed on K");
  double lambda_k = es.eigenvalues().maxCoeff();
  double t = static_cast<double>(g.edge_count());
  double scale = std::max(1.0, (a2 + n) * t);
  r.max_violation = std::max(r.max_violation, (a2 * t - lambda_k) / scale);
  r.max_violation = std::max(r.max_violation, (lambda_k - (a2 + n) * t) / scale);

  r.pass = r.max_violation <= 1e-9;
  return r;
}

struct OverlapResult {
  double overlap = 0.0;
  int multiplicity = 1;
};

// <e0|q2> for the top singular pair of L, with the Perron sign convention
// (K has positive entries, so the top left-singular vector can be taken
// entrywise nonnegative). With a degenerate top space the overlap is taken
// against the projector onto the whole space.
inline OverlapResult top_pair_overlap(const GramData& gd) {
  if (gd.alpha * gd.alpha < 2.0 * gd.depth - 1e-12)
    throw ParameterError("overlap bound requires alpha >= sqrt(2n)");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(gd.l_mat, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) throw DomainError("empty discriminant block");
  OverlapResult res;
  res.multiplicity = 1;
  while (res.multiplicity < sv.size() && sv[0] - sv[res.multiplicity] <= 1e-9) res.multiplicity++;

  double rho = 1.0 / std::sqrt(1.0 + gd.alpha * gd.alpha * gd.root_degree);
  double acc = 0.0;
  for (int k = 0; k < res.multiplicity; ++k) {
    double u1 = svd.matrixU()(0, k);
    acc += u1 * u1 / (1.0 - sv[k] * sv[k]);
  }
  res.overlap = rho * std::sqrt(acc);
  return res;
}

inline OverlapResult top_pair_overlap(const SpectralSummary& s, const GramData& gd) {
  (void)s;
  return top_pair_overlap(gd);
}

// Eigenphase profile of the anchor start state under R_B R_A, via the
// discriminant route: for each singular triple (sigma, u, v) of the block
// over unmarked vertices the pair e^{+-i 2 arccos sigma} carries weight
// u[root]^2 / ((1 + alpha^2 d_1)(1 - sigma^2)); whatever weight is left
// sits in the 1-eigenspace (zero for unmarked graphs). Marked diffusion
// blocks are identities, which drops their columns.
inline PhaseProfile walk_phase_profile(const LayeredDag& g, double alpha,
                                       const std::set<int>& marked = {}) {
  if (alpha <= 0) throw ParameterError("alpha must be positive");
  if (g.edge_count() < 1) throw DomainError("walk needs at least one edge");
  if (marked.count(g.root())) return PhaseProfile{{0.0}, {1.0}};

  EvenOddPartition part = even_odd_partition(g);
  std::vector<int> ua, ub;
  for (int v : part.set_a)
    if (!marked.count(v)) ua.push_back(v);
  for (int v : part.set_b)
    if (!marked.count(v)) ub.push_back(v);

  int d1 = g.root_degree();
  double rho2 = 1.0 / (1.0 + alpha * alpha * d1);

  PhaseProfile p;
  if (ub.empty()) {
    p.phases = {kPi, 0.0};
    p.weights = {rho2, 1.0 - rho2};
    return p;
  }

  std::vector<int> col_a(g.vertex_count() + 1, -1), col_b(g.vertex_count() + 1, -1);
  for (std::size_t i = 0; i < ua.size(); ++i) col_a[ua[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < ub.size(); ++i) col_b[ub[i]] = static_cast<int>(i);

  auto norm_of = [&](int v) {
    if (v == g.root()) return std::sqrt(g.degree(v) + 1.0 / (alpha * alpha));
    return std::sqrt(static_cast<double>(g.degree(v)));
  };

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ua.size()),
                                            static_cast<Eigen::Index>(ub.size()));
  for (long long e = 0; e < g.edge_count(); ++e) {
    auto [x, y] = g.edge(static_cast<int>(e));
    int va = (g.layer(x) % 2 == 0) ? x : y;
    int vb = (va == x) ? y : x;
    if (col_a[va] < 0 || col_b[vb] < 0) continue;
    l(col_a[va], col_b[vb]) += 1.0 / (norm_of(va) * norm_of(vb));
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(l, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  Eigen::Index na = l.rows();

  double used = 0.0;
  for (Eigen::Index k = 0; k < na; ++k) {
    double sigma = (k < sv.size()) ? sv[k] : 0.0;
    if (sigma >= 1.0 - 1e-9) continue;  // 1-eigenspace, folded into the residual
    double u1 = svd.matrixU()(0, k);
    double w = rho2 * u1 * u1 / (1.0 - sigma * sigma);
    if (w < 1e-15) continue;
    if (sigma < 1e-12) {
      p.phases.push_back(kPi);
      p.weights.push_back(w);
    } else {
      double theta = 2.0 * std::acos(sigma);
      p.phases.push_back(theta);
      p.weights.push_back(0.5 * w);
      p.phases.push_back(-theta);
      p.weights.push_back(0.5 * w);
    }
    used += w;
  }
  // In exact arithmetic the kept mass never exceeds one (it equals
  // rho^2 K[1,1]). A near-degenerate top pair rotates the computed singular
  // vectors by eps/gap and misassigns weight between almost identical
  // phases; the sum can overshoot by that rotation, so overshoot is
  // rescaled rather than treated as an error.
  if (used > 1.0 + 1e-3) throw NumericError("phase profile weights exceed one");
  if (used > 1.0) {
    for (double& w : p.weights) w /= used;
    used = 1.0;
  }
  double residual = 1.0 - used;
  if (residual > 1e-11) {
    p.phases.push_back(0.0);
    p.weights.push_back(residual);
  }
  return p;
}

}  // namespace qwalk
