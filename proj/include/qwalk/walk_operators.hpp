#pragma once

// Edge-space walk operators.
//
// The Hilbert space has one basis direction per edge of the extended graph
// G' = G + anchor edge e0 = (v_{V+1}, v_1); real edges take indices 0..T-1
// in basis order and the anchor takes index T. For each vertex,
//
//   s_v = e0 + alpha * sum_{e in N(v)} e     (v = root)
//   s_v =            sum_{e in N(v)} e       (otherwise),
//
// where N(v) excludes the anchor. The reflection R_A is the direct sum of
// diffusion operators D_v = I - (2/||s_v||^2) |s_v><s_v| over even-layer
// vertices; R_B is the same over odd-layer vertices plus a fixed anchor
// direction. Same-parity neighborhoods are disjoint, so the direct sum is
// realized by accumulating rank-1 updates onto the identity. A marked
// vertex contributes the identity on its block instead.
//
// Everything is a dense real matrix in double precision; at desk scale
// (T up to a couple thousand) this is exact and simple.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qwalk/errors.hpp"
#include "qwalk/graph.hpp"

namespace qwalk {

struct EdgeSpaceBasis {
  long long edge_count = 0;  // T
  int dim() const { return static_cast<int>(edge_count) + 1; }
  int anchor_index() const { return static_cast<int>(edge_count); }
};

inline EdgeSpaceBasis edge_space_basis(const LayeredDag& g) { return {g.edge_count()}; }

inline Eigen::VectorXd build_s_vector(const LayeredDag& g, double alpha, int v) {
  if (alpha <= 0) throw ParameterError("alpha must be positive");
  if (g.edge_count() < 1) throw DomainError("walk needs at least one edge");
  g.check_vertex(v);
  EdgeSpaceBasis basis = edge_space_basis(g);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(basis.dim());
  double w = (v == g.root()) ? alpha : 1.0;
  for (int e : g.incident_edges(v)) s[e] = w;
  if (v == g.root()) s[basis.anchor_index()] = 1.0;
  return s;
}

struct WalkOperators {
  double alpha = 0.0;
  Eigen::MatrixXd r_a;
  Eigen::MatrixXd r_b;
  std::set<int> marked_set;
  Eigen::VectorXd s_norms_sq;  // index v-1
  int dim = 0;
};

namespace detail {

// Accumulate D_v onto the identity block given the participating basis
// indices and weights of s_v restricted to them.
inline void apply_diffusion(Eigen::MatrixXd& m, const std::vector<int>& idx,
                            const std::vector<double>& w) {
  double norm_sq = 0.0;
  for (double x : w) norm_sq += x * x;
  double c = 2.0 / norm_sq;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) m(idx[i], idx[j]) -= c * w[i] * w[j];
}

// s_v support over a caller-chosen incident edge subset
inline void star(const LayeredDag& g, double alpha, int v, const std::vector<int>& edge_subset,
                 std::vector<int>& idx, std::vector<double>& w) {
  idx.clear();
  w.clear();
  double c = (v == g.root()) ? alpha : 1.0;
  for (int e : edge_subset) {
    idx.push_back(e);
    w.push_back(c);
  }
  if (v == g.root()) {
    idx.push_back(edge_space_basis(g).anchor_index());
    w.push_back(1.0);
  }
}

inline WalkOperators build_reflections_with(const LayeredDag& g, double alpha,
                                            const std::set<int>& marked,
                                            const std::vector<std::vector<int>>* star_override) {
  if (alpha <= 0) throw ParameterError("alpha must be positive");
  if (g.edge_count() < 1) throw DomainError("walk needs at least one edge");
  for (int v : marked) g.check_vertex(v);

  EdgeSpaceBasis basis = edge_space_basis(g);
  WalkOperators ops;
  ops.alpha = alpha;
  ops.marked_set = marked;
  ops.dim = basis.dim();
  ops.r_a = Eigen::MatrixXd::Identity(ops.dim, ops.dim);
  ops.r_b = Eigen::MatrixXd::Identity(ops.dim, ops.dim);
  ops.s_norms_sq = Eigen::VectorXd::Zero(g.vertex_count());

  std::vector<int> idx;
  std::vector<double> w;
  for (int v = 1; v <= g.vertex_count(); ++v) {
    const std::vector<int>& edges =
        star_override ? (*star_override)[v] : g.incident_edges(v);
    star(g, alpha, v, edges, idx, w);
    double norm_sq = 0.0;
    for (double x : w) norm_sq += x * x;
    ops.s_norms_sq[v - 1] = norm_sq;
    if (marked.count(v) || idx.empty()) continue;
    Eigen::MatrixXd& target = (g.layer(v) % 2 == 0) ? ops.r_a : ops.r_b;
    apply_diffusion(target, idx, w);
  }
  return ops;
}

}  // namespace detail

inline WalkOperators build_reflections(const LayeredDag& g, double alpha,
                                       const std::set<int>& marked = {}) {
  return detail::build_reflections_with(g, alpha, marked, nullptr);
}

// Gram data of the two orthonormal families spanning the even and odd
// subspaces. Columns follow the even/odd partition order (root first).
// The discriminant block L = A^T B carries the walk spectrum: a singular
// value cos(theta/2) of L corresponds to the eigenvalue pair e^{+-i theta}
// of R_B R_A.
struct GramData {
  Eigen::MatrixXd mat_a;  // (T+1) x A, anchor entry 1/alpha in column 1
  Eigen::MatrixXd mat_b;  // (T+1) x B
  Eigen::VectorXd a_vec;  // a[1] = sqrt(d_1 + alpha^-2), a[j] = sqrt(d_j)
  Eigen::VectorXd b_vec;
  Eigen::MatrixXd a_hat;  // mat_a * diag(a)^-1, orthonormal columns
  Eigen::MatrixXd b_hat;
  Eigen::MatrixXd l_mat;  // A x B
  std::vector<int> vertices_a;
  std::vector<int> vertices_b;
  double alpha = 0.0;
  int root_degree = 0;
  int depth = 0;
};

inline GramData build_gram(const LayeredDag& g, double alpha) {
  if (alpha <= 0) throw ParameterError("alpha must be positive");
  if (g.edge_count() < 1) throw DomainError("gram data needs at least one edge");
  EvenOddPartition p = even_odd_partition(g);
  EdgeSpaceBasis basis = edge_space_basis(g);
  int dim = basis.dim();
  int na = static_cast<int>(p.set_a.size());
  int nb = static_cast<int>(p.set_b.size());

  GramData gd;
  gd.vertices_a = p.set_a;
  gd.vertices_b = p.set_b;
  gd.alpha = alpha;
  gd.root_degree = g.root_degree();
  gd.depth = g.depth();
  gd.mat_a = Eigen::MatrixXd::Zero(dim, na);
  gd.mat_b = Eigen::MatrixXd::Zero(dim, nb);
  gd.a_vec = Eigen::VectorXd::Zero(na);
  gd.b_vec = Eigen::VectorXd::Zero(nb);

  for (int j = 0; j < na; ++j) {
    int v = p.set_a[j];
    for (int e : g.incident_edges(v)) gd.mat_a(e, j) = 1.0;
    if (v == g.root()) {
      gd.mat_a(basis.anchor_index(), j) = 1.0 / alpha;
      gd.a_vec[j] = std::sqrt(g.degree(v) + 1.0 / (alpha * alpha));
    } else {
      gd.a_vec[j] = std::sqrt(static_cast<double>(g.degree(v)));
    }
  }
  for (int j = 0; j < nb; ++j) {
    int v = p.set_b[j];
    for (int e : g.incident_edges(v)) gd.mat_b(e, j) = 1.0;
    gd.b_vec[j] = std::sqrt(static_cast<double>(g.degree(v)));
  }

  gd.a_hat = gd.mat_a * gd.a_vec.cwiseInverse().asDiagonal();
  gd.b_hat = gd.mat_b * gd.b_vec.cwiseInverse().asDiagonal();
  gd.l_mat = gd.a_hat.transpose() * gd.b_hat;
  return gd;
}

struct PathSpec {
  std::vector<int> vertices;       // u_0 .. u_l, u_0 = root
  std::vector<int> child_indices;  // u_{i+1} = children(u_i)[child_indices[i]]
  int length() const { return static_cast<int>(child_indices.size()); }
  int last() const { return vertices.back(); }
};

inline void validate_path(const LayeredDag& g, const PathSpec& p) {
  if (p.vertices.empty() || p.vertices.front() != g.root())
    throw DomainError("path must start at the root");
  if (p.vertices.size() != p.child_indices.size() + 1) throw DomainError("malformed path spec");
  for (int i = 0; i < p.length(); ++i) {
    const auto& kids = g.children_of(p.vertices[i]);
    int c = p.child_indices[i];
    if (c < 0 || c >= static_cast<int>(kids.size()) || kids[c] != p.vertices[i + 1])
      throw DomainError("path step is not a recorded child");
  }
}

// path from root following vertex ids; child indices recovered from the tree
inline PathSpec make_path(const LayeredDag& g, const std::vector<int>& vertices) {
  PathSpec p;
  p.vertices = vertices.empty() ? std::vector<int>{g.root()} : vertices;
  for (std::size_t i = 0; i + 1 < p.vertices.size(); ++i) {
    const auto& kids = g.children_of(p.vertices[i]);
    auto it = std::find(kids.begin(), kids.end(), p.vertices[i + 1]);
    if (it == kids.end()) throw DomainError("path step is not a child");
    p.child_indices.push_back(static_cast<int>(it - kids.begin()));
  }
  validate_path(g, p);
  return p;
}

// Walk operators of the restricted tree T_m encoded by a root-to-vertex
// path, built over the full edge space: at each path vertex u_i the
// diffusion block keeps the parent edge (anchor for the root) and the edges
// to children up to and including the path successor, as if later siblings
// did not exist; the final path vertex keeps only its parent edge. Vertices
// off the path are untouched, which leaves the T_m edge span invariant.
// An empty path means no restriction.
inline WalkOperators path_restricted_reflections(const LayeredDag& g, const PathSpec& path,
                                                 double alpha, const std::set<int>& marked = {}) {
  if (!g.is_tree()) throw DomainError("path restriction expects a tree");
  validate_path(g, path);
  if (path.length() == 0) return build_reflections(g, alpha, marked);

  std::vector<std::vector<int>> stars(g.vertex_count() + 1);
  for (int v = 1; v <= g.vertex_count(); ++v) stars[v] = g.incident_edges(v);

  auto child_edge = [&](int u, int c) {
    for (int e : g.incident_edges(u)) {
      auto [a, b] = g.edge(e);
      if (a == u && b == c) return e;
    }
    throw DomainError("missing child edge");
  };
  auto parent_edge = [&](int v) {
    for (int e : g.incident_edges(v)) {
      if (g.edge(e).second == v) return e;
    }
    throw DomainError("missing parent edge");
  };

  for (int i = 0; i < path.length(); ++i) {
    int u = path.vertices[i];
    const auto& kids = g.children_of(u);
    std::vector<int> kept;
    if (u != g.root()) kept.push_back(parent_edge(u));
    for (int c = 0; c <= path.child_indices[i]; ++c) kept.push_back(child_edge(u, kids[c]));
    stars[u] = kept;
  }
  int last = path.last();
  stars[last] = {parent_edge(last)};

  return detail::build_reflections_with(g, alpha, marked, &stars);
}

// --- optional matrix dumps (text, npy, json metadata) ---

inline void write_matrix_text(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << m(i, j) << (j + 1 < m.cols() ? " " : "");
    out << "\n";
  }
}

inline void write_matrix_npy(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  char shape[64];
  std::snprintf(shape, sizeof(shape), "(%lld, %lld)", static_cast<long long>(m.rows()),
                static_cast<long long>(m.cols()));
  std::string header = std::string("{'descr': '<f8', 'fortran_order': False, 'shape': ") + shape + ", }";
  std::size_t unpadded = 10 + header.size() + 1;
  std::size_t padded = (unpadded + 63) / 64 * 64;
  header.append(padded - unpadded, ' ');
  header.push_back('\n');
  std::uint16_t hlen = static_cast<std::uint16_t>(header.size());
  out << "\x93NUMPY" << '\x01' << '\x00';
  out.write(reinterpret_cast<const char*>(&hlen), 2);
  out << header;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double x = m(i, j);
      out.write(reinterpret_cast<const char*>(&x), sizeof(double));
    }
}

inline nlohmann::json operator_metadata(const WalkOperators& ops) {
  nlohmann::json j;
  j["alpha"] = ops.alpha;
  j["dimension"] = ops.dim;
  j["marked"] = ops.marked_set;
  return j;
}

// prefix_ra.<ext>, prefix_rb.<ext>, prefix_meta.json
inline void dump_walk_operators(const WalkOperators& ops, const std::string& prefix,
                                bool binary = false) {
  if (binary) {
    write_matrix_npy(ops.r_a, prefix + "_ra.npy");
    write_matrix_npy(ops.r_b, prefix + "_rb.npy");
  } else {
    write_matrix_text(ops.r_a, prefix + "_ra.txt");
    write_matrix_text(ops.r_b, prefix + "_rb.txt");
  }
  std::ofstream meta(prefix + "_meta.json");
  if (!meta) throw IoError("cannot write " + prefix + "_meta.json");
  meta << operator_metadata(ops).dump(2) << "\n";
}

}  // namespace qwalk
