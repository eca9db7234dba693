#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <map>

#include "qwalk/backtracking.hpp"
#include "qwalk/generate.hpp"
#include "qwalk/graph.hpp"
#include "qwalk/walk_operators.hpp"

using namespace qwalk;
using Catch::Approx;

namespace {

LayeredDag single_edge() { return LayeredDag::from_edges(2, {{1, 2}}); }
LayeredDag path3() { return LayeredDag::from_edges(3, {{1, 2}, {2, 3}}); }

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("s vectors follow the anchor-and-alpha convention") {
  auto g = single_edge();
  auto s1 = build_s_vector(g, 2.0, 1);
  // basis order (e1, e0)
  CHECK(s1[0] == Approx(2.0));
  CHECK(s1[1] == Approx(1.0));
  CHECK(s1.squaredNorm() == Approx(5.0));

  auto s2 = build_s_vector(g, 2.0, 2);
  CHECK(s2[0] == Approx(1.0));
  CHECK(s2[1] == Approx(0.0));

  CHECK_THROWS_AS(build_s_vector(g, -1.0, 1), ParameterError);
  CHECK_THROWS_AS(build_s_vector(LayeredDag{}, 1.0, 1), DomainError);
}

TEST_CASE("edge partition identity: both parities cover every edge once") {
  RngStream rng(21);
  auto t = random_tree(40, 6, {3}, rng);
  auto p = even_odd_partition(t);
  Eigen::VectorXd lhs = Eigen::VectorXd::Zero(t.edge_count());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(t.edge_count());
  for (int v : p.set_a)
    for (int e : t.incident_edges(v)) lhs[e] += 1.0;
  for (int v : p.set_b)
    for (int e : t.incident_edges(v)) rhs[e] += 1.0;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() == 0.0);
  CHECK(lhs.minCoeff() == 1.0);
  CHECK(lhs.maxCoeff() == 1.0);
}

TEST_CASE("reflections on the single-edge tree match the 2x2 arithmetic") {
  auto g = single_edge();
  auto ops = build_reflections(g, 1.0, {});
  Eigen::MatrixXd expected(2, 2);
  expected << 0, -1, -1, 0;
  CHECK(max_abs(ops.r_a - expected) < 1e-12);
  // R_B: leaf block negates e1, anchor fixed
  Eigen::MatrixXd rb(2, 2);
  rb << -1, 0, 0, 1;
  CHECK(max_abs(ops.r_b - rb) < 1e-12);
}

TEST_CASE("reflections are involutions and act as advertised") {
  RngStream rng(31);
  for (int rep = 0; rep < 6; ++rep) {
    auto g = rep % 2 == 0 ? random_tree(30, 6, {3}, rng)
                          : random_layered_dag(30, 6, {3}, 6, rng);
    double alpha = 1.0 + rng.uniform() * 3.0;
    auto ops = build_reflections(g, alpha, {});
    int dim = ops.dim;
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
    CHECK(max_abs(ops.r_a * ops.r_a - eye) <= 1e-10);
    CHECK(max_abs(ops.r_b * ops.r_b - eye) <= 1e-10);
    CHECK(max_abs(ops.r_a.transpose() * ops.r_a - eye) <= 1e-10);
    CHECK(max_abs(ops.r_b.transpose() * ops.r_b - eye) <= 1e-10);

    // anchor direction is fixed by R_B
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(dim);
    e0[dim - 1] = 1.0;
    CHECK((ops.r_b * e0 - e0).cwiseAbs().maxCoeff() <= 1e-12);

    auto part = even_odd_partition(g);
    for (int v : part.set_a) {
      auto s = build_s_vector(g, alpha, v);
      CHECK((ops.r_a * s + s).cwiseAbs().maxCoeff() <= 1e-10);
    }
    for (int v : part.set_b) {
      auto s = build_s_vector(g, alpha, v);
      CHECK((ops.r_b * s + s).cwiseAbs().maxCoeff() <= 1e-10);
    }
    // same-parity s vectors are pairwise orthogonal
    for (std::size_t i = 0; i < part.set_a.size(); ++i)
      for (std::size_t j = i + 1; j < part.set_a.size(); ++j)
        CHECK(std::abs(build_s_vector(g, alpha, part.set_a[i])
                           .dot(build_s_vector(g, alpha, part.set_a[j]))) <= 1e-12);
  }
}

TEST_CASE("marking every even vertex trivializes R_A") {
  RngStream rng(5);
  auto g = random_tree(20, 5, {2}, rng);
  auto part = even_odd_partition(g);
  std::set<int> marked(part.set_a.begin(), part.set_a.end());
  auto ops = build_reflections(g, 2.0, marked);
  CHECK(max_abs(ops.r_a - Eigen::MatrixXd::Identity(ops.dim, ops.dim)) == 0.0);

  CHECK_THROWS_AS(build_reflections(LayeredDag{}, 1.0, {}), DomainError);
}

TEST_CASE("gram data on the worked examples") {
  auto se = single_edge();
  auto g1 = build_gram(se, 2.0);
  REQUIRE(g1.l_mat.rows() == 1);
  REQUIRE(g1.l_mat.cols() == 1);
  CHECK(g1.l_mat(0, 0) == Approx(2.0 / std::sqrt(5.0)));
  CHECK(g1.a_vec[0] == Approx(std::sqrt(1.0 + 0.25)));

  auto p3 = path3();
  auto g2 = build_gram(p3, 1.0);
  REQUIRE(g2.l_mat.rows() == 2);
  REQUIRE(g2.l_mat.cols() == 1);
  CHECK(g2.a_vec[0] == Approx(std::sqrt(2.0)));
  CHECK(g2.a_vec[1] == Approx(1.0));
  CHECK(g2.b_vec[0] == Approx(std::sqrt(2.0)));
  CHECK(g2.l_mat(0, 0) == Approx(0.5));
  CHECK(g2.l_mat(1, 0) == Approx(1.0 / std::sqrt(2.0)));
  // product oracle
  CHECK(max_abs(g2.l_mat - g2.a_hat.transpose() * g2.b_hat) <= 1e-14);
}

TEST_CASE("gram columns are orthonormal and singular values stay below one") {
  RngStream rng(13);
  for (int rep = 0; rep < 5; ++rep) {
    auto g = random_layered_dag(35, 6, {3}, 7, rng);
    auto gd = build_gram(g, 1.5);
    Eigen::Index na = gd.a_hat.cols(), nb = gd.b_hat.cols();
    CHECK(max_abs(gd.a_hat.transpose() * gd.a_hat - Eigen::MatrixXd::Identity(na, na)) <= 1e-12);
    CHECK(max_abs(gd.b_hat.transpose() * gd.b_hat - Eigen::MatrixXd::Identity(nb, nb)) <= 1e-12);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(gd.l_mat);
    CHECK(svd.singularValues().maxCoeff() < 1.0 - 1e-12);
    CHECK(svd.singularValues().minCoeff() >= -1e-14);

    // discriminant correspondence: Gram of the normalized s vectors minus
    // the identity has L as its off-diagonal block
    auto part = even_odd_partition(g);
    Eigen::MatrixXd basis(gd.a_hat.rows(), na + nb);
    basis << gd.a_hat, gd.b_hat;
    Eigen::MatrixXd gram = basis.transpose() * basis - Eigen::MatrixXd::Identity(na + nb, na + nb);
    CHECK(max_abs(gram.topRightCorner(na, nb) - gd.l_mat) <= 1e-12);
    CHECK(max_abs(gram.topLeftCorner(na, na)) <= 1e-12);
  }
}

TEST_CASE("operator dumps round trip through text and carry metadata") {
  auto g = path3();
  auto ops = build_reflections(g, 1.5, {2});
  std::string prefix = "/tmp/qwalk_test_ops";
  dump_walk_operators(ops, prefix);

  std::ifstream ra(prefix + "_ra.txt");
  REQUIRE(ra.good());
  Eigen::MatrixXd back(ops.dim, ops.dim);
  for (int i = 0; i < ops.dim; ++i)
    for (int j = 0; j < ops.dim; ++j) ra >> back(i, j);
  CHECK(max_abs(back - ops.r_a) == 0.0);

  auto meta = operator_metadata(ops);
  CHECK(meta["alpha"] == 1.5);
  CHECK(meta["dimension"] == 3);
  CHECK(meta["marked"] == std::set<int>{2});

  dump_walk_operators(ops, prefix, /*binary=*/true);
  std::ifstream npy(prefix + "_ra.npy", std::ios::binary);
  REQUIRE(npy.good());
  char magic[6];
  npy.read(magic, 6);
  CHECK(std::string(magic + 1, 5) == "NUMPY");
}

TEST_CASE("path restriction: empty path changes nothing") {
  auto g = path3();
  PathSpec empty = make_path(g, {1});
  auto plain = build_reflections(g, 1.5, {});
  auto restricted = path_restricted_reflections(g, empty, 1.5, {});
  CHECK(max_abs(plain.r_a - restricted.r_a) == 0.0);
  CHECK(max_abs(plain.r_b - restricted.r_b) == 0.0);
}

TEST_CASE("path restriction drops later siblings at the root") {
  auto star = LayeredDag::from_edges(3, {{1, 2}, {1, 3}});
  PathSpec p = make_path(star, {1, 2});
  auto ops = path_restricted_reflections(star, p, 2.0, {});
  // root block lives on (e(1,2), e0); direction e(1,3) untouched by R_A
  Eigen::VectorXd second = Eigen::VectorXd::Zero(3);
  second[1] = 1.0;  // edge (1,3)
  CHECK((ops.r_a * second - second).cwiseAbs().maxCoeff() <= 1e-12);
  // restricted operators remain involutions
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  CHECK(max_abs(ops.r_a * ops.r_a - eye) <= 1e-10);
  CHECK(max_abs(ops.r_b * ops.r_b - eye) <= 1e-10);

  CHECK_THROWS_AS(make_path(star, {2, 1}), DomainError);
  CHECK_THROWS_AS(make_path(star, {1, 1}), DomainError);
}

TEST_CASE("path restriction equals the materialized restricted tree") {
  RngStream rng(41);
  for (int rep = 0; rep < 8; ++rep) {
    auto t = random_tree(static_cast<int>(rng.uniform_int(8, 40)), 6, {2}, rng);
    TreeHandle handle(t);
    auto order = dfs_order(handle);
    int m = static_cast<int>(rng.uniform_int(1, t.vertex_count()));
    // path to the m-th DFS vertex
    std::vector<int> chain;
    int target = order[m - 1];
    for (int v = target;; v = t.parents_of(v).front()) {
      chain.push_back(v);
      if (v == 1) break;
    }
    std::reverse(chain.begin(), chain.end());
    PathSpec path = make_path(t, chain);
    if (path.length() == 0) continue;  // unrestricted by convention

    double alpha = 1.0 + rng.uniform();
    auto restricted = path_restricted_reflections(t, path, alpha, {});

    RestrictedHandle view(handle, path);
    Materialized mat = view.materialized();
    REQUIRE(mat.dag.vertex_count() == m);
    if (mat.dag.edge_count() == 0) continue;
    auto mat_ops = build_reflections(mat.dag, alpha, {});

    // embed: map the materialized edges back into the base basis
    std::map<std::pair<int, int>, int> base_edge;
    for (int e = 0; e < t.edge_count(); ++e) base_edge[t.edge(e)] = e;
    int md = mat_ops.dim;
    std::vector<int> embed(md);
    for (int e = 0; e < mat.dag.edge_count(); ++e) {
      auto [u, v] = mat.dag.edge(e);
      embed[e] = base_edge.at({mat.orig_of[u], mat.orig_of[v]});
    }
    embed[md - 1] = restricted.dim - 1;  // anchor to anchor

    Eigen::MatrixXd sub_a(md, md), sub_b(md, md);
    for (int i = 0; i < md; ++i)
      for (int j = 0; j < md; ++j) {
        sub_a(i, j) = restricted.r_a(embed[i], embed[j]);
        sub_b(i, j) = restricted.r_b(embed[i], embed[j]);
      }
    CHECK(max_abs(sub_a - mat_ops.r_a) <= 1e-12);
    CHECK(max_abs(sub_b - mat_ops.r_b) <= 1e-12);

    // the restricted span is invariant: no leakage off the embedded block
    for (int i = 0; i < md; ++i) {
      Eigen::VectorXd col_a = restricted.r_a.col(embed[i]);
      Eigen::VectorXd col_b = restricted.r_b.col(embed[i]);
      double mass_a = 0.0, mass_b = 0.0;
      for (int j = 0; j < md; ++j) {
        col_a[embed[j]] = 0.0;
        col_b[embed[j]] = 0.0;
      }
      mass_a = col_a.cwiseAbs().maxCoeff();
      mass_b = col_b.cwiseAbs().maxCoeff();
      CHECK(mass_a <= 1e-12);
      CHECK(mass_b <= 1e-12);
    }
  }
}
