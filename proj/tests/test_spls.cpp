#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "emgsens/errors.hpp"
#include "emgsens/spls.hpp"
#include "emgsens/util.hpp"
#include "test_helpers.hpp"

using namespace emgsens;

namespace {

Eigen::MatrixXd standardized_random(int n, int p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) m(i, j) = rng.normal();
  }
  for (int j = 0; j < p; ++j) {
    const double mean = m.col(j).mean();
    const double sd = std::sqrt((m.col(j).array() - mean).square().mean());
    m.col(j) = (m.col(j).array() - mean) / sd;
  }
  return m;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

// Standardized design with exactly orthogonal columns (X'X = nI), the clean
// setting for rank-one recovery: the PLS direction is X'Xw, which equals w
// only when the columns are uncorrelated.
Eigen::MatrixXd orthogonal_design(int n, int p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x0(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x0(i, j) = rng.normal();
  }
  x0.rowwise() -= x0.colwise().mean().eval();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x0);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  return std::sqrt(static_cast<double>(n)) * q;
}

}  // namespace

TEST_CASE("soft threshold operator") {
  CHECK(soft_threshold(0.5, 0.2) == doctest::Approx(0.3));
  CHECK(soft_threshold(-0.1, 0.2) == 0.0);
  CHECK(soft_threshold(-0.5, 0.2) == doctest::Approx(-0.3));
  CHECK(soft_threshold(0.2, 0.2) == 0.0);
}

TEST_CASE("keep_x = 1 leaves exactly one nonzero feature loading") {
  const auto x = standardized_random(50, 20, 1);
  const auto y = standardized_random(50, 4, 2);
  const SplsModel m = fit_spls(x, y, 1, 1);
  int nnz = 0;
  for (int i = 0; i < 20; ++i) {
    if (m.u(i, 0) != 0.0) ++nnz;
  }
  CHECK(nnz == 1);
}

TEST_CASE("rank-one recovery: Y = Xw") {
  Rng rng(3);
  const auto x = orthogonal_design(60, 30, 4);
  Eigen::VectorXd w(30);
  for (int i = 0; i < 30; ++i) w[i] = rng.normal();
  w /= w.norm();
  Eigen::MatrixXd y = x * w;
  const SplsModel m = fit_spls(x, y, 30, 1);
  CHECK(std::fabs(cosine(m.u.col(0), w)) > 0.999);
}

TEST_CASE("dense mode matches the SVD of X'Y") {
  const auto x = standardized_random(40, 8, 5);
  auto y = standardized_random(40, 5, 6);
  // Correlate Y with X so the leading direction is well separated.
  y.col(0) += x.col(1) * 1.5;
  y.col(2) -= x.col(3) * 0.8;
  const Eigen::MatrixXd m = x.transpose() * y;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const SplsModel fit = fit_spls(x, y, 8, 1);
  const double cu = std::fabs(cosine(fit.u.col(0), svd.matrixU().col(0)));
  const double cv = std::fabs(cosine(fit.v.col(0), svd.matrixV().col(0)));
  CHECK(cu > 1.0 - 1e-6);
  CHECK(cv > 1.0 - 1e-6);
}

TEST_CASE("unit norms, orthogonal scores, monotone deflation") {
  auto x = standardized_random(80, 25, 7);
  auto y = standardized_random(80, 6, 8);
  y.col(0) += 1.2 * x.col(0);
  y.col(1) -= 0.7 * x.col(5);
  for (int j = 0; j < y.cols(); ++j) {
    const double mean = y.col(j).mean();
    const double sd = std::sqrt((y.col(j).array() - mean).square().mean());
    y.col(j) = (y.col(j).array() - mean) / sd;
  }
  const SplsModel m = fit_spls(x, y, 10, 3);
  for (int h = 0; h < 3; ++h) {
    CHECK(m.u.col(h).norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.v.col(h).norm() == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      const double dot = m.scores.col(a).dot(m.scores.col(b));
      CHECK(std::fabs(dot) <
            1e-8 * m.scores.col(a).norm() * m.scores.col(b).norm());
    }
  }
  // Deflation shrinks the cross-covariance at every step.
  Eigen::MatrixXd xd = x, yd = y;
  double prev = (xd.transpose() * yd).norm();
  for (int h = 0; h < 3; ++h) {
    const Eigen::VectorXd t = m.scores.col(h);
    xd -= t * m.x_loadings.col(h).transpose();
    yd -= t * m.y_loadings.col(h).transpose();
    const double cur = (xd.transpose() * yd).norm();
    CHECK(cur <= prev + 1e-9);
    prev = cur;
  }
}

TEST_CASE("sign convention anchors the largest demographic loading positive") {
  const auto x = standardized_random(50, 12, 9);
  auto y = standardized_random(50, 4, 10);
  y.col(1) += 2.0 * x.col(3);
  const SplsModel a = fit_spls(x, y, 12, 1);
  int arg = 0;
  for (int j = 1; j < 4; ++j) {
    if (std::fabs(a.v(j, 0)) > std::fabs(a.v(arg, 0))) arg = j;
  }
  CHECK(a.v(arg, 0) > 0.0);

  // Negating an X column only flips that feature's loading.
  Eigen::MatrixXd xn = x;
  xn.col(3) = -x.col(3);
  const SplsModel b = fit_spls(xn, y, 12, 1);
  for (int i = 0; i < 12; ++i) {
    const double expect = i == 3 ? -a.u(i, 0) : a.u(i, 0);
    CHECK(b.u(i, 0) == doctest::Approx(expect).epsilon(1e-6));
  }
  for (int j = 0; j < 4; ++j) {
    CHECK(b.v(j, 0) == doctest::Approx(a.v(j, 0)).epsilon(1e-6));
  }
}

TEST_CASE("Q2: noiseless rank-one relation is strongly predictive") {
  Rng rng(11);
  const auto x = orthogonal_design(120, 10, 14);
  Eigen::VectorXd w(10);
  for (int i = 0; i < 10; ++i) w[i] = rng.normal();
  w /= w.norm();
  Eigen::MatrixXd y = x * w;
  const auto q2 = q2_crossval(x, y, 1, 5, 77, 10);
  CHECK(q2[0] > 0.9);
}

TEST_CASE("Q2: independent noise stays below the retention threshold") {
  int below = 0;
  const int runs = 20;
  for (int r = 0; r < runs; ++r) {
    const auto x = standardized_random(60, 20, 100 + static_cast<std::uint64_t>(r));
    const auto y = standardized_random(60, 3, 900 + static_cast<std::uint64_t>(r));
    const auto q2 = q2_crossval(x, y, 1, 5, 55, 20);
    if (q2[0] < kQ2RetentionThreshold) ++below;
  }
  CHECK(below >= 18);
}

TEST_CASE("leave-one-out Q2 is bitwise reproducible under a fixed seed") {
  const auto x = standardized_random(25, 10, 21);
  auto y = standardized_random(25, 3, 22);
  y.col(0) += x.col(2);
  const auto a = q2_crossval(x, y, 2, 25, 1234, 10);
  const auto b = q2_crossval(x, y, 2, 25, 1234, 10);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("zero covariance matrix is an error") {
  Eigen::MatrixXd x = standardized_random(30, 5, 31);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(30, 3);
  CHECK_THROWS_AS(fit_spls(x, y, 5, 1), NumericError);
}

TEST_CASE("complete-linkage clustering") {
  SUBCASE("identical rows merge first at distance 0 and sit adjacent") {
    Eigen::MatrixXd pts(4, 2);
    pts << 0.0, 0.0,
           5.0, 5.0,
           0.0, 0.0,
           9.0, 1.0;
    const Dendrogram d = hclust_complete(pts);
    REQUIRE(d.merges.size() == 3);
    CHECK(d.merges[0].left == 0);
    CHECK(d.merges[0].right == 2);
    CHECK(d.merges[0].height == doctest::Approx(0.0));
    // adjacency in the leaf order
    const auto& order = d.leaf_order;
    int pos0 = -1, pos2 = -1;
    for (int i = 0; i < 4; ++i) {
      if (order[static_cast<std::size_t>(i)] == 0) pos0 = i;
      if (order[static_cast<std::size_t>(i)] == 2) pos2 = i;
    }
    CHECK(std::abs(pos0 - pos2) == 1);
  }
  SUBCASE("sign blocks of a rank-one matrix come out contiguous") {
    Eigen::VectorXd u(6);
    u << 1.0, 0.9, 1.1, -1.0, -0.95, -1.05;
    Eigen::VectorXd v(3);
    v << 0.5, 0.8, 0.3;
    const Eigen::MatrixXd cells = u * v.transpose();
    const Dendrogram d = hclust_complete(cells);
    REQUIRE(d.leaf_order.size() == 6);
    // The positive block {0,1,2} must be contiguous in the order.
    std::vector<int> pos_of(6);
    for (int i = 0; i < 6; ++i) pos_of[static_cast<std::size_t>(d.leaf_order[static_cast<std::size_t>(i)])] = i;
    const int lo = std::min({pos_of[0], pos_of[1], pos_of[2]});
    const int hi = std::max({pos_of[0], pos_of[1], pos_of[2]});
    CHECK(hi - lo == 2);
  }
}

TEST_CASE("CIM layout: permutations of the right sizes, rank-one cells") {
  const auto x = standardized_random(60, 147, 41);
  auto y = standardized_random(60, 12, 42);
  y.col(0) += 1.5 * x.col(10);
  const SplsModel m = fit_spls(x, y, 50, 1);
  const CimLayout layout = build_cim(m);
  REQUIRE(layout.row_order.size() == 147);
  REQUIRE(layout.col_order.size() == 12);
  std::set<int> rows(layout.row_order.begin(), layout.row_order.end());
  std::set<int> cols(layout.col_order.begin(), layout.col_order.end());
  CHECK(rows.size() == 147);
  CHECK(cols.size() == 12);
  CHECK(*rows.begin() == 0);
  CHECK(*rows.rbegin() == 146);
  // Cells are u_i * v_j of the first component.
  for (int i : {0, 17, 146}) {
    for (int j : {0, 5, 11}) {
      CHECK(layout.cells(i, j) == doctest::Approx(m.u(i, 0) * m.v(j, 0)));
    }
  }
  CHECK(layout.row_dendrogram.merges.size() == 146);
  CHECK(layout.col_dendrogram.merges.size() == 11);
}
