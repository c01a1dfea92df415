#include "emgsens/spls.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emgsens/errors.hpp"
#include "emgsens/util.hpp"

namespace emgsens {

double soft_threshold(double value, double lambda) {
  const double a = std::fabs(value) - lambda;
  if (a <= 0.0) return 0.0;
  return value > 0.0 ? a : -a;
}

namespace {

// Smallest threshold leaving at most keep nonzeros: the (keep+1)-th largest
// magnitude (0 when keep covers everything).
double sparsity_lambda(const Eigen::VectorXd& raw, int keep) {
  const int p = static_cast<int>(raw.size());
  if (keep >= p) return 0.0;
  std::vector<double> mags(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) mags[static_cast<std::size_t>(i)] = std::fabs(raw[i]);
  std::nth_element(mags.begin(), mags.begin() + keep, mags.end(),
                   std::greater<double>());
  return mags[static_cast<std::size_t>(keep)];
}

}  // namespace

SplsModel fit_spls(const Eigen::MatrixXd& X_in, const Eigen::MatrixXd& Y_in,
                   int keep_x, int n_components) {
  const int n = static_cast<int>(X_in.rows());
  const int px = static_cast<int>(X_in.cols());
  const int py = static_cast<int>(Y_in.cols());
  if (Y_in.rows() != n) throw DataError("fit_spls: X and Y row mismatch");
  if (keep_x < 1) throw ConfigError("fit_spls: keep_x must be at least 1");
  if (n_components < 1 || n_components > std::min({n - 1, px, py})) {
    throw ConfigError("fit_spls: invalid component count");
  }

  SplsModel model;
  model.n_components = n_components;
  model.keep_x = keep_x;
  model.u = Eigen::MatrixXd::Zero(px, n_components);
  model.v = Eigen::MatrixXd::Zero(py, n_components);
  model.scores = Eigen::MatrixXd::Zero(n, n_components);
  model.x_loadings = Eigen::MatrixXd::Zero(px, n_components);
  model.y_loadings = Eigen::MatrixXd::Zero(py, n_components);
  model.q2 = Eigen::VectorXd::Zero(n_components);

  Eigen::MatrixXd X = X_in;
  Eigen::MatrixXd Y = Y_in;

  for (int h = 0; h < n_components; ++h) {
    const Eigen::MatrixXd M = X.transpose() * Y;  // px x py
    if (M.norm() <= 0.0) {
      throw NumericError("fit_spls: zero covariance matrix at component " +
                         std::to_string(h + 1));
    }

    // Start v on the dominant column of M.
    int best_col = 0;
    for (int j = 1; j < py; ++j) {
      if (M.col(j).norm() > M.col(best_col).norm()) best_col = j;
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(py);
    v[best_col] = 1.0;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(px);

    bool converged = false;
    for (int iter = 0; iter < 500; ++iter) {
      Eigen::VectorXd u_raw = M * v;
      const double lambda = sparsity_lambda(u_raw, keep_x);
      Eigen::VectorXd u_new(px);
      for (int i = 0; i < px; ++i) u_new[i] = soft_threshold(u_raw[i], lambda);
      const double un = u_new.norm();
      if (un <= 0.0) {
        throw NumericError("fit_spls: all feature loadings thresholded away");
      }
      u_new /= un;

      Eigen::VectorXd v_new = M.transpose() * u_new;
      const double vn = v_new.norm();
      if (vn <= 0.0) {
        throw NumericError("fit_spls: degenerate demographic loadings");
      }
      v_new /= vn;

      const double change = std::max((u_new - u).lpNorm<Eigen::Infinity>(),
                                     (v_new - v).lpNorm<Eigen::Infinity>());
      u = u_new;
      v = v_new;
      if (change < 1e-9) {
        converged = true;
        break;
      }
    }
    if (!converged) model.converged = false;

    // Sign convention: largest-magnitude demographic loading positive.
    int arg = 0;
    for (int j = 1; j < py; ++j) {
      if (std::fabs(v[j]) > std::fabs(v[arg])) arg = j;
    }
    if (v[arg] < 0.0) {
      v = -v;
      u = -u;
    }

    const Eigen::VectorXd t = X * u;
    const double tt = t.squaredNorm();
    if (tt <= 0.0) throw NumericError("fit_spls: zero score vector");
    const Eigen::VectorXd p_load = X.transpose() * t / tt;
    const Eigen::VectorXd c_load = Y.transpose() * t / tt;

    model.u.col(h) = u;
    model.v.col(h) = v;
    model.scores.col(h) = t;
    model.x_loadings.col(h) = p_load;
    model.y_loadings.col(h) = c_load;

    X -= t * p_load.transpose();
    Y -= t * c_load.transpose();
  }
  return model;
}

Eigen::MatrixXd spls_predict(const SplsModel& model, const Eigen::MatrixXd& X,
                             int n_comp) {
  n_comp = std::clamp(n_comp, 0, model.n_components);
  if (n_comp == 0) {
    return Eigen::MatrixXd::Zero(X.rows(), model.y_loadings.rows());
  }
  const Eigen::MatrixXd W = model.u.leftCols(n_comp);
  const Eigen::MatrixXd P = model.x_loadings.leftCols(n_comp);
  const Eigen::MatrixXd C = model.y_loadings.leftCols(n_comp);
  // B = W (P'W)^-1 C'
  const Eigen::MatrixXd pw = P.transpose() * W;
  const Eigen::MatrixXd b =
      W * pw.colPivHouseholderQr().solve(C.transpose());
  return X * b;
}

Eigen::VectorXd q2_crossval(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                            int n_components, int k_folds, std::uint64_t seed,
                            int keep_x) {
  const int n = static_cast<int>(X.rows());
  if (k_folds < 2) throw ConfigError("q2_crossval: k_folds must be at least 2");
  if (k_folds > n) k_folds = n;

  // Deterministic shuffled fold assignment.
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i % k_folds;
  }

  auto standardize_cols = [](Eigen::MatrixXd& m, Eigen::RowVectorXd& mean,
                             Eigen::RowVectorXd& sd) {
    mean = m.colwise().mean();
    m.rowwise() -= mean;
    sd.resize(m.cols());
    for (int c = 0; c < m.cols(); ++c) {
      sd[c] = std::sqrt(m.col(c).squaredNorm() / m.rows());
      if (sd[c] <= 0.0) {
        throw NumericError("q2_crossval: fold with zero variance column");
      }
      m.col(c) /= sd[c];
    }
  };

  Eigen::VectorXd press = Eigen::VectorXd::Zero(n_components);
  for (int fold = 0; fold < k_folds; ++fold) {
    std::vector<int> train, test;
    for (int i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == fold ? test : train).push_back(i);
    }
    if (test.empty() || static_cast<int>(train.size()) < 3) continue;

    Eigen::MatrixXd xt(static_cast<int>(train.size()), X.cols());
    Eigen::MatrixXd yt(static_cast<int>(train.size()), Y.cols());
    for (std::size_t i = 0; i < train.size(); ++i) {
      xt.row(static_cast<int>(i)) = X.row(train[i]);
      yt.row(static_cast<int>(i)) = Y.row(train[i]);
    }
    Eigen::RowVectorXd x_mean, x_sd, y_mean, y_sd;
    standardize_cols(xt, x_mean, x_sd);
    standardize_cols(yt, y_mean, y_sd);

    const int max_h = std::min(n_components,
                               std::min({static_cast<int>(train.size()) - 1,
                                         static_cast<int>(X.cols()),
                                         static_cast<int>(Y.cols())}));
    const SplsModel m = fit_spls(xt, yt, keep_x, max_h);

    Eigen::MatrixXd xs(static_cast<int>(test.size()), X.cols());
    for (std::size_t i = 0; i < test.size(); ++i) {
      xs.row(static_cast<int>(i)) = X.row(test[i]);
    }
    xs.rowwise() -= x_mean;
    for (int c = 0; c < xs.cols(); ++c) xs.col(c) /= x_sd[c];

    for (int h = 1; h <= n_components; ++h) {
      const Eigen::MatrixXd pred_std = spls_predict(m, xs, std::min(h, max_h));
      for (std::size_t i = 0; i < test.size(); ++i) {
        for (int c = 0; c < Y.cols(); ++c) {
          const double pred =
              pred_std(static_cast<int>(i), c) * y_sd[c] + y_mean[c];
          const double err = Y(test[i], c) - pred;
          press[h - 1] += err * err;
        }
      }
    }
  }

  // RSS_{h-1} from the full-data fit; RSS_0 is the centered total SS.
  Eigen::MatrixXd yc = Y;
  yc.rowwise() -= Y.colwise().mean().eval();
  Eigen::VectorXd rss(n_components);
  const SplsModel full = fit_spls(X, Y, keep_x, n_components);
  rss[0] = yc.squaredNorm();
  for (int h = 1; h < n_components; ++h) {
    const Eigen::MatrixXd resid = Y - spls_predict(full, X, h);
    rss[h] = resid.squaredNorm();
  }

  Eigen::VectorXd q2(n_components);
  for (int h = 0; h < n_components; ++h) {
    q2[h] = rss[h] > 0.0 ? 1.0 - press[h] / rss[h] : 0.0;
  }
  return q2;
}

Dendrogram hclust_complete(const Eigen::MatrixXd& rows) {
  const int n = static_cast<int>(rows.rows());
  Dendrogram out;
  if (n == 0) return out;
  if (n == 1) {
    out.leaf_order = {0};
    return out;
  }

  struct Cluster {
    int id;
    bool active;
  };
  std::vector<Cluster> clusters;
  clusters.reserve(static_cast<std::size_t>(2 * n - 1));
  for (int i = 0; i < n; ++i) clusters.push_back({i, true});

  // Distance between active clusters, indexed by cluster id.
  std::vector<std::vector<double>> dist(static_cast<std::size_t>(2 * n - 1));
  for (auto& row : dist) row.assign(static_cast<std::size_t>(2 * n - 1), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = (rows.row(i) - rows.row(j)).norm();
      dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d;
      dist[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = d;
    }
  }

  std::vector<int> sizes(static_cast<std::size_t>(2 * n - 1), 1);
  std::vector<int> left_child(static_cast<std::size_t>(2 * n - 1), -1);
  std::vector<int> right_child(static_cast<std::size_t>(2 * n - 1), -1);

  for (int step = 0; step < n - 1; ++step) {
    int best_i = -1, best_j = -1;
    double best_d = 0.0;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      if (!clusters[a].active) continue;
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        if (!clusters[b].active) continue;
        const double d = dist[static_cast<std::size_t>(clusters[a].id)]
                             [static_cast<std::size_t>(clusters[b].id)];
        if (best_i < 0 || d < best_d) {
          best_d = d;
          best_i = clusters[a].id;
          best_j = clusters[b].id;
        }
      }
    }
    const int new_id = n + step;
    left_child[static_cast<std::size_t>(new_id)] = best_i;
    right_child[static_cast<std::size_t>(new_id)] = best_j;
    sizes[static_cast<std::size_t>(new_id)] =
        sizes[static_cast<std::size_t>(best_i)] + sizes[static_cast<std::size_t>(best_j)];
    out.merges.push_back({best_i, best_j, best_d, sizes[static_cast<std::size_t>(new_id)]});

    // Complete linkage via Lance-Williams: d(k, i+j) = max(d(k,i), d(k,j)).
    for (const auto& c : clusters) {
      if (!c.active || c.id == best_i || c.id == best_j) continue;
      const double d =
          std::max(dist[static_cast<std::size_t>(c.id)][static_cast<std::size_t>(best_i)],
                   dist[static_cast<std::size_t>(c.id)][static_cast<std::size_t>(best_j)]);
      dist[static_cast<std::size_t>(c.id)][static_cast<std::size_t>(new_id)] = d;
      dist[static_cast<std::size_t>(new_id)][static_cast<std::size_t>(c.id)] = d;
    }
    for (auto& c : clusters) {
      if (c.id == best_i || c.id == best_j) c.active = false;
    }
    clusters.push_back({new_id, true});
  }

  // Leaf order by depth-first traversal, left subtree first.
  std::vector<int> stack = {2 * n - 2};
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    if (node < n) {
      out.leaf_order.push_back(node);
    } else {
      stack.push_back(right_child[static_cast<std::size_t>(node)]);
      stack.push_back(left_child[static_cast<std::size_t>(node)]);
    }
  }
  return out;
}

CimLayout build_cim(const SplsModel& model) {
  if (model.n_components < 1) {
    throw NumericError("build_cim: no retained component");
  }
  CimLayout layout;
  const Eigen::VectorXd u = model.u.col(0);
  const Eigen::VectorXd v = model.v.col(0);
  layout.cells = u * v.transpose();

  layout.row_dendrogram = hclust_complete(layout.cells);
  layout.col_dendrogram = hclust_complete(layout.cells.transpose());
  layout.row_order = layout.row_dendrogram.leaf_order;
  layout.col_order = layout.col_dendrogram.leaf_order;
  return layout;
}

}  // namespace emgsens
