#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace emgsens {

struct SplsModel {
  int n_components = 0;
  int keep_x = 0;
  Eigen::MatrixXd u;           // p_x x H sparse feature loadings, unit norm
  Eigen::MatrixXd v;           // p_y x H demographic loadings, unit norm
  Eigen::MatrixXd scores;      // n x H X-scores
  Eigen::MatrixXd x_loadings;  // p_x x H regression loadings X't/(t't)
  Eigen::MatrixXd y_loadings;  // p_y x H
  Eigen::VectorXd q2;          // per component, filled by q2_crossval
  bool converged = true;
};

double soft_threshold(double value, double lambda);

// NIPALS-style alternating iteration with soft-thresholded feature loadings;
// the threshold is the smallest value keeping at most keep_x nonzeros.
// X and Y must be column-standardized; components deflate both blocks by
// regression on the X-score. The component sign is fixed so the largest
// demographic loading is positive.
SplsModel fit_spls(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                   int keep_x, int n_components);

// Prediction with the first n_comp components (X in the same standardized
// coordinates the model was fit in).
Eigen::MatrixXd spls_predict(const SplsModel& model, const Eigen::MatrixXd& X,
                             int n_comp);

// Q2_h = 1 - PRESS_h / RSS_{h-1} over k folds; deterministic given seed.
Eigen::VectorXd q2_crossval(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                            int n_components, int k_folds, std::uint64_t seed,
                            int keep_x);

inline constexpr double kQ2RetentionThreshold = 0.0975;

struct HclustMerge {
  int left = 0;    // node ids: leaves 0..n-1, internal nodes n..2n-2
  int right = 0;
  double height = 0.0;
  int size = 0;
};

struct Dendrogram {
  std::vector<HclustMerge> merges;
  std::vector<int> leaf_order;
};

// Complete-linkage agglomerative clustering on Euclidean distances between
// rows. Ties break on the smallest cluster-id pair, so the result is a
// deterministic total order.
Dendrogram hclust_complete(const Eigen::MatrixXd& rows);

struct CimLayout {
  std::vector<int> row_order;
  std::vector<int> col_order;
  Eigen::MatrixXd cells;  // rank-one loading products in original order
  Dendrogram row_dendrogram;
  Dendrogram col_dendrogram;
};

// Clustered image map of the first component's loading products.
CimLayout build_cim(const SplsModel& model);

}  // namespace emgsens
