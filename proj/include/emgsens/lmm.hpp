#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "emgsens/features.hpp"
#include "emgsens/types.hpp"

namespace emgsens {

struct Grouping {
  std::string name;
  Eigen::VectorXi idx;  // level index per observation
  int n_levels = 0;
};

struct LmmOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;
};

struct LmmFit {
  std::string feature_name;
  Eigen::VectorXd beta;  // intercept first
  Eigen::VectorXd se;
  Eigen::VectorXd t;
  Eigen::VectorXd p;     // two-tailed Wald, normal reference
  std::vector<double> sigma2_random;  // one per grouping factor
  double sigma2_residual = 0.0;
  Eigen::VectorXd eta2;  // per fixed effect excluding the intercept
  double r2_marginal = 0.0;
  double r2_conditional = 0.0;
  int n_obs = 0;
  int n_fixed = 0;    // columns of X including the intercept
  int n_factors = 0;
  bool converged = false;
  double loglik_reml = 0.0;
  double var_fixed = 0.0;  // population variance of X*beta over rows
  std::vector<double> criterion_trace;  // REML deviance at accepted steps
};

// Profiled REML over the log variance ratios, quasi-Newton with
// finite-difference gradients; the mixed-model equations are solved by a
// dense block Cholesky at each step (the random-effect dimension is the
// total level count, which stays small here).
class LmmSolver {
 public:
  LmmSolver(const Eigen::MatrixXd& X, std::vector<Grouping> groups,
            LmmOptions options = {});

  LmmFit fit(const Eigen::VectorXd& y) const;

 private:
  Eigen::MatrixXd X_;
  std::vector<Grouping> groups_;
  LmmOptions options_;
  int n_ = 0;
  int p_ = 0;
  int q_ = 0;
  std::vector<int> offsets_;       // column offset of each factor block
  std::vector<int> block_of_col_;  // factor owning each of the q columns
  Eigen::MatrixXd ztz_;            // q x q
  Eigen::MatrixXd ztx_;            // q x p
  Eigen::MatrixXd xtx_;            // p x p

  struct Eval;
  Eval evaluate(const Eigen::VectorXd& theta, const Eigen::VectorXd& zty,
                const Eigen::VectorXd& xty, double yty, bool want_beta) const;
};

LmmFit fit_lmm(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
               const std::vector<Grouping>& groups, LmmOptions options = {});

// eta^2 = t^2 / (t^2 + df_res) with df_res = n - rank(X) - n_factors.
Eigen::VectorXd partial_eta2(const LmmFit& fit);

// (marginal, conditional) variance-explained decomposition.
std::pair<double, double> r2_decomposition(const LmmFit& fit);

// Fixed design plus standardized responses and grouping vectors for the
// feature matrix / demographics join.
struct DesignData {
  Eigen::MatrixXd X;  // n x 13: intercept + 12 standardized demographics
  Eigen::MatrixXd Y;  // n x n_features, each column z-scored
  std::vector<std::string> fixed_names;    // the 12 demographics
  std::vector<std::string> feature_names;
  std::vector<Grouping> groups;            // subject, gesture, channel
};

DesignData standardize_design(const FeatureMatrix& features,
                              const DemographicTable& demographics);

std::vector<LmmFit> fit_all_features(const DesignData& design,
                                     const LmmOptions& options, int jobs);

}  // namespace emgsens
