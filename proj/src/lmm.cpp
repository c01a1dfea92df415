#include "emgsens/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "emgsens/errors.hpp"
#include "emgsens/stats.hpp"
#include "emgsens/util.hpp"

namespace emgsens {

namespace {

constexpr double kThetaMin = -40.0;  // log variance ratio clamp
constexpr double kThetaMax = 40.0;
constexpr double kCollapse = 1e-10;  // ratios below this report sigma2 = 0

Eigen::VectorXd clamp_theta(Eigen::VectorXd theta) {
  for (int i = 0; i < theta.size(); ++i) {
    theta[i] = std::clamp(theta[i], kThetaMin, kThetaMax);
  }
  return theta;
}

}  // namespace

struct LmmSolver::Eval {
  double deviance = 0.0;
  double pwrss = 0.0;
  double logdet_a = 0.0;
  double logdet_s = 0.0;
  Eigen::VectorXd beta;
  Eigen::MatrixXd s_inverse;  // (X' V^-1 X)^-1 in relative scale
  bool ok = false;
};

LmmSolver::LmmSolver(const Eigen::MatrixXd& X, std::vector<Grouping> groups,
                     LmmOptions options)
    : X_(X), groups_(std::move(groups)), options_(options) {
  n_ = static_cast<int>(X_.rows());
  p_ = static_cast<int>(X_.cols());
  if (groups_.empty()) throw DataError("lmm: at least one grouping factor required");
  for (const auto& g : groups_) {
    if (g.idx.size() != n_) throw DataError("lmm: grouping length mismatch");
    if (g.n_levels < 2) {
      throw DataError("lmm: grouping factor " + g.name + " has fewer than 2 levels");
    }
    for (int i = 0; i < n_; ++i) {
      if (g.idx[i] < 0 || g.idx[i] >= g.n_levels) {
        throw DataError("lmm: grouping index out of range for factor " + g.name);
      }
    }
  }
  const int n_factors = static_cast<int>(groups_.size());
  if (n_ <= p_ + n_factors) {
    throw DataError("lmm: need more observations than fixed effects plus factors");
  }

  q_ = 0;
  for (const auto& g : groups_) {
    offsets_.push_back(q_);
    q_ += g.n_levels;
  }
  block_of_col_.resize(static_cast<std::size_t>(q_));
  for (int f = 0; f < n_factors; ++f) {
    for (int l = 0; l < groups_[static_cast<std::size_t>(f)].n_levels; ++l) {
      block_of_col_[static_cast<std::size_t>(offsets_[static_cast<std::size_t>(f)] + l)] = f;
    }
  }

  ztz_ = Eigen::MatrixXd::Zero(q_, q_);
  ztx_ = Eigen::MatrixXd::Zero(q_, p_);
  for (int i = 0; i < n_; ++i) {
    for (std::size_t f = 0; f < groups_.size(); ++f) {
      const int row = offsets_[f] + groups_[f].idx[i];
      ztx_.row(row) += X_.row(i);
      for (std::size_t g = 0; g < groups_.size(); ++g) {
        const int col = offsets_[g] + groups_[g].idx[i];
        ztz_(row, col) += 1.0;
      }
    }
  }
  xtx_ = X_.transpose() * X_;
}

LmmSolver::Eval LmmSolver::evaluate(const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& zty,
                                    const Eigen::VectorXd& xty, double yty,
                                    bool want_beta) const {
  Eval ev;
  const int n_factors = static_cast<int>(groups_.size());
  Eigen::VectorXd lambda(n_factors);
  for (int f = 0; f < n_factors; ++f) lambda[f] = std::exp(0.5 * theta[f]);

  Eigen::VectorXd col_scale(q_);
  for (int c = 0; c < q_; ++c) col_scale[c] = lambda[block_of_col_[static_cast<std::size_t>(c)]];

  // A = Lambda Z'Z Lambda + I
  Eigen::MatrixXd a = ztz_;
  for (int r = 0; r < q_; ++r) {
    for (int c = 0; c < q_; ++c) a(r, c) *= col_scale[r] * col_scale[c];
  }
  a.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt_a(a);
  if (llt_a.info() != Eigen::Success) {
    ev.deviance = std::numeric_limits<double>::infinity();
    return ev;
  }
  const Eigen::MatrixXd l = llt_a.matrixL();
  ev.logdet_a = 0.0;
  for (int i = 0; i < q_; ++i) ev.logdet_a += 2.0 * std::log(l(i, i));

  Eigen::MatrixXd ztx_scaled = col_scale.asDiagonal() * ztx_;
  const Eigen::MatrixXd rzx = llt_a.matrixL().solve(ztx_scaled);
  Eigen::MatrixXd s = xtx_ - rzx.transpose() * rzx;
  Eigen::LLT<Eigen::MatrixXd> llt_s(s);
  if (llt_s.info() != Eigen::Success) {
    // Singular either because X is rank-deficient or because an extreme
    // variance ratio wiped out the between-group information; the caller
    // distinguishes the two by where it happens.
    ev.deviance = std::numeric_limits<double>::infinity();
    return ev;
  }
  const Eigen::MatrixXd ls = llt_s.matrixL();
  ev.logdet_s = 0.0;
  for (int i = 0; i < p_; ++i) ev.logdet_s += 2.0 * std::log(ls(i, i));

  const Eigen::VectorXd cu = llt_a.matrixL().solve(col_scale.asDiagonal() * zty);
  const Eigen::VectorXd w =
      llt_s.matrixL().solve(xty - rzx.transpose() * cu);
  double pwrss = yty - cu.squaredNorm() - w.squaredNorm();
  pwrss = std::max(pwrss, 1e-300);
  ev.pwrss = pwrss;

  const double nmp = static_cast<double>(n_ - p_);
  ev.deviance = ev.logdet_a + ev.logdet_s +
                nmp * (1.0 + std::log(2.0 * M_PI * pwrss / nmp));
  if (want_beta) {
    ev.beta = llt_s.matrixL().transpose().solve(w);
    ev.s_inverse = llt_s.solve(Eigen::MatrixXd::Identity(p_, p_));
  }
  ev.ok = true;
  return ev;
}

LmmFit LmmSolver::fit(const Eigen::VectorXd& y) const {
  if (y.size() != n_) throw DataError("lmm: response length mismatch");
  const int n_factors = static_cast<int>(groups_.size());

  LmmFit fit;
  fit.n_obs = n_;
  fit.n_fixed = p_;
  fit.n_factors = n_factors;

  const double yty = y.squaredNorm();
  if (yty < 1e-280) {
    // Degenerate all-zero response (a constant feature after z-scoring).
    fit.beta = Eigen::VectorXd::Zero(p_);
    fit.se = Eigen::VectorXd::Zero(p_);
    fit.t = Eigen::VectorXd::Zero(p_);
    fit.p = Eigen::VectorXd::Ones(p_);
    fit.sigma2_random.assign(static_cast<std::size_t>(n_factors), 0.0);
    fit.converged = true;
    fit.eta2 = Eigen::VectorXd::Zero(std::max(0, p_ - 1));
    return fit;
  }

  Eigen::VectorXd zty = Eigen::VectorXd::Zero(q_);
  for (int i = 0; i < n_; ++i) {
    for (std::size_t f = 0; f < groups_.size(); ++f) {
      zty[offsets_[f] + groups_[f].idx[i]] += y[i];
    }
  }
  const Eigen::VectorXd xty = X_.transpose() * y;

  auto dev_at = [&](const Eigen::VectorXd& th) {
    return evaluate(th, zty, xty, yty, false).deviance;
  };
  auto grad_at = [&](const Eigen::VectorXd& th, double dev_here) {
    Eigen::VectorXd g(n_factors);
    const double h = 1e-5;
    for (int f = 0; f < n_factors; ++f) {
      Eigen::VectorXd up = th;
      Eigen::VectorXd dn = th;
      up[f] += h;
      dn[f] -= h;
      const double du = dev_at(up);
      const double dd = dev_at(dn);
      if (std::isfinite(du) && std::isfinite(dd)) {
        g[f] = (du - dd) / (2.0 * h);
      } else if (std::isfinite(dd)) {
        g[f] = (dev_here - dd) / h;
      } else if (std::isfinite(du)) {
        g[f] = (du - dev_here) / h;
      } else {
        g[f] = 0.0;
      }
    }
    return g;
  };

  // Quasi-Newton (BFGS) with Armijo backtracking on the REML deviance,
  // starting at unit variance ratios.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n_factors);
  double dev = dev_at(theta);
  if (!std::isfinite(dev)) {
    throw NumericError("lmm: singular fixed design");
  }
  Eigen::VectorXd grad = grad_at(theta, dev);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n_factors, n_factors);
  fit.criterion_trace.push_back(dev);

  bool converged = false;
  for (int iter = 0; iter < options_.max_iter; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < options_.grad_tol) {
      converged = true;
      break;
    }
    Eigen::VectorXd dir = -(hinv * grad);
    if (dir.dot(grad) > -1e-14) {
      hinv.setIdentity();
      dir = -grad;
    }
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd theta_new;
    double dev_new = 0.0;
    while (step > 1e-14) {
      theta_new = clamp_theta(theta + step * dir);
      const Eigen::VectorXd actual = theta_new - theta;
      if (actual.lpNorm<Eigen::Infinity>() < 1e-16) break;
      dev_new = dev_at(theta_new);
      if (std::isfinite(dev_new) && dev_new <= dev + 1e-4 * grad.dot(actual)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent step available; treat a flat neighborhood as converged.
      converged = grad.lpNorm<Eigen::Infinity>() < 1e-3;
      break;
    }
    const Eigen::VectorXd s = theta_new - theta;
    const Eigen::VectorXd grad_new = grad_at(theta_new, dev_new);
    const Eigen::VectorXd dg = grad_new - grad;
    const double sy = s.dot(dg);
    if (sy > 1e-12) {
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n_factors, n_factors);
      const Eigen::MatrixXd v = eye - s * dg.transpose() / sy;
      hinv = v * hinv * v.transpose() + s * s.transpose() / sy;
    }
    theta = theta_new;
    dev = dev_new;
    grad = grad_new;
    fit.criterion_trace.push_back(dev);
  }

  const Eval final = evaluate(theta, zty, xty, yty, true);
  if (!std::isfinite(final.deviance)) {
    throw NumericError("lmm: solution not positive definite");
  }
  fit.converged = converged;
  fit.loglik_reml = -0.5 * final.deviance;
  fit.sigma2_residual = final.pwrss / static_cast<double>(n_ - p_);
  fit.sigma2_random.resize(static_cast<std::size_t>(n_factors));
  for (int f = 0; f < n_factors; ++f) {
    const double ratio = std::exp(theta[f]);
    fit.sigma2_random[static_cast<std::size_t>(f)] =
        ratio < kCollapse ? 0.0 : ratio * fit.sigma2_residual;
  }
  fit.beta = final.beta;
  fit.se.resize(p_);
  fit.t.resize(p_);
  fit.p.resize(p_);
  for (int j = 0; j < p_; ++j) {
    fit.se[j] = std::sqrt(std::max(0.0, fit.sigma2_residual * final.s_inverse(j, j)));
    fit.t[j] = fit.se[j] > 0.0 ? fit.beta[j] / fit.se[j] : 0.0;
    fit.p[j] = p_two_tailed_normal(fit.t[j]);
  }

  const Eigen::VectorXd fitted = X_ * fit.beta;
  fit.var_fixed = (fitted.array() - fitted.mean()).square().mean();

  fit.eta2 = partial_eta2(fit);
  const auto r2 = r2_decomposition(fit);
  fit.r2_marginal = r2.first;
  fit.r2_conditional = r2.second;
  return fit;
}

LmmFit fit_lmm(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
               const std::vector<Grouping>& groups, LmmOptions options) {
  return LmmSolver(X, groups, options).fit(y);
}

Eigen::VectorXd partial_eta2(const LmmFit& fit) {
  const int slopes = std::max(0, fit.n_fixed - 1);
  Eigen::VectorXd eta(slopes);
  const double df_res =
      static_cast<double>(fit.n_obs - fit.n_fixed - fit.n_factors);
  for (int j = 0; j < slopes; ++j) {
    const double t2 = fit.t[j + 1] * fit.t[j + 1];
    eta[j] = t2 / (t2 + df_res);
  }
  return eta;
}

std::pair<double, double> r2_decomposition(const LmmFit& fit) {
  double random_sum = 0.0;
  for (double s : fit.sigma2_random) random_sum += s;
  const double denom = fit.var_fixed + random_sum + fit.sigma2_residual;
  if (denom <= 0.0) return {0.0, 0.0};
  return {fit.var_fixed / denom, (fit.var_fixed + random_sum) / denom};
}

DesignData standardize_design(const FeatureMatrix& features,
                              const DemographicTable& demographics) {
  const int n = features.n_rows();
  if (n == 0) throw DataError("standardize_design: empty feature matrix");

  // Subject list in feature-matrix order; every subject must be present in
  // the demographic table.
  std::vector<std::string> subjects;
  std::vector<int> subj_row;  // demographic row per unique subject
  std::vector<int> subj_of_obs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::string& s = features.subjects[static_cast<std::size_t>(i)];
    int idx = -1;
    for (std::size_t k = 0; k < subjects.size(); ++k) {
      if (subjects[k] == s) {
        idx = static_cast<int>(k);
        break;
      }
    }
    if (idx < 0) {
      const int row = demographics.row_of(s);
      if (row < 0) {
        throw DataError("standardize_design: subject " + s +
                        " missing from the demographic table");
      }
      for (int c = 0; c < kNumDemographics; ++c) {
        if (demographics.is_missing(row, c)) {
          throw DataError("standardize_design: demographics not fully imputed "
                          "for subject " + s);
        }
      }
      idx = static_cast<int>(subjects.size());
      subjects.push_back(s);
      subj_row.push_back(row);
    }
    subj_of_obs[static_cast<std::size_t>(i)] = idx;
  }
  const int n_subjects = static_cast<int>(subjects.size());

  // z-score each demographic over subjects (population sd); Sex is only
  // mean-centered to keep a unit contrast between the two codes.
  const auto& cols = demographic_columns();
  const int sex_col = demographic_index("Sex");
  Eigen::MatrixXd subj_z(n_subjects, kNumDemographics);
  for (int c = 0; c < kNumDemographics; ++c) {
    Eigen::VectorXd v(n_subjects);
    for (int s = 0; s < n_subjects; ++s) {
      v[s] = demographics.values(subj_row[static_cast<std::size_t>(s)], c);
    }
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().mean());
    if (c == sex_col) {
      subj_z.col(c) = v.array() - mean;
    } else {
      if (sd <= 0.0) {
        throw DataError("standardize_design: zero-variance demographic column " +
                        cols[static_cast<std::size_t>(c)]);
      }
      subj_z.col(c) = (v.array() - mean) / sd;
    }
  }

  DesignData design;
  design.fixed_names.assign(cols.begin(), cols.end());
  design.feature_names = features.feature_names;
  design.X = Eigen::MatrixXd::Ones(n, 1 + kNumDemographics);
  for (int i = 0; i < n; ++i) {
    design.X.block(i, 1, 1, kNumDemographics) =
        subj_z.row(subj_of_obs[static_cast<std::size_t>(i)]);
  }

  design.Y = features.values;
  for (int c = 0; c < design.Y.cols(); ++c) {
    const double mean = design.Y.col(c).mean();
    const double sd = std::sqrt((design.Y.col(c).array() - mean).square().mean());
    if (sd > 0.0) {
      design.Y.col(c) = (design.Y.col(c).array() - mean) / sd;
    } else {
      design.Y.col(c).setZero();
    }
  }

  Grouping subject{"subject", Eigen::VectorXi(n), n_subjects};
  for (int i = 0; i < n; ++i) subject.idx[i] = subj_of_obs[static_cast<std::size_t>(i)];

  std::set<int> gset(features.gestures.begin(), features.gestures.end());
  std::vector<int> glist(gset.begin(), gset.end());
  Grouping gesture{"gesture", Eigen::VectorXi(n), static_cast<int>(glist.size())};
  for (int i = 0; i < n; ++i) {
    gesture.idx[i] = static_cast<int>(
        std::lower_bound(glist.begin(), glist.end(),
                         features.gestures[static_cast<std::size_t>(i)]) -
        glist.begin());
  }

  std::set<int> cset(features.channels.begin(), features.channels.end());
  std::vector<int> clist(cset.begin(), cset.end());
  Grouping channel{"channel", Eigen::VectorXi(n), static_cast<int>(clist.size())};
  for (int i = 0; i < n; ++i) {
    channel.idx[i] = static_cast<int>(
        std::lower_bound(clist.begin(), clist.end(),
                         features.channels[static_cast<std::size_t>(i)]) -
        clist.begin());
  }

  design.groups = {subject, gesture, channel};
  return design;
}

std::vector<LmmFit> fit_all_features(const DesignData& design,
                                     const LmmOptions& options, int jobs) {
  LmmSolver solver(design.X, design.groups, options);
  const int n_features = static_cast<int>(design.Y.cols());
  std::vector<LmmFit> fits(static_cast<std::size_t>(n_features));
  parallel_for(static_cast<std::size_t>(n_features), jobs, [&](std::size_t f) {
    LmmFit fit = solver.fit(design.Y.col(static_cast<int>(f)));
    fit.feature_name = design.feature_names[f];
    fits[f] = std::move(fit);
  });
  return fits;
}

}  // namespace emgsens
