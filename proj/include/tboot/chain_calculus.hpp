#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tboot/features.hpp"
#include "tboot/model.hpp"
#include "tboot/rng.hpp"

namespace tboot {

// Per-state moments of the (possibly feature-mapped) additive component.
struct ChainMoments {
  Vec pi;                       // stationary law
  Mat state_means;              // d x l
  std::vector<Mat> state_covs;  // per-state covariance of psi(Y)
  Vec stationary_mean;          // pi-weighted mean
  Mat centered_means;           // Gamma: state_means - stationary_mean
};

inline ChainMoments chain_moments(const HmmSpec& spec,
                                  const FeatureMap& feat = {}) {
  ChainMoments m;
  const int d = spec.transition.size();
  const int l = feat.dim(spec.obs_dim);
  m.pi = stationary_distribution(spec.transition);
  m.state_means.resize(d, l);
  m.state_covs.reserve(d);
  for (int j = 0; j < d; ++j) {
    m.state_means.row(j) = feature_mean(spec.emissions[j], feat).transpose();
    m.state_covs.push_back(feature_cov(spec.emissions[j], feat));
  }
  m.stationary_mean = m.state_means.transpose() * m.pi;
  m.centered_means =
      m.state_means - Vec::Ones(d) * m.stationary_mean.transpose();
  // Solvability identity for the Poisson equation, exact by construction.
  const double defect =
      (m.pi.transpose() * m.centered_means).cwiseAbs().maxCoeff();
  if (defect > 1e-12)
    throw std::runtime_error("chain_moments: pi' Gamma != 0, defect " +
                             std::to_string(defect));
  return m;
}

struct PoissonSolution {
  Mat delta;        // d x l, normalized so pi' delta = 0
  double residual;  // ||(I-P) delta - P Gamma||_inf
};

// Solve (I - P) Delta = P Gamma for the state offsets. The singular system
// is regularized by the rank-one correction (I - P + 1 pi'), which pins the
// pi-centered solution; downstream formulas only use differences.
inline PoissonSolution solve_poisson(const TransitionMatrix& P,
                                     const Mat& gamma) {
  const int d = P.size();
  if (gamma.rows() != d)
    throw std::invalid_argument("solve_poisson: Gamma must have d rows");
  const Vec pi = stationary_distribution(P);
  const Vec defect = (pi.transpose() * gamma).transpose().cwiseAbs();
  if (defect.maxCoeff() > 1e-8)
    throw std::invalid_argument(
        "solve_poisson: pi' Gamma != 0 (inconsistent system), defect " +
        std::to_string(defect.maxCoeff()));
  const Mat rhs = P.probs() * gamma;
  Mat a = Mat::Identity(d, d) - P.probs() + Vec::Ones(d) * pi.transpose();
  PoissonSolution sol;
  sol.delta = a.partialPivLu().solve(rhs);
  // Re-center exactly; the LU solution carries rounding in pi' delta.
  sol.delta -= Vec::Ones(d) * (pi.transpose() * sol.delta);
  sol.residual = ((Mat::Identity(d, d) - P.probs()) * sol.delta - rhs)
                     .cwiseAbs()
                     .maxCoeff();
  return sol;
}

inline double poisson_residual(const TransitionMatrix& P, const Mat& gamma,
                               const Mat& delta) {
  const int d = P.size();
  return ((Mat::Identity(d, d) - P.probs()) * delta - P.probs() * gamma)
      .cwiseAbs()
      .maxCoeff();
}

struct AsymptoticCovariance {
  Mat sigma;
  enum class Provenance { formula, empirical } provenance;
  Mat mc_se;  // entrywise standard errors; zero for the formula route
};

// Asymptotic covariance of S_n/sqrt(n) in martingale form: the within-state
// emission covariance plus the quadratic form of gamma_j + delta_j - delta_i
// over the edge law pi_i p_ij.
inline AsymptoticCovariance asymptotic_covariance(const ChainMoments& moments,
                                                  const TransitionMatrix& P,
                                                  const PoissonSolution& sol) {
  const int d = P.size();
  const int l = static_cast<int>(moments.state_means.cols());
  Mat sigma = Mat::Zero(l, l);
  for (int i = 0; i < d; ++i) sigma += moments.pi[i] * moments.state_covs[i];
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double w = moments.pi[i] * P(i, j);
      if (w == 0.0) continue;
      const Vec v = (moments.centered_means.row(j) + sol.delta.row(j) -
                     sol.delta.row(i))
                        .transpose();
      sigma += w * v * v.transpose();
    }
  }
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return {sigma, AsymptoticCovariance::Provenance::formula, Mat::Zero(l, l)};
}

// Simulation cross-check: sample covariance of (S_n - n mu)/sqrt(n) over
// independent paths, with entrywise Monte Carlo standard errors.
inline AsymptoticCovariance empirical_covariance_oracle(
    const HmmSpec& spec, int n, int reps, RngStream rng,
    const FeatureMap& feat = {}) {
  if (n < 10000)
    throw std::invalid_argument("empirical_covariance_oracle: n >= 1e4");
  const int l = feat.dim(spec.obs_dim);
  const ChainMoments moments = chain_moments(spec, feat);
  const Vec init = moments.pi;
  Mat draws(reps, l);
  for (int r = 0; r < reps; ++r) {
    RngStream stream = rng.child(r);
    const Path path = simulate(spec, n, init, stream);
    Vec total = Vec::Zero(l);
    for (int t = 0; t < n; ++t)
      total += feat.apply(path.observations.row(t).transpose());
    draws.row(r) =
        ((total - double(n) * moments.stationary_mean) / std::sqrt(double(n)))
            .transpose();
  }
  const Vec mean = draws.colwise().mean().transpose();
  Mat centered = draws - Vec::Ones(reps) * mean.transpose();
  Mat sigma = centered.transpose() * centered / double(reps - 1);
  Mat se(l, l);
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < l; ++b)
      se(a, b) = std::sqrt((sigma(a, a) * sigma(b, b) + sigma(a, b) * sigma(a, b)) /
                           double(reps - 1));
  return {sigma, AsymptoticCovariance::Provenance::empirical, se};
}

namespace detail {

struct PerronPair {
  double log_eigenvalue;
  Vec right;  // strictly positive
};

// Dominant eigenpair of an entrywise-nonnegative irreducible matrix, scaled
// to avoid overflow in the mgf factors. Power iteration with a dense solve
// as fallback.
inline PerronPair perron_pair(const Mat& m_log_scaled, double log_scale) {
  const int d = static_cast<int>(m_log_scaled.rows());
  Vec v = Vec::Constant(d, 1.0 / d);
  double lambda = 1.0;
  bool converged = false;
  for (int iter = 0; iter < 50000; ++iter) {
    Vec w = m_log_scaled * v;
    lambda = w.sum();
    w /= lambda;
    if ((m_log_scaled * w - lambda * w).cwiseAbs().maxCoeff() <=
        1e-15 * std::max(1.0, lambda)) {
      v = w;
      converged = true;
      break;
    }
    v = w;
  }
  if (!converged) {
    Eigen::EigenSolver<Mat> solver(m_log_scaled);
    int best = 0;
    for (int k = 1; k < d; ++k)
      if (solver.eigenvalues()[k].real() > solver.eigenvalues()[best].real())
        best = k;
    lambda = solver.eigenvalues()[best].real();
    v = solver.eigenvectors().col(best).real();
    if (v.sum() < 0) v = -v;
  }
  if (v.minCoeff() <= 0.0)
    throw std::runtime_error("perron_pair: non-positive eigenvector");
  return {std::log(lambda) + log_scale, v};
}

}  // namespace detail

// Exponentially twisted kernel: the chain transition reweighted by the
// per-state mgf of the tilt together with the Perron eigenfunction, and the
// matching tilted emissions.
struct TwistingTransform {
  Vec theta;
  double log_eigenvalue;  // Lambda(theta), Lambda(0) = 0
  Vec eigenfunction;      // r(.;theta) > 0, normalized pi . r = 1
  TransitionMatrix twisted;
  std::vector<FeatureTiltedEmission> twisted_emissions;
};

inline TwistingTransform twist_kernel(const HmmSpec& spec, const Vec& theta,
                                      const FeatureMap& feat = {}) {
  const int d = spec.transition.size();
  Vec log_mgfs(d);
  for (int j = 0; j < d; ++j)
    log_mgfs[j] = feature_log_mgf(spec.emissions[j], feat, theta);
  const double log_scale = log_mgfs.maxCoeff();
  Mat m = spec.transition.probs();
  for (int j = 0; j < d; ++j)
    m.col(j) *= std::exp(log_mgfs[j] - log_scale);
  auto pair = detail::perron_pair(m, log_scale);

  const Vec pi = stationary_distribution(spec.transition);
  Vec r = pair.right / pair.right.dot(pi);

  Mat q(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j)
      q(i, j) = spec.transition(i, j) *
                std::exp(log_mgfs[j] - pair.log_eigenvalue) * r[j] / r[i];
    q.row(i) /= q.row(i).sum();
  }
  TwistingTransform out{theta, pair.log_eigenvalue, r,
                        TransitionMatrix::from_matrix(q), {}};
  out.twisted_emissions.reserve(d);
  for (int j = 0; j < d; ++j)
    out.twisted_emissions.emplace_back(spec.emissions[j], feat, theta);
  return out;
}

// Lambda(theta) alone, for finite differencing.
inline double log_perron_eigenvalue(const HmmSpec& spec, const Vec& theta,
                                    const FeatureMap& feat = {}) {
  const int d = spec.transition.size();
  Vec log_mgfs(d);
  for (int j = 0; j < d; ++j)
    log_mgfs[j] = feature_log_mgf(spec.emissions[j], feat, theta);
  const double log_scale = log_mgfs.maxCoeff();
  Mat m = spec.transition.probs();
  for (int j = 0; j < d; ++j)
    m.col(j) *= std::exp(log_mgfs[j] - log_scale);
  return detail::perron_pair(m, log_scale).log_eigenvalue;
}

// Gradient and Hessian of Lambda at 0 by Richardson-extrapolated central
// differences. The gradient recovers the stationary mean and the Hessian
// recovers the asymptotic covariance.
inline Vec log_perron_gradient(const HmmSpec& spec, const FeatureMap& feat = {},
                               double h = 1e-3) {
  const int l = feat.dim(spec.obs_dim);
  Vec grad(l);
  for (int k = 0; k < l; ++k) {
    auto diff = [&](double step) {
      Vec t = Vec::Zero(l);
      t[k] = step;
      const double plus = log_perron_eigenvalue(spec, t, feat);
      t[k] = -step;
      const double minus = log_perron_eigenvalue(spec, t, feat);
      return (plus - minus) / (2.0 * step);
    };
    const double coarse = diff(h);
    const double fine = diff(0.5 * h);
    grad[k] = (4.0 * fine - coarse) / 3.0;
  }
  return grad;
}

inline Mat log_perron_hessian(const HmmSpec& spec, const FeatureMap& feat = {},
                              double h = 1e-3) {
  const int l = feat.dim(spec.obs_dim);
  auto lam = [&](const Vec& t) { return log_perron_eigenvalue(spec, t, feat); };
  auto second = [&](int a, int b, double step) {
    Vec t = Vec::Zero(l);
    if (a == b) {
      t[a] = step;
      const double plus = lam(t);
      t[a] = -step;
      const double minus = lam(t);
      return (plus + minus) / (step * step);  // Lambda(0) = 0
    }
    t[a] = step;
    t[b] = step;
    const double pp = lam(t);
    t[b] = -step;
    const double pm = lam(t);
    t[a] = -step;
    const double mm = lam(t);
    t[b] = step;
    const double mp = lam(t);
    return (pp - pm - mp + mm) / (4.0 * step * step);
  };
  Mat hess(l, l);
  for (int a = 0; a < l; ++a) {
    for (int b = a; b < l; ++b) {
      const double coarse = second(a, b, h);
      const double fine = second(a, b, 0.5 * h);
      hess(a, b) = hess(b, a) = (4.0 * fine - coarse) / 3.0;
    }
  }
  return hess;
}

// Lemma-style check that the eigenfunction derivative at 0 solves the same
// Poisson equation as the tilt offsets: differences of dr/dtheta_k across
// states must match differences of Delta columns.
struct EigenDerivativeReport {
  bool pass;
  double max_abs_error;
  Mat derivative;    // d x l, pi-centered by the r normalization
  Mat poisson_delta;  // d x l
};

inline EigenDerivativeReport eigen_derivative_check(const HmmSpec& spec,
                                                    const FeatureMap& feat = {},
                                                    double h = 1e-3,
                                                    double tol = 1e-4) {
  const int d = spec.transition.size();
  const int l = feat.dim(spec.obs_dim);
  const ChainMoments moments = chain_moments(spec, feat);
  const PoissonSolution sol =
      solve_poisson(spec.transition, moments.centered_means);
  Mat deriv(d, l);
  for (int k = 0; k < l; ++k) {
    auto diff = [&](double step) -> Vec {
      Vec t = Vec::Zero(l);
      t[k] = step;
      const Vec plus = twist_kernel(spec, t, feat).eigenfunction;
      t[k] = -step;
      const Vec minus = twist_kernel(spec, t, feat).eigenfunction;
      return (plus - minus) / (2.0 * step);
    };
    const Vec coarse = diff(h);
    const Vec fine = diff(0.5 * h);
    deriv.col(k) = (4.0 * fine - coarse) / 3.0;
  }
  double max_err = 0.0;
  for (int k = 0; k < l; ++k) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const double lhs = deriv(i, k) - deriv(j, k);
        const double rhs = sol.delta(i, k) - sol.delta(j, k);
        max_err = std::max(max_err, std::abs(lhs - rhs));
      }
    }
  }
  return {max_err <= tol, max_err, deriv, sol.delta};
}

// Local-asymptotic-normality diagnostic: simulate under the base law and
// summarize log(dQ_n^eta / dP) against its predicted normal limit.
struct LanReport {
  double mean;
  double variance;
  double se_mean;
  double se_variance;
  double expected_mean;      // -eta' Sigma eta / 2
  double expected_variance;  // eta' Sigma eta
};

inline LanReport lan_diagnostic(const HmmSpec& spec, const Vec& eta, int n,
                                int reps, RngStream rng) {
  const ChainMoments moments = chain_moments(spec);
  const PoissonSolution sol =
      solve_poisson(spec.transition, moments.centered_means);
  const Mat sigma =
      asymptotic_covariance(moments, spec.transition, sol).sigma;
  const double quad = eta.dot(sigma * eta);

  const Vec theta = eta / std::sqrt(double(n));
  const TwistingTransform twist = twist_kernel(spec, theta);
  const Vec log_r = twist.eigenfunction.array().log();
  const Vec init = moments.pi;

  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream stream = rng.child(r);
    const Path path = simulate(spec, n, init, stream);
    const Vec s_n = additive_sum(path);
    const double log_ratio = theta.dot(s_n) -
                             double(n) * twist.log_eigenvalue +
                             log_r[path.states[n]] - log_r[path.states[0]];
    sum += log_ratio;
    sum_sq += log_ratio * log_ratio;
  }
  LanReport report;
  report.mean = sum / reps;
  report.variance = sum_sq / reps - report.mean * report.mean;
  report.variance *= double(reps) / double(reps - 1);
  report.se_mean = std::sqrt(report.variance / reps);
  report.se_variance = report.variance * std::sqrt(2.0 / double(reps - 1));
  report.expected_mean = -0.5 * quad;
  report.expected_variance = quad;
  return report;
}

}  // namespace tboot
