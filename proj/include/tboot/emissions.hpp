#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "tboot/rng.hpp"

namespace tboot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kLog2Pi = 1.8378770664093454836;

// Multivariate Gaussian observation family. The Cholesky factor is computed
// at construction; a non-SPD covariance is rejected here, never at sampling.
struct GaussianEmission {
  Vec mean;
  Mat cov;
  Mat chol_lower;
  double log_det_cov = 0.0;
};

// Poisson counts, one-dimensional observations.
struct PoissonEmission {
  double rate = 1.0;
};

using EmissionState = std::variant<GaussianEmission, PoissonEmission>;

inline EmissionState make_gaussian(const Vec& mean, const Mat& cov) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size())
    throw std::invalid_argument("gaussian emission: dimension mismatch");
  if (!cov.isApprox(cov.transpose(), 1e-12))
    throw std::invalid_argument("gaussian emission: covariance not symmetric");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(
        "gaussian emission: covariance not positive definite");
  GaussianEmission g;
  g.mean = mean;
  g.cov = cov;
  g.chol_lower = llt.matrixL();
  g.log_det_cov = 2.0 * g.chol_lower.diagonal().array().log().sum();
  return g;
}

inline EmissionState make_poisson(double rate) {
  if (!(rate > 0.0))
    throw std::invalid_argument("poisson emission: rate must be > 0");
  return PoissonEmission{rate};
}

inline int obs_dim(const EmissionState& e) {
  if (const auto* g = std::get_if<GaussianEmission>(&e))
    return static_cast<int>(g->mean.size());
  return 1;
}

inline Vec emission_mean(const EmissionState& e) {
  if (const auto* g = std::get_if<GaussianEmission>(&e)) return g->mean;
  return Vec::Constant(1, std::get<PoissonEmission>(e).rate);
}

inline Mat emission_cov(const EmissionState& e) {
  if (const auto* g = std::get_if<GaussianEmission>(&e)) return g->cov;
  return Mat::Constant(1, 1, std::get<PoissonEmission>(e).rate);
}

inline double log_density(const EmissionState& e, const Vec& y) {
  if (const auto* g = std::get_if<GaussianEmission>(&e)) {
    if (y.size() != g->mean.size())
      throw std::invalid_argument("log_density: dimension mismatch");
    const Vec centered = y - g->mean;
    const Vec z = g->chol_lower.triangularView<Eigen::Lower>().solve(centered);
    return -0.5 * (g->mean.size() * kLog2Pi + g->log_det_cov + z.squaredNorm());
  }
  const auto& p = std::get<PoissonEmission>(e);
  if (y.size() != 1) throw std::invalid_argument("log_density: expected scalar");
  const double v = y[0];
  const double k = std::round(v);
  if (v < 0.0 || std::abs(v - k) > 1e-9)
    throw std::domain_error(
        "poisson log_density: observation must be a nonnegative integer, got " +
        std::to_string(v));
  return -p.rate + k * std::log(p.rate) - std::lgamma(k + 1.0);
}

inline Vec sample(const EmissionState& e, RngStream& rng) {
  if (const auto* g = std::get_if<GaussianEmission>(&e)) {
    Vec z(g->mean.size());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return g->mean + g->chol_lower * z;
  }
  return Vec::Constant(
      1, static_cast<double>(rng.poisson(std::get<PoissonEmission>(e).rate)));
}

// log E[exp(t . Y)]; finite for all real t in both families.
inline double log_mgf(const EmissionState& e, const Vec& t) {
  if (const auto* g = std::get_if<GaussianEmission>(&e)) {
    if (t.size() != g->mean.size())
      throw std::invalid_argument("log_mgf: dimension mismatch");
    return t.dot(g->mean) + 0.5 * t.dot(g->cov * t);
  }
  if (t.size() != 1) throw std::invalid_argument("log_mgf: expected scalar");
  return std::get<PoissonEmission>(e).rate * std::expm1(t[0]);
}

inline double mgf(const EmissionState& e, const Vec& t) {
  return std::exp(log_mgf(e, t));
}

// The family with density proportional to exp(t . y) f(y): conjugate tilts,
// so Gaussian stays Gaussian and Poisson stays Poisson. The normalizer is
// mgf(e, t).
inline EmissionState exponential_tilt(const EmissionState& e, const Vec& t) {
  if (const auto* g = std::get_if<GaussianEmission>(&e))
    return make_gaussian(g->mean + g->cov * t, g->cov);
  const auto& p = std::get<PoissonEmission>(e);
  if (t.size() != 1)
    throw std::invalid_argument("exponential_tilt: expected scalar");
  return make_poisson(p.rate * std::exp(t[0]));
}

}  // namespace tboot
