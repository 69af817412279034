#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <variant>

#include "tboot/emissions.hpp"

namespace tboot {

// The additive component the bootstrap statistic is a function of. For a
// statistic that is directly a smooth function of the observation mean this
// is the identity; for EM-type estimators the statistic is linearized in a
// richer feature mean, here (y, 1{y=0}) for Poisson counts.
enum class FeatureKind { identity, count_and_zero };

struct FeatureMap {
  FeatureKind kind = FeatureKind::identity;

  int dim(int obs_dim_in) const {
    return kind == FeatureKind::identity ? obs_dim_in : 2;
  }

  Vec apply(const Vec& y) const {
    if (kind == FeatureKind::identity) return y;
    if (y.size() != 1)
      throw std::invalid_argument("count_and_zero expects scalar counts");
    Vec out(2);
    out[0] = y[0];
    out[1] = (y[0] == 0.0) ? 1.0 : 0.0;
    return out;
  }
};

// E[psi(Y) | state] in closed form.
inline Vec feature_mean(const EmissionState& e, const FeatureMap& f) {
  if (f.kind == FeatureKind::identity) return emission_mean(e);
  const double rate = std::get<PoissonEmission>(e).rate;
  Vec m(2);
  m[0] = rate;
  m[1] = std::exp(-rate);
  return m;
}

// Cov[psi(Y) | state] in closed form.
inline Mat feature_cov(const EmissionState& e, const FeatureMap& f) {
  if (f.kind == FeatureKind::identity) return emission_cov(e);
  const double rate = std::get<PoissonEmission>(e).rate;
  const double p0 = std::exp(-rate);
  Mat c(2, 2);
  c(0, 0) = rate;
  c(1, 1) = p0 * (1.0 - p0);
  // E[Y 1{Y=0}] = 0, so Cov(Y, 1{Y=0}) = -rate * p0.
  c(0, 1) = c(1, 0) = -rate * p0;
  return c;
}

// log E[exp(t . psi(Y)) | state]. For (y, 1{y=0}) the extra indicator only
// reweights the zero atom, so the normalizer stays closed-form.
inline double feature_log_mgf(const EmissionState& e, const FeatureMap& f,
                              const Vec& t) {
  if (f.kind == FeatureKind::identity) return log_mgf(e, t);
  if (t.size() != 2)
    throw std::invalid_argument("feature_log_mgf: expected 2-vector");
  const double rate = std::get<PoissonEmission>(e).rate;
  const double m1 = rate * std::expm1(t[0]);  // log mgf of the count part
  // Z = e^{m1} + (e^{t2} - 1) e^{-rate}
  return m1 + std::log1p(std::expm1(t[1]) * std::exp(-rate - m1));
}

// Distribution with density proportional to exp(t . psi(y)) f(y). Sampling
// and log-density are exact; no rejection against an unnormalized target.
class FeatureTiltedEmission {
 public:
  FeatureTiltedEmission(const EmissionState& base, const FeatureMap& feat,
                        const Vec& tilt)
      : feat_(feat), tilt_(tilt), log_norm_(feature_log_mgf(base, feat, tilt)) {
    if (feat.kind == FeatureKind::identity) {
      conjugate_ = exponential_tilt(base, tilt);
    } else {
      base_rate_ = std::get<PoissonEmission>(base).rate;
      tilted_rate_ = base_rate_ * std::exp(tilt[0]);
      // P(Y = 0) under the tilted law.
      zero_prob_ = std::exp(tilt[1] - base_rate_ - log_norm_);
      base_ = base;
    }
  }

  double log_density(const EmissionState& base, const Vec& y) const {
    return tilt_.dot(feat_.apply(y)) + tboot::log_density(base, y) - log_norm_;
  }

  Vec sample(RngStream& rng) const {
    if (feat_.kind == FeatureKind::identity)
      return tboot::sample(conjugate_, rng);
    // Inversion over {0} + Poisson(tilted_rate) restricted to y >= 1.
    double u = rng.uniform();
    if (u <= zero_prob_) return Vec::Constant(1, 0.0);
    u -= zero_prob_;
    // Remaining mass at y >= 1 is e^{m1 - log_norm} * Pois(tilted_rate)(y).
    const double scale =
        std::exp(base_rate_ * std::expm1(tilt_[0]) - log_norm_);
    double pmf = scale * std::exp(-tilted_rate_);
    long k = 0;
    const long cap = static_cast<long>(10.0 * tilted_rate_) + 200;
    while (k < cap) {
      ++k;
      pmf *= tilted_rate_ / static_cast<double>(k);
      u -= pmf;
      if (u <= 0.0) break;
    }
    return Vec::Constant(1, static_cast<double>(k));
  }

  double log_normalizer() const { return log_norm_; }
  const Vec& tilt() const { return tilt_; }

 private:
  FeatureMap feat_;
  Vec tilt_;
  double log_norm_ = 0.0;
  EmissionState conjugate_ = PoissonEmission{1.0};  // identity-feature case
  EmissionState base_ = PoissonEmission{1.0};       // count_and_zero case
  double base_rate_ = 0.0;
  double tilted_rate_ = 0.0;
  double zero_prob_ = 0.0;
};

}  // namespace tboot
