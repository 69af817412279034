#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tboot/model.hpp"

namespace tboot::testing {

// Three-state chain with exchangeable bivariate Gaussian emissions; the
// workhorse model for most numeric checks here.
inline HmmSpec three_state_gaussian_spec() {
  Mat p(3, 3);
  p << 0.2, 0.3, 0.5,  //
      0.3, 0.4, 0.3,   //
      0.5, 0.3, 0.2;
  Mat cov(2, 2);
  cov << 1.0, 0.3, 0.3, 1.0;
  std::vector<EmissionState> emissions;
  for (double m : {0.0, 5.0, 10.0})
    emissions.push_back(make_gaussian(Vec::Constant(2, m), cov));
  return make_hmm(TransitionMatrix::from_matrix(p), std::move(emissions));
}

// Two-state Poisson HMM (seizure-count style parameters by default).
inline HmmSpec two_state_poisson_spec(double p01 = 0.197, double p10 = 0.61,
                                      double rate0 = 0.251,
                                      double rate1 = 2.0) {
  Mat p(2, 2);
  p << 1.0 - p01, p01, p10, 1.0 - p10;
  std::vector<EmissionState> emissions{make_poisson(rate0),
                                       make_poisson(rate1)};
  return make_hmm(TransitionMatrix::from_matrix(p), std::move(emissions));
}

// Random ergodic chain: strictly positive rows, so irreducible + aperiodic.
inline TransitionMatrix random_chain(int d, RngStream& rng) {
  Mat p(d, d);
  for (int i = 0; i < d; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < d; ++j) {
      p(i, j) = 0.05 + std::exp(0.8 * rng.normal());
      row_sum += p(i, j);
    }
    p.row(i) /= row_sum;
  }
  return TransitionMatrix::from_matrix(p);
}

inline HmmSpec random_gaussian_spec(int d, int obs_dim, RngStream& rng) {
  auto transition = random_chain(d, rng);
  std::vector<EmissionState> emissions;
  for (int i = 0; i < d; ++i) {
    Vec mean(obs_dim);
    for (int k = 0; k < obs_dim; ++k) mean[k] = 3.0 * rng.normal();
    Mat a(obs_dim, obs_dim);
    for (int r = 0; r < obs_dim; ++r)
      for (int c = 0; c < obs_dim; ++c) a(r, c) = rng.normal();
    Mat cov = a * a.transpose() + 0.3 * Mat::Identity(obs_dim, obs_dim);
    emissions.push_back(make_gaussian(mean, cov));
  }
  return make_hmm(std::move(transition), std::move(emissions));
}

// Likelihood by explicit summation over all state sequences; exponential in
// the sample size, used as the oracle for the forward recursion.
inline double enumeration_log_likelihood(const HmmSpec& spec, const Mat& obs) {
  const int d = spec.transition.size();
  const int m = static_cast<int>(obs.rows());
  const Vec pi = stationary_distribution(spec.transition);
  std::vector<int> states(m + 1, 0);
  double total = 0.0;
  bool done = false;
  while (!done) {
    double prob = pi[states[0]];
    for (int t = 1; t <= m; ++t) {
      prob *= spec.transition(states[t - 1], states[t]) *
              std::exp(log_density(spec.emissions[states[t]],
                                   obs.row(t - 1).transpose()));
    }
    total += prob;
    int pos = m;
    while (pos >= 0 && ++states[pos] == d) states[pos--] = 0;
    done = pos < 0;
  }
  return std::log(total);
}

}  // namespace tboot::testing
