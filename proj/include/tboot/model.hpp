#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tboot/emissions.hpp"
#include "tboot/rng.hpp"

namespace tboot {

// Row-stochastic transition matrix of an irreducible, aperiodic finite chain.
// Every construction path validates; downstream code can assume ergodicity.
class TransitionMatrix {
 public:
  static TransitionMatrix from_matrix(const Mat& p, double row_tol = 1e-12) {
    if (p.rows() != p.cols() || p.rows() < 1)
      throw std::invalid_argument("transition matrix must be square, d >= 1");
    const int d = static_cast<int>(p.rows());
    for (int i = 0; i < d; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < d; ++j) {
        const double v = p(i, j);
        if (!(v >= 0.0 && v <= 1.0))
          throw std::invalid_argument("transition entries must lie in [0,1]");
        row_sum += v;
      }
      if (std::abs(row_sum - 1.0) > row_tol)
        throw std::invalid_argument("transition row does not sum to 1");
    }
    if (!is_irreducible(p))
      throw std::invalid_argument("transition matrix is reducible");
    if (period(p) != 1)
      throw std::invalid_argument("transition matrix is periodic");
    return TransitionMatrix(p);
  }

  int size() const { return static_cast<int>(p_.rows()); }
  const Mat& probs() const { return p_; }
  double operator()(int i, int j) const { return p_(i, j); }

 private:
  explicit TransitionMatrix(Mat p) : p_(std::move(p)) {}

  static bool is_irreducible(const Mat& p) {
    const int d = static_cast<int>(p.rows());
    // Reachability closure over the positive-entry pattern.
    std::vector<std::vector<bool>> reach(d, std::vector<bool>(d, false));
    for (int s = 0; s < d; ++s) {
      std::vector<int> stack{s};
      reach[s][s] = true;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < d; ++v) {
          if (p(u, v) > 0.0 && !reach[s][v]) {
            reach[s][v] = true;
            stack.push_back(v);
          }
        }
      }
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (!reach[i][j]) return false;
    return true;
  }

  // Period = gcd over edges (u,v) of depth(u) + 1 - depth(v), with depths
  // from a BFS rooted at state 0. Assumes irreducibility.
  static int period(const Mat& p) {
    const int d = static_cast<int>(p.rows());
    std::vector<int> depth(d, -1);
    std::vector<int> queue{0};
    depth[0] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      for (int v = 0; v < d; ++v) {
        if (p(u, v) > 0.0 && depth[v] < 0) {
          depth[v] = depth[u] + 1;
          queue.push_back(v);
        }
      }
    }
    int g = 0;
    for (int u = 0; u < d; ++u)
      for (int v = 0; v < d; ++v)
        if (p(u, v) > 0.0) g = std::gcd(g, std::abs(depth[u] + 1 - depth[v]));
    return g == 0 ? 1 : g;
  }

  Mat p_;
};

// Unique stationary law pi with pi P = pi, sum(pi) = 1; solved as a dense
// linear system with the normalization replacing one redundant equation.
inline Vec stationary_distribution(const TransitionMatrix& P) {
  const int d = P.size();
  Mat a = P.probs().transpose() - Mat::Identity(d, d);
  a.row(d - 1).setOnes();
  Vec b = Vec::Zero(d);
  b[d - 1] = 1.0;
  Vec pi = a.partialPivLu().solve(b);
  const double residual =
      ((pi.transpose() * P.probs()).transpose() - pi).cwiseAbs().maxCoeff();
  if (residual > 1e-12 || pi.minCoeff() <= 0.0)
    throw std::runtime_error("stationary distribution solve failed");
  return pi;
}

// Hidden Markov model: ergodic chain plus a per-state observation family.
struct HmmSpec {
  TransitionMatrix transition;
  std::vector<EmissionState> emissions;
  int obs_dim = 0;
};

inline HmmSpec make_hmm(TransitionMatrix transition,
                        std::vector<EmissionState> emissions) {
  if (static_cast<int>(emissions.size()) != transition.size())
    throw std::invalid_argument("one emission family per state required");
  const int dim = obs_dim(emissions.front());
  for (const auto& e : emissions)
    if (obs_dim(e) != dim)
      throw std::invalid_argument("emissions must share observation dimension");
  return HmmSpec{std::move(transition), std::move(emissions), dim};
}

// A realization: states x_0..x_n and observations y_1..y_n (one per step),
// stored as rows of an n x obs_dim matrix.
struct Path {
  std::vector<int> states;
  Mat observations;
};

// Draw the next state from row `row` of a row-stochastic matrix.
inline int sample_transition(const Mat& p, int row, RngStream& rng) {
  const int d = static_cast<int>(p.cols());
  double u = rng.uniform();
  for (int j = 0; j < d - 1; ++j) {
    u -= p(row, j);
    if (u <= 0.0) return j;
  }
  return d - 1;
}

inline Path simulate(const HmmSpec& spec, int n, const Vec& init,
                     RngStream& rng) {
  if (n < 1) throw std::invalid_argument("simulate: n must be >= 1");
  const int d = spec.transition.size();
  if (init.size() != d || std::abs(init.sum() - 1.0) > 1e-9 ||
      init.minCoeff() < 0.0)
    throw std::invalid_argument("simulate: invalid initial distribution");
  Path path;
  path.states.resize(n + 1);
  path.observations.resize(n, spec.obs_dim);
  path.states[0] = rng.categorical(init.data(), d);
  const Mat& p = spec.transition.probs();
  for (int t = 1; t <= n; ++t) {
    const int cur = sample_transition(p, path.states[t - 1], rng);
    path.states[t] = cur;
    path.observations.row(t - 1) = sample(spec.emissions[cur], rng).transpose();
  }
  return path;
}

inline Path simulate(const HmmSpec& spec, int n, RngStream& rng) {
  return simulate(spec, n, stationary_distribution(spec.transition), rng);
}

// S_n = sum of observations; the zero vector for an empty path.
inline Vec additive_sum(const Path& path, int dim) {
  if (path.observations.rows() == 0) return Vec::Zero(dim);
  return path.observations.colwise().sum().transpose();
}

inline Vec additive_sum(const Path& path) {
  return additive_sum(path, static_cast<int>(path.observations.cols()));
}

}  // namespace tboot
