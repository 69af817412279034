#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"
#include "tboot/model.hpp"

using namespace tboot;
using namespace tboot::testing;

TEST_CASE("stationary distribution of a doubly stochastic chain is uniform") {
  const auto spec = three_state_gaussian_spec();
  const Vec pi = stationary_distribution(spec.transition);
  for (int i = 0; i < 3; ++i) REQUIRE(pi[i] == Catch::Approx(1.0 / 3).margin(1e-13));
  const Vec residual = (pi.transpose() * spec.transition.probs()).transpose() - pi;
  REQUIRE(residual.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("single state chain has trivial stationary law") {
  auto P = TransitionMatrix::from_matrix(Mat::Constant(1, 1, 1.0));
  const Vec pi = stationary_distribution(P);
  REQUIRE(pi.size() == 1);
  REQUIRE(pi[0] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("two state stationary law matches the closed form") {
  const double p01 = 0.197, p10 = 0.61;
  const auto spec = two_state_poisson_spec(p01, p10);
  const Vec pi = stationary_distribution(spec.transition);
  REQUIRE(pi[0] == Catch::Approx(p10 / (p01 + p10)).margin(1e-12));
  REQUIRE(pi[1] == Catch::Approx(p01 / (p01 + p10)).margin(1e-12));
  // Frozen from the closed form: (0.755886, 0.244114) to 6 decimals.
  REQUIRE(pi[0] == Catch::Approx(0.755886).margin(5e-7));
  REQUIRE(pi[1] == Catch::Approx(0.244114).margin(5e-7));
}

TEST_CASE("reducible and periodic chains are rejected") {
  Mat reducible(2, 2);
  reducible << 1.0, 0.0, 0.0, 1.0;
  REQUIRE_THROWS_AS(TransitionMatrix::from_matrix(reducible),
                    std::invalid_argument);

  Mat periodic(2, 2);
  periodic << 0.0, 1.0, 1.0, 0.0;
  REQUIRE_THROWS_AS(TransitionMatrix::from_matrix(periodic),
                    std::invalid_argument);

  Mat bad_row(2, 2);
  bad_row << 0.5, 0.6, 0.5, 0.5;
  REQUIRE_THROWS_AS(TransitionMatrix::from_matrix(bad_row),
                    std::invalid_argument);
}

TEST_CASE("row stochasticity is preserved by construction") {
  RngStream rng(101);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 10);
    auto P = random_chain(d, rng);
    for (int i = 0; i < d; ++i)
      REQUIRE(P.probs().row(i).sum() == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("degenerate single state simulation is iid") {
  auto P = TransitionMatrix::from_matrix(Mat::Constant(1, 1, 1.0));
  auto spec = make_hmm(std::move(P), {make_poisson(2.0)});
  RngStream rng(3);
  const Path path = simulate(spec, 50, rng);
  REQUIRE(path.states.size() == 51);
  REQUIRE(path.observations.rows() == 50);
  for (int s : path.states) REQUIRE(s == 0);
}

TEST_CASE("simulation is a pure function of spec, n, init and seed") {
  const auto spec = three_state_gaussian_spec();
  RngStream a(77), b(77);
  const Path pa = simulate(spec, 200, a);
  const Path pb = simulate(spec, 200, b);
  REQUIRE(pa.states == pb.states);
  REQUIRE(pa.observations == pb.observations);
}

TEST_CASE("empirical state frequencies converge to the stationary law") {
  const auto spec = three_state_gaussian_spec();
  const Vec pi = stationary_distribution(spec.transition);
  RngStream rng(2024);
  const int n = 100000;
  const Path path = simulate(spec, n, rng);
  Vec freq = Vec::Zero(3);
  for (int t = 1; t <= n; ++t) freq[path.states[t]] += 1.0;
  freq /= n;
  // Dependent draws: inflate the iid standard error by the worst-case
  // mixing factor sqrt((1+r)/(1-r)) with r = 0.4, the second eigenvalue.
  const double inflate = std::sqrt(1.4 / 0.6);
  for (int s = 0; s < 3; ++s) {
    const double se = inflate * std::sqrt(pi[s] * (1 - pi[s]) / n);
    REQUIRE(std::abs(freq[s] - pi[s]) < 3.0 * se);
  }
}

TEST_CASE("additive sum examples") {
  const auto spec = three_state_gaussian_spec();
  RngStream rng(9);
  Path one = simulate(spec, 1, rng);
  REQUIRE(additive_sum(one) == Vec(one.observations.row(0).transpose()));

  Path empty;
  empty.states = {0};
  empty.observations.resize(0, 2);
  REQUIRE(additive_sum(empty, 2) == Vec::Zero(2));

  Path path = simulate(spec, 100, rng);
  Vec brute = Vec::Zero(2);
  for (int t = 0; t < 100; ++t) brute += path.observations.row(t).transpose();
  REQUIRE((additive_sum(path) - brute).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("invalid initial distribution is rejected") {
  const auto spec = three_state_gaussian_spec();
  RngStream rng(1);
  Vec bad(3);
  bad << 0.5, 0.5, 0.5;
  REQUIRE_THROWS_AS(simulate(spec, 10, bad, rng), std::invalid_argument);
}
