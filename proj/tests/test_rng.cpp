#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "tboot/rng.hpp"

using tboot::RngStream;

TEST_CASE("same key reproduces the same sequence") {
  RngStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("child streams are independent of parent consumption") {
  RngStream parent(7);
  RngStream child_before = parent.child(3);
  for (int i = 0; i < 17; ++i) parent.next_u64();
  RngStream child_after = parent.child(3);
  for (int i = 0; i < 100; ++i)
    REQUIRE(child_before.next_u64() == child_after.next_u64());
  REQUIRE(parent.child(3).next_u64() != parent.child(4).next_u64());
}

TEST_CASE("uniform lies in (0,1]") {
  RngStream rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
  }
}

TEST_CASE("normal moments match a CLT band") {
  RngStream rng(11);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  REQUIRE(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("poisson moments for small and large rates") {
  for (double rate : {0.251, 2.0, 35.0}) {
    RngStream rng(static_cast<std::uint64_t>(rate * 1000));
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(rate));
      sum += k;
      sum_sq += k * k;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double se_mean = std::sqrt(rate / n);
    REQUIRE(std::abs(mean - rate) < 4.0 * se_mean);
    REQUIRE(std::abs(var - rate) < 0.03 * rate + 4.0 * rate / std::sqrt(n));
  }
}

TEST_CASE("categorical matches its weights") {
  RngStream rng(5);
  std::vector<double> prob{0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  const int n = 300000;
  for (int i = 0; i < n; ++i) ++counts[rng.categorical(prob.data(), 3)];
  for (int k = 0; k < 3; ++k) {
    const double freq = double(counts[k]) / n;
    const double se = std::sqrt(prob[k] * (1 - prob[k]) / n);
    REQUIRE(std::abs(freq - prob[k]) < 4.0 * se);
  }
}
