#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "tfqkd/rng.hpp"

using namespace tfqkd;

TEST_CASE("splitmix64 matches the reference test vector") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xE220A8397B1DCDAFULL);
  CHECK(splitmix64(state) == 0x6E789E6AA1B965F4ULL);
}

TEST_CASE("same seed reproduces the same stream") {
  Rng a(987654321), b(987654321);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("distinct seeds give distinct streams") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("derive_seed separates child streams") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    seeds.insert(derive_seed(7, i));
  }
  CHECK(seeds.size() == 10000);
  CHECK(derive_seed(7, 0) != derive_seed(8, 0));
}

TEST_CASE("uniform lies in [0, 1) with the right mean") {
  Rng rng(5);
  const int n = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  const double mean = sum / n;
  // SE of the mean of U(0,1) is 1/sqrt(12 n).
  CHECK(std::abs(mean - 0.5) < 4.0 / std::sqrt(12.0 * n));
}

TEST_CASE("normal has zero mean and unit variance") {
  Rng rng(6);
  const int n = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  // Var of the sample variance of a normal is 2/n.
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}
