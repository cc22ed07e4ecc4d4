#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tfqkd/optics.hpp"
#include "tfqkd/rng.hpp"

using namespace tfqkd;
using namespace tfqkd::optics;

TEST_CASE("wrap_phase maps into [0, 2pi)") {
  CHECK(wrap_phase(0.0) == doctest::Approx(0.0));
  CHECK(wrap_phase(kTwoPi) == doctest::Approx(0.0));
  CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(5.0 * kPi) == doctest::Approx(kPi));
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double x = (rng.uniform() - 0.5) * 100.0;
    const double w = wrap_phase(x);
    CHECK(w >= 0.0);
    CHECK(w < kTwoPi);
    CHECK(std::abs(std::cos(w) - std::cos(x)) < 1e-9);
  }
}

TEST_CASE("interference formula and energy conservation") {
  const CoherentBin a(0.1, 0.0);
  SUBCASE("in phase: all energy on the constructive port") {
    const auto p = interfere_at_bs(a, CoherentBin(0.1, 0.0));
    CHECK(p.constructive == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(p.destructive == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("pi out of phase: all energy on the destructive port") {
    const auto p = interfere_at_bs(a, CoherentBin(0.1, kPi));
    CHECK(p.constructive == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.destructive == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("quadrature splits evenly") {
    const auto p = interfere_at_bs(a, CoherentBin(0.1, kPi / 2.0));
    CHECK(p.constructive == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(p.destructive == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("energy conservation over random inputs") {
    Rng rng(42);
    for (int i = 0; i < 10000; ++i) {
      const CoherentBin x(rng.uniform(), rng.uniform() * kTwoPi);
      const CoherentBin y(rng.uniform(), rng.uniform() * kTwoPi);
      const auto p = interfere_at_bs(x, y);
      CHECK(p.constructive >= 0.0);
      CHECK(p.destructive >= 0.0);
      CHECK(p.constructive + p.destructive ==
            doctest::Approx(x.mean_photons + y.mean_photons).epsilon(1e-12));
    }
  }
  SUBCASE("phase difference enters through cos: symmetric in sign") {
    const auto p1 = interfere_at_bs(a, CoherentBin(0.07, 1.234));
    const auto p2 = interfere_at_bs(CoherentBin(0.07, 1.234), a);
    CHECK(p1.constructive == doctest::Approx(p2.constructive).epsilon(1e-12));
    CHECK(p1.destructive == doctest::Approx(p2.destructive).epsilon(1e-12));
  }
}

TEST_CASE("finite contrast interpolates between full and no interference") {
  const CoherentBin a(0.2, 0.0);
  const CoherentBin b(0.2, 0.0);
  const auto ideal = interfere_at_bs(a, b, 1.0);
  const auto ref = interfere_at_bs(a, b);
  CHECK(ideal.constructive == doctest::Approx(ref.constructive).epsilon(1e-12));
  const auto none = interfere_at_bs(a, b, 0.0);
  CHECK(none.constructive == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(none.destructive == doctest::Approx(0.2).epsilon(1e-12));
  const auto half = interfere_at_bs(a, b, 0.5);
  CHECK(half.constructive == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(half.destructive == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(interfere_at_bs(a, b, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(interfere_at_bs(a, b, -0.1), std::invalid_argument);
}

TEST_CASE("click probability closed form") {
  CHECK(click_probability(0.1, 0.2, 0.0) ==
        doctest::Approx(1.0 - std::exp(-0.02)).epsilon(1e-12));
  CHECK(click_probability(0.0, 0.5, 0.01) == doctest::Approx(0.01));
  CHECK(click_probability(0.0, 0.5, 0.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(click_probability(-1.0, 0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(click_probability(1.0, 1.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(click_probability(1.0, 0.1, -0.1), std::invalid_argument);
}

TEST_CASE("click probability is monotone in every argument") {
  double prev = -1.0;
  for (double mu = 0.0; mu <= 2.0; mu += 0.1) {
    const double p = click_probability(mu, 0.3, 0.001);
    CHECK(p >= prev);
    prev = p;
  }
  prev = -1.0;
  for (double eta = 0.0; eta <= 1.0; eta += 0.05) {
    const double p = click_probability(0.5, eta, 0.001);
    CHECK(p >= prev);
    prev = p;
  }
  prev = -1.0;
  for (double pd = 0.0; pd <= 0.1; pd += 0.01) {
    const double p = click_probability(0.5, 0.3, pd);
    CHECK(p >= prev);
    prev = p;
  }
}

// Independent oracle: a threshold detector clicks when a Poisson-sampled
// photon count (mean eta * mu) is nonzero or a dark count fires.
TEST_CASE("Monte Carlo threshold-detector oracle") {
  const double mu = 0.1, eta = 0.2, p_dark = 0.003;
  const double predicted = click_probability(mu, eta, p_dark);
  Rng rng(1234);
  const int n = 2'000'000;
  const double l = std::exp(-eta * mu);
  int clicks = 0;
  for (int i = 0; i < n; ++i) {
    int k = 0;
    double prod = rng.uniform();
    while (prod > l) {
      ++k;
      prod *= rng.uniform();
    }
    if (k > 0 || rng.uniform() < p_dark) ++clicks;
  }
  const double freq = static_cast<double>(clicks) / n;
  const double se = std::sqrt(predicted * (1.0 - predicted) / n);
  CHECK(std::abs(freq - predicted) < 4.0 * se);
}

TEST_CASE("predict_pattern applies the beam splitter bin-wise") {
  ThreeBinFrame fa, fb;
  fa.bins = {CoherentBin(0.1, 0.0), CoherentBin(0.1, kPi),
             CoherentBin(0.1, 0.0)};
  fb.bins = {CoherentBin(0.1, 0.0), CoherentBin(0.1, 0.0),
             CoherentBin(0.1, kPi)};
  const auto ports = predict_pattern(fa, fb);
  CHECK(ports[0].constructive == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(ports[1].destructive == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(ports[2].destructive == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("CoherentBin validation") {
  CHECK_THROWS_AS(CoherentBin(-0.1, 0.0), std::invalid_argument);
  const CoherentBin b(0.1, -kPi);
  CHECK(b.phase == doctest::Approx(kPi));
}
