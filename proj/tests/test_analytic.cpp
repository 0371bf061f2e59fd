#include <cmath>
#include <stdexcept>
#include <random>

#include "aoi/analytic.hpp"
#include "doctest.h"

using namespace aoi;

namespace {

double linf_gap(const AoIDistribution& a, const AoIDistribution& b, int upto) {
  double g = 0.0;
  for (int n = 1; n <= upto; ++n) {
    g = std::max(g, std::abs(a.prob(n) - b.prob(n)));
  }
  return g;
}

DiscreteDist random_explicit(std::mt19937& rng, int max_support) {
  std::uniform_int_distribution<int> len(1, max_support);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::vector<double> w(len(rng));
  for (double& x : w) x = unit(rng);
  return make_explicit(w);
}

}  // namespace

TEST_CASE("preemptive general/general pmf") {
  // fresh packet every slot, unit service: the age is pinned at 1
  const AoIDistribution pinned =
      pgf_preemptive_gg(make_deterministic(1), make_deterministic(1), 64);
  CHECK(pinned.prob(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pinned.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pinned.mean_certified);

  // closed-form route: (1-g)/g + (E[Y]+E[Y^2])/(2 E[Y]) = 1 + 2 = 3
  const AoIDistribution geo = pgf_preemptive_gg(make_geometric(0.5),
                                                make_geometric(0.5), 256);
  CHECK(std::abs(geo.mean - 3.0) < 1e-9);
  CHECK(geo.mean_certified);
  CHECK(geo.captured_mass + geo.tail_bound == doctest::Approx(1.0).epsilon(1e-9));

  // pmf at 1 equals P{S = 1} / E[Y]
  CHECK(geo.prob(1) == doctest::Approx(0.5 / 2.0).epsilon(1e-12));
}

TEST_CASE("preemptive component split") {
  // the two components sum to the full series, and the masses are a pmf
  const DiscreteDist y = make_geometric(0.5);
  const DiscreteDist s = make_geometric(0.5);
  const auto [h1, h2] = components_preemptive(y, s, 256);
  const AoIDistribution whole = pgf_preemptive_gg(y, s, 256);
  for (int n = 0; n <= 256; ++n) {
    CHECK(std::abs(h1[n] + h2[n] - whole.pmf[n]) < 1e-15);
  }
  const double total = mean_and_mass(h1).mass + mean_and_mass(h2).mass;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  // idle-component coefficient at 1: P{Y>0} P{S<=1} / E[Y] = 1 * 0.5 / 2
  CHECK(h1[1] == doctest::Approx(0.25).epsilon(1e-13));

  // deterministic(1) arrivals: mass splits but still sums to one
  const auto [d1, d2] =
      components_preemptive(make_deterministic(1), make_geometric(0.5), 256);
  CHECK(mean_and_mass(d1).mass + mean_and_mass(d2).mass ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("preemptive with Bernoulli arrivals") {
  // S(1-p) = S(0.5) = 1/3 for geometric 0.5, so mean = 0.5/(0.5/3) = 3
  const AoIDistribution a = pgf_preemptive_berg(0.5, make_geometric(0.5), 256);
  CHECK(std::abs(a.mean - 3.0) < 1e-9);
  CHECK(mean_preemptive_berg(0.5, make_geometric(0.5)) ==
        doctest::Approx(3.0).epsilon(1e-13));
  CHECK(mean_preemptive_berg(0.5, make_deterministic(1)) ==
        doctest::Approx(2.0).epsilon(1e-13));
  const AoIDistribution b =
      pgf_preemptive_berg(0.5, make_deterministic(1), 256);
  CHECK(std::abs(b.mean - 2.0) < 1e-9);
  CHECK(a.captured_mass + a.tail_bound == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(mean_preemptive_berg(1.0, make_deterministic(1)),
                  std::domain_error);
  // p -> 1 limit with unit service approaches a pinned age of 1
  CHECK(mean_preemptive_berg(0.999, make_deterministic(1)) ==
        doctest::Approx(1.0).epsilon(1e-2));
  // p = 1 pgf falls back to the general form
  const AoIDistribution c = pgf_preemptive_berg(1.0, make_geometric(0.5), 128);
  const AoIDistribution d =
      pgf_preemptive_gg(make_geometric(1.0), make_geometric(0.5), 128);
  CHECK(linf_gap(c, d, 128) == 0.0);
}

TEST_CASE("preemptive with geometric service") {
  const AoIDistribution a = pgf_preemptive_ggeo(make_deterministic(1), 0.5, 128);
  CHECK(std::abs(a.mean - 2.0) < 1e-10);
  CHECK(mean_preemptive_ggeo(make_deterministic(1), 0.5) ==
        doctest::Approx(2.0).epsilon(1e-13));

  const AoIDistribution b = pgf_preemptive_ggeo(make_deterministic(2), 1.0, 64);
  CHECK(std::abs(b.mean - 1.5) < 1e-10);
  CHECK(mean_preemptive_ggeo(make_deterministic(2), 1.0) ==
        doctest::Approx(1.5).epsilon(1e-13));
  CHECK(b.captured_mass == doctest::Approx(1.0).epsilon(1e-10));

  CHECK(mean_preemptive_ggeo(make_geometric(0.5), 0.5) ==
        doctest::Approx(3.0).epsilon(1e-13));
  // explicit([0.5, 0.5]): moments (1.5, 2.5) -> 1 + 4/3
  CHECK(mean_preemptive_ggeo(make_explicit({0.5, 0.5}), 0.5) ==
        doctest::Approx(1.0 + 4.0 / 3.0).epsilon(1e-13));
  CHECK(mean_preemptive_ggeo(make_deterministic(1), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("degeneration identities across the formula routes") {
  // all-geometric systems must give identical coefficients through all
  // three preemptive routes
  for (double p = 0.1; p < 0.95; p += 0.1) {
    for (double g = 0.1; g < 0.95; g += 0.1) {
      const DiscreteDist y = make_geometric(p);
      const DiscreteDist s = make_geometric(g);
      const AoIDistribution gg = pgf_preemptive_gg(y, s, 100);
      const AoIDistribution berg = pgf_preemptive_berg(p, s, 100);
      const AoIDistribution ggeo = pgf_preemptive_ggeo(y, g, 100);
      CHECK(linf_gap(gg, berg, 100) < 1e-10);
      CHECK(linf_gap(gg, ggeo, 100) < 1e-10);
    }
  }
}

TEST_CASE("Bernoulli-arrival route degenerates from the general one") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 8; ++trial) {
    const double p = 0.15 + 0.1 * trial;
    const DiscreteDist s = random_explicit(rng, 5);
    const AoIDistribution gg = pgf_preemptive_gg(make_geometric(p), s, 128);
    const AoIDistribution berg = pgf_preemptive_berg(p, s, 128);
    CHECK(linf_gap(gg, berg, 128) < 1e-10);
  }
}

TEST_CASE("non-preemptive pmf and mean") {
  // first term p q/(D g) = 2/3, plus 1/g = 2, plus E[Y(Y-1)]/(2E[Y]) = 1
  CHECK(mean_nonpreemptive_ggeo(make_geometric(0.5), 0.5) ==
        doctest::Approx(11.0 / 3.0).epsilon(1e-13));
  const AoIDistribution a =
      pgf_nonpreemptive_ggeo(make_geometric(0.5), 0.5, 256);
  CHECK(std::abs(a.mean - 11.0 / 3.0) < 1e-9);
  CHECK(a.mean_certified);

  // deterministic(1): (2 - g)/g
  CHECK(mean_nonpreemptive_ggeo(make_deterministic(1), 0.5) ==
        doctest::Approx(3.0).epsilon(1e-13));
  const AoIDistribution b =
      pgf_nonpreemptive_ggeo(make_deterministic(1), 0.5, 256);
  CHECK(std::abs(b.mean - 3.0) < 1e-9);

  CHECK(a.captured_mass + a.tail_bound == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(mean_nonpreemptive_ggeo(make_geometric(0.5), 1.0),
                  std::domain_error);
}

TEST_CASE("non-preemptive component split") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const DiscreteDist y =
        trial % 2 ? random_explicit(rng, 6)
                  : make_geometric(0.15 + 0.08 * static_cast<double>(trial));
    const double g = 0.2 + 0.07 * static_cast<double>(trial);
    const NonPreemptiveComponents c = components_nonpreemptive(y, g, 200);
    const AoIDistribution whole = pgf_nonpreemptive_ggeo(y, g, 200);
    for (int n = 0; n <= 200; ++n) {
      const double sum = c.h1[n] + c.h2[n] + c.h3[n] + c.h4[n];
      CHECK(std::abs(sum - whole.pmf[n]) < 1e-10);
    }
    const double mass = mean_and_mass(c.h1).mass + mean_and_mass(c.h2).mass +
                        mean_and_mass(c.h3).mass + mean_and_mass(c.h4).mass;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("closed-form means agree with certified series brackets") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    const DiscreteDist y = random_explicit(rng, 6);
    const double g = 0.25 + 0.06 * static_cast<double>(trial);

    const AoIDistribution pre = pgf_preemptive_ggeo(y, g, 512);
    const MeanBracket bp = certified_mean(pre, 1.0 - g + 1e-9);
    CHECK(bp.certified);
    const double closed_pre = mean_preemptive_ggeo(y, g);
    CHECK(bp.lower <= closed_pre + 1e-9);
    CHECK(closed_pre <= bp.upper + 1e-9);

    const AoIDistribution non = pgf_nonpreemptive_ggeo(y, g, 512);
    const MeanBracket bn = certified_mean(non, 1.0 - g + 1e-9);
    CHECK(bn.certified);
    const double closed_non = mean_nonpreemptive_ggeo(y, g);
    CHECK(bn.lower <= closed_non + 1e-9);
    CHECK(closed_non <= bn.upper + 1e-9);
  }
}

TEST_CASE("certified_mean behavior") {
  // exactly geometric age pmf: deterministic(1) arrivals, geometric service
  const AoIDistribution a = pgf_preemptive_ggeo(make_deterministic(1), 0.5, 100);
  const MeanBracket br = certified_mean(a, 0.5);
  CHECK(br.certified);
  CHECK(br.upper - br.lower < 1e-20);

  // point mass: zero-width bracket
  AoIDistribution point;
  point.pmf = {0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  point.mean_lower = 1.0;
  const MeanBracket bp = certified_mean(point, 0.5);
  CHECK(bp.certified);
  CHECK(bp.lower == bp.upper);

  // bracket around the closed-form value
  const AoIDistribution g =
      pgf_preemptive_ggeo(make_geometric(0.5), 0.5, 256);
  const MeanBracket bg = certified_mean(g, 0.5 + 1e-9);
  CHECK(bg.certified);
  CHECK(bg.lower <= 3.0);
  CHECK(3.0 <= bg.upper);

  // a decay claim the coefficients violate is refused
  const MeanBracket bad = certified_mean(g, 0.2);
  CHECK(!bad.certified);
  CHECK(bad.lower == doctest::Approx(g.mean_lower));
  CHECK_THROWS_AS(certified_mean(g, 1.5), std::invalid_argument);
}

TEST_CASE("age pmf head stays below the renewal bound") {
  std::mt19937 rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const DiscreteDist y = random_explicit(rng, 6);
    const DiscreteDist s = random_explicit(rng, 6);
    const AoIDistribution a = pgf_preemptive_gg(y, s, 128);
    CHECK(a.prob(1) <= s.pmf(1) / y.moments().mean + 1e-10);
    for (int n = 0; n <= 128; ++n) CHECK(a.pmf[n] >= -1e-12);
    CHECK(a.captured_mass <= 1.0 + 1e-9);
  }
}

TEST_CASE("preemptive mean decreases in the service rate") {
  const DiscreteDist y = make_explicit({0.25, 0.5, 0.25});
  double prev = 1e300;
  for (double g = 0.1; g < 1.0; g += 0.05) {
    const double m = mean_preemptive_ggeo(y, g);
    CHECK(m < prev);
    prev = m;
  }
}
