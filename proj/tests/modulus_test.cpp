#include <gtest/gtest.h>

#include <numeric>

#include "cyclotile/modulus.hpp"

namespace ct = cyclotile;

TEST(Modulus, FactorsByTrialDivision) {
  auto m = ct::Modulus::of(11025);
  ASSERT_EQ(m.rank(), 3u);
  EXPECT_EQ(m.prime(0), 3);
  EXPECT_EQ(m.prime(2), 7);
  EXPECT_EQ(m.exponent(1), 2);
  EXPECT_EQ(m.component(0), 1225);
  EXPECT_EQ(m.divisors().size(), 27u);
}

TEST(Modulus, RejectsBadFactorizations) {
  EXPECT_THROW(ct::Modulus({{4, 1}}), ct::Error);
  EXPECT_THROW(ct::Modulus({{5, 1}, {3, 1}}), ct::Error);
  EXPECT_THROW(ct::Modulus::of(1), ct::Error);
  EXPECT_THROW(ct::Modulus::of((1 << 20) + 7), ct::Error);
}

TEST(Modulus, GcdWithM) {
  EXPECT_EQ(ct::Modulus::of(4).gcd_with_m(2, 4), 2);
  EXPECT_EQ(ct::Modulus::of(225).gcd_with_m(0, 225), 225);
  EXPECT_EQ(ct::Modulus::of(11025).gcd_with_m(3675, 11025), std::gcd(3675, 11025));
  EXPECT_THROW(ct::Modulus::of(12).gcd_with_m(1, 5), ct::Error);
}

TEST(Modulus, ArrayCoordinates) {
  EXPECT_EQ(ct::Modulus::of(4).coords(3), std::vector<ct::Int>{3});
  auto m12 = ct::Modulus::of(12);
  EXPECT_EQ(m12.coords(7), (std::vector<ct::Int>{1, 1}));
  EXPECT_EQ(m12.from_coords({1, 1}), 7);
  EXPECT_EQ(m12.from_coords({0, 0}), 0);
  for (ct::Int x = 0; x < 12; ++x) EXPECT_EQ(m12.from_coords(m12.coords(x)), x);
  EXPECT_THROW(m12.from_coords({4, 0}), ct::Error);

  auto m225 = ct::Modulus::of(225);
  auto c = m225.coords(15);
  int matches = 0;
  for (ct::Int p3 = 0; p3 < 9; ++p3)
    for (ct::Int p5 = 0; p5 < 25; ++p5)
      if ((p3 * 25 + p5 * 9) % 225 == 15) {
        ++matches;
        EXPECT_EQ(c, (std::vector<ct::Int>{p3, p5}));
      }
  EXPECT_EQ(matches, 1);
}

TEST(Modulus, CoordinatesAreABijectionAtDeskScale) {
  auto m = ct::Modulus::of(11025);
  for (ct::Int x = 0; x < m.m(); ++x) ASSERT_EQ(m.from_coords(m.coords(x)), x);
}

TEST(Modulus, DOfN) {
  EXPECT_EQ(ct::Modulus::of(11025).d_of(11025), 105);
  EXPECT_EQ(ct::Modulus::of(12).d_of(12), 2);
  EXPECT_EQ(ct::Modulus::of(12).d_of(1), 1);
}

TEST(Modulus, GridsLinesPlanesFibers) {
  auto m225 = ct::Modulus::of(225);
  EXPECT_EQ(m225.grid(0, 225), std::vector<ct::Int>{0});
  auto g = m225.grid(0, 15);
  ASSERT_EQ(g.size(), 15u);
  EXPECT_EQ(g.back(), 210);
  EXPECT_EQ(ct::Modulus::of(12).grid(5, 4), (std::vector<ct::Int>{1, 5, 9}));
  EXPECT_EQ(ct::Modulus::of(12).fiber(0, 0), (std::vector<ct::Int>{0, 6}));
  EXPECT_EQ(ct::Modulus::of(11025).fiber(0, 0), (std::vector<ct::Int>{0, 3675, 7350}));
  EXPECT_EQ(m225.plane(0, 0, 1).size(), 75u);
  EXPECT_THROW(m225.plane(0, 0, 3), ct::Error);
  EXPECT_THROW(m225.index_of_prime(7), ct::Error);
}

TEST(Modulus, GridCardinalityAndFiberPartition) {
  auto m = ct::Modulus::of(360);
  for (ct::Int d : m.divisors()) EXPECT_EQ(static_cast<ct::Int>(m.grid(7, d).size()) * d, m.m());
  for (std::size_t nu = 0; nu < m.rank(); ++nu) {
    auto line = m.line(11, nu);
    std::vector<int> hit(360, 0);
    for (ct::Int y : line)
      for (ct::Int z : m.fiber(y, nu)) ++hit[z];
    for (ct::Int y : line) EXPECT_EQ(hit[y], m.prime(nu));
  }
}

TEST(Modulus, GcdIsSymmetricAndDivides) {
  auto m = ct::Modulus::of(36);
  for (ct::Int x = 0; x < 36; ++x)
    for (ct::Int y = 0; y < 36; ++y)
      for (ct::Int n : m.divisors()) {
        ct::Int g = m.gcd_with_m(x - y, n);
        EXPECT_EQ(g, m.gcd_with_m(y - x, n));
        EXPECT_EQ(n % g, 0);
      }
}

TEST(EulerPhi, Values) {
  EXPECT_EQ(ct::euler_phi(1), 1);
  EXPECT_EQ(ct::euler_phi(9), 6);
  EXPECT_EQ(ct::euler_phi(49), 42);
  auto m = ct::Modulus::of(11025);
  for (ct::Int d : m.divisors()) EXPECT_EQ(m.phi_of_divisor(d), ct::euler_phi(d));
}
