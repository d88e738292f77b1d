#include <gtest/gtest.h>

#include "cyclotile/search.hpp"

namespace ct = cyclotile;
using ct::Int;

namespace {

std::vector<std::vector<Int>> supports(const std::vector<ct::Multiset>& v) {
  std::vector<std::vector<Int>> out;
  for (const auto& s : v) out.push_back(s.support());
  return out;
}

}  // namespace

TEST(FindComplements, Examples) {
  auto m8 = ct::Modulus::of(8);
  auto c = supports(ct::find_complements(ct::Multiset::from_elements(m8, {0, 1, 4, 5})));
  EXPECT_NE(std::find(c.begin(), c.end(), std::vector<Int>{0, 2}), c.end());
  auto m4 = ct::Modulus::of(4);
  EXPECT_EQ(supports(ct::find_complements(ct::Multiset::from_elements(m4, {0, 2}))),
            (std::vector<std::vector<Int>>{{0, 1}, {0, 3}}));
  EXPECT_TRUE(ct::find_complements(ct::Multiset::from_elements(m4, {0, 1, 2})).empty());
}

TEST(FindComplements, EveryResultTilesAndSeededRunsAreReproducible) {
  auto mod = ct::Modulus::of(72);
  auto a = ct::Multiset::from_elements(mod, {0, 1, 18, 19});
  auto all = ct::find_complements(a);
  ASSERT_FALSE(all.empty());
  for (const auto& b : all) {
    EXPECT_TRUE(b.contains(0));
    EXPECT_TRUE(ct::verify_direct({a, b}));
  }
  auto s1 = ct::find_complements(a, 3, 42), s2 = ct::find_complements(a, 3, 42);
  EXPECT_EQ(supports(s1), supports(s2));
}

TEST(EnumerateTilings, Examples) {
  auto four = ct::enumerate_tilings({4, 2});
  ASSERT_EQ(four.size(), 2u);
  EXPECT_EQ(four[0].a.support(), (std::vector<Int>{0, 1}));
  EXPECT_EQ(four[1].a.support(), (std::vector<Int>{0, 2}));
  for (Int p : {5, 7, 11}) {
    auto v = ct::enumerate_tilings({p, p});
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].b.support(), std::vector<Int>{0});
  }
  EXPECT_THROW(ct::enumerate_tilings({401, 0}), ct::Error);
  EXPECT_THROW(ct::enumerate_tilings({12, 5}), ct::Error);
}

TEST(EnumerateTilings, EveryMemberVerifiesAndSatisfiesCM) {
  auto v = ct::enumerate_tilings({36, 6});
  EXPECT_FALSE(v.empty());
  for (const auto& t : v) {
    EXPECT_TRUE(ct::verify_direct(t));
    EXPECT_TRUE(ct::verify_poly(t));
    EXPECT_TRUE(ct::verify_sands(t));
    EXPECT_TRUE(ct::t1_check(t.a) && ct::t1_check(t.b));
    EXPECT_TRUE(ct::t2_check(t.a) && ct::t2_check(t.b));
  }
}

TEST(EnumerateTilings, PairsAgreeWithTileClasses) {
  for (Int m : {12, 16, 24}) {
    auto mod = ct::Modulus::of(m);
    for (Int k : mod.divisors()) {
      std::set<std::vector<Int>> from_pairs;
      for (const auto& t : ct::enumerate_tilings({m, k})) from_pairs.insert(t.a.support());
      std::set<std::vector<Int>> from_tiles;
      for (const auto& a : ct::enumerate_tiles(m, k)) from_tiles.insert(a.support());
      EXPECT_EQ(from_pairs, from_tiles) << "m=" << m << " k=" << k;
    }
  }
}

TEST(FindComplements, TileIffCMAtSixteen) {
  auto mod = ct::Modulus::of(16);
  for (std::uint32_t bits = 1; bits < (1u << 16); bits += 2) {
    std::vector<Int> s;
    for (Int x = 0; x < 16; ++x)
      if (bits >> x & 1) s.push_back(x);
    auto a = ct::Multiset::from_elements(mod, s);
    bool cm = ct::t1_check(a) && ct::t2_check(a);
    ASSERT_EQ(ct::tiles(a), cm);
  }
}

TEST(LeastTranslate, Normalizes) {
  EXPECT_EQ(ct::least_translate({0, 3}, 4), (std::vector<Int>{0, 1}));
  EXPECT_EQ(ct::least_translate({2, 5, 9}, 12), (std::vector<Int>{0, 3, 7}));
}
