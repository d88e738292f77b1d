#include <gtest/gtest.h>

#include <random>

#include "cyclotile/search.hpp"
#include "cyclotile/tiling.hpp"

namespace ct = cyclotile;
using ct::Int;

namespace {

ct::TilingInstance inst(Int m, std::vector<Int> a, std::vector<Int> b) {
  return ct::TilingInstance::of(ct::Modulus::of(m), a, b);
}

ct::TilingInstance flat_225() {
  auto mod = ct::Modulus::of(225);
  return {ct::standard_complement(mod, {{2}, {2}}), ct::standard_complement(mod, {{1}, {1}})};
}

ct::TilingInstance flat_11025() {
  auto mod = ct::Modulus::of(11025);
  return {ct::Multiset::from_elements(mod, mod.grid(0, 105)), ct::standard_complement(mod, {{1}, {1}, {1}})};
}

}  // namespace

TEST(Verifiers, Examples) {
  auto a = inst(4, {0}, {0, 1, 2, 3});
  auto b = inst(4, {0, 2}, {0, 1});
  auto c = inst(4, {0, 1}, {0, 1});
  for (const auto& t : {a, b}) {
    EXPECT_TRUE(ct::verify_direct(t));
    EXPECT_TRUE(ct::verify_poly(t));
    EXPECT_TRUE(ct::verify_sands(t));
  }
  EXPECT_FALSE(ct::verify_direct(c));
  EXPECT_FALSE(ct::verify_poly(c));
  EXPECT_FALSE(ct::verify_sands(c));
  EXPECT_TRUE(ct::verify_sands(flat_225()));
  EXPECT_TRUE(ct::verify_direct(flat_11025()));
}

TEST(Verifiers, ErrorsAreDistinct) {
  auto mod = ct::Modulus::of(4);
  ct::Multiset doubled(mod);
  doubled.add_weight(0, 2);
  ct::TilingInstance bad{doubled, ct::Multiset::from_elements(mod, {0, 1})};
  try {
    ct::verify_direct(bad);
    FAIL();
  } catch (const ct::Error& e) {
    EXPECT_EQ(e.code(), ct::ErrorCode::not_a_set);
  }
  try {
    ct::verify_sands(inst(4, {0}, {0, 1}));
    FAIL();
  } catch (const ct::Error& e) {
    EXPECT_EQ(e.code(), ct::ErrorCode::cardinality_mismatch);
  }
}

TEST(Verifiers, ExhaustiveAgreementSmallModuli) {
  for (Int m : {4, 8, 12}) {
    auto mod = ct::Modulus::of(m);
    std::vector<std::vector<Int>> sets;
    for (std::uint32_t bits = 1; bits < (1u << m); bits += 2) {
      std::vector<Int> s;
      for (Int x = 0; x < m; ++x)
        if (bits >> x & 1) s.push_back(x);
      if (m % static_cast<Int>(s.size()) == 0) sets.push_back(s);
    }
    for (const auto& a : sets)
      for (const auto& b : sets) {
        if (static_cast<Int>(a.size() * b.size()) != m) continue;
        auto t = ct::TilingInstance::of(mod, a, b);
        bool d = ct::verify_direct(t);
        ASSERT_EQ(d, ct::verify_poly(t));
        ASSERT_EQ(d, ct::verify_sands(t));
        auto pa = ct::small_profile(t.a), pb = ct::small_profile(t.b);
        ASSERT_EQ(d, ct::verify_direct(pa, pb, m));
        ASSERT_EQ(d, ct::verify_poly(pa, pb, mod.divisors().size(), m));
        ASSERT_EQ(d, ct::verify_sands(pa, pb, mod.divisors().size()));
      }
  }
}

TEST(Verifiers, TranslationInvariance) {
  std::mt19937_64 rng(5);
  for (const auto& t : ct::enumerate_tilings({12, 0})) {
    Int s = static_cast<Int>(rng() % 12), u = static_cast<Int>(rng() % 12);
    ct::TilingInstance moved{ct::translate(s, t.a), ct::translate(u, t.b)};
    EXPECT_TRUE(ct::verify_direct(moved));
    auto c = moved.canonical();
    EXPECT_TRUE(c.a.contains(0) && c.b.contains(0));
    EXPECT_TRUE(ct::verify_direct(c));
  }
}

TEST(DivSet, Examples) {
  auto mod = ct::Modulus::of(12);
  EXPECT_EQ(ct::div_set(ct::delta(mod)).members, std::vector<Int>{12});
  EXPECT_EQ(ct::div_set(ct::Multiset::from_elements(mod, {0, 6})).members, (std::vector<Int>{6, 12}));
  auto a = ct::Multiset::from_elements(mod, {0, 1, 5});
  EXPECT_TRUE(ct::div_set_local(a, ct::delta(mod, 5), 12).contains(12));
  EXPECT_EQ(ct::div_set(a, 4).members, (std::vector<Int>{1, 4}));
}

TEST(Box, Examples) {
  auto a = ct::Multiset::from_elements(ct::Modulus::of(4), {0, 2});
  auto v = ct::box(a, 0);
  EXPECT_EQ(v.at(4), 1);
  EXPECT_EQ(v.at(2), 1);
  EXPECT_EQ(v.at(1), 0);
  EXPECT_EQ(ct::box(a, 2).at(4), 1);
  for (Int x = 0; x < 4; ++x) EXPECT_EQ(ct::box(a, x).sum(), 2);
  std::vector<Int> window{2};
  EXPECT_EQ(ct::box(a, 4, 0, &window).at(2), 1);
  EXPECT_EQ(ct::box(a, 4, 0, &window).at(4), 0);
}

TEST(BoxProduct, Examples) {
  auto t = inst(4, {0, 2}, {0, 1});
  EXPECT_EQ(ct::box_product(ct::box(t.a, 0), ct::box(t.b, 0)), ct::Rational(1));
  auto f = flat_225();
  for (Int x = 0; x < 225; x += 7)
    for (Int y = 0; y < 225; y += 11) EXPECT_EQ(ct::box_product(ct::box(f.a, x), ct::box(f.b, y)), ct::Rational(1));
  auto bad = inst(4, {0, 1}, {0, 1});
  EXPECT_NE(ct::box_product(ct::box(bad.a, 0), ct::box(bad.b, 0)), ct::Rational(1));
}

TEST(SaturatingSet, Examples) {
  auto t = inst(4, {0, 2}, {0, 1});
  EXPECT_EQ(ct::saturating_set(t, 0), std::vector<Int>{0});
  EXPECT_EQ(ct::saturating_set(t, 2), std::vector<Int>{2});
  EXPECT_EQ(ct::saturating_set(t, 1), (std::vector<Int>{0, 2}));
  EXPECT_THROW(ct::saturating_set(inst(4, {0, 1}, {0, 1}), 0), ct::Error);
  auto f = flat_225();
  ct::Saturator sat(f);
  for (Int x = 0; x < 225; ++x) {
    auto ax = sat.at(x);
    for (Int a : ax) EXPECT_TRUE(f.a.contains(a));
    if (f.a.contains(x)) EXPECT_EQ(ax, std::vector<Int>{x});
  }
}

TEST(Span, Examples) {
  auto mod = ct::Modulus::of(225);
  EXPECT_TRUE(ct::span(mod, 4, 4).empty());
  EXPECT_EQ(ct::span(mod, 0, 75), mod.grid(0, 9));
  for (Int x : {0, 13})
    for (Int xp : {1, 75, 90}) EXPECT_EQ(ct::bispan(mod, x, xp), ct::bispan(mod, xp, x));
}

TEST(BispanBound, ExhaustiveOnTilingsOf12And225) {
  for (const auto& t : ct::enumerate_tilings({12, 0})) {
    ct::Saturator sat(t);
    for (Int x = 0; x < 12; ++x) EXPECT_FALSE(ct::check_bispan_bound(t, sat, x).has_value());
  }
  auto f = flat_225();
  ct::Saturator sat(f);
  for (Int x = 0; x < 225; ++x) EXPECT_FALSE(ct::check_bispan_bound(f, sat, x).has_value());
}

TEST(EnhancedDivisorExclusion, Examples) {
  auto t = inst(36, {0, 9, 18, 27}, {0, 4, 8, 12, 16, 20, 24, 28, 32});
  EXPECT_EQ(ct::enhanced_divisor_exclusion(t, 0, 0, 36, 36), ct::Verdict::inapplicable);
  EXPECT_EQ(ct::enhanced_divisor_exclusion(t, 0, 0, 6, 6), ct::Verdict::inapplicable);
  EXPECT_EQ(ct::enhanced_divisor_exclusion(t, 0, 0, 9, 36), ct::Verdict::holds);
}

TEST(EnhancedDivisorExclusion, ExhaustiveOnTilingsOf36) {
  auto mod = ct::Modulus::of(36);
  ct::ExclusionChecker checker(mod);
  EXPECT_FALSE(checker.admissible_pairs().empty());
  std::size_t violations = 0;
  for (const auto& t : ct::enumerate_tilings({36, 0})) {
    std::vector<std::uint64_t> ma, mb;
    for (Int x = 0; x < 36; ++x) {
      ma.push_back(ct::ExclusionChecker::support_mask(ct::box(t.a, x)));
      mb.push_back(ct::ExclusionChecker::support_mask(ct::box(t.b, x)));
    }
    for (Int x = 0; x < 36; ++x)
      for (Int y = 0; y < 36; ++y) violations += checker.violation(ma[x], mb[y]).has_value();
  }
  EXPECT_EQ(violations, 0u);
}

TEST(EnhancedDivisorExclusion, BulkCheckerMatchesDirectForm) {
  auto mod = ct::Modulus::of(12);
  ct::ExclusionChecker checker(mod);
  auto bad = inst(12, {0, 1, 4}, {0, 1, 3, 6});
  for (Int x = 0; x < 12; ++x)
    for (Int y = 0; y < 12; ++y) {
      auto ax = ct::box(bad.a, x), by = ct::box(bad.b, y);
      bool direct = false;
      for (Int m : mod.divisors())
        for (Int mp : mod.divisors())
          direct |= ct::enhanced_divisor_exclusion(mod, ax, by, m, mp) == ct::Verdict::violated;
      EXPECT_EQ(direct, checker.violation(ct::ExclusionChecker::support_mask(ax),
                                          ct::ExclusionChecker::support_mask(by)).has_value());
    }
}

TEST(StandardComplementFor, Prop21OnTilingsOf36) {
  for (const auto& t : ct::enumerate_tilings({36, 0})) {
    auto flat = ct::standard_complement_for(t);
    EXPECT_EQ(ct::verify_direct({flat, t.b}), ct::t2_check(t.b));
  }
}
