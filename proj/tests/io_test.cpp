#include <gtest/gtest.h>

#include <random>

#include "cyclotile/io.hpp"
#include "instances.hpp"

namespace ct = cyclotile;
namespace io = cyclotile::io;
using ct::Int;
using namespace ct::testing;

namespace {

std::string fixture(const std::string& name) { return std::string(CYCLOTILE_FIXTURES) + "/" + name; }

ct::ErrorCode code_of(const std::string& text) {
  try {
    io::parse_instance(text);
  } catch (const ct::Error& e) {
    return e.code();
  }
  return ct::ErrorCode::invalid_argument;
}

}  // namespace

TEST(InstanceFile, JsonRoundTripIsByteIdentical) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto mod = ct::Modulus::of(2 + static_cast<Int>(rng() % 200));
    io::InstanceFile f{mod, ct::Multiset(mod), std::nullopt};
    for (int k = 0; k < 6; ++k) f.a->set_weight(static_cast<Int>(rng() % mod.m()), 1 + static_cast<Int>(rng() % 3));
    if (trial % 2) f.b = ct::Multiset::from_elements(mod, {0});
    auto once = io::canonical(f);
    auto again = io::canonical(io::parse_instance(once));
    EXPECT_EQ(once, again);
    EXPECT_EQ(io::parse_instance(once).a, f.a);
  }
}

TEST(InstanceFile, TextFormat) {
  auto f = io::parse_instance("# hand written\nm 12\na 0 4 8\nb 3 0 2 1  # any order\n");
  EXPECT_EQ(f.mod.m(), 12);
  EXPECT_EQ(f.a->support(), (std::vector<Int>{0, 4, 8}));
  EXPECT_EQ(f.b->support(), (std::vector<Int>{0, 1, 2, 3}));
  EXPECT_TRUE(ct::verify_direct(f.instance()));
  EXPECT_EQ(io::canonical(f), R"({"m":12,"primes":[[2,2],[3,1]],"a":[0,4,8],"b":[0,1,2,3]})");
}

TEST(InstanceFile, Errors) {
  EXPECT_EQ(code_of("{\"m\":4,"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("{\"m\":4,\"a\":[0,4]}"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("{\"m\":4,\"a\":[2,1]}"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("{\"m\":4,\"a\":[1,1]}"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("{\"m\":12,\"primes\":[[2,1],[3,1]],\"a\":[0]}"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("{\"m\":\"twelve\"}"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("{\"a\":[0]}"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("m 12\nc 1\n"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("m 12\na 1 x\n"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("a 1\n"), ct::ErrorCode::parse_error);
  EXPECT_EQ(code_of("   "), ct::ErrorCode::parse_error);
  EXPECT_THROW(io::read_instance(fixture("absent.json")), ct::Error);
  auto one = io::parse_instance("{\"m\":4,\"a\":[0]}");
  EXPECT_THROW(one.instance(), ct::Error);
  EXPECT_THROW(one.side('b'), ct::Error);
}

TEST(InstanceFile, FixturesMatchTheirConstructions) {
  EXPECT_EQ(io::read_instance(fixture("flat_225.json")).instance(), flat_225());
  EXPECT_EQ(io::read_instance(fixture("grid_11025.json")).instance(), grid_instance());
  EXPECT_EQ(io::read_instance(fixture("slab_11025.json")).instance(), slab_instance());
  EXPECT_EQ(io::read_instance(fixture("subgroup_11025.json")).instance(), subgroup_instance());
  EXPECT_EQ(io::read_instance(fixture("szabo_11025.json")).instance(), shifted(grid_instance(), 4, 0));

  auto fail = io::read_instance(fixture("t2_fail_225.json"));
  const auto& a = fail.side('a');
  EXPECT_EQ(a.total(), 15);
  EXPECT_EQ(ct::s_a(a), (std::vector<Int>{9, 25}));
  EXPECT_FALSE(ct::phi_divides(225, a));
  EXPECT_TRUE(ct::t1_check(a));
  EXPECT_FALSE(ct::t2_check(a));
}

TEST(ClassificationJson, StableAndDeterministic) {
  auto t = io::read_instance(fixture("szabo_11025.json")).instance();
  auto r1 = io::to_json(ct::classify(t), t.modulus(), 1, 10000).dump();
  auto r2 = io::to_json(ct::classify(t), t.modulus(), 1, 10000).dump();
  EXPECT_EQ(r1, r2);
  auto j = io::Json::parse(r1);
  EXPECT_EQ(j["branch"], "grid-reduction");
  EXPECT_EQ(j["route"], "unfibered");
  EXPECT_EQ(j["t2_a"], true);
  EXPECT_EQ(j["t2_b"], true);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys.front(), "branch");
  EXPECT_EQ(keys.back(), "seed");
}
