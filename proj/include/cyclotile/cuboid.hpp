#pragma once

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "maskpoly.hpp"

namespace cyclotile {

/// Cuboid type (N, delta, T) on Z_N. `group` is Z_N with its own prime list;
/// `delta` is indexed by those primes. The template is a weighted list of
/// offsets in Z_N.
struct CuboidType {
  Modulus group;
  std::vector<int> delta;
  std::vector<std::pair<Int, Int>> template_terms{{0, 1}};

  Int n() const { return group.m(); }

  void validate() const {
    require(delta.size() == group.rank(), ErrorCode::invalid_argument, "cuboid type: delta arity");
    for (std::size_t i = 0; i < delta.size(); ++i)
      require(delta[i] >= 0 && delta[i] <= group.exponent(i), ErrorCode::invalid_argument,
              "cuboid type: delta out of range");
    require(!template_terms.empty(), ErrorCode::invalid_argument, "cuboid type: empty template");
  }

  /// The N-cuboid type: delta = 1 on every prime of N, T = {0}.
  static CuboidType n_cuboids(const Modulus& group) {
    return {group, std::vector<int>(group.rank(), 1), {{0, 1}}};
  }
};

/// X^c prod_{nu in J} (1 - X^{d_nu}); d[nu] = 0 for nu outside J.
struct Cuboid {
  Int c = 0;
  std::vector<Int> d;
  friend bool operator==(const Cuboid&, const Cuboid&) = default;
};

namespace detail {

inline std::vector<Int> offsets_for(const Modulus& g, std::size_t nu, int delta) {
  if (delta == 0) return {0};
  Int p = g.prime(nu);
  Int pd = ipow(p, delta);
  Int base = g.m() / pd;
  std::vector<Int> out;
  for (Int u = 1; u < pd; ++u)
    if (u % p != 0) out.push_back(base * u);
  return out;
}

// sum_{t in T} w^N(x + t) for every x in Z_N, with A reduced mod N.
inline std::vector<Int> templated_weights(const Multiset& a, const CuboidType& type) {
  const Int n = type.n();
  require(a.m() % n == 0, ErrorCode::not_a_divisor, "cuboid: N must divide the modulus of A");
  std::vector<Int> w(static_cast<std::size_t>(n), 0);
  for (Int x = 0; x < a.m(); ++x) w[static_cast<std::size_t>(x % n)] += a.weights()[static_cast<std::size_t>(x)];
  if (type.template_terms.size() == 1 && type.template_terms[0] == std::pair<Int, Int>{0, 1}) return w;
  std::vector<Int> out(static_cast<std::size_t>(n), 0);
  for (Int x = 0; x < n; ++x)
    for (auto [t, c] : type.template_terms) out[static_cast<std::size_t>(x)] += c * w[static_cast<std::size_t>(posmod(x + t, n))];
  return out;
}

inline Int eval_on(const std::vector<Int>& tw, Int n, const Cuboid& q) {
  Int total = 0;
  std::vector<Int> live;
  for (Int d : q.d)
    if (d != 0) live.push_back(d);
  const std::size_t k = live.size();
  for (std::size_t eps = 0; eps < (std::size_t{1} << k); ++eps) {
    Int x = q.c;
    int parity = 0;
    for (std::size_t i = 0; i < k; ++i)
      if (eps >> i & 1) {
        x += live[i];
        parity ^= 1;
      }
    Int v = tw[static_cast<std::size_t>(posmod(x, n))];
    total += parity ? -v : v;
  }
  return total;
}

}  // namespace detail

inline bool conforms(const CuboidType& type, const Cuboid& q) {
  if (q.d.size() != type.group.rank()) return false;
  for (std::size_t nu = 0; nu < q.d.size(); ++nu) {
    Int want = type.delta[nu] == 0 ? 0 : type.n() / ipow(type.group.prime(nu), type.delta[nu]);
    if (type.delta[nu] == 0) {
      if (q.d[nu] != 0) return false;
    } else if (std::gcd(posmod(q.d[nu], type.n()), type.n()) != want) {
      return false;
    }
  }
  return true;
}

/// A^T[Delta] = sum_eps w(x_eps) A^N_N[x_eps * T].
inline Int eval(const Multiset& a, const CuboidType& type, const Cuboid& q) {
  type.validate();
  require(conforms(type, q), ErrorCode::invalid_argument, "cuboid offsets do not conform to the type");
  return detail::eval_on(detail::templated_weights(a, type), type.n(), q);
}

struct CuboidMode {
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::size_t count = 0;

  static CuboidMode all() { return {}; }
  static CuboidMode sampled(std::uint64_t seed, std::size_t count) { return {false, seed, count}; }
};

/// Stream every admissible cuboid (exhaustive) or `count` draws from
/// std::mt19937_64 seeded with `seed` (sampled). With `through`, c ranges over
/// the D(N)-grid of that point. Stops early when `fn` returns false.
inline void for_each_cuboid(const CuboidType& type, std::optional<Int> through, const CuboidMode& mode,
                            const std::function<bool(const Cuboid&)>& fn) {
  type.validate();
  const Modulus& g = type.group;
  const Int n = g.m();
  std::vector<std::vector<Int>> choices;
  for (std::size_t nu = 0; nu < g.rank(); ++nu) choices.push_back(detail::offsets_for(g, nu, type.delta[nu]));
  const Int step = through ? g.d_of(n) : 1;
  const Int c0 = through ? posmod(*through, step) : 0;
  Cuboid q{0, std::vector<Int>(g.rank(), 0)};
  if (!mode.exhaustive) {
    std::mt19937_64 rng(mode.seed);
    for (std::size_t s = 0; s < mode.count; ++s) {
      q.c = c0 + step * static_cast<Int>(rng() % static_cast<std::uint64_t>(n / step));
      for (std::size_t nu = 0; nu < g.rank(); ++nu) q.d[nu] = choices[nu][rng() % choices[nu].size()];
      if (!fn(q)) return;
    }
    return;
  }
  std::vector<std::size_t> idx(g.rank(), 0);
  for (Int c = c0; c < n; c += step) {
    q.c = c;
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      for (std::size_t nu = 0; nu < g.rank(); ++nu) q.d[nu] = choices[nu][idx[nu]];
      if (!fn(q)) return;
      std::size_t nu = 0;
      while (nu < g.rank() && ++idx[nu] == choices[nu].size()) idx[nu++] = 0;
      if (nu == g.rank()) break;
    }
  }
}

inline std::vector<Cuboid> enumerate_cuboids(const CuboidType& type, std::optional<Int> through = std::nullopt,
                                             const CuboidMode& mode = CuboidMode::all()) {
  std::vector<Cuboid> out;
  for_each_cuboid(type, through, mode, [&](const Cuboid& q) {
    out.push_back(q);
    return true;
  });
  return out;
}

struct NullityResult {
  bool null = true;
  bool heuristic = false;
  std::size_t checked = 0;
  std::optional<Cuboid> witness;
};

inline NullityResult is_t_null(const Multiset& a, const CuboidType& type, const CuboidMode& mode = CuboidMode::all()) {
  auto tw = detail::templated_weights(a, type);
  NullityResult r;
  r.heuristic = !mode.exhaustive;
  for_each_cuboid(type, std::nullopt, mode, [&](const Cuboid& q) {
    ++r.checked;
    if (detail::eval_on(tw, type.n(), q) != 0) {
      r.null = false;
      r.witness = q;
      return false;
    }
    return true;
  });
  return r;
}

/// Phi_s | A decided by nullity on every s-cuboid of A mod s.
inline bool phi_divides_via_cuboids(Int s, const Multiset& a) {
  a.modulus().require_divisor(s);
  if (s == 1) return a.total() == 0;
  return is_t_null(a, CuboidType::n_cuboids(a.modulus().sub(s))).null;
}

/// Phi_{p^alpha} | A iff, within each residue class mod p^{alpha-1}, A is
/// equidistributed over the p classes mod p^alpha.
inline bool phi_divides_via_uniform(Int s, const Multiset& a) {
  auto nu = a.modulus().prime_power_index(s);
  require(nu.has_value(), ErrorCode::invalid_argument, "phi_divides_via_uniform: s must be a prime power");
  const Int p = a.modulus().prime(*nu);
  std::vector<Int> counts(static_cast<std::size_t>(s), 0);
  for (Int x = 0; x < a.m(); ++x) counts[static_cast<std::size_t>(x % s)] += a.weights()[static_cast<std::size_t>(x)];
  const Int q = s / p;
  for (Int r = 0; r < q; ++r)
    for (Int t = 1; t < p; ++t)
      if (counts[static_cast<std::size_t>(r + t * q)] != counts[static_cast<std::size_t>(r)]) return false;
  return true;
}

enum class PhiCombo { first_order, second_order };

struct MultiPhiResult {
  bool null = false;
  bool divides = false;
  std::optional<Cuboid> witness;
};

/// The two special cuboid types on Z_M attached to direction nu:
/// first_order:  delta_nu = 2, others 1, T = 1           (Phi_M Phi_{M/p}   | A  <=>  null)
/// second_order: delta_nu = 0, others 1, T = fiber at M/p^2 scale (Phi_M Phi_{M/p^2} | A  =>  null)
inline CuboidType special_cuboid_type(const Modulus& mod, PhiCombo combo, std::size_t nu) {
  CuboidType type{mod, std::vector<int>(mod.rank(), 1), {{0, 1}}};
  if (combo == PhiCombo::first_order) {
    require(mod.exponent(nu) >= 2, ErrorCode::precondition_failed, "first-order combination needs n_nu >= 2");
    type.delta[nu] = 2;
  } else {
    require(mod.exponent(nu) == 2, ErrorCode::precondition_failed, "second-order combination needs n_nu = 2");
    type.delta[nu] = 0;
    Int p = mod.prime(nu);
    Int step = mod.m() / (p * p);
    type.template_terms.clear();
    for (Int t = 0; t < p; ++t) type.template_terms.emplace_back(t * step, 1);
  }
  return type;
}

inline MultiPhiResult multi_phi_test(const Multiset& a, PhiCombo combo, std::size_t nu) {
  const Modulus& mod = a.modulus();
  auto type = special_cuboid_type(mod, combo, nu);
  Int p = mod.prime(nu);
  Int second = combo == PhiCombo::first_order ? mod.m() / p : mod.m() / (p * p);
  MultiPhiResult r;
  auto nr = is_t_null(a, type);
  r.null = nr.null;
  r.witness = nr.witness;
  r.divides = phi_divides(mod.m(), a) && phi_divides(second, a);
  if (combo == PhiCombo::second_order && r.divides && !r.null)
    throw Error(ErrorCode::precondition_failed, "multi_phi_test: divisibility without nullity");
  return r;
}

}  // namespace cyclotile
