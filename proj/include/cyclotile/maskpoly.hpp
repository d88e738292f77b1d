#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <vector>

#include "multiset.hpp"

namespace cyclotile {

/// Phi_s with exact integer coefficients (index = degree).
struct CycloPoly {
  Int s = 1;
  std::vector<Int> coefficients;
  /// (degree, coefficient) of the nonzero terms, ascending.
  std::vector<std::pair<Int, Int>> terms;

  Int degree() const { return static_cast<Int>(coefficients.size()) - 1; }
  Int value_at_one() const {
    Int v = 0;
    for (Int c : coefficients) v += c;
    return v;
  }
};

namespace detail {

// Exact division of a dense polynomial by a monic sparse divisor. Returns the
// quotient and leaves the remainder in `num`.
inline std::vector<Int> divide_monic(std::vector<Int>& num, const CycloPoly& den) {
  const Int dd = den.degree();
  const Int nd = static_cast<Int>(num.size()) - 1;
  if (nd < dd) return {0};
  std::vector<Int> q(static_cast<std::size_t>(nd - dd + 1), 0);
  for (Int k = nd; k >= dd; --k) {
    Int c = num[static_cast<std::size_t>(k)];
    if (c == 0) continue;
    q[static_cast<std::size_t>(k - dd)] = c;
    for (auto [e, coef] : den.terms) num[static_cast<std::size_t>(k - dd + e)] -= c * coef;
  }
  return q;
}

inline std::vector<Int> divisors_of(Int n) {
  std::vector<Int> d;
  for (Int q = 1; q * q <= n; ++q) {
    if (n % q) continue;
    d.push_back(q);
    if (q * q != n) d.push_back(n / q);
  }
  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace detail

/// Phi_s by exact division of X^s - 1 by prod_{d|s, d<s} Phi_d; memoized.
inline const CycloPoly& cyclotomic(Int s) {
  require(s >= 1, ErrorCode::invalid_argument, "cyclotomic: s must be >= 1");
  static std::mutex guard;
  static std::map<Int, std::unique_ptr<CycloPoly>> memo;
  {
    std::lock_guard lock(guard);
    if (auto it = memo.find(s); it != memo.end()) return *it->second;
  }
  std::vector<Int> p(static_cast<std::size_t>(s + 1), 0);
  p[0] = -1;
  p[static_cast<std::size_t>(s)] = 1;
  for (Int d : detail::divisors_of(s)) {
    if (d == s) break;
    const CycloPoly& f = cyclotomic(d);
    std::vector<Int> q = detail::divide_monic(p, f);
    for (Int r : p)
      if (r != 0) throw Error(ErrorCode::invalid_argument, "cyclotomic: inexact division");
    p = std::move(q);
  }
  auto poly = std::make_unique<CycloPoly>();
  poly->s = s;
  poly->coefficients = std::move(p);
  for (std::size_t i = 0; i < poly->coefficients.size(); ++i)
    if (poly->coefficients[i] != 0) poly->terms.emplace_back(static_cast<Int>(i), poly->coefficients[i]);
  std::lock_guard lock(guard);
  auto [it, inserted] = memo.emplace(s, std::move(poly));
  return *it->second;
}

/// Phi_s | A(X), where A is taken mod X^M - 1 and s | M.
inline bool phi_divides(Int s, const Multiset& a) {
  a.modulus().require_divisor(s);
  if (s == 1) return a.total() == 0;
  std::vector<Int> r(static_cast<std::size_t>(s), 0);
  const auto& w = a.weights();
  for (Int x = 0; x < a.m(); ++x) r[static_cast<std::size_t>(x % s)] += w[static_cast<std::size_t>(x)];
  const CycloPoly& f = cyclotomic(s);
  detail::divide_monic(r, f);
  for (Int k = 0; k < f.degree(); ++k)
    if (r[static_cast<std::size_t>(k)] != 0) return false;
  return true;
}

struct CycloSpectrum {
  /// All s | M, s > 1, with Phi_s | A, ascending.
  std::vector<Int> divisors;
  /// The prime-power members (S_A).
  std::vector<Int> prime_powers;

  bool contains(Int s) const { return std::binary_search(divisors.begin(), divisors.end(), s); }
};

inline CycloSpectrum spectrum(const Multiset& a) {
  require(!a.is_zero(), ErrorCode::zero_multiset, "spectrum of the zero multiset");
  CycloSpectrum out;
  for (Int s : a.modulus().divisors()) {
    if (s == 1 || !phi_divides(s, a)) continue;
    out.divisors.push_back(s);
    if (a.modulus().prime_power_index(s)) out.prime_powers.push_back(s);
  }
  return out;
}

inline std::vector<Int> s_a(const Multiset& a) { return spectrum(a).prime_powers; }

/// A_nu(A) = {alpha : Phi_{p_nu^alpha} | A} per prime.
inline std::vector<std::vector<int>> prime_power_family(const Modulus& mod, const std::vector<Int>& prime_powers) {
  std::vector<std::vector<int>> fam(mod.rank());
  for (Int s : prime_powers) {
    auto nu = *mod.prime_power_index(s);
    fam[nu].push_back(mod.exponents(s)[nu]);
  }
  return fam;
}

inline bool t1_check(const Multiset& a) {
  a.require_set("t1_check");
  Int prod = 1;
  for (Int s : s_a(a)) prod *= cyclotomic(s).value_at_one();
  return a.total() == prod;
}

namespace detail {

template <class Fn>
void for_each_cross_product(const Modulus& mod, const std::vector<std::vector<int>>& fam, Fn&& fn) {
  const std::size_t r = mod.rank();
  std::vector<int> pick(r, 0);
  while (true) {
    int chosen = 0;
    Int prod = 1;
    for (std::size_t i = 0; i < r; ++i)
      if (pick[i] > 0) {
        ++chosen;
        prod *= ipow(mod.prime(i), fam[i][static_cast<std::size_t>(pick[i] - 1)]);
      }
    if (chosen >= 2 && !fn(prod)) return;
    std::size_t i = 0;
    while (i < r && pick[i] == static_cast<int>(fam[i].size())) pick[i++] = 0;
    if (i == r) return;
    ++pick[i];
  }
}

}  // namespace detail

/// (T2): Phi_{s_1...s_k} | A for prime powers s_i in S_A of distinct primes, k >= 2.
inline bool t2_check(const Multiset& a) {
  a.require_set("t2_check");
  auto spec = spectrum(a);
  auto fam = prime_power_family(a.modulus(), spec.prime_powers);
  bool ok = true;
  detail::for_each_cross_product(a.modulus(), fam, [&](Int s) {
    ok = spec.contains(s);
    return ok;
  });
  return ok;
}

/// A-flat = prod_nu prod_{alpha in fam[nu]} (1 + X^{M_nu p^{alpha-1}} + ... ).
inline Multiset standard_complement(const Modulus& mod, const std::vector<std::vector<int>>& family) {
  require(family.size() == mod.rank(), ErrorCode::invalid_argument, "family arity must equal number of primes");
  std::vector<Int> elems{0};
  for (std::size_t nu = 0; nu < mod.rank(); ++nu) {
    std::set<int> seen;
    for (int alpha : family[nu]) {
      require(alpha >= 1 && alpha <= mod.exponent(nu), ErrorCode::invalid_argument,
              "standard_complement: alpha out of range");
      require(seen.insert(alpha).second, ErrorCode::invalid_argument, "standard_complement: repeated alpha");
      Int step = mod.component(nu) * ipow(mod.prime(nu), alpha - 1);
      std::vector<Int> next;
      for (Int e : elems)
        for (Int t = 0; t < mod.prime(nu); ++t) next.push_back(mod.reduce(e + t * step));
      elems = std::move(next);
    }
  }
  return Multiset::from_elements(mod, elems);
}

/// The family {alpha in 1..n_nu : Phi_{p_nu^alpha} does not divide B}.
inline std::vector<std::vector<int>> complement_family(const Multiset& b) {
  const Modulus& mod = b.modulus();
  std::vector<std::vector<int>> fam(mod.rank());
  for (std::size_t nu = 0; nu < mod.rank(); ++nu)
    for (int alpha = 1; alpha <= mod.exponent(nu); ++alpha)
      if (!phi_divides(ipow(mod.prime(nu), alpha), b)) fam[nu].push_back(alpha);
  return fam;
}

/// A-flat for a tile B: built from the prime powers not dividing B.
inline Multiset standard_complement_of(const Multiset& b) {
  b.require_set("standard_complement_of");
  require(b.m() % b.total() == 0, ErrorCode::not_a_tiling, "|B| does not divide M");
  Multiset a = standard_complement(b.modulus(), complement_family(b));
  require(a.total() * b.total() == b.m(), ErrorCode::not_a_tiling,
          "prime-power cyclotomic divisors of B are inconsistent with |B|; B is not a tile");
  return a;
}

struct FiberTerm {
  Int root;
  Int prime;
  Int multiplicity;
  friend bool operator==(const FiberTerm&, const FiberTerm&) = default;
};

/// Greedy de Bruijn decomposition of A mod N into N-fibers, for N with two
/// prime factors and Phi_N | A.
inline std::vector<FiberTerm> decompose_two_prime(const Multiset& a, Int N) {
  const Modulus& mod = a.modulus();
  mod.require_divisor(N);
  auto e = mod.exponents(N);
  std::vector<std::size_t> dirs;
  for (std::size_t i = 0; i < mod.rank(); ++i)
    if (e[i] > 0) dirs.push_back(i);
  require(dirs.size() == 2, ErrorCode::precondition_failed, "decompose_two_prime: N must have two prime factors");
  require(a.nonnegative(), ErrorCode::decomposition_failed, "decompose_two_prime: negative weights");
  require(phi_divides(N, a), ErrorCode::decomposition_failed, "decompose_two_prime: Phi_N does not divide A");
  std::vector<Int> w(static_cast<std::size_t>(N), 0);
  for (Int x = 0; x < a.m(); ++x) w[static_cast<std::size_t>(x % N)] += a.weights()[static_cast<std::size_t>(x)];
  std::vector<FiberTerm> out;
  for (Int x = 0; x < N; ++x) {
    while (w[static_cast<std::size_t>(x)] > 0) {
      bool peeled = false;
      for (std::size_t nu : dirs) {
        Int p = mod.prime(nu), step = N / p;
        Int least = w[static_cast<std::size_t>(x)];
        for (Int t = 0; t < p; ++t) least = std::min(least, w[static_cast<std::size_t>((x + t * step) % N)]);
        if (least <= 0) continue;
        for (Int t = 0; t < p; ++t) w[static_cast<std::size_t>((x + t * step) % N)] -= least;
        out.push_back({x, p, least});
        peeled = true;
        break;
      }
      if (!peeled) throw Error(ErrorCode::decomposition_failed, "decompose_two_prime: no fiber through " + std::to_string(x));
    }
  }
  return out;
}

/// sum over terms of multiplicity * (root * F) as a multiset over Z_N.
inline Multiset recompose_fibers(const Modulus& mod_n, const std::vector<FiberTerm>& terms) {
  Multiset out(mod_n);
  for (const auto& t : terms)
    for (Int k = 0; k < t.prime; ++k) out.add_weight(t.root + k * (mod_n.m() / t.prime), t.multiplicity);
  return out;
}

}  // namespace cyclotile
