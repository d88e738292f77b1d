#pragma once

#include <bit>
#include <boost/rational.hpp>
#include <optional>
#include <unordered_map>
#include <vector>

#include "maskpoly.hpp"

namespace cyclotile {

using Rational = boost::rational<Int>;

/// A candidate tiling A + B = Z_M.
struct TilingInstance {
  Multiset a;
  Multiset b;

  TilingInstance(Multiset a_, Multiset b_) : a(std::move(a_)), b(std::move(b_)) { require_same_modulus(a, b); }

  static TilingInstance of(const Modulus& mod, const std::vector<Int>& a, const std::vector<Int>& b) {
    return {Multiset::from_elements(mod, a), Multiset::from_elements(mod, b)};
  }

  const Modulus& modulus() const { return a.modulus(); }
  Int m() const { return a.m(); }

  /// Translate both sides so that 0 lies in A and in B (by their least elements).
  TilingInstance canonical() const {
    auto sa = a.support(), sb = b.support();
    require(!sa.empty() && !sb.empty(), ErrorCode::invalid_argument, "canonical: empty side");
    return {translate(-sa.front(), a), translate(-sb.front(), b)};
  }

  TilingInstance swapped() const { return {b, a}; }

  friend bool operator==(const TilingInstance& x, const TilingInstance& y) { return x.a == y.a && x.b == y.b; }
};

/// Every element of Z_M is a + b in exactly one way.
inline bool verify_direct(const TilingInstance& t) {
  t.a.require_set("verify_direct");
  t.b.require_set("verify_direct");
  const Int m = t.m();
  std::vector<char> hit(static_cast<std::size_t>(m), 0);
  auto sb = t.b.support();
  for (Int x : t.a.support())
    for (Int y : sb) {
      auto& h = hit[static_cast<std::size_t>((x + y) % m)];
      if (h) return false;
      h = 1;
    }
  for (char h : hit)
    if (!h) return false;
  return true;
}

/// |A||B| = M and every Phi_s, s | M, s > 1, divides A or B.
inline bool verify_poly(const TilingInstance& t) {
  t.a.require_set("verify_poly");
  t.b.require_set("verify_poly");
  if (t.a.total() * t.b.total() != t.m()) return false;
  for (Int s : t.modulus().divisors())
    if (s > 1 && !phi_divides(s, t.a) && !phi_divides(s, t.b)) return false;
  return true;
}

/// Div_N(A1, A2) = {(a1 - a2, N)}; Div_N(A) = Div_N(A, A).
struct DivSet {
  Int N = 0;
  std::vector<Int> members;

  bool contains(Int d) const { return std::binary_search(members.begin(), members.end(), d); }
  friend bool operator==(const DivSet&, const DivSet&) = default;
};

inline DivSet div_set_local(const Multiset& a1, const Multiset& a2, Int N) {
  require_same_modulus(a1, a2);
  const Modulus& mod = a1.modulus();
  mod.require_divisor(N);
  const Int m = mod.m();
  std::vector<char> diff(static_cast<std::size_t>(m), 0);
  auto s2 = a2.support();
  for (Int x : a1.support())
    for (Int y : s2) diff[static_cast<std::size_t>(posmod(x - y, m))] = 1;
  std::vector<char> seen(static_cast<std::size_t>(N + 1), 0);
  for (Int t = 0; t < m; ++t)
    if (diff[static_cast<std::size_t>(t)]) seen[static_cast<std::size_t>(std::gcd(t % N, N))] = 1;
  DivSet out{N, {}};
  for (Int d = 1; d <= N; ++d)
    if (seen[static_cast<std::size_t>(d)]) out.members.push_back(d);
  return out;
}

inline DivSet div_set(const Multiset& a, Int N) { return div_set_local(a, a, N); }
inline DivSet div_set(const Multiset& a) { return div_set(a, a.m()); }

/// Sands: Div(A) and Div(B) meet only in {M}.
inline bool verify_sands(const TilingInstance& t) {
  t.a.require_set("verify_sands");
  t.b.require_set("verify_sands");
  require(t.a.total() * t.b.total() == t.m(), ErrorCode::cardinality_mismatch,
          "verify_sands: |A||B| != M");
  auto da = div_set(t.a), db = div_set(t.b);
  for (Int d : da.members)
    if (d != t.m() && db.contains(d)) return false;
  return true;
}

/// Entries A^N_m[x] = #{a : (x - a, N) = m} for m | N.
struct BoxView {
  Int N = 0;
  Int x = 0;
  std::vector<Int> divisors;
  std::vector<Int> counts;

  Int at(Int m) const {
    auto it = std::lower_bound(divisors.begin(), divisors.end(), m);
    require(it != divisors.end() && *it == m, ErrorCode::not_a_divisor, "box entry: not a divisor of N");
    return counts[static_cast<std::size_t>(it - divisors.begin())];
  }
  Int sum() const {
    Int s = 0;
    for (Int c : counts) s += c;
    return s;
  }
};

inline BoxView box(const Multiset& a, Int N, Int x, const std::vector<Int>* window = nullptr) {
  const Modulus& mod = a.modulus();
  mod.require_divisor(N);
  BoxView v{N, mod.reduce(x), {}, {}};
  for (Int d : mod.divisors())
    if (N % d == 0) v.divisors.push_back(d);
  v.counts.assign(v.divisors.size(), 0);
  std::vector<int> slot(static_cast<std::size_t>(N + 1), -1);
  for (std::size_t i = 0; i < v.divisors.size(); ++i) slot[static_cast<std::size_t>(v.divisors[i])] = static_cast<int>(i);
  auto tally = [&](Int y) {
    Int w = a[y];
    if (w == 0) return;
    Int g = std::gcd(posmod(v.x - y, N), N);
    v.counts[static_cast<std::size_t>(slot[static_cast<std::size_t>(g)])] += w;
  };
  if (window) {
    std::vector<Int> w = *window;
    for (Int& y : w) y = mod.reduce(y);
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end()), w.end());
    for (Int y : w) tally(y);
  } else {
    for (Int y : a.support()) tally(y);
  }
  return v;
}

inline BoxView box(const Multiset& a, Int x) { return box(a, a.m(), x); }

/// <A[x], B[y]> = sum_{m|N} A_m[x] B_m[y] / phi(N/m), exactly.
inline Rational box_product(const BoxView& a, const BoxView& b) {
  require(a.N == b.N && a.divisors == b.divisors, ErrorCode::modulus_mismatch, "box_product: scale mismatch");
  const Int N = a.N;
  Int lcm = 1;
  for (Int d : a.divisors) lcm = std::lcm(lcm, euler_phi(N / d));
  Int num = 0;
  for (std::size_t i = 0; i < a.divisors.size(); ++i)
    num += a.counts[i] * b.counts[i] * (lcm / euler_phi(N / a.divisors[i]));
  return Rational(num, lcm);
}

/// Precomputes Div(B) to answer saturating-set queries A_x and A_{x,y}.
class Saturator {
 public:
  explicit Saturator(const TilingInstance& t) : t_(t), gcd_(static_cast<std::size_t>(t.m())) {
    for (Int d = 0; d < t.m(); ++d) gcd_[static_cast<std::size_t>(d)] = std::gcd(d, t.m());
    div_b_.assign(static_cast<std::size_t>(t.m() + 1), 0);
    for (Int d : div_set(t.b).members) div_b_[static_cast<std::size_t>(d)] = 1;
    a_support_ = t.a.support();
    b_support_ = t.b.support();
  }

  Int gcd_m(Int d) const { return gcd_[static_cast<std::size_t>(posmod(d, t_.m()))]; }

  /// A_x = {a in A : (x - a, M) in Div(B)}.
  std::vector<Int> at(Int x) const {
    std::vector<Int> out;
    for (Int a : a_support_)
      if (div_b_[static_cast<std::size_t>(gcd_m(x - a))]) out.push_back(a);
    return out;
  }

  /// A_{x,y} = {a in A : (x - a, M) = (y - b, M) for some b in B}.
  std::vector<Int> at(Int x, Int y) const {
    std::vector<char> local(static_cast<std::size_t>(t_.m() + 1), 0);
    for (Int b : b_support_) local[static_cast<std::size_t>(gcd_m(y - b))] = 1;
    std::vector<Int> out;
    for (Int a : a_support_)
      if (local[static_cast<std::size_t>(gcd_m(x - a))]) out.push_back(a);
    return out;
  }

 private:
  const TilingInstance& t_;
  std::vector<Int> gcd_;
  std::vector<char> div_b_;
  std::vector<Int> a_support_, b_support_;
};

inline std::vector<Int> saturating_set(const TilingInstance& t, Int x) {
  require(verify_direct(t), ErrorCode::not_a_tiling, "saturating_set: instance is not a tiling");
  return Saturator(t).at(x);
}

inline std::vector<Int> saturating_set(const TilingInstance& t, Int x, Int y) {
  require(verify_direct(t), ErrorCode::not_a_tiling, "saturating_set: instance is not a tiling");
  return Saturator(t).at(x, y);
}

/// y in Span(x, x'): some nu with alpha_nu < n_nu and p_nu^{alpha_nu + 1} | y - x,
/// where (x - x', M) = prod p_nu^{alpha_nu}. Empty when x = x'.
inline bool in_span(const Modulus& mod, Int y, Int x, Int xp) {
  auto alpha = mod.exponents(mod.gcd_with_m(x - xp));
  for (std::size_t nu = 0; nu < mod.rank(); ++nu)
    if (alpha[nu] < mod.exponent(nu) && posmod(y - x, ipow(mod.prime(nu), alpha[nu] + 1)) == 0) return true;
  return false;
}

inline bool in_bispan(const Modulus& mod, Int y, Int x, Int xp) {
  return in_span(mod, y, x, xp) || in_span(mod, y, xp, x);
}

inline std::vector<Int> span(const Modulus& mod, Int x, Int xp) {
  std::vector<Int> out;
  for (Int y = 0; y < mod.m(); ++y)
    if (in_span(mod, y, x, xp)) out.push_back(y);
  return out;
}

inline std::vector<Int> bispan(const Modulus& mod, Int x, Int xp) {
  std::vector<Int> out;
  for (Int y = 0; y < mod.m(); ++y)
    if (in_bispan(mod, y, x, xp)) out.push_back(y);
  return out;
}

struct BispanViolation {
  Int saturating_element;
  Int anchor;
};

/// A_x within Bispan(x, a) for every a in A other than x itself.
inline std::optional<BispanViolation> check_bispan_bound(const TilingInstance& t, const Saturator& sat, Int x) {
  const Modulus& mod = t.modulus();
  x = mod.reduce(x);
  auto ax = sat.at(x);
  auto sa = t.a.support();
  for (Int s : ax)
    for (Int a : sa) {
      if (a == x) continue;
      if (!in_bispan(mod, s, x, a)) return BispanViolation{s, a};
    }
  return std::nullopt;
}

inline std::optional<BispanViolation> check_bispan_bound(const TilingInstance& t, Int x) {
  require(verify_direct(t), ErrorCode::not_a_tiling, "check_bispan_bound: instance is not a tiling");
  return check_bispan_bound(t, Saturator(t), x);
}

enum class Verdict { holds, violated, inapplicable };

inline bool divisor_pair_admissible(const Modulus& mod, Int m, Int mp) {
  if (!mod.divides_m(m) || !mod.divides_m(mp)) return false;
  if (m == mod.m() && mp == mod.m()) return false;
  auto a = mod.exponents(m), b = mod.exponents(mp);
  for (std::size_t i = 0; i < mod.rank(); ++i)
    if (a[i] == b[i] && a[i] != mod.exponent(i)) return false;
  return true;
}

/// A_m[x] A_m'[x] B_m[y] B_m'[y] = 0 for admissible (m, m').
inline Verdict enhanced_divisor_exclusion(const Modulus& mod, const BoxView& ax, const BoxView& by, Int m, Int mp) {
  if (!divisor_pair_admissible(mod, m, mp)) return Verdict::inapplicable;
  return ax.at(m) * ax.at(mp) * by.at(m) * by.at(mp) == 0 ? Verdict::holds : Verdict::violated;
}

inline Verdict enhanced_divisor_exclusion(const TilingInstance& t, Int x, Int y, Int m, Int mp) {
  if (!divisor_pair_admissible(t.modulus(), m, mp)) return Verdict::inapplicable;
  return enhanced_divisor_exclusion(t.modulus(), box(t.a, x), box(t.b, y), m, mp);
}

/// Bulk form of the enhanced divisor exclusion check: a violation at (x, y)
/// needs an admissible pair (m, m') inside supp(A[x]) and supp(B[y]).
class ExclusionChecker {
 public:
  explicit ExclusionChecker(const Modulus& mod) : mod_(mod) {
    const auto& divs = mod.divisors();
    require(divs.size() <= 64, ErrorCode::cap_exceeded, "ExclusionChecker: too many divisors");
    for (std::size_t i = 0; i < divs.size(); ++i)
      for (std::size_t j = i; j < divs.size(); ++j)
        if (divisor_pair_admissible(mod, divs[i], divs[j])) pairs_.emplace_back(i, j);
  }

  static std::uint64_t support_mask(const BoxView& v) {
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < v.counts.size(); ++i)
      if (v.counts[i] != 0) mask |= std::uint64_t{1} << i;
    return mask;
  }

  /// The admissible pair (m, m') violating the exclusion, if any.
  std::optional<std::pair<Int, Int>> violation(std::uint64_t mask_a, std::uint64_t mask_b) {
    std::uint64_t common = mask_a & mask_b;
    auto it = memo_.find(common);
    if (it == memo_.end()) {
      int found = -1;
      for (std::size_t p = 0; p < pairs_.size() && found < 0; ++p) {
        std::uint64_t need = (std::uint64_t{1} << pairs_[p].first) | (std::uint64_t{1} << pairs_[p].second);
        if ((common & need) == need) found = static_cast<int>(p);
      }
      it = memo_.emplace(common, found).first;
    }
    if (it->second < 0) return std::nullopt;
    const auto& divs = mod_.divisors();
    const auto& pr = pairs_[static_cast<std::size_t>(it->second)];
    return std::make_pair(divs[pr.first], divs[pr.second]);
  }

  const std::vector<std::pair<std::size_t, std::size_t>>& admissible_pairs() const { return pairs_; }

 private:
  const Modulus& mod_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::unordered_map<std::uint64_t, int> memo_;
};

/// Standard complement A-flat of B, cross-checked against A: each prime power
/// Phi_{p^alpha} must divide exactly one side.
inline Multiset standard_complement_for(const TilingInstance& t) {
  const Modulus& mod = t.modulus();
  for (std::size_t nu = 0; nu < mod.rank(); ++nu)
    for (int alpha = 1; alpha <= mod.exponent(nu); ++alpha) {
      Int s = ipow(mod.prime(nu), alpha);
      require(phi_divides(s, t.a) != phi_divides(s, t.b), ErrorCode::not_a_tiling,
              "Phi_" + std::to_string(s) + " is not attributable to exactly one side");
    }
  return standard_complement_of(t.b);
}

/// Fixed-width profile of a set in Z_m, m <= 64, for bulk verifier sweeps.
struct SmallSetProfile {
  std::uint64_t bits = 0;
  std::uint64_t div_mask = 0;   // bit i: i-th divisor of m in Div(A)
  std::uint64_t spec_mask = 0;  // bit i: Phi of the i-th divisor divides A
  int size = 0;
};

inline SmallSetProfile small_profile(const Multiset& a) {
  require(a.m() <= 64, ErrorCode::cap_exceeded, "small_profile: m > 64");
  a.require_set("small_profile");
  const auto& divs = a.modulus().divisors();
  auto index_of = [&](Int d) { return std::lower_bound(divs.begin(), divs.end(), d) - divs.begin(); };
  SmallSetProfile p;
  for (Int x : a.support()) p.bits |= std::uint64_t{1} << x;
  p.size = static_cast<int>(a.total());
  for (Int d : div_set(a).members) p.div_mask |= std::uint64_t{1} << index_of(d);
  for (std::size_t i = 0; i < divs.size(); ++i)
    if (divs[i] > 1 && phi_divides(divs[i], a)) p.spec_mask |= std::uint64_t{1} << i;
  return p;
}

inline std::uint64_t rotate_bits(std::uint64_t bits, Int shift, Int m) {
  if (shift == 0) return bits;
  std::uint64_t full = m == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1;
  return ((bits << shift) | (bits >> (m - shift))) & full;
}

inline bool verify_direct(const SmallSetProfile& a, const SmallSetProfile& b, Int m) {
  std::uint64_t acc = 0;
  std::uint64_t rest = b.bits;
  while (rest) {
    Int y = std::countr_zero(rest);
    rest &= rest - 1;
    std::uint64_t shifted = rotate_bits(a.bits, y, m);
    if (acc & shifted) return false;
    acc |= shifted;
  }
  std::uint64_t full = m == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1;
  return acc == full;
}

inline bool verify_poly(const SmallSetProfile& a, const SmallSetProfile& b, std::size_t divisor_count, Int m) {
  if (static_cast<Int>(a.size) * b.size != m) return false;
  std::uint64_t need = ((std::uint64_t{1} << divisor_count) - 1) & ~std::uint64_t{1};
  return ((a.spec_mask | b.spec_mask) & need) == need;
}

inline bool verify_sands(const SmallSetProfile& a, const SmallSetProfile& b, std::size_t divisor_count) {
  return (a.div_mask & b.div_mask) == (std::uint64_t{1} << (divisor_count - 1));
}

}  // namespace cyclotile
