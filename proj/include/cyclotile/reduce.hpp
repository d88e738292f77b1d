#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "maskpoly.hpp"
#include "structure.hpp"
#include "tiling.hpp"

namespace cyclotile {

/// Move the M-fiber root*F_nu of A onto target*F_nu, at distance M/p_nu^2.
struct ShiftMove {
  std::size_t direction = 0;
  Int root = 0;
  Int target = 0;
  friend bool operator==(const ShiftMove&, const ShiftMove&) = default;
};

/// B is (M/p_nu)-fibered in direction nu and A holds M-fibers in direction nu.
struct CofiberedStructure {
  std::size_t direction = 0;
  /// Least residue mod M/p_nu of each occupied (M/p_nu)-fiber class of B in direction nu.
  std::vector<Int> b_fibers;
  /// Least element of each M-fiber of A in direction nu.
  std::vector<Int> cofibers;
};

namespace detail {

inline bool fiber_in(const Multiset& s, Int root, Int step, Int count) {
  for (Int t = 0; t < count; ++t)
    if (!s.contains(root + t * step)) return false;
  return true;
}

inline Int least_of_coset(const Modulus& mod, Int x, Int step) {
  Int period = mod.m() / step;
  Int least = mod.reduce(x);
  for (Int t = 1; t < period; ++t) least = std::min(least, mod.reduce(x + t * step));
  return least;
}

inline std::vector<Int> fiber_elements(const Modulus& mod, Int root, std::size_t nu) {
  std::vector<Int> out;
  for (Int t = 0; t < mod.prime(nu); ++t) out.push_back(mod.reduce(root + t * mod.fiber_step(nu)));
  return out;
}

}  // namespace detail

/// The (1,2)-cofibered structure of (A, B) in direction nu, if present.
inline std::optional<CofiberedStructure> detect_cofibered(const TilingInstance& t, std::size_t nu) {
  const auto& mod = t.modulus();
  require(nu < mod.rank(), ErrorCode::invalid_argument, "detect_cofibered: direction out of range");
  require(mod.exponent(nu) == 2, ErrorCode::precondition_failed, "detect_cofibered: needs n_nu = 2");
  t.a.require_set("detect_cofibered");
  t.b.require_set("detect_cofibered");
  Int p = mod.prime(nu);
  Int n = mod.m() / p;
  Int small_step = n / p;
  CofiberedStructure s;
  s.direction = nu;
  auto w = reduce_mod(t.b, n).weights();
  for (Int y = 0; y < small_step; ++y) {
    for (Int u = 1; u < p; ++u)
      if (w[static_cast<std::size_t>(y + u * small_step)] != w[static_cast<std::size_t>(y)]) return std::nullopt;
    if (w[static_cast<std::size_t>(y)] != 0) s.b_fibers.push_back(y);
  }
  std::set<Int> af;
  for (Int a : t.a.support())
    if (detail::fiber_in(t.a, a, mod.fiber_step(nu), p)) af.insert(detail::least_of_coset(mod, a, mod.fiber_step(nu)));
  if (af.empty()) return std::nullopt;
  s.cofibers.assign(af.begin(), af.end());
  return s;
}

namespace detail {

inline void check_move_geometry(const TilingInstance& t, const ShiftMove& mv) {
  const auto& mod = t.modulus();
  require(mv.direction < mod.rank(), ErrorCode::invalid_argument, "fiber_shift: direction out of range");
  Int p = mod.prime(mv.direction);
  require(mod.gcd_with_m(mv.root - mv.target) == mod.m() / (p * p), ErrorCode::invalid_argument,
          "fiber_shift: target is not at distance M/p^2 from the root");
  require(fiber_in(t.a, mv.root, mod.fiber_step(mv.direction), p), ErrorCode::precondition_failed,
          "fiber_shift: root fiber is not contained in A");
  for (Int y : fiber_elements(mod, mv.target, mv.direction))
    require(!t.a.contains(y), ErrorCode::precondition_failed, "fiber_shift: target fiber collides with A");
}

inline Multiset apply_move(const Multiset& a, const ShiftMove& mv) {
  Multiset out = a;
  const auto& mod = a.modulus();
  for (Int y : fiber_elements(mod, mv.root, mv.direction)) out.set_weight(y, 0);
  for (Int y : fiber_elements(mod, mv.target, mv.direction)) out.set_weight(y, 1);
  return out;
}

}  // namespace detail

/// Applies one fiber shift after checking the cofibered structure, and re-verifies the tiling three ways.
inline TilingInstance fiber_shift(const TilingInstance& t, const ShiftMove& mv) {
  detail::check_move_geometry(t, mv);
  require(detect_cofibered(t, mv.direction).has_value(), ErrorCode::precondition_failed,
          "fiber_shift: no cofibered structure in this direction");
  TilingInstance out{detail::apply_move(t.a, mv), t.b};
  require(verify_direct(out) && verify_poly(out) && verify_sands(out), ErrorCode::not_a_tiling,
          "fiber_shift: shifted instance does not tile");
  require(s_a(out.a) == s_a(t.a), ErrorCode::precondition_failed, "fiber_shift: S_A changed");
  return out;
}

struct ReductionTrace {
  TilingInstance initial;
  std::vector<ShiftMove> moves;
  Multiset final_a;
  /// Tiling verdict after each move (all three verifiers agreeing).
  std::vector<bool> verdicts;
  /// S_A before the first move and after each move.
  std::vector<std::vector<Int>> s_a_snapshots;
  /// t2_check(A) before the first move and after each move.
  std::vector<bool> t2_snapshots;
  /// Least element of the D(M)-grid reached.
  Int grid = 0;
  std::size_t states_expanded = 0;
};

/// The least element of the D(M)-grid that A fills exactly, if any.
inline std::optional<Int> as_top_grid(const Multiset& a) {
  const auto& mod = a.modulus();
  Int d = mod.d_of(mod.m());
  if (a.total() != mod.m() / d || !a.is_set()) return std::nullopt;
  auto sup = a.support();
  Int r = sup.front() % d;
  for (Int x : sup)
    if (x % d != r) return std::nullopt;
  return r;
}

struct ReduceOptions {
  std::size_t budget = 10000;
};

namespace detail {

/// Elements of A outside its fullest D(M)-grid.
inline Int grid_distance(const Multiset& a) {
  Int d = a.modulus().d_of(a.m());
  std::vector<Int> counts(static_cast<std::size_t>(d), 0);
  for (Int x : a.support()) ++counts[static_cast<std::size_t>(x % d)];
  return a.total() - *std::max_element(counts.begin(), counts.end());
}

/// Number of points of the target fiber whose saturating set lies on the line through them.
inline int line_saturation_score(const Multiset& a, const std::vector<char>& div_b, const ShiftMove& mv) {
  const auto& mod = a.modulus();
  Int line = mod.component(mv.direction);
  int score = 0;
  auto sup = a.support();
  for (Int x : fiber_elements(mod, mv.target, mv.direction)) {
    bool on_line = true;
    for (Int y : sup) {
      Int g = mod.gcd_with_m(x - y);
      if (div_b[static_cast<std::size_t>(g)] && (x - y) % line != 0) {
        on_line = false;
        break;
      }
    }
    score += on_line;
  }
  return score;
}

inline std::vector<ShiftMove> moves_in(const TilingInstance& t, const std::vector<std::size_t>& dirs) {
  const auto& mod = t.modulus();
  std::vector<ShiftMove> out;
  for (std::size_t nu : dirs) {
    Int p = mod.prime(nu);
    Int small_step = mod.m() / (p * p);
    std::set<Int> roots;
    for (Int a : t.a.support())
      if (fiber_in(t.a, a, mod.fiber_step(nu), p)) roots.insert(least_of_coset(mod, a, mod.fiber_step(nu)));
    for (Int r : roots)
      for (Int u = 1; u < p; ++u) {
        Int x = mod.reduce(r + u * small_step);
        bool vacant = true;
        for (Int y : fiber_elements(mod, x, nu)) vacant = vacant && !t.a.contains(y);
        if (vacant) out.push_back({nu, r, least_of_coset(mod, x, mod.fiber_step(nu))});
      }
  }
  return out;
}

}  // namespace detail

/// Directions nu with n_nu = 2 in which B is (M/p_nu)-fibered.
inline std::vector<std::size_t> cofibered_directions(const TilingInstance& t) {
  const auto& mod = t.modulus();
  std::vector<std::size_t> dirs;
  for (std::size_t nu = 0; nu < mod.rank(); ++nu) {
    if (mod.exponent(nu) != 2) continue;
    TilingInstance probe{Multiset::from_elements(mod, detail::fiber_elements(mod, 0, nu)), t.b};
    if (detect_cofibered(probe, nu)) dirs.push_back(nu);
  }
  return dirs;
}

/// Every fiber shift whose geometry is admissible: an M-fiber of A moved onto a vacant fiber at distance M/p_nu^2.
inline std::vector<ShiftMove> valid_moves(const TilingInstance& t) {
  return detail::moves_in(t, cofibered_directions(t));
}

/// Best-first search over fiber shifts for a chain ending at a D(M)-grid.
inline std::optional<ReductionTrace> reduce_to_grid(const TilingInstance& t, const ReduceOptions& opt = {}) {
  const auto& mod = t.modulus();
  t.a.require_set("reduce_to_grid");
  t.b.require_set("reduce_to_grid");
  require(verify_direct(t), ErrorCode::not_a_tiling, "reduce_to_grid: input is not a tiling");

  auto finish = [&](const std::vector<ShiftMove>& moves, std::size_t expanded) {
    ReductionTrace tr{t, moves, t.a, {}, {s_a(t.a)}, {t2_check(t.a)}, 0, expanded};
    TilingInstance cur = t;
    for (const auto& mv : moves) {
      cur = fiber_shift(cur, mv);
      tr.verdicts.push_back(true);
      tr.s_a_snapshots.push_back(s_a(cur.a));
      tr.t2_snapshots.push_back(t2_check(cur.a));
    }
    tr.final_a = cur.a;
    tr.grid = *as_top_grid(cur.a);
    return tr;
  };

  if (as_top_grid(t.a)) return finish({}, 0);
  Int d = mod.d_of(mod.m());
  if (t.a.total() != mod.m() / d) return std::nullopt;
  std::vector<Int> grid_spectrum;
  for (std::size_t nu = 0; nu < mod.rank(); ++nu) grid_spectrum.push_back(mod.prime_power(nu));
  std::sort(grid_spectrum.begin(), grid_spectrum.end());
  if (s_a(t.a) != grid_spectrum) return std::nullopt;

  auto dirs = cofibered_directions(t);
  if (dirs.empty()) return std::nullopt;

  std::vector<char> div_b(static_cast<std::size_t>(mod.m()) + 1, 0);
  for (Int g : div_set(t.b).members) div_b[static_cast<std::size_t>(g)] = 1;

  using Key = std::vector<Int>;
  struct Node {
    Int h;
    int score;
    std::size_t depth;
    Key state;
  };
  auto worse = [](const Node& x, const Node& y) {
    return std::tie(x.h, y.score, x.depth, x.state) > std::tie(y.h, x.score, y.depth, y.state);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  std::map<Key, std::pair<Key, ShiftMove>> parent;
  std::set<Key> seen;
  Key start = t.a.support();
  open.push({detail::grid_distance(t.a), 0, 0, start});
  seen.insert(start);

  std::size_t expanded = 0;
  while (!open.empty() && expanded < opt.budget) {
    Node node = open.top();
    open.pop();
    ++expanded;
    Multiset a = Multiset::from_elements(mod, node.state);
    if (as_top_grid(a)) {
      std::vector<ShiftMove> moves;
      for (Key k = node.state; k != start;) {
        const auto& [prev, mv] = parent.at(k);
        moves.push_back(mv);
        k = prev;
      }
      std::reverse(moves.begin(), moves.end());
      return finish(moves, expanded);
    }
    TilingInstance cur{a, t.b};
    for (const auto& mv : detail::moves_in(cur, dirs)) {
      Multiset next = detail::apply_move(a, mv);
      Key key = next.support();
      if (seen.count(key)) continue;
      if (!verify_direct(TilingInstance{next, t.b})) continue;
      seen.insert(key);
      parent.emplace(key, std::make_pair(node.state, mv));
      open.push({detail::grid_distance(next), detail::line_saturation_score(a, div_b, mv), node.depth + 1, key});
    }
  }
  return std::nullopt;
}

/// The direction nu with A inside a coset of p_nu Z_M and p_nu exactly dividing |B|.
inline std::optional<std::size_t> subgroup_reduction_applies(const TilingInstance& t) {
  const auto& mod = t.modulus();
  auto sup = t.a.support();
  if (sup.empty()) return std::nullopt;
  for (std::size_t nu = 0; nu < mod.rank(); ++nu) {
    Int p = mod.prime(nu);
    bool inside = std::all_of(sup.begin(), sup.end(), [&](Int x) { return (x - sup.front()) % p == 0; });
    bool exact = t.b.total() % p == 0 && (t.b.total() / p) % p != 0;
    if (inside && exact) return nu;
  }
  return std::nullopt;
}

namespace detail {

inline void require_top_prime_power(const TilingInstance& t, std::size_t nu, const char* what) {
  const auto& mod = t.modulus();
  require(nu < mod.rank(), ErrorCode::invalid_argument, std::string(what) + ": direction out of range");
  require(phi_divides(mod.prime_power(nu), t.a), ErrorCode::precondition_failed,
          std::string(what) + ": Phi_{p^n} does not divide A");
}

}  // namespace detail

/// For every d with p_nu^{n_nu} | d | M: Phi_d | A, or Phi_{d/p} ... Phi_{d/p^n} | B.
inline bool subtile_condition(const TilingInstance& t, std::size_t nu) {
  detail::require_top_prime_power(t, nu, "subtile_condition");
  const auto& mod = t.modulus();
  Int pn = mod.prime_power(nu);
  for (Int d : mod.divisors()) {
    if (d % pn != 0) continue;
    if (phi_divides(d, t.a)) continue;
    bool all = true;
    Int q = d;
    for (int k = 1; k <= mod.exponent(nu) && all; ++k) {
      q /= mod.prime(nu);
      all = phi_divides(q, t.b);
    }
    if (!all) return false;
  }
  return true;
}

struct SlabFamily {
  std::size_t direction = 0;
  /// Distinct slab instances A'_{p_nu} (+) B over Z_{M/p_nu}, one per distinct slab.
  std::vector<TilingInstance> instances;
  /// Per instance: it is a tiling of Z_{M/p_nu}.
  std::vector<bool> tiles;
  /// A translate whose slab fails, if any.
  std::optional<Int> failing_translate;

  bool all_tile() const { return std::all_of(tiles.begin(), tiles.end(), [](bool b) { return b; }); }
};

/// Slabs A'_{p_nu} = {a in A' : 0 <= pi_nu(a) < p_nu^{n_nu - 1}} of every translate A' of A, reduced mod M/p_nu.
inline SlabFamily slab_extract(const TilingInstance& t, std::size_t nu) {
  detail::require_top_prime_power(t, nu, "slab_extract");
  t.a.require_set("slab_extract");
  t.b.require_set("slab_extract");
  const auto& mod = t.modulus();
  Int n = mod.m() / mod.prime(nu);
  Modulus sub = mod.sub(n);
  Int cut = mod.prime_power(nu) / mod.prime(nu);
  auto bred = reduce_mod(t.b, n);
  auto sa = t.a.support();
  SlabFamily fam;
  fam.direction = nu;
  std::set<std::vector<Int>> seen;
  for (Int s = 0; s < mod.m(); ++s) {
    std::vector<Int> slab;
    for (Int a : sa) {
      Int y = mod.reduce(a + s);
      if (mod.coord(y, nu) < cut) slab.push_back(y % n);
    }
    std::sort(slab.begin(), slab.end());
    if (!seen.insert(slab).second) continue;
    Multiset as(sub);
    for (Int y : slab) as.add_weight(y, 1);
    auto conv = convolve(as, bred);
    bool ok = std::all_of(conv.weights().begin(), conv.weights().end(), [](Int v) { return v == 1; });
    fam.instances.emplace_back(as, bred);
    fam.tiles.push_back(ok);
    if (!ok && !fam.failing_translate) fam.failing_translate = s;
  }
  return fam;
}

enum class Branch { unfibered_to_grid, fibered_to_grid, subgroup_reduction, slab_reduction, unresolved };

inline std::string to_string(Branch b) {
  switch (b) {
    case Branch::unfibered_to_grid: return "unfibered->grid";
    case Branch::fibered_to_grid: return "fibered-I->grid";
    case Branch::subgroup_reduction: return "subgroup-reduction";
    case Branch::slab_reduction: return "slab-reduction";
    case Branch::unresolved: return "unresolved";
  }
  return "unresolved";
}

struct ClassificationReport {
  Branch branch = Branch::unresolved;
  std::optional<std::size_t> direction;
  /// A and B were interchanged so that Phi_M | A.
  bool swapped = false;
  /// The slab certificate was taken on the instance with A and B interchanged.
  bool slab_swapped = false;
  /// Odd M = (p_i p_j p_k)^2 with |A| = |B| = p_i p_j p_k.
  bool in_scope = false;
  std::vector<StructureFinding> structures;
  std::optional<IJKPartition> ijk;
  std::optional<ReductionTrace> trace;
  bool t1_a = false, t1_b = false;
  bool t2_a = false, t2_b = false;
  /// verify(A-flat, B) agrees with t2_check(B), and likewise with the roles swapped.
  bool standard_cross_check = false;
  std::vector<std::string> notes;
  /// The instance after the optional swap.
  std::optional<TilingInstance> instance;
};

struct ClassifyOptions {
  std::size_t budget = 10000;
};

namespace detail {

inline bool in_classify_scope(const TilingInstance& t) {
  const auto& mod = t.modulus();
  if (!odd_square_three_primes(mod)) return false;
  Int r = mod.prime(0) * mod.prime(1) * mod.prime(2);
  return t.a.total() == r && t.b.total() == r;
}

inline bool standard_agrees(const Multiset& b) {
  auto fam = complement_family(b);
  auto aflat = standard_complement(b.modulus(), fam);
  bool tiles = aflat.total() * b.total() == b.m() && verify_direct(TilingInstance{aflat, b});
  return tiles == t2_check(b);
}

inline bool fibered_in_direction(const Multiset& a, std::size_t nu) {
  for (Int x : occupied_grids(a))
    if (!is_m_fibered_on_grid(a, x, nu).fibered) return false;
  return true;
}

}  // namespace detail

/// Routes a tiling through the fibered/unfibered case analysis and records machine-checked certificates.
inline ClassificationReport classify(const TilingInstance& input, const ClassifyOptions& opt = {}) {
  input.a.require_set("classify");
  input.b.require_set("classify");
  require(verify_direct(input), ErrorCode::not_a_tiling, "classify: input is not a tiling");
  ClassificationReport r;
  const auto& mod = input.modulus();
  TilingInstance t = input;
  if (!phi_divides(mod.m(), t.a)) {
    t = t.swapped();
    r.swapped = true;
  }
  r.instance = t;
  r.t1_a = t1_check(t.a);
  r.t1_b = t1_check(t.b);
  r.t2_a = t2_check(t.a);
  r.t2_b = t2_check(t.b);
  r.standard_cross_check = detail::standard_agrees(t.b) && detail::standard_agrees(t.a);
  r.in_scope = detail::in_classify_scope(t);
  if (!r.in_scope) {
    r.notes.push_back("modulus or cardinalities outside the odd (p_i p_j p_k)^2 classification");
    return r;
  }

  auto certified = [&](Branch b) {
    if (r.t2_a && r.t2_b) {
      r.branch = b;
    } else {
      r.branch = Branch::unresolved;
      r.notes.push_back("T2 certificate failed on a reduced branch");
    }
    return r;
  };

  std::vector<Int> unfibered;
  for (Int x : occupied_grids(t.a))
    if (!grid_fiber_report(t.a, x).fibered_somewhere()) unfibered.push_back(x);

  ReduceOptions ropt{opt.budget};
  if (!unfibered.empty()) {
    for (Int x : unfibered) {
      try {
        r.structures.push_back(classify_unfibered_grid(t.a, x));
      } catch (const Error& e) {
        r.notes.push_back(std::string("grid ") + std::to_string(x) + ": " + e.what());
      }
    }
    r.trace = reduce_to_grid(t, ropt);
    if (r.trace) return certified(Branch::unfibered_to_grid);
    r.notes.push_back("reduction to a grid not found within budget");
    return r;
  }

  r.ijk = ijk_partition(t);
  if (!r.ijk->triple.empty()) {
    r.trace = reduce_to_grid(t, ropt);
    if (r.trace) return certified(Branch::fibered_to_grid);
    r.notes.push_back("reduction to a grid not found within budget");
    return r;
  }

  r.trace = reduce_to_grid(t, ropt);
  if (r.trace) r.notes.push_back("a D(M)-grid is also reachable by fiber shifts");

  for (std::size_t nu = 0; nu < 3; ++nu)
    if (detail::fibered_in_direction(t.a, nu) && subtile_condition(t, nu)) {
      r.direction = nu;
      return certified(Branch::slab_reduction);
    }

  for (std::size_t i = 0; i < 3; ++i) {
    if (!r.ijk->empty(i)) continue;
    if (phi_divides(mod.prime(i), t.a)) {
      auto sw = t.swapped();
      if (phi_divides(mod.prime_power(i), sw.a) && subtile_condition(sw, i)) {
        r.direction = i;
        r.slab_swapped = true;
        return certified(Branch::slab_reduction);
      }
    }
    if (phi_divides(mod.prime_power(i), t.a) && subgroup_reduction_applies(t) == i) {
      r.direction = i;
      return certified(Branch::subgroup_reduction);
    }
  }
  r.notes.push_back("no reduction predicate applies");
  return r;
}

}  // namespace cyclotile
