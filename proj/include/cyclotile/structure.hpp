#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maskpoly.hpp"
#include "tiling.hpp"

namespace cyclotile {

/// The D(M)-grid through x, identified with Z_{p_1} x ... x Z_{p_r}.
/// Cell coordinates are lambda_nu(y) = (pi_nu(y) - pi_nu(base)) / p_nu^{n_nu - 1} mod p_nu,
/// where base is the least element of the grid.
class GridCube {
 public:
  GridCube(const Modulus& mod, Int x) : mod_(mod), d_(mod.d_of(mod.m())), base_(posmod(x, d_)) {
    std::size_t stride = 1;
    for (std::size_t nu = 0; nu < mod_.rank(); ++nu) {
      strides_.push_back(stride);
      stride *= static_cast<std::size_t>(mod_.prime(nu));
    }
    size_ = stride;
    base_coords_ = mod_.coords(base_);
    elements_.resize(size_);
    for (std::size_t c = 0; c < size_; ++c) {
      auto pi = base_coords_;
      for (std::size_t nu = 0; nu < mod_.rank(); ++nu) {
        Int unit = mod_.prime_power(nu) / mod_.prime(nu);
        pi[nu] = posmod(pi[nu] + lambda(c, nu) * unit, mod_.prime_power(nu));
      }
      elements_[c] = mod_.from_coords(pi);
    }
  }

  const Modulus& modulus() const { return mod_; }
  Int base() const { return base_; }
  Int d() const { return d_; }
  std::size_t rank() const { return mod_.rank(); }
  std::size_t size() const { return size_; }
  Int side(std::size_t nu) const { return mod_.prime(nu); }

  Int lambda(std::size_t cell, std::size_t nu) const {
    return static_cast<Int>(cell / strides_[nu]) % mod_.prime(nu);
  }
  std::size_t cell_at(const std::vector<Int>& lam) const {
    std::size_t c = 0;
    for (std::size_t nu = 0; nu < rank(); ++nu)
      c += static_cast<std::size_t>(posmod(lam[nu], side(nu))) * strides_[nu];
    return c;
  }
  /// Cell reached from `cell` by setting coordinate nu to t.
  std::size_t with(std::size_t cell, std::size_t nu, Int t) const {
    return cell - static_cast<std::size_t>(lambda(cell, nu)) * strides_[nu] +
           static_cast<std::size_t>(posmod(t, side(nu))) * strides_[nu];
  }

  Int element(std::size_t cell) const { return elements_[cell]; }
  bool contains(Int y) const { return posmod(y, d_) == base_; }
  std::size_t cell_of(Int y) const {
    require(contains(y), ErrorCode::invalid_argument, "element is not in the grid");
    auto pi = mod_.coords(y);
    std::size_t c = 0;
    for (std::size_t nu = 0; nu < rank(); ++nu) {
      Int unit = mod_.prime_power(nu) / mod_.prime(nu);
      Int diff = posmod(pi[nu] - base_coords_[nu], mod_.prime_power(nu));
      c += static_cast<std::size_t>(diff / unit) * strides_[nu];
    }
    return c;
  }

  /// Bitmask of the coordinates in which two cells differ.
  unsigned pattern(std::size_t c1, std::size_t c2) const {
    unsigned mask = 0;
    for (std::size_t nu = 0; nu < rank(); ++nu)
      if (lambda(c1, nu) != lambda(c2, nu)) mask |= 1u << nu;
    return mask;
  }
  /// (y - y', M) for cells differing exactly in `mask`: M / prod_{nu in mask} p_nu.
  Int top_divisor(unsigned mask) const {
    Int m = mod_.m();
    for (std::size_t nu = 0; nu < rank(); ++nu)
      if (mask & (1u << nu)) m /= mod_.prime(nu);
    return m;
  }

  /// Cells of the fiber through `cell` in direction nu, in coordinate order.
  std::vector<std::size_t> fiber_cells(std::size_t cell, std::size_t nu) const {
    std::vector<std::size_t> out;
    for (Int t = 0; t < side(nu); ++t) out.push_back(with(cell, nu, t));
    return out;
  }

  std::vector<Int> weights(const Multiset& a) const {
    require(a.modulus() == mod_, ErrorCode::modulus_mismatch, "grid and multiset moduli differ");
    std::vector<Int> w(size_);
    for (std::size_t c = 0; c < size_; ++c) w[c] = a.weight(elements_[c]);
    return w;
  }

 private:
  Modulus mod_;
  Int d_;
  Int base_;
  std::vector<Int> base_coords_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  std::vector<Int> elements_;
};

/// Least elements of all D(M)-grids meeting the support of a.
inline std::vector<Int> occupied_grids(const Multiset& a) {
  Int d = a.modulus().d_of(a.m());
  std::vector<Int> out;
  for (Int x = 0; x < d; ++x)
    for (Int y = x; y < a.m(); y += d)
      if (a.weight(y) != 0) {
        out.push_back(x);
        break;
      }
  return out;
}

struct FiberingResult {
  bool fibered = false;
  /// Least element of each fiber contained in A on the grid.
  std::vector<Int> roots;
};

namespace detail {

inline FiberingResult fibering_on_cube(const GridCube& cube, const std::vector<Int>& w, std::size_t nu) {
  FiberingResult r{true, {}};
  for (std::size_t c = 0; c < cube.size(); ++c) {
    if (cube.lambda(c, nu) != 0) continue;
    auto cells = cube.fiber_cells(c, nu);
    Int v = w[cells[0]];
    bool constant = std::all_of(cells.begin(), cells.end(), [&](std::size_t q) { return w[q] == v; });
    if (!constant) r.fibered = false;
    if (v != 0 && constant) {
      Int least = cube.element(cells[0]);
      for (auto q : cells) least = std::min(least, cube.element(q));
      r.roots.push_back(least);
    }
  }
  std::sort(r.roots.begin(), r.roots.end());
  if (!r.fibered) r.roots.clear();
  return r;
}

inline bool fiber_full(const GridCube& cube, const std::vector<Int>& w, std::size_t cell, std::size_t nu) {
  for (auto q : cube.fiber_cells(cell, nu))
    if (w[q] == 0) return false;
  return true;
}

inline void require_three_primes(const Modulus& mod, const char* what) {
  require(mod.rank() == 3, ErrorCode::invalid_argument, std::string(what) + " needs exactly three prime factors");
}

}  // namespace detail

/// Whether A on the D(M)-grid through x is a union of M-fibers in direction nu.
/// For multisets this means the weights are constant along every such fiber.
inline FiberingResult is_m_fibered_on_grid(const Multiset& a, Int x, std::size_t nu) {
  GridCube cube(a.modulus(), x);
  return detail::fibering_on_cube(cube, cube.weights(a), nu);
}

struct GridFiberReport {
  Int grid = 0;
  bool empty = true;
  std::vector<bool> fibered;
  std::vector<std::vector<Int>> roots;

  bool fibered_somewhere() const { return std::find(fibered.begin(), fibered.end(), true) != fibered.end(); }
};

inline GridFiberReport grid_fiber_report(const Multiset& a, Int x) {
  GridCube cube(a.modulus(), x);
  auto w = cube.weights(a);
  GridFiberReport r;
  r.grid = cube.base();
  r.empty = std::all_of(w.begin(), w.end(), [](Int v) { return v == 0; });
  for (std::size_t nu = 0; nu < cube.rank(); ++nu) {
    auto f = detail::fibering_on_cube(cube, w, nu);
    r.fibered.push_back(f.fibered);
    r.roots.push_back(std::move(f.roots));
  }
  return r;
}

/// A is fibered on D(M)-grids: every grid meets A in a set fibered in some direction.
inline bool fibered_on_grids(const Multiset& a) {
  for (Int x : occupied_grids(a))
    if (!grid_fiber_report(a, x).fibered_somewhere()) return false;
  return true;
}

struct FiberPiece {
  Int root = 0;
  std::size_t direction = 0;
  friend bool operator==(const FiberPiece&, const FiberPiece&) = default;
};

/// Writes the support of A on the grid as a disjoint union of M-fibers, if possible.
/// Deterministic: always covers the least uncovered element first, trying directions in order.
inline std::optional<std::vector<FiberPiece>> disjoint_fiber_decomposition(const Multiset& a, Int x) {
  GridCube cube(a.modulus(), x);
  auto w = cube.weights(a);
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < cube.size(); ++c)
    if (w[c] != 0) order.push_back(c);
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return cube.element(l) < cube.element(r); });
  std::vector<bool> covered(cube.size(), false);
  std::vector<FiberPiece> pieces;
  std::function<bool(std::size_t)> dfs = [&](std::size_t pos) -> bool {
    while (pos < order.size() && covered[order[pos]]) ++pos;
    if (pos == order.size()) return true;
    std::size_t c = order[pos];
    for (std::size_t nu = 0; nu < cube.rank(); ++nu) {
      auto cells = cube.fiber_cells(c, nu);
      bool ok = std::all_of(cells.begin(), cells.end(), [&](std::size_t q) { return w[q] != 0 && !covered[q]; });
      if (!ok) continue;
      for (auto q : cells) covered[q] = true;
      pieces.push_back({cube.element(c), nu});
      if (dfs(pos + 1)) return true;
      pieces.pop_back();
      for (auto q : cells) covered[q] = false;
    }
    return false;
  };
  if (!dfs(0)) return std::nullopt;
  return pieces;
}

/// The sets I, J, K (generally: one per prime) of elements of A lying on a full M-fiber in that direction.
struct IJKPartition {
  std::vector<std::vector<Int>> sets;
  /// Sizes of I∩J, I∩K, J∩K.
  std::array<std::size_t, 3> pairwise{};
  std::vector<Int> triple;
  bool covers = false;
  bool fibered_on_grids = false;
  bool assumption_f = false;
  bool assumption_f1 = false;
  bool assumption_f2 = false;
  bool assumption_f3 = false;

  bool empty(std::size_t nu) const { return sets[nu].empty(); }
  bool contains(std::size_t nu, Int a) const { return std::binary_search(sets[nu].begin(), sets[nu].end(), a); }
};

namespace detail {

inline bool odd_square_three_primes(const Modulus& mod) {
  if (mod.rank() != 3) return false;
  for (std::size_t nu = 0; nu < 3; ++nu)
    if (mod.prime(nu) == 2 || mod.exponent(nu) != 2) return false;
  return true;
}

inline std::vector<Int> intersect(const std::vector<Int>& x, const std::vector<Int>& y) {
  std::vector<Int> out;
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

inline std::vector<Int> difference(const std::vector<Int>& x, const std::vector<Int>& y) {
  std::vector<Int> out;
  std::set_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

}  // namespace detail

inline IJKPartition ijk_partition(const TilingInstance& t) {
  const auto& mod = t.modulus();
  detail::require_three_primes(mod, "ijk_partition");
  t.a.require_set("ijk_partition");
  IJKPartition r;
  r.sets.resize(3);
  for (Int a : t.a.support())
    for (std::size_t nu = 0; nu < 3; ++nu) {
      bool full = true;
      for (Int s = 1; s < mod.prime(nu) && full; ++s) full = t.a.contains(a + s * mod.fiber_step(nu));
      if (full) r.sets[nu].push_back(a);
    }
  r.pairwise = {detail::intersect(r.sets[0], r.sets[1]).size(), detail::intersect(r.sets[0], r.sets[2]).size(),
                detail::intersect(r.sets[1], r.sets[2]).size()};
  r.triple = detail::intersect(detail::intersect(r.sets[0], r.sets[1]), r.sets[2]);
  std::vector<Int> all;
  for (const auto& s : r.sets) all.insert(all.end(), s.begin(), s.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  r.covers = all == t.a.support();
  r.fibered_on_grids = fibered_on_grids(t.a);

  Int root = mod.prime(0) * mod.prime(1) * mod.prime(2);
  r.assumption_f = detail::odd_square_three_primes(mod) && t.a.total() == root && t.b.total() == root &&
                   verify_direct(t) && phi_divides(mod.m(), t.a) && r.fibered_on_grids;
  if (!r.assumption_f) return r;
  r.assumption_f1 = r.pairwise[0] == 0 && r.pairwise[1] == 0 && r.pairwise[2] == 0;
  r.assumption_f2 = r.triple.empty() && !r.assumption_f1;
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t j = (i + 1) % 3, k = (i + 2) % 3;
    if (r.sets[i].empty() && !detail::difference(r.sets[j], r.sets[k]).empty() &&
        !detail::difference(r.sets[k], r.sets[j]).empty())
      r.assumption_f3 = true;
  }
  return r;
}

enum class StructureKind {
  none,
  diagonal_boxes,
  corner,
  extended_corner,
  full_plane,
  almost_corner,
  even_corner,
  even_diagonal_boxes,
};

inline std::string to_string(StructureKind k) {
  switch (k) {
    case StructureKind::none: return "none";
    case StructureKind::diagonal_boxes: return "diagonal-boxes";
    case StructureKind::corner: return "corner";
    case StructureKind::extended_corner: return "extended-corner";
    case StructureKind::full_plane: return "full-plane";
    case StructureKind::almost_corner: return "almost-corner";
    case StructureKind::even_corner: return "even-corner";
    case StructureKind::even_diagonal_boxes: return "even-diagonal-boxes";
  }
  return "none";
}

struct StructureFinding {
  StructureKind kind = StructureKind::none;
  std::optional<std::size_t> direction;
  /// Least element of the grid examined.
  Int grid = 0;
  /// Diagonal boxes I, J, K as coordinate sets.
  std::vector<std::vector<Int>> boxes;
  /// Corners: (a, a_nu). Full plane: x. Almost corner: x_0, ..., x_{p-1}.
  std::vector<Int> points;
  /// Almost corner: the index sets L for the two other directions, in direction order.
  std::vector<std::vector<Int>> labels;
  /// Top divisors {m : D(M) | m | M} missing from Div(A on the grid), ascending.
  std::vector<Int> missing_divisors;
  /// M-fibers accompanying the diagonal boxes, when the remainder decomposes.
  std::vector<FiberPiece> fibers;

  bool found() const { return kind != StructureKind::none; }
};

namespace detail {

inline std::vector<Int> mask_members(unsigned mask, Int p) {
  std::vector<Int> out;
  for (Int t = 0; t < p; ++t)
    if (mask & (1u << t)) out.push_back(t);
  return out;
}

inline bool occupied(const std::vector<Int>& w, std::size_t c) { return w[c] != 0; }

/// Cells of (I x J x K) u (I^c x J^c x K^c).
inline std::vector<std::size_t> box_cells(const GridCube& cube, const std::array<unsigned, 3>& masks) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < cube.size(); ++c) {
    int inside = 0;
    for (std::size_t nu = 0; nu < 3; ++nu)
      if (masks[nu] & (1u << cube.lambda(c, nu))) ++inside;
    if (inside == 3 || inside == 0) out.push_back(c);
  }
  return out;
}

inline std::optional<std::array<unsigned, 3>> find_boxes(const GridCube& cube, const std::vector<Int>& w) {
  const unsigned pi = static_cast<unsigned>(cube.side(0)), pj = static_cast<unsigned>(cube.side(1)),
                 pk = static_cast<unsigned>(cube.side(2));
  require(pi + pj + pk < 64 && pi < 31 && pj < 31 && pk < 31, ErrorCode::cap_exceeded,
          "diagonal box search is limited to primes below 31");
  const unsigned full_i = (1u << pi) - 1, full_j = (1u << pj) - 1, full_k = (1u << pk) - 1;
  // fill[i][j] = mask of k with (i, j, k) occupied
  std::vector<unsigned> fill(pi * pj, 0);
  for (std::size_t c = 0; c < cube.size(); ++c)
    if (occupied(w, c))
      fill[static_cast<std::size_t>(cube.lambda(c, 0) * pj + cube.lambda(c, 1))] |= 1u << cube.lambda(c, 2);
  for (unsigned im = 1; im < full_i; ++im) {
    std::vector<unsigned> in_row(pj, full_k), out_row(pj, full_k);
    for (unsigned j = 0; j < pj; ++j)
      for (unsigned i = 0; i < pi; ++i) {
        if (im & (1u << i)) in_row[j] &= fill[i * pj + j];
        else out_row[j] &= fill[i * pj + j];
      }
    for (unsigned jm = 1; jm < full_j; ++jm) {
      unsigned hi = full_k, keep = full_k;
      for (unsigned j = 0; j < pj; ++j) {
        if (jm & (1u << j)) hi &= in_row[j];
        else keep &= out_row[j];
      }
      unsigned lo = full_k & ~keep;
      if ((lo & ~hi) != 0 || hi == 0) continue;
      unsigned km = lo != 0 ? lo : (hi & (~hi + 1));
      if (km == full_k) continue;
      return std::array<unsigned, 3>{im, jm, km};
    }
  }
  return std::nullopt;
}

/// Presence of each difference pattern between occupied cells; index 0 (no difference) always present.
inline std::vector<bool> pattern_profile(const GridCube& cube, const std::vector<Int>& w) {
  std::vector<bool> present(std::size_t{1} << cube.rank(), false);
  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < cube.size(); ++c)
    if (occupied(w, c)) cells.push_back(c);
  present[0] = !cells.empty();
  for (std::size_t x = 0; x < cells.size(); ++x)
    for (std::size_t y = x + 1; y < cells.size(); ++y) present[cube.pattern(cells[x], cells[y])] = true;
  return present;
}

inline std::vector<Int> missing_from_profile(const GridCube& cube, const std::vector<bool>& present) {
  std::vector<Int> out;
  for (unsigned mask = 1; mask < present.size(); ++mask)
    if (!present[mask]) out.push_back(cube.top_divisor(mask));
  std::sort(out.begin(), out.end());
  return out;
}

/// Cells of the plane through `cell` orthogonal to nu (coordinate nu fixed).
inline std::vector<std::size_t> plane_cells(const GridCube& cube, std::size_t cell, std::size_t nu) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < cube.size(); ++c)
    if (cube.lambda(c, nu) == cube.lambda(cell, nu)) out.push_back(c);
  return out;
}

/// Fibering of A restricted to the plane with coordinate nu fixed, in direction mu.
inline bool plane_fibered(const GridCube& cube, const std::vector<Int>& w, std::size_t cell, std::size_t nu,
                          std::size_t mu) {
  for (auto c : plane_cells(cube, cell, nu)) {
    if (cube.lambda(c, mu) != 0) continue;
    auto cells = cube.fiber_cells(c, mu);
    bool first = occupied(w, cells[0]);
    for (auto q : cells)
      if (occupied(w, q) != first) return false;
  }
  return true;
}

inline bool plane_empty(const GridCube& cube, const std::vector<Int>& w, std::size_t cell, std::size_t nu) {
  for (auto c : plane_cells(cube, cell, nu))
    if (occupied(w, c)) return false;
  return true;
}

/// The plane with coordinate nu fixed holds exactly the fiber through `cell` in direction mu.
inline bool plane_is_single_fiber(const GridCube& cube, const std::vector<Int>& w, std::size_t cell, std::size_t nu,
                                  std::size_t mu) {
  auto fiber = cube.fiber_cells(cell, mu);
  for (auto c : plane_cells(cube, cell, nu)) {
    bool on = std::find(fiber.begin(), fiber.end(), c) != fiber.end();
    if (occupied(w, c) != on) return false;
  }
  return true;
}

inline std::optional<StructureFinding> corner_on_cube(const GridCube& cube, const std::vector<Int>& w,
                                                      std::size_t nu, bool extended) {
  std::size_t j = (nu + 1) % 3, k = (nu + 2) % 3;
  if (j > k) std::swap(j, k);
  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < cube.size(); ++c)
    if (occupied(w, c)) cells.push_back(c);
  std::sort(cells.begin(), cells.end(), [&](auto l, auto r) { return cube.element(l) < cube.element(r); });
  for (auto ca : cells)
    for (auto cb : cells) {
      if (cube.pattern(ca, cb) != (1u << nu)) continue;
      bool ok;
      if (extended) {
        ok = !plane_empty(cube, w, ca, nu) && plane_fibered(cube, w, ca, nu, j) && !plane_fibered(cube, w, ca, nu, k) &&
             plane_fibered(cube, w, cb, nu, k) && !plane_fibered(cube, w, cb, nu, j);
      } else {
        ok = plane_is_single_fiber(cube, w, ca, nu, j) && plane_is_single_fiber(cube, w, cb, nu, k);
      }
      if (!ok) continue;
      StructureFinding f;
      f.kind = extended ? StructureKind::extended_corner : StructureKind::corner;
      f.direction = nu;
      f.grid = cube.base();
      f.points = {cube.element(ca), cube.element(cb)};
      return f;
    }
  return std::nullopt;
}

/// Every plane orthogonal to nu is empty or a single fiber in one of the two other directions,
/// with both directions occurring.
inline bool corner_planes(const GridCube& cube, const std::vector<Int>& w, std::size_t nu) {
  std::size_t j = (nu + 1) % 3, k = (nu + 2) % 3;
  bool seen_j = false, seen_k = false;
  for (Int t = 0; t < cube.side(nu); ++t) {
    std::size_t cell0 = cube.with(0, nu, t);
    if (plane_empty(cube, w, cell0, nu)) continue;
    bool matched = false;
    for (auto c : plane_cells(cube, cell0, nu)) {
      if (!occupied(w, c)) continue;
      if (plane_is_single_fiber(cube, w, c, nu, j)) { seen_j = true; matched = true; }
      else if (plane_is_single_fiber(cube, w, c, nu, k)) { seen_k = true; matched = true; }
      break;
    }
    if (!matched) return false;
  }
  return seen_j && seen_k;
}

inline std::vector<std::size_t> other_two(std::size_t nu) {
  std::vector<std::size_t> out;
  for (std::size_t mu = 0; mu < 3; ++mu)
    if (mu != nu) out.push_back(mu);
  return out;
}

/// Almost corner in direction c: points x_l = (u, v, l) with A = {(s != u, v, l) : l in L_a}
/// u {(u, t != v, l) : l in L_b}, where a < b are the other directions.
inline std::optional<StructureFinding> almost_corner_on_cube(const GridCube& cube, const std::vector<Int>& w,
                                                             std::size_t c) {
  auto ab = other_two(c);
  std::size_t a = ab[0], b = ab[1];
  for (Int u = 0; u < cube.side(a); ++u)
    for (Int v = 0; v < cube.side(b); ++v) {
      std::vector<Int> la, lb;
      for (Int l = 0; l < cube.side(c); ++l) {
        std::vector<Int> lam(3);
        lam[a] = u + 1;
        lam[b] = v;
        lam[c] = l;
        (occupied(w, cube.cell_at(lam)) ? la : lb).push_back(l);
      }
      if (la.size() < 2 || lb.size() < 2) continue;
      std::vector<Int> expect(cube.size(), 0);
      for (std::size_t q = 0; q < cube.size(); ++q) {
        Int ql = cube.lambda(q, c);
        bool in_a = std::binary_search(la.begin(), la.end(), ql);
        if (cube.lambda(q, b) == v && cube.lambda(q, a) != u && in_a) expect[q] = 1;
        if (cube.lambda(q, a) == u && cube.lambda(q, b) != v && !in_a) expect[q] = 1;
      }
      bool same = true;
      for (std::size_t q = 0; q < cube.size() && same; ++q) same = (expect[q] != 0) == occupied(w, q);
      if (!same) continue;
      StructureFinding f;
      f.kind = StructureKind::almost_corner;
      f.direction = c;
      f.grid = cube.base();
      for (Int l = 0; l < cube.side(c); ++l) {
        std::vector<Int> lam(3);
        lam[a] = u;
        lam[b] = v;
        lam[c] = l;
        f.points.push_back(cube.element(cube.cell_at(lam)));
      }
      f.labels = {la, lb};
      return f;
    }
  return std::nullopt;
}

inline std::optional<StructureFinding> full_plane_on_cube(const GridCube& cube, const std::vector<Int>& w,
                                                          std::size_t i) {
  auto jk = other_two(i);
  unsigned jk_mask = (1u << jk[0]) | (1u << jk[1]);
  for (std::size_t x = 0; x < cube.size(); ++x) {
    if (occupied(w, x)) continue;
    std::vector<Int> counts(8, 0);
    for (std::size_t q = 0; q < cube.size(); ++q)
      if (occupied(w, q)) ++counts[cube.pattern(x, q)];
    bool ok = counts[1u << i] == cube.side(i) - 1 &&
              counts[jk_mask] == (cube.side(jk[0]) - 1) * (cube.side(jk[1]) - 1);
    for (unsigned mask = 0; mask < 8 && ok; ++mask)
      if (mask != (1u << i) && mask != jk_mask && counts[mask] != 0) ok = false;
    if (!ok) continue;
    StructureFinding f;
    f.kind = StructureKind::full_plane;
    f.direction = i;
    f.grid = cube.base();
    f.points = {cube.element(x)};
    return f;
  }
  return std::nullopt;
}

inline std::vector<std::vector<Int>> masks_to_sets(const GridCube& cube, const std::array<unsigned, 3>& m) {
  return {mask_members(m[0], cube.side(0)), mask_members(m[1], cube.side(1)), mask_members(m[2], cube.side(2))};
}

/// Fibers covering what remains of the grid after removing the given cells, if they decompose.
inline std::optional<std::vector<FiberPiece>> remainder_fibers(const GridCube& cube, std::vector<Int> w,
                                                               const std::vector<std::size_t>& removed) {
  for (auto c : removed) w[c] = 0;
  Multiset rest(cube.modulus());
  for (std::size_t c = 0; c < cube.size(); ++c)
    if (w[c] != 0) rest.set_weight(cube.element(c), 1);
  return disjoint_fiber_decomposition(rest, cube.base());
}

}  // namespace detail

/// Nonempty I, J, K with nonempty complements and (I x J x K) u (I^c x J^c x K^c) inside A on the grid.
/// Candidates are scanned with I, then J, then K ordered by bitmask; the first hit is returned.
inline StructureFinding detect_diagonal_boxes(const Multiset& a, Int x) {
  detail::require_three_primes(a.modulus(), "detect_diagonal_boxes");
  GridCube cube(a.modulus(), x);
  auto w = cube.weights(a);
  StructureFinding f;
  f.grid = cube.base();
  if (auto masks = detail::find_boxes(cube, w)) {
    f.kind = StructureKind::diagonal_boxes;
    f.boxes = detail::masks_to_sets(cube, *masks);
  }
  return f;
}

inline StructureFinding detect_corner(const Multiset& a, Int x, std::size_t nu) {
  detail::require_three_primes(a.modulus(), "detect_corner");
  GridCube cube(a.modulus(), x);
  auto r = detail::corner_on_cube(cube, cube.weights(a), nu, false);
  if (r) return *r;
  StructureFinding f;
  f.grid = cube.base();
  return f;
}

inline StructureFinding detect_extended_corner(const Multiset& a, Int x, std::size_t nu) {
  detail::require_three_primes(a.modulus(), "detect_extended_corner");
  GridCube cube(a.modulus(), x);
  auto r = detail::corner_on_cube(cube, cube.weights(a), nu, true);
  if (r) return *r;
  StructureFinding f;
  f.grid = cube.base();
  return f;
}

/// Removes whole M-fibers from A on the grid until none remain. Each pass scans the current elements
/// in ascending order and directions in prime order, removing the first fiber found.
inline Multiset remove_fibers(const Multiset& a, Int x) {
  GridCube cube(a.modulus(), x);
  auto w = cube.weights(a);
  for (auto& v : w) v = v != 0 ? 1 : 0;
  std::vector<std::size_t> order(cube.size());
  for (std::size_t c = 0; c < cube.size(); ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](auto l, auto r) { return cube.element(l) < cube.element(r); });
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto c : order) {
      if (w[c] == 0) continue;
      for (std::size_t nu = 0; nu < cube.rank() && !changed; ++nu)
        if (detail::fiber_full(cube, w, c, nu)) {
          for (auto q : cube.fiber_cells(c, nu)) w[q] = 0;
          changed = true;
        }
      if (changed) break;
    }
  }
  Multiset out(a.modulus());
  for (std::size_t c = 0; c < cube.size(); ++c)
    if (w[c] != 0) out.set_weight(cube.element(c), a.weight(cube.element(c)));
  return out;
}

/// Top divisors {m : D(M) | m | M} realized (or not) as differences of A on the grid.
inline std::vector<Int> missing_top_divisors(const Multiset& a, Int x) {
  GridCube cube(a.modulus(), x);
  auto w = cube.weights(a);
  return detail::missing_from_profile(cube, detail::pattern_profile(cube, w));
}

/// Labels an unfibered grid of a set with Phi_M | A by its top-divisor profile.
inline StructureFinding classify_unfibered_grid(const Multiset& a, Int x) {
  const auto& mod = a.modulus();
  detail::require_three_primes(mod, "classify_unfibered_grid");
  require(phi_divides(mod.m(), a), ErrorCode::precondition_failed, "classify_unfibered_grid: Phi_M does not divide A");
  GridCube cube(mod, x);
  auto w = cube.weights(a);
  Int c0 = 0;
  for (Int v : w) {
    if (v == 0) continue;
    require(c0 == 0 || v == c0, ErrorCode::precondition_failed,
            "classify_unfibered_grid: weights on the grid are not constant");
    c0 = v;
  }
  require(c0 > 0, ErrorCode::precondition_failed, "classify_unfibered_grid: A does not meet the grid");
  for (std::size_t nu = 0; nu < 3; ++nu)
    require(!detail::fibering_on_cube(cube, w, nu).fibered, ErrorCode::precondition_failed,
            "classify_unfibered_grid: A is fibered on the grid");

  auto present = detail::pattern_profile(cube, w);
  StructureFinding f;
  f.grid = cube.base();
  f.missing_divisors = detail::missing_from_profile(cube, present);
  std::vector<unsigned> missing;
  for (unsigned mask = 1; mask < 8; ++mask)
    if (!present[mask]) missing.push_back(mask);

  auto attach_boxes = [&](StructureFinding& g) {
    if (auto masks = detail::find_boxes(cube, w)) {
      g.boxes = detail::masks_to_sets(cube, *masks);
      if (auto rest = detail::remainder_fibers(cube, w, detail::box_cells(cube, *masks))) g.fibers = *rest;
    }
  };

  std::optional<std::size_t> two;
  for (std::size_t nu = 0; nu < 3; ++nu)
    if (mod.prime(nu) == 2) two = nu;

  if (missing.empty()) {
    attach_boxes(f);
    if (!f.boxes.empty()) f.kind = StructureKind::diagonal_boxes;
    return f;
  }

  auto single_pair_missing = [&]() -> std::optional<std::size_t> {
    if (missing.size() != 1 || std::popcount(missing[0]) != 2) return std::nullopt;
    for (std::size_t nu = 0; nu < 3; ++nu)
      if (!(missing[0] & (1u << nu))) return nu;
    return std::nullopt;
  };

  if (!two) {
    if (missing.size() == 2 && std::popcount(missing[0]) == 2 && std::popcount(missing[1]) == 2) {
      std::size_t i = static_cast<std::size_t>(std::countr_zero(missing[0] & missing[1]));
      if (auto g = detail::full_plane_on_cube(cube, w, i)) {
        g->missing_divisors = f.missing_divisors;
        attach_boxes(*g);
        return *g;
      }
      return f;
    }
    if (auto k = single_pair_missing()) {
      if (detail::corner_planes(cube, w, *k)) {
        auto g = detail::corner_on_cube(cube, w, *k, false);
        f.kind = StructureKind::corner;
        f.direction = *k;
        if (g) f.points = g->points;
        return f;
      }
      if (auto g = detail::almost_corner_on_cube(cube, w, *k)) {
        g->missing_divisors = f.missing_divisors;
        attach_boxes(*g);
        return *g;
      }
    }
    return f;
  }

  bool singles_present = present[1] && present[2] && present[4];
  if (singles_present) {
    if (auto k = single_pair_missing(); k && detail::corner_planes(cube, w, *k)) {
      auto g = detail::corner_on_cube(cube, w, *k, false);
      f.kind = StructureKind::even_corner;
      f.direction = *k;
      if (g) f.points = g->points;
    }
    return f;
  }
  if (!present[1u << *two]) {
    if (auto masks = detail::find_boxes(cube, w)) {
      auto cells = detail::box_cells(cube, *masks);
      std::size_t occupied = 0;
      for (Int v : w) occupied += v != 0;
      if (cells.size() == occupied) {
        f.kind = StructureKind::even_diagonal_boxes;
        f.direction = *two;
        f.boxes = detail::masks_to_sets(cube, *masks);
      }
    }
  }
  return f;
}

/// Checks a finding's witness against the defining conditions on A.
inline bool validate_finding(const Multiset& a, const StructureFinding& f) {
  if (!f.found()) return true;
  GridCube cube(a.modulus(), f.grid);
  auto w = cube.weights(a);
  auto in_a = [&](std::size_t c) { return w[c] != 0; };
  switch (f.kind) {
    case StructureKind::diagonal_boxes:
    case StructureKind::even_diagonal_boxes: {
      if (f.boxes.size() != 3) return false;
      std::array<unsigned, 3> masks{};
      for (std::size_t nu = 0; nu < 3; ++nu) {
        for (Int t : f.boxes[nu]) masks[nu] |= 1u << t;
        if (masks[nu] == 0 || masks[nu] == (1u << cube.side(nu)) - 1) return false;
      }
      auto cells = detail::box_cells(cube, masks);
      if (!std::all_of(cells.begin(), cells.end(), in_a)) return false;
      if (f.kind == StructureKind::even_diagonal_boxes) {
        std::size_t count = 0;
        for (std::size_t c = 0; c < cube.size(); ++c) count += in_a(c);
        return count == cells.size();
      }
      return true;
    }
    case StructureKind::corner:
    case StructureKind::even_corner:
    case StructureKind::extended_corner: {
      if (!f.direction || f.points.size() != 2) return false;
      std::size_t nu = *f.direction;
      std::size_t ca = cube.cell_of(f.points[0]), cb = cube.cell_of(f.points[1]);
      if (!in_a(ca) || !in_a(cb) || cube.pattern(ca, cb) != (1u << nu)) return false;
      auto jk = detail::other_two(nu);
      if (f.kind == StructureKind::extended_corner)
        return detail::plane_fibered(cube, w, ca, nu, jk[0]) && !detail::plane_fibered(cube, w, ca, nu, jk[1]) &&
               detail::plane_fibered(cube, w, cb, nu, jk[1]) && !detail::plane_fibered(cube, w, cb, nu, jk[0]);
      return detail::plane_is_single_fiber(cube, w, ca, nu, jk[0]) &&
             detail::plane_is_single_fiber(cube, w, cb, nu, jk[1]);
    }
    case StructureKind::full_plane: {
      if (!f.direction || f.points.size() != 1) return false;
      auto g = detail::full_plane_on_cube(cube, w, *f.direction);
      if (!g) return false;
      std::size_t x = cube.cell_of(f.points[0]);
      if (in_a(x)) return false;
      std::vector<Int> counts(8, 0);
      for (std::size_t q = 0; q < cube.size(); ++q)
        if (in_a(q)) ++counts[cube.pattern(x, q)];
      auto jk = detail::other_two(*f.direction);
      unsigned jk_mask = (1u << jk[0]) | (1u << jk[1]);
      for (unsigned mask = 0; mask < 8; ++mask) {
        Int want = 0;
        if (mask == (1u << *f.direction)) want = cube.side(*f.direction) - 1;
        if (mask == jk_mask) want = (cube.side(jk[0]) - 1) * (cube.side(jk[1]) - 1);
        if (counts[mask] != want) return false;
      }
      return true;
    }
    case StructureKind::almost_corner: {
      if (!f.direction || f.labels.size() != 2) return false;
      std::size_t c = *f.direction;
      auto ab = detail::other_two(c);
      if (static_cast<Int>(f.points.size()) != cube.side(c)) return false;
      if (f.labels[0].size() < 2 || f.labels[1].size() < 2) return false;
      for (std::size_t q = 0; q < cube.size(); ++q) {
        bool expect = false;
        for (std::size_t side = 0; side < 2; ++side)
          for (Int l : f.labels[side]) {
            std::size_t xl = cube.cell_of(f.points[static_cast<std::size_t>(l)]);
            if (cube.pattern(q, xl) == (1u << ab[side])) expect = true;
          }
        if (expect != in_a(q)) return false;
      }
      return true;
    }
    case StructureKind::none: return true;
  }
  return false;
}

struct PlaneBoundViolation {
  std::size_t direction = 0;
  int alpha = 0;
  Int x = 0;
  Int count = 0;
  Int bound = 0;
};

/// |A ∩ Π(x, p_nu^{n_nu - alpha})| <= p_nu^alpha prod_{mu != nu} p_mu^{beta_mu} for all x, nu, alpha,
/// where beta_mu is the p_mu-adic valuation of |A|.
inline std::optional<PlaneBoundViolation> plane_bound_violation(const Multiset& a) {
  const auto& mod = a.modulus();
  Int size = a.total();
  std::vector<int> beta(mod.rank(), 0);
  for (std::size_t nu = 0; nu < mod.rank(); ++nu)
    for (Int s = size; s > 0 && s % mod.prime(nu) == 0; s /= mod.prime(nu)) ++beta[nu];
  for (std::size_t nu = 0; nu < mod.rank(); ++nu) {
    Int others = 1;
    for (std::size_t mu = 0; mu < mod.rank(); ++mu)
      if (mu != nu) others *= ipow(mod.prime(mu), beta[mu]);
    for (int alpha = 0; alpha <= mod.exponent(nu); ++alpha) {
      Int modulus = ipow(mod.prime(nu), mod.exponent(nu) - alpha);
      std::vector<Int> counts(static_cast<std::size_t>(modulus), 0);
      for (Int y = 0; y < a.m(); ++y) counts[static_cast<std::size_t>(y % modulus)] += a.weight(y);
      Int bound = ipow(mod.prime(nu), alpha) * others;
      for (Int r = 0; r < modulus; ++r)
        if (counts[static_cast<std::size_t>(r)] > bound)
          return PlaneBoundViolation{nu, alpha, r, counts[static_cast<std::size_t>(r)], bound};
    }
  }
  return std::nullopt;
}

inline bool plane_bound_check(const Multiset& a) { return !plane_bound_violation(a).has_value(); }
inline bool plane_bound_check(const TilingInstance& t) { return plane_bound_check(t.a) && plane_bound_check(t.b); }

/// If |A ∩ Π(x, p^{n-alpha0})| > p^{beta-1} prod_{others} p^{beta}, then Phi_{p^{n-alpha}} | A for some alpha < alpha0.
inline bool plane_excess_check(const Multiset& a) {
  const auto& mod = a.modulus();
  Int size = a.total();
  for (std::size_t nu = 0; nu < mod.rank(); ++nu) {
    int beta = 0;
    for (Int s = size; s > 0 && s % mod.prime(nu) == 0; s /= mod.prime(nu)) ++beta;
    if (beta == 0) continue;
    Int threshold = size / mod.prime(nu);
    for (int alpha0 = 1; alpha0 <= mod.exponent(nu); ++alpha0) {
      Int modulus = ipow(mod.prime(nu), mod.exponent(nu) - alpha0);
      std::vector<Int> counts(static_cast<std::size_t>(modulus), 0);
      for (Int y = 0; y < a.m(); ++y) counts[static_cast<std::size_t>(y % modulus)] += a.weight(y);
      if (*std::max_element(counts.begin(), counts.end()) <= threshold) continue;
      bool some = false;
      for (int alpha = 0; alpha < alpha0 && !some; ++alpha)
        some = phi_divides(ipow(mod.prime(nu), mod.exponent(nu) - alpha), a);
      if (!some) return false;
    }
  }
  return true;
}

struct TopDifferenceReport {
  Verdict verdict = Verdict::inapplicable;
  std::string reason;
  /// Grids (least elements in Z_N) lacking the difference N/p_nu, with the directions they are N-fibered in.
  std::vector<std::pair<Int, std::vector<std::size_t>>> grids;
  /// Direction of global N-fibering when a second odd top difference is missing from Div_N(A).
  std::optional<std::size_t> global_direction;
};

/// Evaluates the conclusion of "missing top difference implies fibering" for A reduced mod N.
inline TopDifferenceReport missing_top_difference_fibering(const Multiset& a, Int N, std::size_t nu) {
  const auto& mod = a.modulus();
  detail::require_three_primes(mod, "missing_top_difference_fibering");
  mod.require_divisor(N);
  TopDifferenceReport r;
  auto fail = [&](std::string why) {
    r.reason = std::move(why);
    return r;
  };
  for (std::size_t mu = 0; mu < 3; ++mu)
    if (N % mod.prime(mu) != 0) return fail("N is not divisible by every prime");
  if (mod.prime(nu) == 2) return fail("p_nu = 2");
  auto an = reduce_mod(a, N);
  const auto& modn = an.modulus();
  if (!an.nonnegative() || an.is_zero()) return fail("A mod N is not a nonzero nonnegative multiset");
  if (!phi_divides(N, an)) return fail("Phi_N does not divide A");
  Int c0 = 0;
  for (Int v : an.weights())
    if (v != 0) {
      if (c0 != 0 && v != c0) return fail("weights of A mod N are not constant");
      c0 = v;
    }

  std::vector<bool> global_present(8, false);
  std::vector<std::pair<Int, GridCube>> lacking;
  for (Int x : occupied_grids(an)) {
    GridCube cube(modn, x);
    auto w = cube.weights(an);
    auto present = detail::pattern_profile(cube, w);
    for (unsigned mask = 0; mask < 8; ++mask)
      if (present[mask]) global_present[mask] = true;
    if (!present[1u << nu]) lacking.emplace_back(x, cube);
  }
  if (lacking.empty()) return fail("every grid realizes N/p_nu");
  r.verdict = Verdict::holds;
  for (auto& [x, cube] : lacking) {
    auto w = cube.weights(an);
    std::vector<std::size_t> dirs;
    for (std::size_t mu = 0; mu < 3; ++mu)
      if (mu != nu && detail::fibering_on_cube(cube, w, mu).fibered) dirs.push_back(mu);
    if (dirs.empty()) r.verdict = Verdict::violated;
    r.grids.emplace_back(x, std::move(dirs));
  }
  if (!global_present[1u << nu]) {
    for (std::size_t mu = 0; mu < 3; ++mu) {
      if (mu == nu || mod.prime(mu) == 2 || global_present[1u << mu]) continue;
      std::size_t k = 3 - nu - mu;
      r.global_direction = k;
      for (Int x : occupied_grids(an))
        if (!is_m_fibered_on_grid(an, x, k).fibered) r.verdict = Verdict::violated;
      break;
    }
  }
  return r;
}

}  // namespace cyclotile
