#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "tiling.hpp"

namespace cyclotile {

namespace detail {

class ComplementSearch {
 public:
  ComplementSearch(const Modulus& mod, std::vector<Int> a) : mod_(mod), m_(mod.m()), a_(std::move(a)) {
    covered_.assign(static_cast<std::size_t>(m_), 0);
    forbidden_.assign(static_cast<std::size_t>(m_ + 1), 0);
    for (Int x : a_)
      for (Int y : a_)
        if (x != y) forbidden_[static_cast<std::size_t>(std::gcd(posmod(x - y, m_), m_))] = 1;
  }

  std::vector<std::vector<Int>> run(std::size_t limit, std::optional<std::uint64_t> seed = std::nullopt) {
    limit_ = limit;
    order_ = a_;
    if (seed) {
      std::mt19937_64 rng(*seed);
      std::shuffle(order_.begin(), order_.end(), rng);
    }
    const Int k = static_cast<Int>(a_.size());
    if (k == 0 || m_ % k != 0) return {};
    target_ = m_ / k;
    if (!place(0)) return {};
    dfs();
    return results_;
  }

 private:
  bool place(Int b) {
    if (!fits(b)) return false;
    for (Int x : a_) covered_[static_cast<std::size_t>((x + b) % m_)] = 1;
    chosen_.push_back(b);
    return true;
  }
  void unplace() {
    Int b = chosen_.back();
    chosen_.pop_back();
    for (Int x : a_) covered_[static_cast<std::size_t>((x + b) % m_)] = 0;
  }

  bool fits(Int b) const {
    for (Int c : chosen_)
      if (forbidden_[static_cast<std::size_t>(std::gcd(posmod(b - c, m_), m_))]) return false;
    for (Int x : a_)
      if (covered_[static_cast<std::size_t>((x + b) % m_)]) return false;
    return true;
  }

  void dfs() {
    if (results_.size() >= limit_) return;
    if (static_cast<Int>(chosen_.size()) == target_) {
      auto b = chosen_;
      std::sort(b.begin(), b.end());
      results_.push_back(std::move(b));
      return;
    }
    // Branch on the uncovered residue with the fewest admissible placements.
    Int best_u = -1;
    std::size_t best_count = SIZE_MAX;
    for (Int u = 0; u < m_ && best_count > 1; ++u) {
      if (covered_[static_cast<std::size_t>(u)]) continue;
      std::size_t count = 0;
      for (Int x : a_)
        if (fits(posmod(u - x, m_))) ++count;
      if (count == 0) return;
      if (count < best_count) {
        best_count = count;
        best_u = u;
      }
    }
    for (Int x : order_) {
      Int b = posmod(best_u - x, m_);
      if (!place(b)) continue;
      dfs();
      unplace();
    }
  }

  const Modulus& mod_;
  Int m_;
  std::vector<Int> a_;
  std::vector<char> covered_;
  std::vector<char> forbidden_;
  std::vector<Int> chosen_;
  std::vector<Int> order_;
  std::vector<std::vector<Int>> results_;
  Int target_ = 0;
  std::size_t limit_ = 0;
};

}  // namespace detail

/// Every B containing 0 with A + B = Z_M, ascending lexicographically. With a
/// limit, the first `limit` complements in search order; a seed shuffles the
/// branch order so that limited runs sample different complements.
inline std::vector<Multiset> find_complements(const Multiset& a, std::size_t limit = SIZE_MAX,
                                              std::optional<std::uint64_t> seed = std::nullopt) {
  a.require_set("find_complements");
  detail::ComplementSearch search(a.modulus(), a.support());
  auto found = search.run(limit, seed);
  std::sort(found.begin(), found.end());
  std::vector<Multiset> out;
  for (const auto& b : found) out.push_back(Multiset::from_elements(a.modulus(), b));
  return out;
}

inline bool tiles(const Multiset& a) { return !find_complements(a, 1).empty(); }

/// The translate of a nonempty set with 0 in it whose sorted element list is
/// lexicographically least.
inline std::vector<Int> least_translate(const std::vector<Int>& elems, Int m) {
  std::vector<Int> best;
  for (Int t : elems) {
    std::vector<Int> cand;
    cand.reserve(elems.size());
    for (Int x : elems) cand.push_back(posmod(x - t, m));
    std::sort(cand.begin(), cand.end());
    if (best.empty() || cand < best) best = std::move(cand);
  }
  return best;
}

struct EnumerationTask {
  Int m = 0;
  /// Required |A|; 0 enumerates every divisor of m.
  Int size = 0;
  Int cap = 400;
};

namespace detail {

// Joint exact cover over (A, B) with 0 in both: the least uncovered u is
// written as a + b, with a and/or b newly added.
class TilingSearch {
 public:
  TilingSearch(const Modulus& mod, Int ka) : mod_(mod), m_(mod.m()), ka_(ka), kb_(mod.m() / ka) {
    covered_.assign(static_cast<std::size_t>(m_), 0);
    in_a_.assign(static_cast<std::size_t>(m_), 0);
    in_b_.assign(static_cast<std::size_t>(m_), 0);
    div_a_.assign(static_cast<std::size_t>(m_ + 1), 0);
    div_b_.assign(static_cast<std::size_t>(m_ + 1), 0);
    gcd_.resize(static_cast<std::size_t>(m_));
    for (Int d = 0; d < m_; ++d) gcd_[static_cast<std::size_t>(d)] = std::gcd(d, m_);
  }

  std::set<std::pair<std::vector<Int>, std::vector<Int>>> run() {
    add_a(0);
    add_b(0);
    dfs();
    return found_;
  }

 private:
  Int g(Int d) const { return gcd_[static_cast<std::size_t>(posmod(d, m_))]; }

  bool can_add(Int x, const std::vector<Int>& same, const std::vector<char>& other_div,
               const std::vector<Int>& other) const {
    for (Int y : same)
      if (y == x || other_div[static_cast<std::size_t>(g(x - y))]) return false;
    for (Int y : other)
      if (covered_[static_cast<std::size_t>((x + y) % m_)]) return false;
    return true;
  }

  // Returns the gcd values newly inserted, for undo.
  std::vector<Int> insert(Int x, std::vector<Int>& same, std::vector<char>& div, const std::vector<Int>& other,
                          std::vector<char>& member) {
    std::vector<Int> added;
    for (Int y : same) {
      Int d = g(x - y);
      if (!div[static_cast<std::size_t>(d)]) {
        div[static_cast<std::size_t>(d)] = 1;
        added.push_back(d);
      }
    }
    for (Int y : other) covered_[static_cast<std::size_t>((x + y) % m_)] = 1;
    same.push_back(x);
    member[static_cast<std::size_t>(x)] = 1;
    return added;
  }

  void remove(std::vector<Int>& same, std::vector<char>& div, const std::vector<Int>& other,
              std::vector<char>& member, const std::vector<Int>& added) {
    Int x = same.back();
    same.pop_back();
    member[static_cast<std::size_t>(x)] = 0;
    for (Int y : other) covered_[static_cast<std::size_t>((x + y) % m_)] = 0;
    for (Int d : added) div[static_cast<std::size_t>(d)] = 0;
  }

  bool try_a(Int x) { return static_cast<Int>(a_.size()) < ka_ && can_add(x, a_, div_b_, b_); }
  bool try_b(Int x) { return static_cast<Int>(b_.size()) < kb_ && can_add(x, b_, div_a_, a_); }
  std::vector<Int> add_a(Int x) { return insert(x, a_, div_a_, b_, in_a_); }
  std::vector<Int> add_b(Int x) { return insert(x, b_, div_b_, a_, in_b_); }
  void pop_a(const std::vector<Int>& added) { remove(a_, div_a_, b_, in_a_, added); }
  void pop_b(const std::vector<Int>& added) { remove(b_, div_b_, a_, in_b_, added); }

  void dfs() {
    Int u = 0;
    while (u < m_ && covered_[static_cast<std::size_t>(u)]) ++u;
    if (u == m_) {
      if (static_cast<Int>(a_.size()) == ka_ && static_cast<Int>(b_.size()) == kb_) {
        auto a = a_, b = b_;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        found_.emplace(least_translate(a, m_), least_translate(b, m_));
      }
      return;
    }
    // Existing a, new b.
    for (std::size_t i = 0; i < a_.size(); ++i) {
      Int b = posmod(u - a_[i], m_);
      if (in_b_[static_cast<std::size_t>(b)] || !try_b(b)) continue;
      auto undo = add_b(b);
      dfs();
      pop_b(undo);
    }
    // New a, existing b.
    for (std::size_t i = 0; i < b_.size(); ++i) {
      Int a = posmod(u - b_[i], m_);
      if (in_a_[static_cast<std::size_t>(a)] || !try_a(a)) continue;
      auto undo = add_a(a);
      dfs();
      pop_a(undo);
    }
    // Both new.
    if (static_cast<Int>(a_.size()) >= ka_ || static_cast<Int>(b_.size()) >= kb_) return;
    for (Int a = 1; a < m_; ++a) {
      Int b = posmod(u - a, m_);
      if (in_a_[static_cast<std::size_t>(a)] || in_b_[static_cast<std::size_t>(b)]) continue;
      if (!try_a(a)) continue;
      auto undo_a = add_a(a);
      if (try_b(b)) {
        auto undo_b = add_b(b);
        dfs();
        pop_b(undo_b);
      }
      pop_a(undo_a);
    }
  }

  const Modulus& mod_;
  Int m_, ka_, kb_;
  std::vector<char> covered_, in_a_, in_b_, div_a_, div_b_;
  std::vector<Int> gcd_;
  std::vector<Int> a_, b_;
  std::set<std::pair<std::vector<Int>, std::vector<Int>>> found_;
};

}  // namespace detail

/// Every tiling pair (A, B) of Z_m with each side normalized to its
/// lexicographically least translate containing 0; deterministic order.
inline std::vector<TilingInstance> enumerate_tilings(const EnumerationTask& task) {
  require(task.m >= 2, ErrorCode::invalid_argument, "enumerate_tilings: m must be >= 2");
  require(task.m <= task.cap, ErrorCode::cap_exceeded,
          "enumerate_tilings: m = " + std::to_string(task.m) + " exceeds cap " + std::to_string(task.cap));
  Modulus mod = Modulus::of(task.m);
  std::vector<Int> sizes;
  if (task.size == 0) {
    sizes = mod.divisors();
  } else {
    require(mod.divides_m(task.size), ErrorCode::not_a_divisor, "enumerate_tilings: |A| must divide m");
    sizes = {task.size};
  }
  std::vector<TilingInstance> out;
  for (Int k : sizes) {
    detail::TilingSearch search(mod, k);
    for (const auto& [a, b] : search.run()) out.push_back(TilingInstance::of(mod, a, b));
  }
  return out;
}

namespace detail {

// Sorted DFS over sets A containing 0. A prefix survives only while some B of
// size m/k avoids every gcd class in Div(prefix); candidates are confirmed by
// an explicit complement search.
class TileSearch {
 public:
  TileSearch(const Modulus& mod, Int k) : mod_(mod), m_(mod.m()), k_(k), j_(mod.m() / k) {
    const auto& divs = mod.divisors();
    slot_.assign(static_cast<std::size_t>(m_ + 1), 0);
    for (std::size_t i = 0; i < divs.size(); ++i) slot_[static_cast<std::size_t>(divs[i])] = static_cast<int>(i);
    class_of_.resize(static_cast<std::size_t>(m_));
    for (Int d = 0; d < m_; ++d) class_of_[static_cast<std::size_t>(d)] = slot_[static_cast<std::size_t>(std::gcd(d, m_))];
  }

  std::vector<std::vector<Int>> run() {
    a_ = {0};
    dfs(0);
    return out_;
  }

 private:
  std::uint64_t bit(Int d) const { return std::uint64_t{1} << class_of_[static_cast<std::size_t>(posmod(d, m_))]; }

  bool packable(std::uint64_t mask) {
    auto it = memo_.find(mask);
    if (it != memo_.end()) return it->second;
    std::vector<Int> cand;
    for (Int y = 1; y < m_; ++y)
      if (!(mask & bit(y))) cand.push_back(y);
    std::vector<Int> chosen{0};
    bool ok = pack(mask, cand, 0, chosen);
    memo_.emplace(mask, ok);
    return ok;
  }

  bool pack(std::uint64_t mask, const std::vector<Int>& cand, std::size_t from, std::vector<Int>& chosen) {
    if (static_cast<Int>(chosen.size()) == j_) return true;
    if (static_cast<Int>(chosen.size() + (cand.size() - from)) < j_) return false;
    for (std::size_t i = from; i < cand.size(); ++i) {
      Int y = cand[i];
      bool fits = true;
      for (Int c : chosen)
        if (mask & bit(y - c)) { fits = false; break; }
      if (!fits) continue;
      chosen.push_back(y);
      if (pack(mask, cand, i + 1, chosen)) return true;
      chosen.pop_back();
      if (static_cast<Int>(chosen.size() + (cand.size() - i - 1)) < j_) return false;
    }
    return false;
  }

  void dfs(std::uint64_t mask) {
    if (static_cast<Int>(a_.size()) == k_) {
      if (least_translate(a_, m_) != a_) return;
      if (tiles(Multiset::from_elements(mod_, a_))) out_.push_back(a_);
      return;
    }
    for (Int x = a_.back() + 1; x + (k_ - static_cast<Int>(a_.size()) - 1) < m_; ++x) {
      std::uint64_t next = mask;
      for (Int y : a_) next |= bit(x - y);
      if (j_ <= pack_threshold && !packable(next)) continue;
      a_.push_back(x);
      dfs(next);
      a_.pop_back();
    }
  }

  static constexpr Int pack_threshold = 12;

  const Modulus& mod_;
  Int m_, k_, j_;
  std::vector<int> slot_, class_of_;
  std::vector<Int> a_;
  std::map<std::uint64_t, bool> memo_;
  std::vector<std::vector<Int>> out_;
};

}  // namespace detail

/// Every tile of Z_m of size k, each normalized to its lexicographically
/// least translate containing 0, ascending.
inline std::vector<Multiset> enumerate_tiles(Int m, Int k, Int cap = 400) {
  require(m >= 2 && m <= cap, ErrorCode::cap_exceeded, "enumerate_tiles: m outside [2, cap]");
  Modulus mod = Modulus::of(m);
  require(mod.divides_m(k), ErrorCode::not_a_divisor, "enumerate_tiles: k must divide m");
  require(mod.divisors().size() <= 64, ErrorCode::cap_exceeded, "enumerate_tiles: too many divisors");
  detail::TileSearch search(mod, k);
  std::vector<Multiset> out;
  for (const auto& a : search.run()) out.push_back(Multiset::from_elements(mod, a));
  return out;
}

}  // namespace cyclotile
