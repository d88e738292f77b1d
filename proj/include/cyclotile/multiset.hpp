#pragma once

#include <string>
#include <vector>

#include "modulus.hpp"

namespace cyclotile {

/// Integer weight function on Z_M, read as the mask polynomial
/// A(X) = sum w(x) X^x mod X^M - 1. A set is a multiset with 0/1 weights.
class Multiset {
 public:
  Multiset() = default;
  explicit Multiset(Modulus mod) : mod_(std::move(mod)), w_(static_cast<std::size_t>(mod_.m()), 0) {}
  Multiset(Modulus mod, std::vector<Int> weights) : mod_(std::move(mod)), w_(std::move(weights)) {
    require(static_cast<Int>(w_.size()) == mod_.m(), ErrorCode::invalid_argument,
            "weight vector length must equal the modulus");
    for (Int v : w_) total_ += v;
  }

  static Multiset from_elements(const Modulus& mod, const std::vector<Int>& elements) {
    Multiset a(mod);
    for (Int x : elements) a.add_weight(x, 1);
    return a;
  }

  const Modulus& modulus() const { return mod_; }
  Int m() const { return mod_.m(); }
  const std::vector<Int>& weights() const { return w_; }
  Int weight(Int x) const { return w_[static_cast<std::size_t>(mod_.reduce(x))]; }
  Int operator[](Int x) const { return weight(x); }
  /// A(1).
  Int total() const { return total_; }

  bool is_set() const {
    for (Int v : w_)
      if (v != 0 && v != 1) return false;
    return true;
  }
  bool is_zero() const {
    for (Int v : w_)
      if (v != 0) return false;
    return true;
  }
  bool nonnegative() const {
    for (Int v : w_)
      if (v < 0) return false;
    return true;
  }
  bool contains(Int x) const { return weight(x) != 0; }

  /// Elements with nonzero weight, ascending.
  std::vector<Int> support() const {
    std::vector<Int> s;
    for (Int x = 0; x < m(); ++x)
      if (w_[static_cast<std::size_t>(x)] != 0) s.push_back(x);
    return s;
  }

  void add_weight(Int x, Int v) {
    w_[static_cast<std::size_t>(mod_.reduce(x))] += v;
    total_ += v;
  }
  void set_weight(Int x, Int v) {
    auto& slot = w_[static_cast<std::size_t>(mod_.reduce(x))];
    total_ += v - slot;
    slot = v;
  }

  void require_set(const char* what) const {
    require(is_set(), ErrorCode::not_a_set, std::string(what) + ": input must be a set");
  }

  friend bool operator==(const Multiset& a, const Multiset& b) {
    return a.mod_ == b.mod_ && a.w_ == b.w_;
  }

 private:
  Modulus mod_;
  std::vector<Int> w_;
  Int total_ = 0;
};

inline void require_same_modulus(const Multiset& a, const Multiset& b) {
  require(a.modulus() == b.modulus(), ErrorCode::modulus_mismatch, "multisets live in different groups");
}

/// w^N(x) = sum of w(x') over x' = x mod N.
inline Multiset reduce_mod(const Multiset& a, Int N) {
  a.modulus().require_divisor(N);
  require(N > 1, ErrorCode::invalid_argument, "reduce_mod: Z_1 is represented by total()");
  if (N == a.m()) return a;
  std::vector<Int> w(static_cast<std::size_t>(N), 0);
  for (Int x = 0; x < a.m(); ++x) w[static_cast<std::size_t>(x % N)] += a.weights()[static_cast<std::size_t>(x)];
  return Multiset(a.modulus().sub(N), std::move(w));
}

inline Multiset convolve(const Multiset& a, const Multiset& b) {
  require_same_modulus(a, b);
  const Int m = a.m();
  std::vector<Int> w(static_cast<std::size_t>(m), 0);
  auto sa = a.support();
  auto sb = b.support();
  for (Int x : sa)
    for (Int y : sb) w[static_cast<std::size_t>((x + y) % m)] += a[x] * b[y];
  return Multiset(a.modulus(), std::move(w));
}

inline Multiset add(const Multiset& a, const Multiset& b) {
  require_same_modulus(a, b);
  auto w = a.weights();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += b.weights()[i];
  return Multiset(a.modulus(), std::move(w));
}

inline Multiset subtract(const Multiset& a, const Multiset& b) {
  require_same_modulus(a, b);
  auto w = a.weights();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= b.weights()[i];
  return Multiset(a.modulus(), std::move(w));
}

inline Multiset translate(Int t, const Multiset& a) {
  const Int m = a.m();
  std::vector<Int> w(static_cast<std::size_t>(m), 0);
  for (Int x = 0; x < m; ++x) w[static_cast<std::size_t>(posmod(x + t, m))] = a.weights()[static_cast<std::size_t>(x)];
  return Multiset(a.modulus(), std::move(w));
}

/// A restricted to the residue class Lambda(x, D).
inline Multiset restrict_to_grid(const Multiset& a, Int x, Int D) {
  Multiset out(a.modulus());
  for (Int y : a.modulus().grid(x, D)) out.set_weight(y, a[y]);
  return out;
}

inline Multiset delta(const Modulus& mod, Int x = 0) { return Multiset::from_elements(mod, {x}); }

inline Multiset full_group(const Modulus& mod) {
  return Multiset(mod, std::vector<Int>(static_cast<std::size_t>(mod.m()), 1));
}

}  // namespace cyclotile
