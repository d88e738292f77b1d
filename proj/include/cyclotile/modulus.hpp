#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace cyclotile {

using Int = std::int64_t;

inline constexpr Int max_modulus = Int{1} << 20;

inline bool is_prime(Int n) {
  if (n < 2) return false;
  for (Int q = 2; q * q <= n; ++q)
    if (n % q == 0) return false;
  return true;
}

inline Int ipow(Int base, int exp) {
  Int r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

inline Int posmod(Int x, Int m) {
  Int r = x % m;
  return r < 0 ? r + m : r;
}

// Euler totient by trial division.
inline Int euler_phi(Int n) {
  require(n >= 1, ErrorCode::invalid_argument, "euler_phi: n must be >= 1");
  Int result = n;
  for (Int q = 2; q * q <= n; ++q) {
    if (n % q != 0) continue;
    while (n % q == 0) n /= q;
    result -= result / q;
  }
  if (n > 1) result -= result / n;
  return result;
}

struct PrimeFactor {
  Int p;
  int n;
  friend bool operator==(const PrimeFactor&, const PrimeFactor&) = default;
};

/// Factored order of a cyclic group Z_M together with the derived quantities
/// used throughout: the components M_nu = M / p_nu^{n_nu}, the divisor lattice
/// and the coordinate map x -> (pi_nu(x)).
class Modulus {
 public:
  Modulus() : Modulus(std::vector<PrimeFactor>{{2, 1}}) {}

  explicit Modulus(std::vector<PrimeFactor> factors) : factors_(std::move(factors)) {
    require(!factors_.empty(), ErrorCode::invalid_argument, "modulus needs at least one prime");
    m_ = 1;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const auto& f = factors_[i];
      require(is_prime(f.p), ErrorCode::invalid_argument, "not a prime: " + std::to_string(f.p));
      require(f.n >= 1, ErrorCode::invalid_argument, "exponent must be >= 1");
      require(i == 0 || factors_[i - 1].p < f.p, ErrorCode::invalid_argument,
              "primes must be strictly increasing");
      for (int e = 0; e < f.n; ++e) {
        m_ *= f.p;
        require(m_ <= max_modulus, ErrorCode::cap_exceeded,
                "modulus exceeds cap " + std::to_string(max_modulus));
      }
    }
    require(m_ >= 2, ErrorCode::invalid_argument, "modulus must be >= 2");
    for (const auto& f : factors_) {
      Int pp = ipow(f.p, f.n);
      prime_power_.push_back(pp);
      component_.push_back(m_ / pp);
      Int c = (m_ / pp) % pp;
      Int inv = 0;
      for (Int t = 1; t < pp; ++t)
        if ((c * t) % pp == 1) { inv = t; break; }
      component_inverse_.push_back(inv);
    }
    divisors_.push_back(1);
    for (const auto& f : factors_) {
      std::vector<Int> next;
      for (Int d : divisors_) {
        Int q = 1;
        for (int e = 0; e <= f.n; ++e, q *= f.p) next.push_back(d * q);
      }
      divisors_ = std::move(next);
    }
    std::sort(divisors_.begin(), divisors_.end());
  }

  /// Factor m by trial division.
  static Modulus of(Int m) {
    require(m >= 2, ErrorCode::invalid_argument, "modulus must be >= 2");
    require(m <= max_modulus, ErrorCode::cap_exceeded, "modulus exceeds cap");
    std::vector<PrimeFactor> f;
    for (Int q = 2; q * q <= m; ++q) {
      int e = 0;
      while (m % q == 0) { m /= q; ++e; }
      if (e > 0) f.push_back({q, e});
    }
    if (m > 1) f.push_back({m, 1});
    return Modulus(std::move(f));
  }

  Int m() const { return m_; }
  std::size_t rank() const { return factors_.size(); }
  const std::vector<PrimeFactor>& factors() const { return factors_; }
  Int prime(std::size_t nu) const { return factors_.at(nu).p; }
  int exponent(std::size_t nu) const { return factors_.at(nu).n; }
  Int prime_power(std::size_t nu) const { return prime_power_.at(nu); }
  /// M_nu = M / p_nu^{n_nu}.
  Int component(std::size_t nu) const { return component_.at(nu); }
  /// M / p_nu, the step of an M-fiber in direction nu.
  Int fiber_step(std::size_t nu) const { return m_ / prime(nu); }

  std::size_t index_of_prime(Int p) const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (factors_[i].p == p) return i;
    throw Error(ErrorCode::invalid_argument, "prime " + std::to_string(p) + " does not divide " +
                                                 std::to_string(m_));
  }

  const std::vector<Int>& divisors() const { return divisors_; }
  bool divides_m(Int d) const { return d >= 1 && m_ % d == 0; }
  void require_divisor(Int d) const {
    require(divides_m(d), ErrorCode::not_a_divisor,
            std::to_string(d) + " does not divide " + std::to_string(m_));
  }

  Int reduce(Int x) const { return posmod(x, m_); }

  /// gcd(x, N) for a divisor N of M, with gcd(0, N) = N.
  Int gcd_with_m(Int x, Int N) const {
    require_divisor(N);
    return std::gcd(posmod(x, N), N);
  }
  Int gcd_with_m(Int x) const { return gcd_with_m(x, m_); }

  std::vector<int> exponents(Int d) const {
    require_divisor(d);
    std::vector<int> e(rank(), 0);
    for (std::size_t i = 0; i < rank(); ++i)
      while (d % prime(i) == 0) { d /= prime(i); ++e[i]; }
    return e;
  }

  Int from_exponents(const std::vector<int>& e) const {
    require(e.size() == rank(), ErrorCode::invalid_argument, "exponent vector arity");
    Int d = 1;
    for (std::size_t i = 0; i < rank(); ++i) {
      require(e[i] >= 0 && e[i] <= exponent(i), ErrorCode::invalid_argument,
              "exponent out of range");
      d *= ipow(prime(i), e[i]);
    }
    return d;
  }

  /// D(N) = prod p^{max(0, alpha - 1)}.
  Int d_of(Int N) const {
    auto e = exponents(N);
    for (int& a : e) a = std::max(0, a - 1);
    return from_exponents(e);
  }

  /// Index nu if d = p_nu^alpha with alpha >= 1.
  std::optional<std::size_t> prime_power_index(Int d) const {
    if (!divides_m(d) || d == 1) return std::nullopt;
    for (std::size_t i = 0; i < rank(); ++i) {
      Int q = d;
      while (q % prime(i) == 0) q /= prime(i);
      if (q == 1) return i;
    }
    return std::nullopt;
  }

  Int phi_of_divisor(Int d) const {
    auto e = exponents(d);
    Int r = 1;
    for (std::size_t i = 0; i < rank(); ++i)
      if (e[i] > 0) r *= (prime(i) - 1) * ipow(prime(i), e[i] - 1);
    return r;
  }

  /// The factored modulus of a divisor N > 1 of M.
  Modulus sub(Int N) const {
    auto e = exponents(N);
    std::vector<PrimeFactor> f;
    for (std::size_t i = 0; i < rank(); ++i)
      if (e[i] > 0) f.push_back({prime(i), e[i]});
    return Modulus(std::move(f));
  }

  /// pi_nu(x) with x = sum pi_nu(x) M_nu (mod M).
  std::vector<Int> coords(Int x) const {
    x = reduce(x);
    std::vector<Int> c(rank());
    for (std::size_t i = 0; i < rank(); ++i)
      c[i] = ((x % prime_power_[i]) * component_inverse_[i]) % prime_power_[i];
    return c;
  }

  Int coord(Int x, std::size_t nu) const {
    return ((reduce(x) % prime_power_[nu]) * component_inverse_[nu]) % prime_power_[nu];
  }

  Int from_coords(const std::vector<Int>& c) const {
    require(c.size() == rank(), ErrorCode::invalid_argument, "coordinate arity");
    Int x = 0;
    for (std::size_t i = 0; i < rank(); ++i) {
      require(c[i] >= 0 && c[i] < prime_power_[i], ErrorCode::invalid_argument,
              "coordinate out of range");
      x = (x + c[i] * component_[i]) % m_;
    }
    return x;
  }

  /// Lambda(x, D) = x + D Z_M, ascending.
  std::vector<Int> grid(Int x, Int D) const {
    require_divisor(D);
    std::vector<Int> out;
    out.reserve(static_cast<std::size_t>(m_ / D));
    for (Int y = posmod(x, D); y < m_; y += D) out.push_back(y);
    return out;
  }
  std::vector<Int> line(Int x, std::size_t nu) const { return grid(x, component(nu)); }
  std::vector<Int> plane(Int x, std::size_t nu, int alpha) const {
    require(alpha >= 0 && alpha <= exponent(nu), ErrorCode::invalid_argument, "plane exponent");
    return grid(x, ipow(prime(nu), alpha));
  }
  std::vector<Int> fiber(Int x, std::size_t nu) const { return grid(x, fiber_step(nu)); }

  friend bool operator==(const Modulus& a, const Modulus& b) { return a.factors_ == b.factors_; }

 private:
  std::vector<PrimeFactor> factors_;
  Int m_ = 0;
  std::vector<Int> prime_power_;
  std::vector<Int> component_;
  std::vector<Int> component_inverse_;
  std::vector<Int> divisors_;
};

}  // namespace cyclotile
