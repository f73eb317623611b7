#pragma once

/**
 * @file exact_arith.hpp
 * @brief Exact integer and rational primitives used by the cover engine.
 *
 * Everything here is built on GMP integers (mpz_class). Fractions are kept
 * in lowest terms with a positive denominator; the sign lives in the
 * numerator. No floating point is used anywhere in this header.
 */

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace plc {

using Integer = mpz_class;

inline std::string to_string(const Integer& v) { return v.get_str(10); }

/// Parses a decimal integer with an optional leading '-'. Throws on junk.
inline Integer parse_integer(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty integer");
  std::size_t i = (text[0] == '-' || text[0] == '+') ? 1 : 0;
  if (i == text.size()) throw std::invalid_argument("bad integer: " + std::string(text));
  for (std::size_t k = i; k < text.size(); ++k) {
    if (text[k] < '0' || text[k] > '9')
      throw std::invalid_argument("bad integer: " + std::string(text));
  }
  std::string digits(text.substr(text[0] == '+' ? 1 : 0));
  return Integer(digits, 10);
}

inline Integer pow_ui(unsigned long base, unsigned long exp) {
  Integer r;
  mpz_ui_pow_ui(r.get_mpz_t(), base, exp);
  return r;
}

inline bool is_prime(unsigned long p) {
  if (p < 2) return false;
  for (unsigned long k = 2; k * k <= p; ++k) {
    if (p % k == 0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Fraction
// ---------------------------------------------------------------------------

class Fraction {
 public:
  Fraction() : num_(0), den_(1) {}
  Fraction(Integer num) : num_(std::move(num)), den_(1) {}  // NOLINT: implicit from integer
  Fraction(long num) : num_(num), den_(1) {}                 // NOLINT
  Fraction(int num) : num_(num), den_(1) {}                  // NOLINT
  Fraction(Integer num, Integer den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_ == 0) throw std::domain_error("fraction with zero denominator");
    normalize();
  }
  Fraction(long num, long den) : Fraction(Integer(num), Integer(den)) {}

  const Integer& num() const { return num_; }
  const Integer& den() const { return den_; }

  int sign() const { return sgn(num_); }
  bool is_integer() const { return den_ == 1; }

  /// "num/den", or just "num" when the denominator is 1.
  std::string str() const {
    return den_ == 1 ? to_string(num_) : to_string(num_) + "/" + to_string(den_);
  }

  /// Accepts "a/b" or "a". Non-reduced input is reduced; b = 0 is rejected.
  static Fraction parse(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) return Fraction(parse_integer(text));
    Integer num = parse_integer(text.substr(0, slash));
    std::string_view den_text = text.substr(slash + 1);
    if (!den_text.empty() && (den_text[0] == '-' || den_text[0] == '+'))
      throw std::invalid_argument("bad fraction: " + std::string(text));
    Integer den = parse_integer(den_text);
    if (den == 0) throw std::invalid_argument("zero denominator: " + std::string(text));
    return Fraction(std::move(num), std::move(den));
  }

  friend bool operator==(const Fraction& x, const Fraction& y) {
    return x.num_ == y.num_ && x.den_ == y.den_;
  }
  friend std::strong_ordering operator<=>(const Fraction& x, const Fraction& y) {
    Integer lhs = x.num_ * y.den_;
    Integer rhs = y.num_ * x.den_;
    int c = cmp(lhs, rhs);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  friend Fraction operator+(const Fraction& x, const Fraction& y) {
    return {x.num_ * y.den_ + y.num_ * x.den_, x.den_ * y.den_};
  }
  friend Fraction operator-(const Fraction& x, const Fraction& y) {
    return {x.num_ * y.den_ - y.num_ * x.den_, x.den_ * y.den_};
  }
  friend Fraction operator*(const Fraction& x, const Fraction& y) {
    return {x.num_ * y.num_, x.den_ * y.den_};
  }
  friend Fraction operator/(const Fraction& x, const Fraction& y) {
    if (y.num_ == 0) throw std::domain_error("division by zero fraction");
    return {x.num_ * y.den_, x.den_ * y.num_};
  }
  Fraction operator-() const { return {Integer(-num_), den_}; }

  friend std::ostream& operator<<(std::ostream& os, const Fraction& x) { return os << x.str(); }

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    Integer g = gcd(num_, den_);
    if (g != 1) {
      mpz_divexact(num_.get_mpz_t(), num_.get_mpz_t(), g.get_mpz_t());
      mpz_divexact(den_.get_mpz_t(), den_.get_mpz_t(), g.get_mpz_t());
    }
  }

  Integer num_;
  Integer den_;
};

/// ||x||: distance from x to the nearest integer, in [0, 1/2].
inline Fraction dist_to_nearest_int(const Fraction& x) {
  Integer r;
  mpz_fdiv_r(r.get_mpz_t(), x.num().get_mpz_t(), x.den().get_mpz_t());
  Integer other = x.den() - r;
  return {r < other ? r : other, x.den()};
}

/// p-adic valuation of a nonzero integer.
inline unsigned long padic_valuation(const Integer& q, unsigned long p) {
  if (q == 0) throw std::invalid_argument("p-adic valuation of zero");
  Integer rest;
  Integer prime(p);
  return mpz_remove(rest.get_mpz_t(), q.get_mpz_t(), prime.get_mpz_t());
}

/// |q|_p = p^(-v) where p^v exactly divides q.
inline Fraction padic_abs(const Integer& q, unsigned long p) {
  if (q <= 0) throw std::invalid_argument("padic_abs requires q >= 1");
  return {Integer(1), pow_ui(p, padic_valuation(q, p))};
}

/// (p * a_n) mod b for 0 <= a_n < b.
inline Integer step_mod(const Integer& a_n, unsigned long p, const Integer& b) {
  Integer r = a_n * p;
  mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), b.get_mpz_t());
  return r;
}

/// Splits d = p^k * d_star with p not dividing d_star.
struct PFactorization {
  unsigned long k = 0;
  Integer d_star;
};

inline PFactorization factor_out_p(const Integer& d, unsigned long p) {
  if (d < 1) throw std::invalid_argument("factor_out_p requires d >= 1");
  PFactorization out;
  Integer prime(p);
  out.k = mpz_remove(out.d_star.get_mpz_t(), d.get_mpz_t(), prime.get_mpz_t());
  return out;
}

// ---------------------------------------------------------------------------
// Continued fractions
// ---------------------------------------------------------------------------

/// Canonical expansion [a0; a1, ..., ak] with ak >= 2 whenever k >= 1.
struct PartialQuotients {
  std::vector<Integer> terms;

  friend bool operator==(const PartialQuotients&, const PartialQuotients&) = default;

  std::string str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (i == 1) s += ";";
      else if (i > 1) s += ",";
      s += to_string(terms[i]);
    }
    return s + "]";
  }

  Fraction value() const {
    if (terms.empty()) throw std::invalid_argument("empty continued fraction");
    Integer h = terms.back(), k = 1;
    for (std::size_t i = terms.size() - 1; i-- > 0;) {
      Integer next_h = terms[i] * h + k;
      k = h;
      h = std::move(next_h);
    }
    return {h, k};
  }
};

/// Euclidean expansion of x >= 0. Euclid on a reduced fraction already
/// ends in a quotient >= 2 unless there is a single term.
inline PartialQuotients continued_fraction(const Fraction& x) {
  if (x.sign() < 0) throw std::invalid_argument("continued_fraction requires x >= 0");
  PartialQuotients out;
  Integer a = x.num(), b = x.den(), q, r;
  while (b != 0) {
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    out.terms.push_back(q);
    a.swap(b);
    b.swap(r);
  }
  return out;
}

/// Lazily walks the convergents h/k of num/den by running Euclid alongside
/// the standard recurrence. After each step, remainder() holds
/// |k * num - h * den|, the exact error numerator of the current convergent.
class ConvergentStream {
 public:
  ConvergentStream(Integer num, Integer den)
      : a_(std::move(num)), b_(std::move(den)), h_prev_(0), h_(1), k_prev_(1), k_(0) {
    if (b_ <= 0) throw std::invalid_argument("convergents require a positive denominator");
  }

  /// Advances to the next convergent; false once the expansion is exhausted.
  bool next() {
    if (b_ == 0) return false;
    mpz_fdiv_qr(q_.get_mpz_t(), r_.get_mpz_t(), a_.get_mpz_t(), b_.get_mpz_t());
    a_.swap(b_);
    b_.swap(r_);
    // h_new = q*h + h_prev; shift.
    mpz_addmul(h_prev_.get_mpz_t(), q_.get_mpz_t(), h_.get_mpz_t());
    h_prev_.swap(h_);
    mpz_addmul(k_prev_.get_mpz_t(), q_.get_mpz_t(), k_.get_mpz_t());
    k_prev_.swap(k_);
    return true;
  }

  const Integer& numerator() const { return h_; }
  const Integer& denominator() const { return k_; }
  const Integer& quotient() const { return q_; }
  const Integer& remainder() const { return b_; }

 private:
  Integer a_, b_, q_, r_;
  Integer h_prev_, h_, k_prev_, k_;
};

/// All convergents of a canonical expansion, in order.
inline std::vector<Fraction> convergents(const PartialQuotients& pq) {
  std::vector<Fraction> out;
  out.reserve(pq.terms.size());
  Integer h_prev = 0, h = 1, k_prev = 1, k = 0;
  for (const auto& a : pq.terms) {
    Integer h_next = a * h + h_prev;
    Integer k_next = a * k + k_prev;
    h_prev = std::move(h);
    h = std::move(h_next);
    k_prev = std::move(k);
    k = std::move(k_next);
    out.emplace_back(h, k);
  }
  return out;
}

}  // namespace plc
