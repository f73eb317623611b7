#pragma once

/**
 * @file search.hpp
 * @brief Finds the covering interval for a single walk point.
 *
 * For a walk point x = a/b the search first scans n = 1, 2, ... for the
 * smallest n with ||p^n x|| <= ||x|| (the first type-1 hit, tracked with
 * a_n = p^n a mod b), then looks for a type-2 interval with a smaller size
 * bound among the convergents c/d of p^n a/b. A rational c/d that lies in
 * the type-2 window is at distance < 1/(2 d^2) of p^n x, so it must be a
 * convergent; nothing outside the convergents needs to be examined.
 */

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "plc/exact_arith.hpp"
#include "plc/intervals.hpp"

namespace plc {

struct SearchConfig {
  unsigned long p = 2;
  unsigned long E = 8;
  unsigned long max_n = 256;

  void validate() const {
    if (!is_prime(p)) throw std::invalid_argument("p must be prime, got " + std::to_string(p));
    require_threshold(E);
    if (max_n < 1) throw std::invalid_argument("max_n must be at least 1");
  }
};

struct Candidate {
  CoverInterval interval;
  SizeBound s;
  Fraction new_point;  // left endpoint of `interval`
};

/// Raised when no interval within the search bounds moves the walk point.
class StallError : public std::runtime_error {
 public:
  explicit StallError(Fraction point, std::uint64_t emitted = 0, std::string where = {})
      : std::runtime_error(describe(point, emitted, where)),
        point_(std::move(point)),
        emitted_(emitted) {}

  const Fraction& point() const { return point_; }
  std::uint64_t emitted() const { return emitted_; }

 private:
  static std::string describe(const Fraction& point, std::uint64_t emitted, const std::string& where) {
    std::string s = "stalled at x=" + point.str() + " after " + std::to_string(emitted) + " intervals";
    if (!where.empty()) s += " (" + where + ")";
    return s;
  }

  Fraction point_;
  std::uint64_t emitted_;
};

/// Stateful only for scratch storage; results depend on (x, cfg) alone.
/// One Searcher per thread.
class Searcher {
 public:
  explicit Searcher(SearchConfig cfg) : cfg_(cfg), prime_(cfg.p) { cfg_.validate(); }

  const SearchConfig& config() const { return cfg_; }

  std::optional<Candidate> find_type1(const Fraction& x) {
    require_walk_point(x);
    const Integer& a = x.num();
    const Integer& b = x.den();
    an_ = a;
    pn_ = 1;
    for (unsigned long n = 1; n <= cfg_.max_n; ++n) {
      mpz_mul_ui(an_.get_mpz_t(), an_.get_mpz_t(), cfg_.p);
      mpz_tdiv_r(an_.get_mpz_t(), an_.get_mpz_t(), b.get_mpz_t());
      mpz_mul_ui(pn_.get_mpz_t(), pn_.get_mpz_t(), cfg_.p);

      bool right_side = an_ <= a;  // x <= c / (p^n - 1) with c = floor(p^n a / b)
      if (!right_side) {
        tmp_ = b - an_;
        if (!(tmp_ < a)) continue;  // x > c / (p^n + 1) with c = floor + 1
      }
      Integer c = pn_ * a - an_;
      mpz_divexact(c.get_mpz_t(), c.get_mpz_t(), b.get_mpz_t());
      if (!right_side) c += 1;
      Fraction left(c, pn_ + 1);
      return Candidate{Type1Interval{std::move(c), n}, SizeBound{pn_}, std::move(left)};
    }
    return std::nullopt;
  }

  std::optional<Candidate> find_best_type2(const Fraction& x, const SizeBound& s_cap) {
    require_walk_point(x);
    if (s_cap.value < 1) throw std::invalid_argument("size cap must be >= 1");
    const Integer& a = x.num();
    const Integer& b = x.den();
    bound_ = s_cap.value;
    std::optional<Candidate> best;

    pn_ = 1;
    for (unsigned long n = 0;; ++n) {
      ep_ = pn_ * cfg_.E;  // E p^n
      if (ep_ > bound_) break;
      ConvergentStream cs(pn_ * a, b);
      while (cs.next()) {
        const Integer& d = cs.denominator();
        tmp_ = ep_ * d * d;
        if (tmp_ > bound_) break;
        // E d |p^n a d - b c| < b, with the error numerator straight from Euclid.
        tmp2_ = d * cs.remainder();
        mpz_mul_ui(tmp2_.get_mpz_t(), tmp2_.get_mpz_t(), cfg_.E);
        if (!(tmp2_ < b)) continue;

        Integer d_star;
        unsigned long k = mpz_remove(d_star.get_mpz_t(), d.get_mpz_t(), prime_.get_mpz_t());
        Integer s = tmp_;
        if (k > 0) {
          Integer pk = pow_ui(cfg_.p, k);
          mpz_divexact(s.get_mpz_t(), s.get_mpz_t(), pk.get_mpz_t());
        }
        if (best && !(s < bound_)) continue;
        const Integer& c = cs.numerator();
        Fraction left(Integer(c * d_star * cfg_.E - 1), s);
        bound_ = s;
        best = Candidate{Type2Interval{c, std::move(d_star), n + k}, SizeBound{std::move(s)},
                         std::move(left)};
      }
      mpz_mul_ui(pn_.get_mpz_t(), pn_.get_mpz_t(), cfg_.p);
    }
    return best;
  }

  /// Best interval for x: minimal size bound, type-1 on ties.
  Candidate next_interval(const Fraction& x) {
    auto t1 = find_type1(x);
    SizeBound cap = t1 ? t1->s : SizeBound{pow_ui(cfg_.p, cfg_.max_n)};
    auto t2 = find_best_type2(x, cap);
    if (t2 && (!t1 || t2->s < t1->s)) return std::move(*t2);
    if (t1) return std::move(*t1);
    throw StallError(x);
  }

 private:
  static void require_walk_point(const Fraction& x) {
    if (x.sign() <= 0 || x > Fraction(1, 2))
      throw std::invalid_argument("walk point must lie in (0, 1/2], got " + x.str());
  }

  SearchConfig cfg_;
  Integer prime_;
  Integer an_, pn_, ep_, bound_, tmp_, tmp2_;
};

inline std::optional<Candidate> find_type1(const Fraction& x, const SearchConfig& cfg) {
  return Searcher(cfg).find_type1(x);
}

inline std::optional<Candidate> find_best_type2(const Fraction& x, const SizeBound& s_cap,
                                                const SearchConfig& cfg) {
  return Searcher(cfg).find_best_type2(x, s_cap);
}

inline Candidate next_interval(const Fraction& x, const SearchConfig& cfg) {
  return Searcher(cfg).next_interval(x);
}

}  // namespace plc
