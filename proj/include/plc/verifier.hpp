#pragma once

/**
 * @file verifier.hpp
 * @brief Independent re-check of a certificate.
 *
 * The verifier reads a certificate once, front to back, and checks that the
 * closures of consecutive intervals overlap and together reach from `start`
 * down to `target`. It recomputes endpoints from the interval parameters with
 * GMP rationals (mpq_class) and shares nothing with the search: no modular
 * stepping, no convergents, no size bounds.
 *
 * spot_check() additionally samples rationals strictly inside each interval
 * and evaluates the defining inequality exactly:
 *   type-1:  ||p^n x|| < ||x||          (x also restricted to (0, 1/2))
 *   type-2:  d ||p^n d x|| < 1/E
 */

#include <gmpxx.h>

#include <cstdint>
#include <istream>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include "plc/certificate.hpp"
#include "plc/exact_arith.hpp"
#include "plc/intervals.hpp"

namespace plc {

enum class FailureKind {
  malformed,        // unparseable line or missing header
  header_mismatch,  // header p/E differ from the requested ones
  bad_parameters,   // interval violates its structural invariants
  not_reaching_start,
  chain_break,
  not_reaching_target,
  truncated,        // no END line, or END count disagrees
  spot_check,
};

inline const char* to_string(FailureKind k) {
  switch (k) {
    case FailureKind::malformed: return "malformed";
    case FailureKind::header_mismatch: return "header-mismatch";
    case FailureKind::bad_parameters: return "bad-parameters";
    case FailureKind::not_reaching_start: return "start-not-covered";
    case FailureKind::chain_break: return "chain-break";
    case FailureKind::not_reaching_target: return "target-not-covered";
    case FailureKind::truncated: return "truncated";
    case FailureKind::spot_check: return "spot-check";
  }
  return "unknown";
}

struct VerifyFailure {
  std::uint64_t line = 0;  // 1-based line in the certificate
  FailureKind kind = FailureKind::malformed;
  std::string reason;
};

struct VerifyReport {
  bool valid = false;
  std::uint64_t intervals_checked = 0;
  std::uint64_t failures = 0;
  std::optional<VerifyFailure> first_failure;
  std::uint64_t spot_passed = 0;
  std::uint64_t spot_failed = 0;
  std::optional<CertificateHeader> header;

  /// Machine-readable one-liner.
  std::string summary() const {
    return std::string("VERIFY ok=") + (valid ? "true" : "false") + " intervals=" +
           std::to_string(intervals_checked) + " failures=" + std::to_string(failures);
  }

  /// Malformed input or a header for a different run, as opposed to a
  /// well-formed certificate that fails its checks.
  bool unreadable() const {
    return first_failure && (first_failure->kind == FailureKind::malformed ||
                             first_failure->kind == FailureKind::header_mismatch);
  }
};

struct VerifyOptions {
  bool check_chain = true;
  unsigned samples_per_interval = 0;
  std::uint64_t seed = 1;
};

namespace verify_detail {

inline mpq_class make_q(const mpz_class& num, const mpz_class& den) {
  mpq_class q(num, den);
  q.canonicalize();
  return q;
}

inline mpz_class power(unsigned long p, unsigned long n) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), p, n);
  return r;
}

/// ||x|| for a canonical rational.
inline mpq_class nearest_int_distance(const mpq_class& x) {
  mpz_class r;
  mpz_fdiv_r(r.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  mpz_class other = x.get_den() - r;
  return make_q(r < other ? r : other, x.get_den());
}

struct Bounds {
  mpq_class left, right;
};

inline Bounds bounds_of(const CoverInterval& iv, unsigned long p, unsigned long E) {
  if (const auto* t1 = std::get_if<Type1Interval>(&iv)) {
    mpz_class pn = power(p, t1->n);
    return {make_q(t1->c, pn + 1), make_q(t1->c, pn - 1)};
  }
  const auto& t2 = std::get<Type2Interval>(iv);
  mpz_class den = power(p, t2.n) * t2.d * t2.d * E;
  mpz_class mid = t2.c * t2.d * E;
  return {make_q(mid - 1, den), make_q(mid + 1, den)};
}

inline std::optional<std::string> parameter_problem(const CoverInterval& iv, unsigned long p) {
  if (const auto* t1 = std::get_if<Type1Interval>(&iv)) {
    if (t1->c < 1) return "type-1 needs c >= 1";
    if (t1->n < 1) return "type-1 needs n >= 1";
    return std::nullopt;
  }
  const auto& t2 = std::get<Type2Interval>(iv);
  if (t2.d < 1) return "type-2 needs d >= 1";
  mpz_class g;
  mpz_gcd_ui(g.get_mpz_t(), t2.d.get_mpz_t(), p);
  if (g != 1) return "type-2 needs gcd(d, p) = 1";
  mpz_gcd(g.get_mpz_t(), t2.c.get_mpz_t(), t2.d.get_mpz_t());
  if (g != 1) return "type-2 needs gcd(c, d) = 1";
  return std::nullopt;
}

/// Rational strictly between lo and hi (lo < hi) at a seeded dyadic position.
inline mpq_class interior_sample(const mpq_class& lo, const mpq_class& hi, std::mt19937_64& rng) {
  unsigned j = std::uniform_int_distribution<unsigned>(1, 24)(rng);
  std::uint64_t half = std::uint64_t{1} << (j - 1);
  std::uint64_t k = 2 * std::uniform_int_distribution<std::uint64_t>(0, half - 1)(rng) + 1;  // odd, < 2^j
  mpq_class t(mpz_class(static_cast<unsigned long>(k)), power(2, j));
  t.canonicalize();
  mpq_class x = lo + (hi - lo) * t;
  x.canonicalize();
  return x;
}

/// Evaluates the defining inequality of `iv` at x. True when it holds.
inline bool witness_holds(const CoverInterval& iv, const mpq_class& x, unsigned long p, unsigned long E) {
  if (const auto* t1 = std::get_if<Type1Interval>(&iv)) {
    mpq_class px = x * mpq_class(power(p, t1->n));
    return nearest_int_distance(px) < nearest_int_distance(x);
  }
  const auto& t2 = std::get<Type2Interval>(iv);
  mpq_class qx = x * mpq_class(power(p, t2.n) * t2.d);
  mpq_class lhs = nearest_int_distance(qx) * mpq_class(t2.d);
  return lhs < mpq_class(1, E);
}

}  // namespace verify_detail

/// Streaming certificate check. Stops collecting detail after the first
/// failure but keeps counting failures to the end of the input.
inline VerifyReport verify_certificate(std::istream& is, unsigned long p, unsigned long E,
                                       const VerifyOptions& opts = {}) {
  using namespace verify_detail;
  VerifyReport rep;
  auto fail = [&](std::uint64_t line, FailureKind kind, std::string reason) {
    ++rep.failures;
    if (!rep.first_failure) rep.first_failure = VerifyFailure{line, kind, std::move(reason)};
  };

  std::string line;
  std::uint64_t line_no = 1;
  if (!std::getline(is, line)) {
    fail(1, FailureKind::malformed, "empty certificate");
    return rep;
  }
  try {
    rep.header = CertificateHeader::parse(line);
  } catch (const std::exception& e) {
    fail(1, FailureKind::malformed, e.what());
    return rep;
  }
  if (rep.header->p != p || rep.header->E != E) {
    fail(1, FailureKind::header_mismatch,
         "certificate is for p=" + std::to_string(rep.header->p) + " E=" + std::to_string(rep.header->E));
    return rep;
  }
  if (E < 3) {
    fail(1, FailureKind::header_mismatch, "E must be at least 3");
    return rep;
  }
  const mpq_class start = make_q(rep.header->start.num(), rep.header->start.den());
  const mpq_class target = make_q(rep.header->target.num(), rep.header->target.den());
  const mpq_class half(1, 2);

  std::optional<mpq_class> prev_left;
  std::optional<std::uint64_t> end_count;
  std::uint64_t index = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (end_count) {
      fail(line_no, FailureKind::malformed, "content after END");
      break;
    }
    try {
      if (auto n = parse_end_line(line)) {
        end_count = *n;
        continue;
      }
    } catch (const std::exception& e) {
      fail(line_no, FailureKind::malformed, e.what());
      continue;
    }
    CoverInterval iv;
    try {
      iv = parse_interval(line);
    } catch (const std::exception& e) {
      fail(line_no, FailureKind::malformed, e.what());
      continue;
    }
    ++rep.intervals_checked;
    ++index;
    if (auto problem = parameter_problem(iv, p)) {
      fail(line_no, FailureKind::bad_parameters, *problem);
      continue;
    }
    Bounds b = bounds_of(iv, p, E);

    if (opts.check_chain) {
      if (!prev_left) {
        if (b.right < start) fail(line_no, FailureKind::not_reaching_start, "first interval ends below start");
      } else {
        if (*prev_left > b.right)
          fail(line_no, FailureKind::chain_break, "gap: previous left endpoint lies right of this interval");
        else if (!(b.left < *prev_left))
          fail(line_no, FailureKind::chain_break, "no progress: left endpoint does not decrease");
      }
      prev_left = b.left;
    }

    if (opts.samples_per_interval > 0) {
      mpq_class lo = b.left, hi = b.right;
      if (std::holds_alternative<Type1Interval>(iv)) {
        if (lo < 0) lo = 0;
        if (hi > half) hi = half;
      }
      std::mt19937_64 rng(opts.seed ^ (index * 0x9E3779B97F4A7C15ULL));
      if (!(lo < hi)) {
        // Nothing of this interval lies in (0, 1/2); nothing to sample.
        continue;
      }
      for (unsigned s = 0; s < opts.samples_per_interval; ++s) {
        mpq_class x = interior_sample(lo, hi, rng);
        if (witness_holds(iv, x, p, E)) {
          ++rep.spot_passed;
        } else {
          ++rep.spot_failed;
          fail(line_no, FailureKind::spot_check, "inequality fails at x=" + x.get_str());
        }
      }
    }
  }

  if (opts.check_chain) {
    if (!prev_left) fail(line_no, FailureKind::not_reaching_target, "certificate has no intervals");
    else if (*prev_left > target) fail(line_no, FailureKind::not_reaching_target, "last interval ends above target");
  }
  if (!end_count) fail(line_no, FailureKind::truncated, "missing END line");
  else if (*end_count != rep.intervals_checked)
    fail(line_no, FailureKind::truncated,
         "END count=" + std::to_string(*end_count) + " but " + std::to_string(rep.intervals_checked) + " intervals");

  rep.valid = rep.failures == 0;
  return rep;
}

inline VerifyReport verify_cover(std::istream& is, unsigned long p, unsigned long E) {
  return verify_certificate(is, p, E, {});
}

inline VerifyReport spot_check(std::istream& is, unsigned long p, unsigned long E, unsigned samples_per_interval,
                               std::uint64_t seed) {
  if (samples_per_interval < 1) throw std::invalid_argument("spot_check needs at least one sample per interval");
  VerifyOptions opts;
  opts.check_chain = false;
  opts.samples_per_interval = samples_per_interval;
  opts.seed = seed;
  return verify_certificate(is, p, E, opts);
}

// ---------------------------------------------------------------------------
// Point oracle
// ---------------------------------------------------------------------------

struct OracleResult {
  Fraction value;
  Integer argmin;  // smallest q attaining the minimum
};

/// min over 1 <= q <= Q of q |q|_p ||q x||, exactly.
inline OracleResult oracle_min(const Fraction& x, const Integer& Q, unsigned long p) {
  if (Q < 1) throw std::invalid_argument("oracle needs Q >= 1");
  if (p < 2) throw std::invalid_argument("oracle needs a prime p");
  // All candidate values share the denominator b: value(q) = m(q) * min(r, b - r) / b
  // with r = q a mod b and m(q) the p-free part of q.
  const mpz_class& a = x.num();
  const mpz_class& b = x.den();
  mpz_class best_num, q_best, m, r, other, cand;
  bool have = false;
  mpz_class prime(p);
  for (mpz_class q = 1; q <= Q; ++q) {
    mpz_remove(m.get_mpz_t(), q.get_mpz_t(), prime.get_mpz_t());
    r = q * a;
    mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), b.get_mpz_t());
    other = b - r;
    cand = m * (r < other ? r : other);
    if (!have || cand < best_num) {
      best_num = cand;
      q_best = q;
      have = true;
      if (best_num == 0) break;
    }
  }
  return {Fraction(best_num, b), q_best};
}

}  // namespace plc
