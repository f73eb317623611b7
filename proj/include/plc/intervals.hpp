#pragma once

// Type-1 and type-2 cover intervals.
//
//   I1(c, n)    = ( c / (p^n + 1),  c / (p^n - 1) )
//   I2(c, d, n) = ( (cdE - 1) / (E p^n d^2),  (cdE + 1) / (E p^n d^2) )
//
// Points inside I1 (and in (0, 1/2)) satisfy ||p^n x|| < ||x||. Points inside
// I2 have the witness q = p^n d with q |q|_p ||q x|| < 1/E. Type-2 intervals
// are always stored with gcd(d, p) = 1.

#include <charconv>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "plc/exact_arith.hpp"

namespace plc {

struct Type1Interval {
  Integer c;
  unsigned long n = 0;
  friend bool operator==(const Type1Interval&, const Type1Interval&) = default;
};

struct Type2Interval {
  Integer c;
  Integer d;
  unsigned long n = 0;
  friend bool operator==(const Type2Interval&, const Type2Interval&) = default;
};

using CoverInterval = std::variant<Type1Interval, Type2Interval>;

inline bool is_type1(const CoverInterval& iv) { return iv.index() == 0; }

/// Integer proxy for 1/|I|: p^n for type-1, E p^n d^2 for type-2.
struct SizeBound {
  Integer value;
  friend bool operator==(const SizeBound&, const SizeBound&) = default;
  friend auto operator<=>(const SizeBound& x, const SizeBound& y) {
    int c = cmp(x.value, y.value);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }
};

struct Endpoints {
  Fraction left;
  Fraction right;
};

inline void require_threshold(unsigned long E) {
  if (E < 3) throw std::invalid_argument("E must be at least 3 (epsilon < 1/2)");
}

/// Checks the structural invariants; throws std::invalid_argument on failure.
inline void validate(const CoverInterval& iv, unsigned long p) {
  if (const auto* t1 = std::get_if<Type1Interval>(&iv)) {
    if (t1->c < 1 || t1->n < 1) throw std::invalid_argument("type-1 interval needs c >= 1, n >= 1");
    return;
  }
  const auto& t2 = std::get<Type2Interval>(iv);
  if (t2.c < 0 || t2.d < 1) throw std::invalid_argument("type-2 interval needs c >= 0, d >= 1");
  if (mpz_divisible_ui_p(t2.d.get_mpz_t(), p) != 0)
    throw std::invalid_argument("type-2 interval is not normalized: p divides d");
  if (gcd(t2.c, t2.d) != 1) throw std::invalid_argument("type-2 interval needs gcd(c, d) = 1");
}

inline Endpoints endpoints(const Type1Interval& iv, unsigned long p) {
  Integer pn = pow_ui(p, iv.n);
  return {Fraction(iv.c, pn + 1), Fraction(iv.c, pn - 1)};
}

inline Endpoints endpoints(const Type2Interval& iv, unsigned long p, unsigned long E) {
  require_threshold(E);
  Integer den = E * pow_ui(p, iv.n) * iv.d * iv.d;
  Integer mid = iv.c * iv.d * E;
  return {Fraction(mid - 1, den), Fraction(mid + 1, den)};
}

inline Endpoints endpoints(const CoverInterval& iv, unsigned long p, unsigned long E) {
  require_threshold(E);
  return std::visit(
      [&](const auto& v) -> Endpoints {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Type1Interval>) {
          return endpoints(v, p);
        } else {
          return endpoints(v, p, E);
        }
      },
      iv);
}

inline SizeBound size_bound(const CoverInterval& iv, unsigned long p, unsigned long E) {
  if (const auto* t1 = std::get_if<Type1Interval>(&iv)) return {pow_ui(p, t1->n)};
  const auto& t2 = std::get<Type2Interval>(iv);
  return {E * pow_ui(p, t2.n) * t2.d * t2.d};
}

/// left < x <= right. The open left end keeps the walk moving strictly left.
inline bool contains_with_progress(const CoverInterval& iv, const Fraction& x, unsigned long p,
                                   unsigned long E) {
  auto [left, right] = endpoints(iv, p, E);
  return left < x && x <= right;
}

// Text form used in certificate files: "T1 <c> <n>" / "T2 <c> <d> <n>".

inline std::string to_string(const CoverInterval& iv) {
  if (const auto* t1 = std::get_if<Type1Interval>(&iv))
    return "T1 " + to_string(t1->c) + " " + std::to_string(t1->n);
  const auto& t2 = std::get<Type2Interval>(iv);
  return "T2 " + to_string(t2.c) + " " + to_string(t2.d) + " " + std::to_string(t2.n);
}

namespace detail {

inline std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline unsigned long parse_exponent(std::string_view s) {
  unsigned long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad exponent: " + std::string(s));
  return v;
}

inline Integer parse_natural(std::string_view s) {
  if (s.empty() || s[0] == '-' || s[0] == '+') throw std::invalid_argument("bad natural: " + std::string(s));
  return parse_integer(s);
}

}  // namespace detail

/// Parses one interval line. Throws std::invalid_argument if malformed.
inline CoverInterval parse_interval(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto f = detail::split_spaces(line);
  if (f.size() == 3 && f[0] == "T1")
    return Type1Interval{detail::parse_natural(f[1]), detail::parse_exponent(f[2])};
  if (f.size() == 4 && f[0] == "T2")
    return Type2Interval{detail::parse_natural(f[1]), detail::parse_natural(f[2]),
                         detail::parse_exponent(f[3])};
  throw std::invalid_argument("malformed interval line: " + std::string(line));
}

}  // namespace plc
