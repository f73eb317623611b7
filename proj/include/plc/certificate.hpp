#pragma once

// Line-oriented certificate and checkpoint files.
//
//   PLCCOVER v1 p=<p> E=<E> start=<a/b> target=<a/b>
//   T1 <c> <n>
//   T2 <c> <d> <n>
//   ...
//   END count=<N>
//
//   PLCCKPT v1 p=<p> E=<E> point=<a/b> count=<N> segment=<i>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "plc/exact_arith.hpp"
#include "plc/intervals.hpp"

namespace plc {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Splits "key=value" tokens after a fixed magic prefix.
inline std::map<std::string, std::string, std::less<>> parse_fields(std::string_view line,
                                                                     std::string_view magic) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto tokens = split_spaces(line);
  auto magic_tokens = split_spaces(magic);
  if (tokens.size() < magic_tokens.size())
    throw FormatError("missing '" + std::string(magic) + "' header");
  for (std::size_t i = 0; i < magic_tokens.size(); ++i) {
    if (tokens[i] != magic_tokens[i]) throw FormatError("expected '" + std::string(magic) + "' header");
  }
  std::map<std::string, std::string, std::less<>> out;
  for (std::size_t i = magic_tokens.size(); i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos || eq == 0) throw FormatError("bad field: " + std::string(tokens[i]));
    auto [it, fresh] = out.emplace(std::string(tokens[i].substr(0, eq)), std::string(tokens[i].substr(eq + 1)));
    if (!fresh) throw FormatError("duplicate field: " + it->first);
  }
  return out;
}

inline const std::string& field(const std::map<std::string, std::string, std::less<>>& f,
                                std::string_view key) {
  auto it = f.find(key);
  if (it == f.end()) throw FormatError("missing field: " + std::string(key));
  return it->second;
}

inline unsigned long field_ulong(const std::map<std::string, std::string, std::less<>>& f,
                                 std::string_view key) {
  try {
    return parse_exponent(field(f, key));
  } catch (const std::invalid_argument&) {
    throw FormatError("bad value for " + std::string(key));
  }
}

inline Fraction field_fraction(const std::map<std::string, std::string, std::less<>>& f,
                               std::string_view key) {
  try {
    return Fraction::parse(field(f, key));
  } catch (const std::exception&) {
    throw FormatError("bad value for " + std::string(key));
  }
}

}  // namespace detail

struct CertificateHeader {
  unsigned long p = 2;
  unsigned long E = 8;
  Fraction start{1, 2};
  Fraction target{0};

  friend bool operator==(const CertificateHeader&, const CertificateHeader&) = default;

  std::string str() const {
    return "PLCCOVER v1 p=" + std::to_string(p) + " E=" + std::to_string(E) + " start=" + start.str() +
           " target=" + target.str();
  }

  static CertificateHeader parse(std::string_view line) {
    auto f = detail::parse_fields(line, "PLCCOVER v1");
    if (f.size() != 4) throw FormatError("unexpected certificate header fields");
    return {detail::field_ulong(f, "p"), detail::field_ulong(f, "E"), detail::field_fraction(f, "start"),
            detail::field_fraction(f, "target")};
  }
};

inline std::string end_line(std::uint64_t count) { return "END count=" + std::to_string(count); }

/// Returns the count if `line` is an END line, throws FormatError if it
/// starts like one but is malformed.
inline std::optional<std::uint64_t> parse_end_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.substr(0, 3) != "END") return std::nullopt;
  auto f = detail::parse_fields(line, "END");
  if (f.size() != 1) throw FormatError("malformed END line");
  return detail::field_ulong(f, "count");
}

/// Streams intervals to an ostream in certificate form.
class CertificateWriter {
 public:
  explicit CertificateWriter(std::ostream& os) : os_(os) {}

  void write_header(const CertificateHeader& h) { os_ << h.str() << '\n'; }
  void operator()(const CoverInterval& iv) {
    os_ << to_string(iv) << '\n';
    ++count_;
  }
  void finish() { finish(count_); }
  void finish(std::uint64_t total) {
    os_ << end_line(total) << '\n';
    os_.flush();
  }
  void flush() { os_.flush(); }
  std::uint64_t count() const { return count_; }
  void set_count(std::uint64_t n) { count_ = n; }

 private:
  std::ostream& os_;
  std::uint64_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct Checkpoint {
  unsigned long p = 2;
  unsigned long E = 8;
  Fraction current_point;
  std::uint64_t intervals_emitted = 0;
  unsigned segment = 0;
  double elapsed_seconds = 0;  // not persisted

  std::string str() const {
    return "PLCCKPT v1 p=" + std::to_string(p) + " E=" + std::to_string(E) + " point=" + current_point.str() +
           " count=" + std::to_string(intervals_emitted) + " segment=" + std::to_string(segment);
  }

  static Checkpoint parse(std::string_view line) {
    auto f = detail::parse_fields(line, "PLCCKPT v1");
    if (f.size() != 5) throw FormatError("unexpected checkpoint fields");
    Checkpoint c;
    c.p = detail::field_ulong(f, "p");
    c.E = detail::field_ulong(f, "E");
    c.current_point = detail::field_fraction(f, "point");
    c.intervals_emitted = detail::field_ulong(f, "count");
    c.segment = static_cast<unsigned>(detail::field_ulong(f, "segment"));
    return c;
  }
};

/// Writes via a temporary file and rename so a crash never leaves a torn checkpoint.
inline void checkpoint_save(const Checkpoint& c, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    os << c.str() << '\n';
    os.flush();
    if (!os) throw std::runtime_error("cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint checkpoint_restore(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty checkpoint " + path.string());
  return Checkpoint::parse(line);
}

/// Restores and checks that the checkpoint belongs to this run.
inline Checkpoint checkpoint_restore(const std::filesystem::path& path, unsigned long p, unsigned long E,
                                     unsigned segment) {
  Checkpoint c = checkpoint_restore(path);
  if (c.p != p || c.E != E)
    throw FormatError("checkpoint is for p=" + std::to_string(c.p) + " E=" + std::to_string(c.E) +
                      ", run has p=" + std::to_string(p) + " E=" + std::to_string(E));
  if (c.segment != segment)
    throw FormatError("checkpoint is for segment " + std::to_string(c.segment) + ", expected " +
                      std::to_string(segment));
  return c;
}

}  // namespace plc
