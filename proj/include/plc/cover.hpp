#pragma once

/**
 * @file cover.hpp
 * @brief The right-to-left greedy walk that builds a cover of [target, start].
 *
 * Starting from x = start, each step asks the search for the best interval
 * containing x (open on the left), emits it, and moves x to its left
 * endpoint. The walk stops once x <= target. Intervals are streamed to a
 * sink, so memory does not grow with the cover.
 *
 * Long runs write checkpoints; resuming from one replays the identical
 * sequence because each step depends on the current point only. Parallel
 * builds split [0, 1/2] into K uniform segments, walk each independently and
 * concatenate in order, dropping seam intervals that add no coverage.
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <concepts>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "plc/certificate.hpp"
#include "plc/exact_arith.hpp"
#include "plc/intervals.hpp"
#include "plc/search.hpp"

namespace plc {

struct CoverStats {
  std::uint64_t count = 0;
  std::uint64_t type1 = 0;
  std::uint64_t type2 = 0;
  double elapsed_seconds = 0;
};

struct Cover {
  unsigned long p = 2;
  unsigned long E = 8;
  Fraction start{1, 2};
  Fraction target{0};
  std::vector<CoverInterval> intervals;  // right to left; empty for streamed builds
  CoverStats stats;
};

template <class S>
concept IntervalSink = requires(S& s, const CoverInterval& iv) { s(iv); };

/// Thrown when a walk is cancelled. A checkpoint for the stopping point has
/// already been passed to the checkpoint callback.
class Interrupted : public std::runtime_error {
 public:
  explicit Interrupted(Checkpoint at)
      : std::runtime_error("interrupted at count=" + std::to_string(at.intervals_emitted)), at_(std::move(at)) {}
  const Checkpoint& at() const { return at_; }

 private:
  Checkpoint at_;
};

struct WalkControl {
  std::uint64_t checkpoint_every = 10'000'000;
  std::chrono::milliseconds checkpoint_period{60'000};
  unsigned segment = 0;
  /// Called at every checkpoint, after the sink has seen all intervals up to it.
  std::function<void(const Checkpoint&)> on_checkpoint;
  const std::atomic<bool>* cancel = nullptr;
};

/// Where a resumed walk picks up.
struct WalkResume {
  Fraction point;
  std::uint64_t emitted = 0;
  std::uint64_t type1 = 0;
};

inline void require_walk_range(const Fraction& start, const Fraction& target) {
  if (target.sign() < 0 || !(target < start) || start > Fraction(1, 2))
    throw std::invalid_argument("need 0 <= target < start <= 1/2, got start=" + start.str() +
                                " target=" + target.str());
}

template <IntervalSink Sink>
CoverStats walk(const SearchConfig& cfg, const Fraction& start, const Fraction& target, Sink&& sink,
                const WalkControl& control = {}, const WalkResume* resume = nullptr) {
  require_walk_range(start, target);
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto last_checkpoint = t0;

  Searcher searcher(cfg);
  CoverStats stats;
  Fraction x = start;
  if (resume) {
    x = resume->point;
    stats.count = resume->emitted;
    stats.type1 = resume->type1;
    stats.type2 = resume->emitted - resume->type1;
  }

  auto make_checkpoint = [&] {
    Checkpoint c{cfg.p, cfg.E, x, stats.count, control.segment, 0};
    c.elapsed_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return c;
  };

  while (x > target) {
    if (control.cancel && control.cancel->load(std::memory_order_relaxed)) {
      Checkpoint c = make_checkpoint();
      if (control.on_checkpoint) control.on_checkpoint(c);
      throw Interrupted(std::move(c));
    }
    Candidate cand = [&] {
      try {
        return searcher.next_interval(x);
      } catch (const StallError& e) {
        throw StallError(e.point(), stats.count, "segment " + std::to_string(control.segment));
      }
    }();
    sink(std::as_const(cand.interval));
    ++stats.count;
    if (is_type1(cand.interval)) ++stats.type1;
    else ++stats.type2;
    x = std::move(cand.new_point);

    if (control.on_checkpoint && (stats.count % 1024 == 0 || stats.count % control.checkpoint_every == 0)) {
      auto now = clock::now();
      if (stats.count % control.checkpoint_every == 0 || now - last_checkpoint >= control.checkpoint_period) {
        last_checkpoint = now;
        control.on_checkpoint(make_checkpoint());
      }
    }
  }
  stats.elapsed_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return stats;
}

template <IntervalSink Sink>
Cover build_cover(const SearchConfig& cfg, const Fraction& start, const Fraction& target, Sink&& sink,
                  const WalkControl& control = {}) {
  Cover cover{cfg.p, cfg.E, start, target, {}, {}};
  cover.stats = walk(cfg, start, target, std::forward<Sink>(sink), control);
  return cover;
}

/// Collects the whole cover in memory; fine for small E.
inline Cover build_cover(const SearchConfig& cfg, const Fraction& start = Fraction(1, 2),
                         const Fraction& target = Fraction(0)) {
  Cover cover{cfg.p, cfg.E, start, target, {}, {}};
  cover.stats = walk(cfg, start, target, [&](const CoverInterval& iv) { cover.intervals.push_back(iv); });
  return cover;
}

/// r_i = (K - i) / (2K) for i = 0..K.
inline std::vector<Fraction> segment_bounds(unsigned k) {
  if (k < 1) throw std::invalid_argument("segment count must be >= 1");
  std::vector<Fraction> r;
  r.reserve(k + 1);
  for (unsigned i = 0; i <= k; ++i) r.emplace_back(static_cast<long>(k - i), 2L * k);
  return r;
}

// ---------------------------------------------------------------------------
// Certificate files
// ---------------------------------------------------------------------------

struct CertificateJob {
  Fraction start{1, 2};
  Fraction target{0};
  unsigned segment = 0;
  std::filesystem::path checkpoint;  // empty: no checkpoints
  bool resume = false;
  std::uint64_t checkpoint_every = 10'000'000;
  std::chrono::milliseconds checkpoint_period{60'000};
  std::function<void(const Checkpoint&)> on_progress;
  const std::atomic<bool>* cancel = nullptr;
};

namespace detail {

struct ScanResult {
  std::uint64_t intervals = 0;
  std::uint64_t type1 = 0;
  std::uintmax_t keep_bytes = 0;  // offset just past the last kept line
  std::optional<std::uint64_t> end_count;
};

/// Reads a (possibly partial) certificate, keeping at most `keep` interval lines.
inline ScanResult scan_partial_certificate(const std::filesystem::path& path, const CertificateHeader& expect,
                                           std::uint64_t keep) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open certificate " + path.string());
  std::string line;
  if (!std::getline(is, line) || is.eof()) throw FormatError("certificate has no complete header");
  if (CertificateHeader::parse(line) != expect) throw FormatError("certificate header does not match the run");
  ScanResult r;
  r.keep_bytes = line.size() + 1;
  while (r.intervals < keep && std::getline(is, line) && !is.eof()) {
    auto iv = parse_interval(line);
    ++r.intervals;
    if (is_type1(iv)) ++r.type1;
    r.keep_bytes += line.size() + 1;
  }
  if (r.intervals < keep)
    throw FormatError("certificate holds " + std::to_string(r.intervals) + " intervals, checkpoint expects " +
                      std::to_string(keep));
  if (std::getline(is, line) && !is.eof()) r.end_count = parse_end_line(line);
  return r;
}

}  // namespace detail

/// Builds one certificate file, optionally checkpointing and resuming.
inline CoverStats build_certificate(const SearchConfig& cfg, const std::filesystem::path& out,
                                    const CertificateJob& job) {
  cfg.validate();
  require_walk_range(job.start, job.target);
  const CertificateHeader header{cfg.p, cfg.E, job.start, job.target};

  std::optional<WalkResume> resume;
  std::ofstream os;
  if (job.resume) {
    if (job.checkpoint.empty()) throw std::invalid_argument("resume requires a checkpoint path");
    Checkpoint ck = checkpoint_restore(job.checkpoint, cfg.p, cfg.E, job.segment);
    auto scan = detail::scan_partial_certificate(out, header, ck.intervals_emitted);
    if (scan.end_count && *scan.end_count == ck.intervals_emitted) {
      return {ck.intervals_emitted, scan.type1, ck.intervals_emitted - scan.type1, 0};
    }
    if (!(ck.current_point < job.start || ck.intervals_emitted == 0))
      throw FormatError("checkpoint point is not inside the walk range");
    std::filesystem::resize_file(out, scan.keep_bytes);
    os.open(out, std::ios::binary | std::ios::app);
    resume = WalkResume{ck.current_point, ck.intervals_emitted, scan.type1};
  } else {
    os.open(out, std::ios::binary | std::ios::trunc);
  }
  if (!os) throw std::runtime_error("cannot write certificate " + out.string());

  CertificateWriter writer(os);
  if (!resume) writer.write_header(header);
  else writer.set_count(resume->emitted);

  WalkControl control;
  control.segment = job.segment;
  control.checkpoint_every = std::max<std::uint64_t>(1, job.checkpoint_every);
  control.checkpoint_period = job.checkpoint_period;
  control.cancel = job.cancel;
  if (!job.checkpoint.empty() || job.on_progress) {
    control.on_checkpoint = [&](const Checkpoint& c) {
      writer.flush();
      if (!os) throw std::runtime_error("write failed on " + out.string());
      if (!job.checkpoint.empty()) checkpoint_save(c, job.checkpoint);
      if (job.on_progress) job.on_progress(c);
    };
  }

  CoverStats stats = walk(cfg, job.start, job.target, writer, control, resume ? &*resume : nullptr);
  writer.finish(stats.count);
  if (!os) throw std::runtime_error("write failed on " + out.string());
  if (!job.checkpoint.empty()) {
    checkpoint_save(Checkpoint{cfg.p, cfg.E, job.target, stats.count, job.segment, stats.elapsed_seconds},
                    job.checkpoint);
  }
  return stats;
}

struct ParallelJob {
  unsigned segments = 1;
  unsigned workers = 0;  // 0: hardware concurrency
  std::filesystem::path checkpoint;  // per-segment files get a ".seg<i>" suffix
  bool resume = false;
  std::uint64_t checkpoint_every = 10'000'000;
  std::chrono::milliseconds checkpoint_period{60'000};
  std::function<void(const Checkpoint&)> on_progress;  // may be called from worker threads
  std::atomic<bool>* cancel = nullptr;                  // also raised when a segment stalls
};

namespace detail {

inline std::filesystem::path with_suffix(std::filesystem::path p, const std::string& suffix) {
  p += suffix;
  return p;
}

/// Drops intervals at a segment seam whose left endpoint does not lie left
/// of the previous segment's last one. The earlier segments already cover
/// everything right of that point, so the chain stays connected.
class SeamFilter {
 public:
  SeamFilter(unsigned long p, unsigned long E) : p_(p), E_(E) {}

  bool keep(const CoverInterval& iv) {
    Fraction left = endpoints(iv, p_, E_).left;
    if (last_left_ && !(left < *last_left_)) return false;
    last_left_ = std::move(left);
    return true;
  }

 private:
  unsigned long p_, E_;
  std::optional<Fraction> last_left_;
};

struct AppendResult {
  std::uint64_t read = 0;
  CoverStats kept;
};

/// Appends the interval lines of a finished segment certificate to `os`.
inline AppendResult append_segment_body(const std::filesystem::path& part, std::ostream& os, SeamFilter& seam) {
  std::ifstream is(part, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open segment file " + part.string());
  std::string line;
  std::getline(is, line);  // header
  AppendResult r;
  while (std::getline(is, line)) {
    if (parse_end_line(line)) break;
    ++r.read;
    auto iv = parse_interval(line);
    if (!seam.keep(iv)) continue;
    os << to_string(iv) << '\n';
    ++r.kept.count;
    if (is_type1(iv)) ++r.kept.type1;
    else ++r.kept.type2;
  }
  return r;
}

/// Runs task(0..tasks-1) on a bounded pool; returns one slot per task.
template <class Task>
std::vector<std::exception_ptr> run_pool(unsigned tasks, unsigned workers, Task&& task) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, tasks);
  std::atomic<unsigned> next{0};
  std::vector<std::exception_ptr> errors(tasks);
  auto worker = [&] {
    for (unsigned i = next.fetch_add(1); i < tasks; i = next.fetch_add(1)) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return errors;
}

/// A stall outranks the interruptions it triggers in other segments.
inline void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const StallError&) {
      throw;
    } catch (...) {
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Segmented build of a certificate for [0, 1/2]. With one segment this is
/// exactly build_certificate. Otherwise each segment is written to
/// "<out>.seg<i>" and the pieces are concatenated once all have finished.
inline CoverStats build_certificate_parallel(const SearchConfig& cfg, const std::filesystem::path& out,
                                             const ParallelJob& job) {
  cfg.validate();
  auto bounds = segment_bounds(job.segments);
  auto job_for = [&](unsigned i) {
    CertificateJob j;
    j.start = bounds[i];
    j.target = bounds[i + 1];
    j.segment = i;
    if (!job.checkpoint.empty())
      j.checkpoint = job.segments == 1 ? job.checkpoint : detail::with_suffix(job.checkpoint, ".seg" + std::to_string(i));
    j.resume = job.resume;
    j.checkpoint_every = job.checkpoint_every;
    j.checkpoint_period = job.checkpoint_period;
    j.on_progress = job.on_progress;
    j.cancel = job.cancel;
    return j;
  };
  if (job.segments == 1) return build_certificate(cfg, out, job_for(0));

  std::vector<CoverStats> parts(job.segments);
  std::atomic<bool> own_flag{false};
  std::atomic<bool>* abort = job.cancel ? job.cancel : &own_flag;
  auto errors = detail::run_pool(job.segments, job.workers, [&](unsigned i) {
    CertificateJob j = job_for(i);
    j.cancel = abort;
    try {
      parts[i] = build_certificate(cfg, detail::with_suffix(out, ".seg" + std::to_string(i)), j);
    } catch (const StallError&) {
      abort->store(true);
      throw;
    }
  });
  detail::rethrow_first(errors);

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write certificate " + out.string());
  CertificateWriter writer(os);
  writer.write_header({cfg.p, cfg.E, bounds.front(), bounds.back()});
  CoverStats total;
  detail::SeamFilter seam(cfg.p, cfg.E);
  for (unsigned i = 0; i < job.segments; ++i) {
    auto part = detail::with_suffix(out, ".seg" + std::to_string(i));
    auto r = detail::append_segment_body(part, os, seam);
    if (r.read != parts[i].count) throw FormatError("segment file " + part.string() + " lost intervals");
    total.count += r.kept.count;
    total.type1 += r.kept.type1;
    total.type2 += r.kept.type2;
    total.elapsed_seconds = std::max(total.elapsed_seconds, parts[i].elapsed_seconds);
  }
  writer.finish(total.count);
  if (!os) throw std::runtime_error("write failed on " + out.string());
  os.close();
  for (unsigned i = 0; i < job.segments; ++i) {
    std::filesystem::remove(detail::with_suffix(out, ".seg" + std::to_string(i)));
    if (!job.checkpoint.empty())
      std::filesystem::remove(detail::with_suffix(job.checkpoint, ".seg" + std::to_string(i)));
  }
  total.elapsed_seconds += std::chrono::duration<double>(clock::now() - t0).count();
  return total;
}

/// In-memory segmented build; mostly for tests and small covers.
inline Cover build_cover_parallel(const SearchConfig& cfg, unsigned segments, unsigned workers = 0) {
  cfg.validate();
  auto bounds = segment_bounds(segments);
  std::vector<std::vector<CoverInterval>> parts(segments);
  std::vector<CoverStats> stats(segments);
  std::atomic<bool> abort{false};
  auto errors = detail::run_pool(segments, workers, [&](unsigned i) {
    WalkControl control;
    control.segment = i;
    control.cancel = &abort;
    try {
      stats[i] = walk(cfg, bounds[i], bounds[i + 1],
                      [&](const CoverInterval& iv) { parts[i].push_back(iv); }, control);
    } catch (const StallError&) {
      abort = true;
      throw;
    }
  });
  detail::rethrow_first(errors);
  Cover cover{cfg.p, cfg.E, bounds.front(), bounds.back(), {}, {}};
  detail::SeamFilter seam(cfg.p, cfg.E);
  for (unsigned i = 0; i < segments; ++i) {
    for (auto& iv : parts[i]) {
      if (!seam.keep(iv)) continue;
      ++cover.stats.count;
      if (is_type1(iv)) ++cover.stats.type1;
      else ++cover.stats.type2;
      cover.intervals.push_back(std::move(iv));
    }
    cover.stats.elapsed_seconds = std::max(cover.stats.elapsed_seconds, stats[i].elapsed_seconds);
  }
  return cover;
}

}  // namespace plc
