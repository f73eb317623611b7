#pragma once

// Command-line front end: build, verify, oracle.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 stall, 3 verification
// failure, 130 interrupted (a checkpoint has been written if requested).

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "plc/plc.hpp"

namespace plc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kStall = 2,
  kInvalid = 3,
  kInterrupted = 130,
};

/// Set from a signal handler; checked between walk steps.
inline std::atomic<bool> g_interrupt{false};

struct RunOptions {
  unsigned long p = 0;
  unsigned long E = 0;
  std::string start = "1/2";
  std::string target = "0";
  unsigned segments = 1;
  unsigned workers = 0;
  unsigned long max_n = 256;
  std::string out;
  std::string in;
  std::string checkpoint;
  bool resume = false;
  std::uint64_t checkpoint_every = 10'000'000;
  double checkpoint_seconds = 60;
  std::uint64_t stop_after = 0;
  unsigned samples = 0;
  std::uint64_t seed = 1;
  std::string x;
  std::string Q;
  bool long_run = false;
  bool quiet = false;
};

/// Rough gate for runs expected to take more than about ten minutes.
inline bool needs_long_flag(unsigned long p, unsigned long E) {
  switch (p) {
    case 2: return E >= 16;
    case 3: return E > 18;
    case 5: case 7: return E > 15;
    case 11: return E > 13;
    case 13: case 17: case 19: return E > 12;
    case 23: return E > 11;
    default: return E > 10;
  }
}

inline std::string format_seconds(double s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << s;
  return os.str();
}

inline int cmd_build(const RunOptions& o, std::ostream& out, std::ostream& err) {
  SearchConfig cfg{o.p, o.E, o.max_n};
  Fraction start, target;
  try {
    cfg.validate();
    start = Fraction::parse(o.start);
    target = Fraction::parse(o.target);
    require_walk_range(start, target);
    if (o.segments < 1) throw std::invalid_argument("--segments must be >= 1");
    if (o.segments > 1 && (start != Fraction(1, 2) || target != Fraction(0)))
      throw std::invalid_argument("--segments only applies to the full range [0, 1/2]");
    if (o.resume && o.checkpoint.empty()) throw std::invalid_argument("--resume needs --checkpoint");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (needs_long_flag(o.p, o.E) && !o.long_run) {
    err << "error: p=" << o.p << " E=" << o.E << " is expected to run for a long time; pass --long to proceed\n";
    return kUsage;
  }
  std::filesystem::path out_path =
      o.out.empty() ? "plc_p" + std::to_string(o.p) + "_E" + std::to_string(o.E) + ".cert" : o.out;

  std::mutex progress_mu;
  auto t0 = std::chrono::steady_clock::now();
  std::atomic<bool> cancel{false};
  auto on_progress = [&](const Checkpoint& c) {
    if (o.stop_after > 0 && c.intervals_emitted >= o.stop_after) cancel = true;
    if (o.quiet) return;
    std::lock_guard lock(progress_mu);
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    err << "progress segment=" << c.segment << " count=" << c.intervals_emitted << " point=" << c.current_point
        << " rate=" << static_cast<std::uint64_t>(dt > 0 ? c.intervals_emitted / dt : 0) << "/s\n";
  };

  // Forward external interrupts into the walk's cancel flag.
  std::atomic<bool> done{false};
  std::thread relay([&] {
    while (!done) {
      if (g_interrupt) cancel = true;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });
  struct Joiner {
    std::atomic<bool>& done;
    std::thread& t;
    ~Joiner() {
      done = true;
      t.join();
    }
  } joiner{done, relay};

  ParallelJob job;
  job.segments = o.segments;
  job.workers = o.workers;
  job.checkpoint = o.checkpoint;
  job.resume = o.resume;
  job.checkpoint_every = std::max<std::uint64_t>(1, o.checkpoint_every);
  job.checkpoint_period = std::chrono::milliseconds(static_cast<long long>(o.checkpoint_seconds * 1000));
  job.on_progress = on_progress;
  job.cancel = &cancel;

  try {
    CoverStats stats;
    if (o.segments == 1) {
      CertificateJob single;
      single.start = start;
      single.target = target;
      single.checkpoint = o.checkpoint;
      single.resume = o.resume;
      single.checkpoint_every = job.checkpoint_every;
      single.checkpoint_period = job.checkpoint_period;
      single.on_progress = on_progress;
      single.cancel = &cancel;
      stats = build_certificate(cfg, out_path, single);
    } else {
      stats = build_certificate_parallel(cfg, out_path, job);
    }
    out << "intervals=" << stats.count << " type1=" << stats.type1 << " type2=" << stats.type2
        << " elapsed=" << format_seconds(stats.elapsed_seconds) << "\n";
    return kOk;
  } catch (const StallError& e) {
    out << "STALL x=" << e.point() << " count=" << e.emitted() << "\n";
    err << "error: " << e.what() << "\n";
    return kStall;
  } catch (const Interrupted& e) {
    err << "interrupted at count=" << e.at().intervals_emitted << " point=" << e.at().current_point;
    if (!o.checkpoint.empty()) err << "; rerun with --resume to continue";
    err << "\n";
    return kInterrupted;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

inline int cmd_verify(const RunOptions& o, std::ostream& out, std::ostream& err) {
  std::string path = o.in;
  if (path.empty()) {
    err << "error: no certificate given\n";
    return kUsage;
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    err << "error: cannot open " << path << "\n";
    return kUsage;
  }
  unsigned long p = o.p, E = o.E;
  if (p == 0 || E == 0) {
    std::string first;
    std::getline(is, first);
    try {
      auto h = CertificateHeader::parse(first);
      if (p == 0) p = h.p;
      if (E == 0) E = h.E;
    } catch (const std::exception& e) {
      out << "line 1: malformed: " << e.what() << "\n";
      out << "VERIFY ok=false intervals=0 failures=1\n";
      return kUsage;
    }
    is.clear();
    is.seekg(0);
  }
  VerifyOptions opts;
  opts.samples_per_interval = o.samples;
  opts.seed = o.seed;
  VerifyReport rep = verify_certificate(is, p, E, opts);
  if (!o.quiet && rep.header) {
    out << "certificate p=" << p << " E=" << E << " start=" << rep.header->start << " target=" << rep.header->target
        << "\n";
  }
  if (rep.first_failure) {
    out << "line " << rep.first_failure->line << ": " << to_string(rep.first_failure->kind) << ": "
        << rep.first_failure->reason << "\n";
  }
  if (o.samples > 0) {
    out << "spot_checks=" << (rep.spot_passed + rep.spot_failed) << " passed=" << rep.spot_passed
        << " failed=" << rep.spot_failed << "\n";
  }
  out << rep.summary() << "\n";
  if (rep.valid) return kOk;
  return rep.unreadable() ? kUsage : kInvalid;
}

inline int cmd_oracle(const RunOptions& o, std::ostream& out, std::ostream& err) {
  try {
    if (!is_prime(o.p)) throw std::invalid_argument("p must be prime");
    Fraction x = Fraction::parse(o.x);
    Integer Q = parse_integer(o.Q);
    if (Q < 1) throw std::invalid_argument("Q must be >= 1");
    auto r = oracle_min(x, Q, o.p);
    out << r.value << " at q=" << r.argmin << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

/// Parses argv and dispatches. Output goes to the given streams so tests can capture it.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact covers of [0, 1/2] certifying q |q|_p ||q x|| < 1/E infinitely often"};
  app.require_subcommand(1);
  RunOptions o;

  auto* build = app.add_subcommand("build", "Build a cover certificate");
  build->add_option("--p", o.p, "Prime p")->required();
  build->add_option("--E", o.E, "Threshold denominator (epsilon = 1/E)")->required();
  build->add_option("--start", o.start, "Walk start, a/b")->capture_default_str();
  build->add_option("--target", o.target, "Walk target, a/b")->capture_default_str();
  build->add_option("--segments", o.segments, "Split [0, 1/2] into K segments")->capture_default_str();
  build->add_option("--workers", o.workers, "Worker threads for segments (0: all cores)");
  build->add_option("--max-n", o.max_n, "Type-1 scan depth")->capture_default_str();
  build->add_option("--out", o.out, "Certificate path");
  build->add_option("--checkpoint", o.checkpoint, "Checkpoint path");
  build->add_flag("--resume", o.resume, "Resume from --checkpoint");
  build->add_option("--checkpoint-every", o.checkpoint_every, "Checkpoint every N intervals")->capture_default_str();
  build->add_option("--checkpoint-seconds", o.checkpoint_seconds, "Checkpoint at least this often")
      ->capture_default_str();
  build->add_option("--stop-after", o.stop_after, "Interrupt at the first checkpoint at or after N intervals");
  build->add_flag("--long", o.long_run, "Allow runs expected to take hours");
  build->add_flag("--quiet", o.quiet, "No progress output");

  auto* verify = app.add_subcommand("verify", "Verify a certificate");
  verify->add_option("certificate", o.in, "Certificate path");
  verify->add_option("--in", o.in, "Certificate path");
  verify->add_option("--p", o.p, "Prime p (default: from header)");
  verify->add_option("--E", o.E, "Threshold denominator (default: from header)");
  verify->add_option("--samples", o.samples, "Spot-check samples per interval")->capture_default_str();
  verify->add_option("--seed", o.seed, "Spot-check seed")->capture_default_str();
  verify->add_flag("--quiet", o.quiet, "Summary line only");

  auto* oracle = app.add_subcommand("oracle", "min over q <= Q of q |q|_p ||q x||");
  oracle->add_option("--p", o.p, "Prime p")->required();
  oracle->add_option("--x", o.x, "Point a/b")->required();
  oracle->add_option("--Q", o.Q, "Upper bound for q")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  if (build->parsed()) return cmd_build(o, out, err);
  if (verify->parsed()) return cmd_verify(o, out, err);
  return cmd_oracle(o, out, err);
}

}  // namespace plc::cli
