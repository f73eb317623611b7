#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "golden.hpp"
#include "plc/plc.hpp"

namespace plc {
namespace {

namespace fs = std::filesystem;

Fraction F(long a, long b) { return Fraction(a, b); }

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string certificate_text(const Cover& c) {
  std::ostringstream os;
  CertificateWriter w(os);
  w.write_header({c.p, c.E, c.start, c.target});
  for (const auto& iv : c.intervals) w(iv);
  w.finish();
  return os.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("plc_cover_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

TEST(BuildCover, GoldenE8) {
  Cover c = build_cover(SearchConfig{2, 8, 256});
  EXPECT_EQ(c.intervals, testing_data::golden_e8());
  EXPECT_EQ(c.stats.count, 29u);
  EXPECT_EQ(c.stats.type1, 16u);
  EXPECT_EQ(c.stats.type2, 13u);
}

TEST(BuildCover, ChainInvariants) {
  for (unsigned long p : {2UL, 3UL, 5UL, 7UL}) {
    for (unsigned long E = 3; E <= 10; ++E) {
      Cover c = build_cover(SearchConfig{p, E, 256});
      ASSERT_FALSE(c.intervals.empty());
      ASSERT_EQ(c.stats.count, c.intervals.size());
      ASSERT_EQ(c.stats.type1 + c.stats.type2, c.stats.count);
      Fraction x = c.start;
      for (const auto& iv : c.intervals) {
        ASSERT_TRUE(contains_with_progress(iv, x, p, E)) << "p=" << p << " E=" << E << " " << to_string(iv);
        ASSERT_NO_THROW(validate(iv, p));
        Fraction left = endpoints(iv, p, E).left;
        ASSERT_LT(left, x);
        x = left;
      }
      ASSERT_LE(x, Fraction(0));
      std::istringstream in(certificate_text(c));
      ASSERT_TRUE(verify_cover(in, p, E).valid) << "p=" << p << " E=" << E;
    }
  }
}

TEST(BuildCover, PartialRangeIsPrefixOfFullWalk) {
  SearchConfig cfg{2, 10, 256};
  Cover full = build_cover(cfg);
  Cover part = build_cover(cfg, F(1, 2), F(1, 4));
  ASSERT_LT(part.intervals.size(), full.intervals.size());
  for (std::size_t i = 0; i < part.intervals.size(); ++i) ASSERT_EQ(part.intervals[i], full.intervals[i]);
  EXPECT_LE(endpoints(part.intervals.back(), 2, 10).left, F(1, 4));
  EXPECT_GT(endpoints(part.intervals[part.intervals.size() - 2], 2, 10).left, F(1, 4));
}

TEST(BuildCover, RejectsBadRange) {
  SearchConfig cfg;
  EXPECT_THROW(build_cover(cfg, F(1, 4), F(1, 2)), std::invalid_argument);
  EXPECT_THROW(build_cover(cfg, F(3, 4), F(0, 1)), std::invalid_argument);
  EXPECT_THROW(build_cover(cfg, F(1, 2), F(-1, 4)), std::invalid_argument);
}

TEST(BuildCover, StallCarriesCount) {
  SearchConfig cfg{2, 8, 1};
  try {
    build_cover(cfg);
    FAIL() << "expected a stall";
  } catch (const StallError& e) {
    EXPECT_EQ(e.point(), F(1, 3));
    EXPECT_EQ(e.emitted(), 1u);
  }
  EXPECT_THROW(build_cover_parallel(cfg, 4, 2), StallError);
}

TEST(SegmentBounds, Uniform) {
  auto r = segment_bounds(4);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r[0], F(1, 2));
  EXPECT_EQ(r[1], F(3, 8));
  EXPECT_EQ(r[2], F(1, 4));
  EXPECT_EQ(r[3], F(1, 8));
  EXPECT_EQ(r[4], F(0, 1));
  EXPECT_THROW(segment_bounds(0), std::invalid_argument);
}

TEST(Parallel, OneSegmentMatchesSerial) {
  SearchConfig cfg{2, 10, 256};
  EXPECT_EQ(build_cover_parallel(cfg, 1).intervals, build_cover(cfg).intervals);
}

TEST(Parallel, GoldenFourSegments) {
  SearchConfig cfg{2, 8, 256};
  Cover c = build_cover_parallel(cfg, 4, 4);
  EXPECT_GE(c.stats.count, 29u);
  EXPECT_LE(c.stats.count, 32u);
  std::istringstream in(certificate_text(c));
  EXPECT_TRUE(verify_cover(in, 2, 8).valid);
}

// Each segment walk rejoins the serial walk, so every serial interval shows
// up and each seam costs at most one extra interval.
TEST(Parallel, ConsistentWithSerial) {
  for (unsigned long p : {2UL, 3UL}) {
    for (unsigned long E : {8UL, 10UL, 11UL}) {
      SearchConfig cfg{p, E, 256};
      Cover serial = build_cover(cfg);
      for (unsigned k : {2u, 3u, 4u, 8u}) {
        Cover par = build_cover_parallel(cfg, k, 3);
        ASSERT_GE(par.stats.count, serial.stats.count);
        ASSERT_LE(par.stats.count, serial.stats.count + k - 1) << "p=" << p << " E=" << E << " K=" << k;
        std::set<std::string> got;
        for (const auto& iv : par.intervals) got.insert(to_string(iv));
        for (const auto& iv : serial.intervals)
          ASSERT_TRUE(got.count(to_string(iv))) << to_string(iv) << " p=" << p << " E=" << E << " K=" << k;
        std::istringstream in(certificate_text(par));
        ASSERT_TRUE(verify_cover(in, p, E).valid);
      }
    }
  }
}

TEST(Checkpoint, RoundTrip) {
  TempDir dir;
  Checkpoint c{3, 11, F(1234, 98765), 4242, 5, 1.5};
  EXPECT_EQ(c.str(), "PLCCKPT v1 p=3 E=11 point=1234/98765 count=4242 segment=5");
  checkpoint_save(c, dir / "a.ckpt");
  Checkpoint r = checkpoint_restore(dir / "a.ckpt", 3, 11, 5);
  EXPECT_EQ(r.p, 3u);
  EXPECT_EQ(r.E, 11u);
  EXPECT_EQ(r.current_point, c.current_point);
  EXPECT_EQ(r.intervals_emitted, 4242u);
  EXPECT_EQ(r.segment, 5u);
  EXPECT_FALSE(fs::exists(dir / "a.ckpt.tmp"));
}

TEST(Checkpoint, RejectsMismatchAndGarbage) {
  TempDir dir;
  checkpoint_save(Checkpoint{2, 10, F(1, 7), 3, 0, 0}, dir / "c");
  EXPECT_THROW(checkpoint_restore(dir / "c", 2, 11, 0), FormatError);
  EXPECT_THROW(checkpoint_restore(dir / "c", 3, 10, 0), FormatError);
  EXPECT_THROW(checkpoint_restore(dir / "c", 2, 10, 1), FormatError);
  EXPECT_THROW(checkpoint_restore(dir / "missing"), std::runtime_error);
  std::ofstream(dir / "bad") << "PLCCKPT v1 p=2 E=10 point=1/0 count=3 segment=0\n";
  EXPECT_ANY_THROW(checkpoint_restore(dir / "bad"));
  std::ofstream(dir / "bad2") << "PLCCKPT v2 p=2 E=10 point=1/7 count=3 segment=0\n";
  EXPECT_THROW(checkpoint_restore(dir / "bad2"), FormatError);
}

TEST(CertificateFile, MatchesInMemoryCover) {
  TempDir dir;
  SearchConfig cfg{2, 10, 256};
  CoverStats s = build_certificate(cfg, dir / "e10.cert", {});
  Cover c = build_cover(cfg);
  EXPECT_EQ(s.count, c.stats.count);
  EXPECT_EQ(slurp(dir / "e10.cert"), certificate_text(c));
}

TEST(CertificateFile, InterruptAndResumeIsIdentical) {
  TempDir dir;
  SearchConfig cfg{2, 11, 256};
  build_certificate(cfg, dir / "ref.cert", {});

  std::atomic<bool> cancel{false};
  CertificateJob job;
  job.checkpoint = dir / "run.ckpt";
  job.checkpoint_every = 50;
  job.cancel = &cancel;
  job.on_progress = [&](const Checkpoint& c) {
    if (c.intervals_emitted >= 150) cancel = true;
  };
  EXPECT_THROW(build_certificate(cfg, dir / "run.cert", job), Interrupted);
  Checkpoint mid = checkpoint_restore(dir / "run.ckpt");
  EXPECT_EQ(mid.intervals_emitted, 150u);

  cancel = false;
  job.on_progress = nullptr;
  job.resume = true;
  CoverStats s = build_certificate(cfg, dir / "run.cert", job);
  EXPECT_EQ(s.count, 411u);
  EXPECT_EQ(slurp(dir / "run.cert"), slurp(dir / "ref.cert"));

  // Resuming a finished run changes nothing.
  CoverStats again = build_certificate(cfg, dir / "run.cert", job);
  EXPECT_EQ(again.count, s.count);
  EXPECT_EQ(again.type1, s.type1);
  EXPECT_EQ(slurp(dir / "run.cert"), slurp(dir / "ref.cert"));
}

// A crash can leave intervals written after the last checkpoint and a torn
// final line; resume discards both.
TEST(CertificateFile, ResumeAfterCrashDropsUncheckpointedTail) {
  TempDir dir;
  SearchConfig cfg{2, 10, 256};
  Cover c = build_cover(cfg);
  std::string full = certificate_text(c);

  std::istringstream in(full);
  std::string line, partial;
  for (int i = 0; i < 1 + 120; ++i) {
    std::getline(in, line);
    partial += line + "\n";
  }
  std::getline(in, line);
  partial += line.substr(0, line.size() / 2);  // torn
  std::ofstream(dir / "crash.cert", std::ios::binary) << partial;
  checkpoint_save(Checkpoint{2, 10, endpoints(c.intervals[99], 2, 10).left, 100, 0, 0}, dir / "crash.ckpt");

  CertificateJob job;
  job.checkpoint = dir / "crash.ckpt";
  job.resume = true;
  build_certificate(cfg, dir / "crash.cert", job);
  EXPECT_EQ(slurp(dir / "crash.cert"), full);
}

TEST(CertificateFile, ResumeRejectsForeignFiles) {
  TempDir dir;
  build_certificate(SearchConfig{2, 9, 256}, dir / "x.cert", {});
  checkpoint_save(Checkpoint{2, 10, F(1, 5), 10, 0, 0}, dir / "x.ckpt");
  CertificateJob job;
  job.checkpoint = dir / "x.ckpt";
  job.resume = true;
  EXPECT_THROW(build_certificate(SearchConfig{2, 9, 256}, dir / "x.cert", job), FormatError);
  EXPECT_THROW(build_certificate(SearchConfig{2, 10, 256}, dir / "x.cert", job), FormatError);
}

TEST(ParallelFile, MatchesInMemoryAndCleansUp) {
  TempDir dir;
  SearchConfig cfg{3, 10, 256};
  ParallelJob job;
  job.segments = 4;
  job.workers = 2;
  job.checkpoint = dir / "p.ckpt";
  CoverStats s = build_certificate_parallel(cfg, dir / "p.cert", job);
  Cover c = build_cover_parallel(cfg, 4);
  EXPECT_EQ(s.count, c.stats.count);
  EXPECT_EQ(slurp(dir / "p.cert"), certificate_text(c));
  for (int i = 0; i < 4; ++i) {
    EXPECT_FALSE(fs::exists(dir / ("p.cert.seg" + std::to_string(i))));
    EXPECT_FALSE(fs::exists(dir / ("p.ckpt.seg" + std::to_string(i))));
  }
}

TEST(ParallelFile, InterruptAndResumeIsIdentical) {
  TempDir dir;
  SearchConfig cfg{2, 12, 256};
  ParallelJob job;
  job.segments = 3;
  job.workers = 3;
  build_certificate_parallel(cfg, dir / "ref.cert", job);

  std::atomic<bool> cancel{false};
  job.checkpoint = dir / "p.ckpt";
  job.checkpoint_every = 40;
  job.cancel = &cancel;
  job.on_progress = [&](const Checkpoint& c) {
    if (c.intervals_emitted >= 80) cancel = true;
  };
  EXPECT_THROW(build_certificate_parallel(cfg, dir / "p.cert", job), Interrupted);
  cancel = false;
  job.on_progress = nullptr;
  job.resume = true;
  build_certificate_parallel(cfg, dir / "p.cert", job);
  EXPECT_EQ(slurp(dir / "p.cert"), slurp(dir / "ref.cert"));
}

}  // namespace
}  // namespace plc
