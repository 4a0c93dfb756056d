#include "crash_harness.h"

namespace telsm::crash {
namespace {

using testing::TempDir;

TEST(Crash, RandomKillPointsPreserveAcknowledgedWrites) {
  const int kCrashes = 120;
  std::mt19937_64 rng(2024);
  int crashes = 0, completed = 0, trial = 0;
  std::map<std::string, int> per_prefix;
  while (crashes < kCrashes && trial < 3 * kCrashes) {
    TempDir dir;
    TrialResult r = RunTrial(dir.path(), trial++, rng);
    ASSERT_TRUE(r.error.empty()) << r.error;
    if (r.killed) {
      ++crashes;
      per_prefix[r.prefix]++;
    } else {
      ++completed;
    }
  }
  std::printf("crashes=%d completed=%d trials=%d", crashes, completed, trial);
  for (auto& [p, n] : per_prefix) std::printf(" %s%d", p.c_str(), n);
  std::printf("\n");
  EXPECT_GE(crashes, 100);
  for (const char* p : kPrefixes) EXPECT_GT(per_prefix[p], 0) << p;
}

}  // namespace
}  // namespace telsm::crash
