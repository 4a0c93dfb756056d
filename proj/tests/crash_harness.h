#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <map>
#include <random>

#include "telsm/db.h"
#include "telsm/env.h"
#include "test_util.h"

// Fork-and-kill driver shared by the crash test and the acceptance run.
namespace telsm::crash {

using testing::Key;
using testing::MustSchema;
using testing::SmallConfig;

inline constexpr const char* kSchema = "a:u64,b:str,c:u64,d:str";
inline constexpr int kOps = 2500;
inline const char* const kPrefixes[] = {"wal.", "flush.", "compaction.", "manifest."};

struct Op {
  bool del = false;
  uint64_t key = 0;
  Row row;
};

inline std::vector<Op> MakeOps(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Op> ops(kOps);
  for (auto& op : ops) {
    op.key = rng() % 400;
    op.del = rng() % 9 == 0;
    uint64_t v = rng() % 100000;
    op.row = Row{op.key, "b" + std::to_string(v % 50), v, std::string(10 + v % 40, 'a' + v % 26)};
  }
  return ops;
}

using Model = std::map<std::string, Row>;

inline Model Replay(const std::vector<Op>& ops, size_t n) {
  Model m;
  for (size_t i = 0; i < n; ++i) {
    if (ops[i].del) {
      m.erase(Key(ops[i].key));
    } else {
      m[Key(ops[i].key)] = ops[i].row;
    }
  }
  return m;
}

inline std::vector<TransformerSpec> Pipeline(int variant) {
  switch (variant % 3) {
    case 0:
      return {};
    case 1:
      return {TransformerSpec::Split(2), TransformerSpec::Convert(RecordFormat::kText, RecordFormat::kPacked)};
    default:
      return {TransformerSpec::Augment({"b"})};
  }
}

inline EngineConfig CrashConfig(const std::string& dir) {
  EngineConfig c = SmallConfig(dir);
  c.write_buffer_size = 8 << 10;
  c.target_file_size_base = 8 << 10;
  return c;
}

inline Status Setup(DB* db, int variant) {
  ColumnFamilyDescriptor d;
  if (db->GetColumnFamily("t", &d).ok()) return Status::OK();
  TELSM_RETURN_NOT_OK(db->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kText));
  auto specs = Pipeline(variant);
  return specs.empty() ? Status::OK() : db->LinkTransformers("t", specs);
}

// Runs the ops, reporting 2i before and 2i+1 after op i on `fd`.
[[noreturn]] inline void Child(const std::string& dir, int variant, const std::vector<Op>& ops,
                        const char* prefix, uint64_t countdown, int fd) {
  std::unique_ptr<DB> db;
  if (!DB::Open(CrashConfig(dir), &db).ok() || !Setup(db.get(), variant).ok()) _exit(2);
  kill_point::Arm(prefix, countdown);
  for (size_t i = 0; i < ops.size(); ++i) {
    uint32_t tag = static_cast<uint32_t>(2 * i);
    if (write(fd, &tag, 4) != 4) _exit(3);
    Status st = ops[i].del ? db->Remove("t", Key(ops[i].key))
                           : db->Insert("t", Key(ops[i].key), ops[i].row);
    if (!st.ok()) _exit(4);
    ++tag;
    if (write(fd, &tag, 4) != 4) _exit(3);
  }
  if (!db->WaitForQuiescence().ok()) _exit(5);
  kill_point::Disarm();
  db.reset();
  _exit(0);
}

struct Outcome {
  int exit_code = -1;
  size_t acked = 0;
  bool in_flight = false;
};

inline Outcome RunChild(const std::string& dir, int variant, const std::vector<Op>& ops,
                 const char* prefix, uint64_t countdown) {
  int p[2];
  if (pipe(p) != 0) return {};
  pid_t pid = fork();
  if (pid == 0) {
    close(p[0]);
    Child(dir, variant, ops, prefix, countdown, p[1]);
  }
  close(p[1]);
  Outcome out;
  uint32_t tag;
  while (read(p[0], &tag, 4) == 4) {
    if (tag % 2 == 0) {
      out.in_flight = true;
    } else {
      out.in_flight = false;
      out.acked = tag / 2 + 1;
    }
  }
  close(p[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

inline ::testing::AssertionResult Matches(DB* db, const Model& m) {
  std::vector<KeyRow> rows;
  Status st = db->ReadRangeFull("t", "", "\xff", &rows);
  if (!st.ok()) return ::testing::AssertionFailure() << st.ToString();
  if (rows.size() != m.size()) {
    return ::testing::AssertionFailure() << rows.size() << " rows vs " << m.size();
  }
  auto it = m.begin();
  for (auto& [k, r] : rows) {
    if (k != it->first || r != it->second) return ::testing::AssertionFailure() << "mismatch at " << k;
    ++it;
  }
  return ::testing::AssertionSuccess();
}


// One randomized trial: run a child until it dies at a kill point (or
// finishes), recover, and check the recovered state and that the engine
// keeps working. Returns true if the child was killed.
struct TrialResult {
  bool killed = false;
  std::string prefix;
  std::string error;  // empty on success
};

inline TrialResult RunTrial(const std::string& dir, int trial, std::mt19937_64& rng) {
  static const uint64_t kRange[] = {kOps, 60, 120, 200};
  TrialResult res;
  int variant = trial % 3;
  int pk = static_cast<int>(rng() % 4);
  uint64_t countdown = 1 + rng() % kRange[pk];
  res.prefix = kPrefixes[pk];
  auto ops = MakeOps(1000 + trial);
  Outcome o = RunChild(dir, variant, ops, kPrefixes[pk], countdown);
  auto fail = [&](const std::string& why) {
    res.error = "trial " + std::to_string(trial) + " variant " + std::to_string(variant) + " " +
                res.prefix + "#" + std::to_string(countdown) + ": " + why;
    return res;
  };
  if (o.exit_code != 0 && o.exit_code != kill_point::kExitCode) {
    return fail("child exit " + std::to_string(o.exit_code));
  }
  res.killed = o.exit_code == kill_point::kExitCode;
  if (!res.killed && o.acked != ops.size()) return fail("child finished without all acks");

  std::unique_ptr<DB> db;
  Status st = DB::Open(CrashConfig(dir), &db);
  if (!st.ok()) return fail(st.ToString());
  ColumnFamilyDescriptor d;
  if (!db->GetColumnFamily("t", &d).ok()) {
    // Killed before the catalog edit was durable; nothing was acknowledged.
    if (o.acked != 0) return fail("catalog lost after acknowledged writes");
    return res;
  }
  Model before = Replay(ops, o.acked);
  bool took_in_flight = false;
  if (!Matches(db.get(), before)) {
    if (!o.in_flight) return fail("recovered state differs from acknowledged state");
    if (!Matches(db.get(), Replay(ops, o.acked + 1))) {
      return fail("recovered state matches neither side of the in-flight write");
    }
    took_in_flight = true;
  }
  st = db->CurrentVersion()->CheckShape();
  if (!st.ok()) return fail(st.ToString());

  Model m = Replay(ops, o.acked + (took_in_flight ? 1 : 0));
  for (size_t i = 0; i < 300; ++i) {
    const Op& op = ops[(i * 7) % ops.size()];
    st = db->Insert("t", Key(op.key + 1000), op.row);
    if (!st.ok()) return fail(st.ToString());
    m[Key(op.key + 1000)] = op.row;
  }
  st = db->MigrateAll();
  if (!st.ok()) return fail(st.ToString());
  if (!Matches(db.get(), m)) return fail("state after resume differs");
  if (variant == 2) {
    std::vector<KeyRow> hits;
    st = db->ReadIndexPoint("t", "b", Value{std::string("b7")}, &hits);
    if (!st.ok()) return fail(st.ToString());
    size_t want = 0;
    for (auto& [k, r] : m) want += std::get<std::string>(r[1]) == "b7";
    if (hits.size() != want) return fail("index disagrees with rows after recovery");
  }
  return res;
}

}  // namespace telsm::crash
