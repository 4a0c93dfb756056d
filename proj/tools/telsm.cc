// telsm command line: benchmark driver, cost model and debug reads.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "telsm/bench.h"
#include "telsm/cost_model.h"
#include "telsm/db.h"

using namespace telsm;

namespace {

int Fail(const Status& s) {
  std::fprintf(stderr, "error: %s\n", s.ToString().c_str());
  return 1;
}

#define CHECK_OK(expr)              \
  do {                              \
    ::telsm::Status _s = (expr);    \
    if (!_s.ok()) return Fail(_s);  \
  } while (0)

void PrintRow(const Schema& schema, std::string_view key, const Row& row) {
  std::cout << key;
  for (size_t i = 0; i < row.size(); ++i) {
    std::cout << ' ' << schema.column(i).name << '=' << ValueToString(row[i]);
  }
  std::cout << '\n';
}

Status ParseValue(const Schema& schema, const std::string& column, const std::string& text,
                  Value* out) {
  auto idx = schema.IndexOf(column);
  if (!idx) return Status::InvalidArgument("unknown column " + column);
  if (schema.column(*idx).type == ColumnType::kStr) {
    *out = text;
    return Status::OK();
  }
  try {
    size_t used = 0;
    uint64_t v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    *out = v;
  } catch (const std::exception&) {
    return Status::InvalidArgument("not a u64: " + text);
  }
  return Status::OK();
}

struct DebugArgs {
  std::string config;
  std::string cf;
  std::string key, from, to, column, value, lo, hi;
  uint64_t limit = 0;
};

// Opens the store named by a bench config without creating anything.
Status OpenForDebug(const DebugArgs& a, std::unique_ptr<DB>* db, std::string* cf, Schema* schema) {
  bench::BenchConfig cfg;
  TELSM_RETURN_NOT_OK(bench::BenchConfig::FromFile(a.config, &cfg));
  cfg.engine.create_if_missing = false;
  TELSM_RETURN_NOT_OK(DB::Open(cfg.engine, db));
  *cf = a.cf.empty() ? cfg.cf_name : a.cf;
  ColumnFamilyDescriptor d;
  TELSM_RETURN_NOT_OK((*db)->GetColumnFamily(*cf, &d));
  *schema = d.schema;
  return Status::OK();
}

int RunDebug(const std::string& cmd, const DebugArgs& a) {
  std::unique_ptr<DB> db;
  std::string cf;
  Schema schema;
  CHECK_OK(OpenForDebug(a, &db, &cf, &schema));
  uint64_t shown = 0;
  auto more = [&] { return a.limit == 0 || ++shown < a.limit; };
  if (cmd == "get") {
    Row row;
    CHECK_OK(db->ReadPointFull(cf, a.key, &row));
    PrintRow(schema, a.key, row);
  } else if (cmd == "getcol") {
    Value v;
    CHECK_OK(db->ReadPointColumn(cf, a.key, a.column, &v));
    std::cout << a.key << ' ' << a.column << '=' << ValueToString(v) << '\n';
  } else if (cmd == "scan") {
    CHECK_OK(db->ScanRangeFull(cf, a.from, a.to, [&](std::string_view k, const Row& r) {
      PrintRow(schema, k, r);
      return more();
    }));
  } else if (cmd == "scancol") {
    CHECK_OK(db->ScanRangeColumn(cf, a.from, a.to, a.column, [&](std::string_view k, const Value& v) {
      std::cout << k << ' ' << a.column << '=' << ValueToString(v) << '\n';
      return more();
    }));
  } else if (cmd == "iget") {
    Value v;
    CHECK_OK(ParseValue(schema, a.column, a.value, &v));
    std::vector<KeyRow> rows;
    CHECK_OK(db->ReadIndexPoint(cf, a.column, v, &rows));
    for (auto& [k, r] : rows) PrintRow(schema, k, r);
  } else if (cmd == "iscan") {
    Value lo, hi;
    CHECK_OK(ParseValue(schema, a.column, a.lo, &lo));
    CHECK_OK(ParseValue(schema, a.column, a.hi, &hi));
    std::vector<KeyValue> out;
    CHECK_OK(db->ReadIndexRange(cf, a.column, lo, hi, &out));
    for (auto& [k, v] : out) std::cout << k << ' ' << a.column << '=' << ValueToString(v) << '\n';
  }
  CHECK_OK(db->Close());
  return 0;
}

int RunLoad(const std::string& config, uint64_t count, uint64_t first, int clients) {
  bench::BenchConfig cfg;
  CHECK_OK(bench::BenchConfig::FromFile(config, &cfg));
  std::unique_ptr<bench::Testbed> tb;
  CHECK_OK(bench::Testbed::Open(cfg, &tb));
  bench::LoadReport report;
  Status s = bench::Load(tb.get(), first, count ? count : cfg.RecordCount(), clients, &report);
  std::cout << "config=" << cfg.Label() << ' ' << report.Format() << '\n';
  CHECK_OK(s);
  std::cout << "stored_bytes=" << tb->StoredBytes() << '\n';
  const auto& st = tb->db()->stats();
  const double ingested = static_cast<double>(st.bytes_ingested.load());
  if (ingested > 0) {
    const double written = static_cast<double>(st.bytes_written_flush.load() +
                                               st.bytes_written_compaction.load());
    std::cout << "write_amplification=" << written / ingested << '\n';
  }
  CHECK_OK(tb->Close());
  return 0;
}

struct BenchArgs {
  std::string config, workload = "q3", out;
  int clients = 1;
  double duration = 10;
  uint64_t ops = 0;
  uint64_t seed = 1;
  bool append = false;
  bool migrate = false;
  int load_clients = 8;
};

int RunBench(const BenchArgs& a) {
  bench::BenchConfig cfg;
  CHECK_OK(bench::BenchConfig::FromFile(a.config, &cfg));
  bench::Workload kind;
  CHECK_OK(bench::ParseWorkload(a.workload, &kind));
  std::unique_ptr<bench::Testbed> tb;
  CHECK_OK(bench::Testbed::Open(cfg, &tb));
  if (tb->created()) {
    bench::LoadReport report;
    CHECK_OK(bench::Load(tb.get(), 0, cfg.RecordCount(), a.load_clients, &report));
    std::cerr << "loaded " << report.Format() << '\n';
  }
  if (a.migrate) CHECK_OK(tb->db()->MigrateAll());

  bench::WorkloadSpec spec = bench::DefaultSpec(cfg, kind);
  spec.clients = a.clients;
  spec.duration_s = a.duration;
  spec.op_count = a.ops;
  spec.seed = a.seed;
  bench::WorkloadResult result;
  Status s = bench::RunWorkload(tb.get(), spec, &result);

  bench::RunRecord rec;
  rec.meta = {{"config", cfg.Label()},
              {"workload", bench::WorkloadName(kind)},
              {"clients", std::to_string(a.clients)},
              {"seed", std::to_string(a.seed)},
              {"fallback", result.fallback ? "full_scan" : "none"},
              {"errors", std::to_string(result.errors)},
              {"stored_bytes", std::to_string(tb->StoredBytes())}};
  rec.stats = result.stats;
  const std::string line = rec.Format();
  std::cout << line << '\n';
  if (!a.out.empty()) {
    std::ofstream f(a.out, a.append ? std::ios::app : std::ios::trunc);
    if (!a.append) f << "# telsm bench results\n";
    f << line << '\n';
    if (!f) return Fail(Status::IOError("cannot write " + a.out));
  }
  CHECK_OK(s);
  CHECK_OK(tb->Close());
  return 0;
}

int RunReport(const std::string& baseline, const std::string& candidate) {
  std::vector<bench::RunRecord> base, cand;
  CHECK_OK(bench::ReadRunRecords(baseline, &base));
  CHECK_OK(bench::ReadRunRecords(candidate, &cand));
  for (const auto& c : cand) {
    for (const auto& b : base) {
      if (b.meta.count("workload") && b.meta.at("workload") == c.meta.at("workload")) {
        std::string label = c.meta.count("config") ? c.meta.at("config") : "candidate";
        std::cout << bench::FormatComparison(label + " " + c.meta.at("workload"),
                                             bench::Compare(b.stats, c.stats))
                  << '\n';
        break;
      }
    }
  }
  return 0;
}

struct CostArgs {
  std::string params;
  std::vector<std::string> sets;
  std::string scenario = "none";
  int stages = 3;
  double r_prime = 0;
  cost::Weights weights;
};

int RunCost(const CostArgs& a) {
  std::map<std::string, std::string> kv;
  if (!a.params.empty()) CHECK_OK(ReadConfigFile(a.params, &kv));
  for (const auto& s : a.sets) {
    size_t eq = s.find('=');
    if (eq == std::string::npos) return Fail(Status::InvalidArgument("--set expects key=value"));
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  cost::Params p;
  CHECK_OK(p.Apply(kv));
  if (a.scenario == "split") {
    p = cost::Params::SplitScenario(p, a.stages);
  } else if (a.scenario == "convert") {
    p = cost::Params::ConvertScenario(p, a.r_prime > 0 ? a.r_prime : p.R * 0.7);
  } else if (a.scenario != "none") {
    return Fail(Status::InvalidArgument("scenario must be none, split or convert"));
  }
  cost::Report r = cost::CompareReport(p, a.weights);
  std::cout << r.Table() << '\n' << r.MachineReadable();
  std::printf("wa_cwt=%.10g\nwa_tec=%.10g\nlevels=%.10g\n", cost::WaCwt(p), cost::WaTec(p),
              p.Levels());
  return 0;
}

int RunStats(const std::string& config) {
  bench::BenchConfig cfg;
  CHECK_OK(bench::BenchConfig::FromFile(config, &cfg));
  cfg.engine.create_if_missing = false;
  std::unique_ptr<DB> db;
  CHECK_OK(DB::Open(cfg.engine, &db));
  std::cout << db->DebugString();
  auto v = db->CurrentVersion();
  for (const auto& [id, st] : v->cfs) {
    std::cout << "cf " << st.desc->name << " files=" << v->CfFiles(id)
              << " bytes=" << v->CfBytes(id) << '\n';
  }
  for (const auto& [k, n] : db->stats().Snapshot()) std::cout << k << '=' << n << '\n';
  CHECK_OK(db->Close());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"telsm: LSM key-value store with transformation-embedded compaction"};
  app.require_subcommand(1);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Load if needed, then run one workload");
  bench->add_option("--config", bench_args.config, "Config file")->required();
  bench->add_option("--workload", bench_args.workload, "q1..q7");
  bench->add_option("--clients", bench_args.clients, "Concurrent clients")->check(CLI::PositiveNumber);
  bench->add_option("--duration", bench_args.duration, "Seconds to run");
  bench->add_option("--ops", bench_args.ops, "Total operations instead of a duration");
  bench->add_option("--seed", bench_args.seed, "Workload seed");
  bench->add_option("--out", bench_args.out, "Results file");
  bench->add_flag("--append", bench_args.append, "Append to the results file");
  bench->add_flag("--migrate", bench_args.migrate, "Push all data to terminal CFs first");
  bench->add_option("--load-clients", bench_args.load_clients, "Clients for the initial load");

  std::string load_config;
  uint64_t load_count = 0, load_first = 0;
  int load_clients = 8;
  auto* load = app.add_subcommand("load", "Insert synthetic records and wait for compactions");
  load->add_option("--config", load_config, "Config file")->required();
  load->add_option("--count", load_count, "Records (default from load_bytes)");
  load->add_option("--first", load_first, "First key index");
  load->add_option("--clients", load_clients, "Concurrent clients");

  CostArgs cost_args;
  auto* cost = app.add_subcommand("cost", "Evaluate the analytical cost model");
  cost->add_option("--params", cost_args.params, "key = value parameter file");
  cost->add_option("--set", cost_args.sets, "Parameter override key=value");
  cost->add_option("--scenario", cost_args.scenario, "none | split | convert");
  cost->add_option("--stages", cost_args.stages, "Split stages");
  cost->add_option("--r-prime", cost_args.r_prime, "Record bytes after conversion");
  cost->add_option("--w-write", cost_args.weights.write, "Weight of write throughput");
  cost->add_option("--w-pqra", cost_args.weights.pqra, "Weight of full-row point reads");
  cost->add_option("--w-pqrc", cost_args.weights.pqrc, "Weight of single-column point reads");
  cost->add_option("--w-range", cost_args.weights.range, "Weight of range reads");

  std::string stats_config;
  auto* stats = app.add_subcommand("stats", "Print the LSM shape and counters");
  stats->add_option("--config", stats_config, "Config file")->required();

  std::string report_base, report_cand;
  auto* report = app.add_subcommand("report", "Compare two results files");
  report->add_option("--baseline", report_base, "Baseline results")->required();
  report->add_option("--candidate", report_cand, "Candidate results")->required();

  DebugArgs dbg;
  std::string dbg_cmd;
  auto debug = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", dbg.config, "Config file")->required();
    sub->add_option("--cf", dbg.cf, "Column family (default cf_name)");
    sub->callback([&, name] { dbg_cmd = name; });
    return sub;
  };
  auto* get = debug("get", "Read a full row");
  get->add_option("--key", dbg.key)->required();
  auto* getcol = debug("getcol", "Read one column");
  getcol->add_option("--key", dbg.key)->required();
  getcol->add_option("--column", dbg.column)->required();
  auto* scan = debug("scan", "Scan full rows in [from, to)");
  scan->add_option("--from", dbg.from);
  scan->add_option("--to", dbg.to);
  scan->add_option("--limit", dbg.limit);
  auto* scancol = debug("scancol", "Scan one column in [from, to)");
  scancol->add_option("--from", dbg.from);
  scancol->add_option("--to", dbg.to);
  scancol->add_option("--column", dbg.column)->required();
  scancol->add_option("--limit", dbg.limit);
  auto* iget = debug("iget", "Index point lookup");
  iget->add_option("--column", dbg.column)->required();
  iget->add_option("--value", dbg.value)->required();
  auto* iscan = debug("iscan", "Index range lookup over [lo, hi)");
  iscan->add_option("--column", dbg.column)->required();
  iscan->add_option("--lo", dbg.lo)->required();
  iscan->add_option("--hi", dbg.hi)->required();

  CLI11_PARSE(app, argc, argv);

  if (bench->parsed()) return RunBench(bench_args);
  if (load->parsed()) return RunLoad(load_config, load_count, load_first, load_clients);
  if (cost->parsed()) return RunCost(cost_args);
  if (stats->parsed()) return RunStats(stats_config);
  if (report->parsed()) return RunReport(report_base, report_cand);
  if (!dbg_cmd.empty()) return RunDebug(dbg_cmd, dbg);
  return 0;
}
