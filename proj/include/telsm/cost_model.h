#pragma once

#include <map>
#include <string>
#include <vector>

#include "telsm/status.h"

namespace telsm::cost {

// Analytical model parameters. Byte quantities are plain numbers; any
// consistent unit works since the outputs are ratios or per-unit rates.
struct Params {
  double N = 1ull << 30;          // total data
  double B = 32ull << 20;         // write buffer
  double T = 4;                   // size ratio
  double R = 500;                 // record bytes
  double K = 16;                  // key bytes
  double blksz = 4096;
  double Z = 4;                   // L0 runs
  double P_false = 0.01;
  double L = 0;                   // 0 => log_T(N/B)
  double WB_disk = 417;
  double RB_disk = 0;             // 0 => unbounded
  double T_r = 0;                 // 0 => unbounded
  double n = 0;                   // extra cross-CF writes
  double s_n = 1;                 // destination CFs at the last cross-CF level
  double m = 100;                 // range selectivity
  double R_prime = 0;             // post-conversion record bytes; 0 => R
  std::vector<double> R_j;        // record bytes after each stage

  Status Validate() const;

  double Levels() const;          // L, derived when unset
  double LeafRecordBytes() const; // R_n
  // The same store without transformations.
  Params Baseline() const;

  // Paper-style scenarios on top of `base`.
  static Params SplitScenario(Params base, int stages);
  static Params ConvertScenario(Params base, double r_prime);

  // key = value lines; recognised keys mirror the field names plus
  // "R_j = a,b,c".
  Status Apply(const std::map<std::string, std::string>& kv);
};

enum class PointMode { kPQRA, kPQRC };
enum class Config { kCWT, kTEC };
enum class SpaceKind { kSplit, kConvert, kIndex };

double LogT(const Params& p);
double WaCwt(const Params& p);
double WMaxCwt(const Params& p);
double WaTec(const Params& p);
double WMaxTec(const Params& p);
double PqCost(const Params& p, PointMode mode);
double RqCost(const Params& p, Config config);
double SpaceAmp(const Params& p, SpaceKind kind);

// Weights for the benefit score; each term is w * ln(ratio) with ratios
// oriented so > 1 favours the transformed store.
struct Weights {
  double write = 1;
  double pqra = 1;
  double pqrc = 1;
  double range = 1;
};

struct Report {
  double w_cwt = 0, w_tec = 0;
  double pqra_cwt = 0, pqra_tec = 0;
  double pqrc_cwt = 0, pqrc_tec = 0;
  double rq_cwt = 0, rq_tec = 0;
  double space_split = 0, space_convert = 0, space_index = 0;
  double write_ratio = 1;   // w_tec / w_cwt
  double pqra_ratio = 1;    // cwt / tec
  double pqrc_ratio = 1;
  double range_ratio = 1;
  double score = 0;
  bool beneficial = false;

  std::string Table() const;
  // key=value lines.
  std::string MachineReadable() const;
};

Report CompareReport(const Params& p, const Weights& w = {});

}  // namespace telsm::cost
