#include "telsm/cost_model.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace telsm::cost {

namespace {

Status ParseDouble(const std::string& s, double* out) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
  auto [ptr, ec] = std::from_chars(b, e, *out);
  if (ec != std::errc() || ptr != e) return Status::InvalidArgument("not a number: " + s);
  return Status::OK();
}

// Sum of T^(i-L) for i = 0..levels.
double LevelSum(double T, int levels) {
  double sum = 0;
  for (int i = 0; i <= levels; ++i) sum += std::pow(T, i - levels);
  return sum;
}

double Ratio(double num, double den) { return den > 0 ? num / den : 1.0; }

}  // namespace

Status Params::Validate() const {
  for (double v : {N, B, T, R, K, blksz, Z, WB_disk, s_n}) {
    if (!(v > 0)) return Status::InvalidArgument("cost parameters must be positive");
  }
  if (T < 2) return Status::InvalidArgument("T must be >= 2");
  if (P_false < 0 || P_false > 1) return Status::InvalidArgument("P_false must lie in [0, 1]");
  if (n < 0 || (n >= 1 && n >= T / 2)) {
    return Status::InvalidArgument("n must satisfy 1 <= n < T/2 (or 0 for no transformation)");
  }
  if (m < 0 || L < 0 || R_prime < 0 || RB_disk < 0 || T_r < 0) {
    return Status::InvalidArgument("negative cost parameter");
  }
  return Status::OK();
}

double Params::Levels() const { return L > 0 ? L : LogT(*this); }

double Params::LeafRecordBytes() const { return (R_prime > 0 ? R_prime : R) / s_n; }

Params Params::Baseline() const {
  Params b = *this;
  b.n = 0;
  b.s_n = 1;
  b.R_prime = 0;
  b.R_j.clear();
  return b;
}

Params Params::SplitScenario(Params base, int stages) {
  base.n = stages;
  base.s_n = std::pow(2.0, stages);
  base.R_prime = 0;
  base.R_j.clear();
  for (int j = 1; j <= stages; ++j) base.R_j.push_back(base.R / std::pow(2.0, j));
  return base;
}

Params Params::ConvertScenario(Params base, double r_prime) {
  base.n = 1;
  base.s_n = 1;
  base.R_prime = r_prime;
  base.R_j = {r_prime};
  return base;
}

Status Params::Apply(const std::map<std::string, std::string>& kv) {
  const std::map<std::string, double*> fields = {
      {"N", &N},           {"B", &B},         {"T", &T},     {"R", &R},
      {"K", &K},           {"blksz", &blksz}, {"Z", &Z},     {"P_false", &P_false},
      {"L", &L},           {"WB_disk", &WB_disk}, {"RB_disk", &RB_disk}, {"T_r", &T_r},
      {"n", &n},           {"s_n", &s_n},     {"m", &m},     {"R_prime", &R_prime},
  };
  for (const auto& [key, value] : kv) {
    if (key == "R_j") {
      R_j.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        double v;
        TELSM_RETURN_NOT_OK(ParseDouble(item, &v));
        R_j.push_back(v);
      }
      continue;
    }
    auto it = fields.find(key);
    if (it == fields.end()) return Status::InvalidArgument("unknown cost parameter " + key);
    TELSM_RETURN_NOT_OK(ParseDouble(value, it->second));
  }
  return Validate();
}

double LogT(const Params& p) {
  if (p.N <= p.B) return 0;
  return std::log(p.N / p.B) / std::log(p.T);
}

double WaCwt(const Params& p) { return 1 + p.T / (p.T - 1) * LogT(p); }

double WMaxCwt(const Params& p) { return p.WB_disk / WaCwt(p); }

double WaTec(const Params& p) { return WaCwt(p) + p.n; }

double WMaxTec(const Params& p) {
  double bw = p.WB_disk;
  if (p.RB_disk > 0 && p.T_r > 0) {
    bw = std::min(bw, p.RB_disk * p.T_r / (p.RB_disk + p.T_r));
  } else if (p.RB_disk > 0) {
    bw = std::min(bw, p.RB_disk);
  } else if (p.T_r > 0) {
    bw = std::min(bw, p.T_r);
  }
  return bw / WaTec(p);
}

double PqCost(const Params& p, PointMode mode) {
  const double bloom = (p.Levels() + p.Z * (1 + p.n)) * p.P_false;
  const double per_piece = std::ceil(p.LeafRecordBytes() / p.blksz);
  return bloom + per_piece * (mode == PointMode::kPQRA ? p.s_n : 1);
}

double RqCost(const Params& p, Config config) {
  const int levels = static_cast<int>(std::ceil(p.Levels() - 1e-9));
  const double sum = LevelSum(p.T, levels);
  if (config == Config::kCWT) return p.m * p.R / p.blksz * sum;
  double staged = 0;
  for (double r : p.R_j) staged += r;
  return p.m / p.blksz * (staged / std::pow(p.T, levels) + p.LeafRecordBytes() * sum);
}

double SpaceAmp(const Params& p, SpaceKind kind) {
  switch (kind) {
    case SpaceKind::kSplit:
      return p.K * (p.s_n - 1) * p.N / (p.R * p.T);
    case SpaceKind::kConvert:
      return p.N * (p.R_prime > 0 ? p.R_prime : p.R) / (p.R * p.T);
    case SpaceKind::kIndex:
      return 1 / p.T;
  }
  return 0;
}

Report CompareReport(const Params& p, const Weights& w) {
  const Params base = p.Baseline();
  Report r;
  r.w_cwt = WMaxCwt(base);
  r.w_tec = WMaxTec(p);
  r.pqra_cwt = PqCost(base, PointMode::kPQRA);
  r.pqra_tec = PqCost(p, PointMode::kPQRA);
  r.pqrc_cwt = PqCost(base, PointMode::kPQRC);
  r.pqrc_tec = PqCost(p, PointMode::kPQRC);
  r.rq_cwt = RqCost(base, Config::kCWT);
  r.rq_tec = p.n > 0 ? RqCost(p, Config::kTEC) : r.rq_cwt;
  r.space_split = SpaceAmp(p, SpaceKind::kSplit);
  r.space_convert = SpaceAmp(p, SpaceKind::kConvert);
  r.space_index = SpaceAmp(p, SpaceKind::kIndex);
  r.write_ratio = Ratio(r.w_tec, r.w_cwt);
  r.pqra_ratio = Ratio(r.pqra_cwt, r.pqra_tec);
  r.pqrc_ratio = Ratio(r.pqrc_cwt, r.pqrc_tec);
  r.range_ratio = Ratio(r.rq_cwt, r.rq_tec);
  r.score = w.write * std::log(r.write_ratio) + w.pqra * std::log(r.pqra_ratio) +
            w.pqrc * std::log(r.pqrc_ratio) + w.range * std::log(r.range_ratio);
  r.beneficial = r.score > 1e-12;
  return r;
}

std::string Report::Table() const {
  char buf[2048];
  std::snprintf(buf, sizeof(buf),
                "%-22s %14s %14s %10s\n"
                "%-22s %14.4f %14.4f %10.4f\n"
                "%-22s %14.4f %14.4f %10.4f\n"
                "%-22s %14.4f %14.4f %10.4f\n"
                "%-22s %14.4f %14.4f %10.4f\n"
                "space amp (split)      %14.6g\n"
                "space amp (convert)    %14.6g\n"
                "space amp (index)      %14.6g\n"
                "score %.4f => %s\n",
                "dimension", "CWT", "TEC", "ratio", "max write throughput", w_cwt, w_tec,
                write_ratio, "point query (PQRA)", pqra_cwt, pqra_tec, pqra_ratio,
                "point query (PQRC)", pqrc_cwt, pqrc_tec, pqrc_ratio, "range query", rq_cwt,
                rq_tec, range_ratio, space_split, space_convert, space_index, score,
                beneficial ? "beneficial" : "not beneficial");
  return buf;
}

std::string Report::MachineReadable() const {
  std::ostringstream os;
  os.precision(10);
  os << "w_cwt=" << w_cwt << "\nw_tec=" << w_tec << "\npqra_cwt=" << pqra_cwt
     << "\npqra_tec=" << pqra_tec << "\npqrc_cwt=" << pqrc_cwt << "\npqrc_tec=" << pqrc_tec
     << "\nrq_cwt=" << rq_cwt << "\nrq_tec=" << rq_tec << "\nspace_split=" << space_split
     << "\nspace_convert=" << space_convert << "\nspace_index=" << space_index
     << "\nwrite_ratio=" << write_ratio << "\npqra_ratio=" << pqra_ratio
     << "\npqrc_ratio=" << pqrc_ratio << "\nrange_ratio=" << range_ratio << "\nscore=" << score
     << "\nbeneficial=" << (beneficial ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace telsm::cost
