#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qp/engine.hpp"
#include "qp/pack.hpp"

namespace qp {

// Per-query split of the work of a one-level pack: t[i] spent in the shared
// prefix, t_prime[i] in the private branch, for the once-semantics run of
// query i.
struct OneLevelParams {
  std::vector<double> t;
  std::vector<double> t_prime;
  size_t n() const { return t.size(); }
};

// Per-level mean work of a pack with (assumed) constant branching factor b
// and depth d; tbar[l] is the mean over queries of the work spent at level l.
// K, when present, holds the per-level max/mean ratios K_0..K_{d-1}.
struct MultiLevelParams {
  int b = 2;
  int d = 0;
  std::vector<double> tbar;  // size d+1
  std::optional<std::vector<double>> K;
  bool uniform_branching = true;  // false: b is the max, used as a conservative bound
};

struct SpeedupBounds {
  double lower = 1.0;
  double upper = 1.0;
};

struct SpeedupReport {
  double Ts = 0.0;
  double Tp = 0.0;
  double speedup = 1.0;
  std::optional<double> c;            // one-level shared/private ratio
  std::optional<double> K;            // one-level max/mean ratio
  std::vector<double> c_l;            // multi-level ratios, index l = 0..d-1
  std::vector<std::vector<double>> R;  // R[l][m] for l <= m, 0 elsewhere
  double best_lower = 1.0;            // strongest per-level lower bound on the speedup
  std::optional<SpeedupBounds> bounds;
  bool degenerate = false;            // a ratio was undefined (zero denominator)
  std::vector<int> skipped_levels;    // levels skipped for zero denominators
  bool warning_nonuniform = false;
};

nlohmann::json speedup_report_to_json(const SpeedupReport& r);

// One-level predictor:
//   Ts = sum(t_i + t'_i),  Tp = max(t_i) + sum(t'_i),
//   c = sum(t_i)/sum(t'_i), K = max(t_i)/mean(t_i),
//   speedup = (c+1) / ((K/n) c + 1),  bounds = (1, min(c+1, n)).
// If sum(t'_i) = 0 the report is degenerate: raw Ts/Tp, bounds omitted.
SpeedupReport one_level(const OneLevelParams& params);

// Multi-level predictor:
//   Tp = sum_l b^l tbar_l (or the K-weighted upper bound when K is given),
//   Ts = b^d sum_l tbar_l, with the R and c_l tables and the per-level
//   lower-bound maximization.
SpeedupReport multi_level(const MultiLevelParams& params);

// Bridges measured work to the model symbols: per-level mean work from
// per-node literal-call counters grouped by depth, b = max branching
// (flagged when branching is non-uniform), d = pack depth.
MultiLevelParams fit_from_counters(const WorkCounters& counters, const QueryPack& pack);

struct BoundsVerdict {
  bool pass = false;
  double measured_speedup = 0.0;
  std::string diagnostic;
};

// Checks a measured (Ts, Tp) pair against a predicted report with tolerance
// eps on counted work: 1-eps <= measured and measured <= upper * (1+eps).
BoundsVerdict validate_bounds(double measured_Ts, double measured_Tp,
                              const SpeedupReport& predicted, double eps = 0.05);

}  // namespace qp
