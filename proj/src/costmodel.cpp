#include "qp/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace qp {

SpeedupReport one_level(const OneLevelParams& params) {
  if (params.t.size() != params.t_prime.size() || params.t.empty())
    throw std::invalid_argument("one_level: need equally sized, non-empty t and t'");
  const double n = static_cast<double>(params.n());
  const double sum_t = std::accumulate(params.t.begin(), params.t.end(), 0.0);
  const double sum_tp = std::accumulate(params.t_prime.begin(), params.t_prime.end(), 0.0);
  const double max_t = *std::max_element(params.t.begin(), params.t.end());

  SpeedupReport r;
  r.Ts = sum_t + sum_tp;
  r.Tp = max_t + sum_tp;

  if (sum_t > 0) r.K = max_t / (sum_t / n);

  if (sum_tp <= 0.0) {
    r.degenerate = true;  // c undefined
    r.speedup = r.Tp > 0 ? r.Ts / r.Tp : 1.0;
    return r;
  }

  const double c = sum_t / sum_tp;
  r.c = c;
  const double k = r.K.value_or(1.0);
  r.speedup = (c + 1.0) / ((k / n) * c + 1.0);
  r.bounds = SpeedupBounds{1.0, std::min(c + 1.0, n)};
  r.best_lower = 1.0;
  return r;
}

SpeedupReport multi_level(const MultiLevelParams& params) {
  if (params.d < 0 || params.tbar.size() != static_cast<size_t>(params.d) + 1)
    throw std::invalid_argument("multi_level: need tbar of size d+1");
  if (params.b < 1) throw std::invalid_argument("multi_level: branching factor must be >= 1");
  if (params.K && params.K->size() != static_cast<size_t>(params.d))
    throw std::invalid_argument("multi_level: K must have d entries");

  const int d = params.d;
  const double b = static_cast<double>(params.b);
  SpeedupReport r;
  r.warning_nonuniform = !params.uniform_branching;

  std::vector<double> pow_b(static_cast<size_t>(d) + 1);
  for (int l = 0; l <= d; ++l) pow_b[static_cast<size_t>(l)] = std::pow(b, l);

  double tp = 0.0;
  for (int l = 0; l <= d; ++l) {
    double k = (params.K && l < d) ? (*params.K)[static_cast<size_t>(l)] : 1.0;
    tp += pow_b[static_cast<size_t>(l)] * k * params.tbar[static_cast<size_t>(l)];
  }
  double sum_tbar = std::accumulate(params.tbar.begin(), params.tbar.end(), 0.0);
  r.Tp = tp;
  r.Ts = pow_b[static_cast<size_t>(d)] * sum_tbar;
  r.speedup = r.Tp > 0 ? r.Ts / r.Tp : 1.0;

  // R[l][m] = sum_{k=l..m} b^m tbar_k / sum_{k=l..m} b^k tbar_k.
  r.R.assign(static_cast<size_t>(d) + 1, std::vector<double>(static_cast<size_t>(d) + 1, 0.0));
  for (int l = 0; l <= d; ++l) {
    for (int m = l; m <= d; ++m) {
      double num = 0.0, den = 0.0;
      for (int k = l; k <= m; ++k) {
        num += pow_b[static_cast<size_t>(m)] * params.tbar[static_cast<size_t>(k)];
        den += pow_b[static_cast<size_t>(k)] * params.tbar[static_cast<size_t>(k)];
      }
      r.R[static_cast<size_t>(l)][static_cast<size_t>(m)] = den > 0 ? num / den : 0.0;
      if (den <= 0 && num > 0) r.degenerate = true;
    }
  }

  // c_l and the per-level lower bound, maximized over l.
  r.best_lower = d == 0 ? 1.0 : 0.0;
  for (int l = 0; l + 1 <= d; ++l) {
    double upto = 0.0, below = 0.0;
    for (int k = 0; k <= l; ++k) upto += pow_b[static_cast<size_t>(k)] * params.tbar[static_cast<size_t>(k)];
    for (int k = l + 1; k <= d; ++k)
      below += pow_b[static_cast<size_t>(k)] * params.tbar[static_cast<size_t>(k)];
    if (below <= 0.0) {
      r.degenerate = true;
      r.skipped_levels.push_back(l);
      r.c_l.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    double cl = upto / below;
    r.c_l.push_back(cl);
    double r0l = r.R[0][static_cast<size_t>(l)];
    double rl1d = r.R[static_cast<size_t>(l) + 1][static_cast<size_t>(d)];
    double lower = (std::pow(b, d - l) * cl * r0l + rl1d) / (cl + 1.0);
    r.best_lower = std::max(r.best_lower, lower);
  }
  if (d > 0 && r.best_lower <= 0.0) r.best_lower = 1.0;

  r.bounds = SpeedupBounds{std::max(1.0, r.best_lower), pow_b[static_cast<size_t>(d)]};
  return r;
}

MultiLevelParams fit_from_counters(const WorkCounters& counters, const QueryPack& pack) {
  MultiLevelParams p;
  p.d = pack.depth;
  p.b = pack.max_branching;

  // Branching is uniform when every interior node has exactly b children and
  // every leaf sits at depth d.
  p.uniform_branching = true;
  for (const PackNode& n : pack.nodes) {
    if (n.is_leaf()) {
      if (n.depth != pack.depth) p.uniform_branching = false;
    } else if (static_cast<int32_t>(n.children.size()) != pack.max_branching) {
      p.uniform_branching = false;
    }
  }

  std::vector<double> sums = counters.level_sums();
  sums.resize(static_cast<size_t>(p.d) + 1, 0.0);
  p.tbar.resize(static_cast<size_t>(p.d) + 1, 0.0);
  double n = static_cast<double>(std::max<int32_t>(pack.query_count, 1));
  for (size_t l = 0; l < p.tbar.size(); ++l) p.tbar[l] = sums[l] / n;
  return p;
}

BoundsVerdict validate_bounds(double measured_Ts, double measured_Tp,
                              const SpeedupReport& predicted, double eps) {
  BoundsVerdict v;
  if (measured_Tp <= 0.0) {
    v.measured_speedup = 1.0;
    v.pass = measured_Ts <= 0.0;
    if (!v.pass) v.diagnostic = "packed work is zero but separate work is not";
    return v;
  }
  v.measured_speedup = measured_Ts / measured_Tp;
  if (measured_Tp > measured_Ts) {
    v.pass = false;
    v.diagnostic = "Tp > Ts: packing may never add work";
    return v;
  }
  if (v.measured_speedup < 1.0 - eps) {
    v.pass = false;
    v.diagnostic = "measured speedup below 1";
    return v;
  }
  if (predicted.bounds && v.measured_speedup > predicted.bounds->upper * (1.0 + eps)) {
    v.pass = false;
    v.diagnostic = "measured speedup " + std::to_string(v.measured_speedup) +
                   " exceeds upper bound " + std::to_string(predicted.bounds->upper);
    return v;
  }
  v.pass = true;
  return v;
}

nlohmann::json speedup_report_to_json(const SpeedupReport& r) {
  nlohmann::json j;
  j["Ts"] = r.Ts;
  j["Tp"] = r.Tp;
  j["speedup"] = r.speedup;
  if (r.c) j["c"] = *r.c;
  if (r.K) j["K"] = *r.K;
  if (!r.c_l.empty()) {
    j["c_l"] = nlohmann::json::array();
    for (double v : r.c_l)
      j["c_l"].push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
  }
  if (!r.R.empty()) j["R"] = r.R;
  j["best_lower"] = r.best_lower;
  if (r.bounds) j["bounds"] = {{"lower", r.bounds->lower}, {"upper", r.bounds->upper}};
  j["degenerate"] = r.degenerate;
  if (!r.skipped_levels.empty()) j["skipped_levels"] = r.skipped_levels;
  if (r.warning_nonuniform) j["warning_nonuniform_branching"] = true;
  return j;
}

}  // namespace qp
