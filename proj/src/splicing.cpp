#include "sflow/splicing.hpp"

#include <cmath>

#include "sflow/error.hpp"

namespace sflow {

SpliceSchedule schedule_for_theta(double theta, int levels, int growth) {
  if (!(theta >= 0 && theta <= 1)) throw Error(ErrorKind::InvalidArgument, "theta must lie in [0,1]");
  if (growth < 1) throw Error(ErrorKind::InvalidArgument, "growth must be >= 1");
  if (levels < 0) throw Error(ErrorKind::InvalidArgument, "levels must be >= 0");
  SpliceSchedule s;
  s.theta = theta;
  s.growth = growth;
  s.levels = levels;
  int placed = 0;
  for (long long j = 1; placed < levels; ++j) {
    long long len = static_cast<long long>(growth) * j;
    long long l_len = std::lround(theta * static_cast<double>(len));
    long long parts[2] = {l_len, len - l_len};
    Regime kinds[2] = {Regime::L, Regime::H};
    for (int p = 0; p < 2 && placed < levels; ++p) {
      if (parts[p] == 0) continue;
      int take = static_cast<int>(std::min<long long>(parts[p], levels - placed));
      if (!s.blocks.empty() && s.blocks.back().regime == kinds[p]) s.blocks.back().length += take;
      else s.blocks.push_back({kinds[p], take});
      placed += take;
    }
  }
  return s;
}

Regime SpliceSchedule::regime_at(int level) const {
  if (level < 0 || level >= levels)
    throw Error(ErrorKind::ScheduleTooShort, "level " + std::to_string(level) + " beyond schedule");
  return splice_regime(theta, growth, level);
}

double SpliceSchedule::running_frequency(int n) const {
  if (n <= 0 || n > levels) throw Error(ErrorKind::InvalidArgument, "n must lie in 1..levels");
  int count = 0, pos = 0;
  for (const auto& b : blocks) {
    int take = std::min(b.length, n - pos);
    if (take <= 0) break;
    if (b.regime == Regime::L) count += take;
    pos += take;
  }
  return static_cast<double>(count) / n;
}

double theta_for_dimension(int d, int k, double s) {
  if (k < 1 || k >= d) throw Error(ErrorKind::InvalidArgument, "need 1 <= k < d");
  if (!(s >= k && s <= d)) throw Error(ErrorKind::InvalidArgument, "need k <= s <= d");
  return (s - k) / (d - k);
}

DyadicMeasure build_spliced(int d, int k, const Subspace& W, const SpliceSchedule& schedule,
                            int depth, std::uint64_t seed) {
  if (W.dim() != k) throw Error(ErrorKind::InvalidSubspace, "W must have dimension k");
  if (depth > schedule.levels)
    throw Error(ErrorKind::ScheduleTooShort, "schedule has " + std::to_string(schedule.levels) +
                                                 " levels, depth " + std::to_string(depth) +
                                                 " requested");
  return DyadicMeasure::generated(d, SplicedRule{schedule.theta, schedule.growth, W}, seed, depth,
                                  "spliced");
}

}  // namespace sflow
