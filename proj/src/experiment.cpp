#include "sflow/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "json.hpp"

#include "sflow/cones.hpp"
#include "sflow/error.hpp"
#include "sflow/measure_file.hpp"
#include "sflow/scenery.hpp"
#include "sflow/splicing.hpp"
#include "sflow/statistics.hpp"

namespace sflow {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void invalid(const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); }

Subspace first_axes(int d, int k) {
  std::vector<int> axes;
  for (int i = 0; i < k; ++i) axes.push_back(i);
  return Subspace::coordinate(d, axes);
}

int levels_needed(const ExperimentConfig& c) {
  return flow_levels(c.t_start + std::floor(c.T / c.dt + 1e-9) * c.dt) + c.resolved_snapshot_depth();
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  double m = mean_of(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string parameter_line(const ExperimentConfig& c, double s, double theta, double eps_crit,
                           int m) {
  std::ostringstream o;
  o << "# d=" << c.d << ",k=" << c.k << ",s=" << num(s) << ",theta=" << num(theta)
    << ",alpha=" << num(c.alpha) << ",eps_critical=" << num(eps_crit) << ",measure=" << c.measure
    << ",depth=" << c.depth << ",growth=" << c.growth << ",T=" << num(c.T) << ",dt=" << num(c.dt)
    << ",t_start=" << num(c.t_start) << ",snapshot_depth=" << m << ",points=" << c.points
    << ",seed=" << c.seed << ",sample_seed=" << c.sample_seed << ",tolerance=" << num(c.tolerance)
    << ",dimension_tolerance=" << num(c.dimension_tolerance)
    << ",pass_fraction=" << num(c.pass_fraction) << "\n";
  return o.str();
}

nlohmann::ordered_json config_json(const ExperimentConfig& c, double s, double theta, int m) {
  nlohmann::ordered_json j;
  j["d"] = c.d;
  j["k"] = c.k;
  j["s"] = s;
  j["theta"] = theta;
  j["alpha"] = c.alpha;
  j["eps"] = c.eps;
  j["measure"] = c.measure;
  j["depth"] = c.depth;
  j["growth"] = c.growth;
  j["T"] = c.T;
  j["dt"] = c.dt;
  j["t_start"] = c.t_start;
  j["snapshot_depth"] = m;
  j["points"] = c.points;
  j["seed"] = c.seed;
  j["sample_seed"] = c.sample_seed;
  j["tolerance"] = c.tolerance;
  j["dimension_tolerance"] = c.dimension_tolerance;
  j["pass_fraction"] = c.pass_fraction;
  return j;
}

std::vector<double> coords(const Point& p) { return std::vector<double>(p.x.begin(), p.x.begin() + p.dim); }

}  // namespace

double ExperimentConfig::resolved_s() const {
  if (s) return *s;
  if (theta) return k + *theta * (d - k);
  return 1.5;
}

double ExperimentConfig::resolved_theta() const {
  if (theta) return *theta;
  return (resolved_s() - k) / static_cast<double>(d - k);
}

int ExperimentConfig::resolved_snapshot_depth() const {
  return snapshot_depth > 0 ? snapshot_depth : default_snapshot_depth(d);
}

void ExperimentConfig::validate() const {
  if (d < 2 || d > kMaxDim) invalid("d must satisfy 2 <= d <= " + std::to_string(kMaxDim) + " (got d=" + std::to_string(d) + ")");
  if (k < 1 || k > d - 1)
    invalid("k must satisfy 1 <= k <= d-1 (got k=" + std::to_string(k) + ", d=" + std::to_string(d) + ")");
  if (s && theta) invalid("give either s or theta, not both");
  double sv = resolved_s();
  if (!(sv > k && sv <= d)) invalid("s must satisfy k < s <= d (got s=" + num(sv) + ", k=" + std::to_string(k) + ", d=" + std::to_string(d) + ")");
  if (!(alpha > 0 && alpha <= 1)) invalid("alpha must satisfy 0 < alpha <= 1 (got alpha=" + num(alpha) + ")");
  if (eps.empty()) invalid("eps list is empty");
  double ec = epsilon_critical(d, k, alpha).value;
  for (double e : eps) {
    if (!(e > 0 && e < 1)) invalid("eps must lie in (0,1) (got eps=" + num(e) + ")");
    if (std::abs(e - ec) < 1e-6)
      invalid("eps=" + num(e) + " coincides with the critical threshold " + num(ec));
  }
  if (!(dt > 0)) invalid("dt must be positive");
  if (!(T > 0)) invalid("T must be positive");
  if (!(t_start > 0)) invalid("t_start must be positive so sampled points keep B(x, e^-t_start) inside the cube");
  if (points < 1) invalid("points must be at least 1");
  if (growth < 1) invalid("growth must be at least 1");
  int m = resolved_snapshot_depth();
  if (m < 1 || d * m > 24) invalid("snapshot_depth must satisfy 1 <= d*m <= 24");
  if (depth < 1 || depth > 64) invalid("depth must satisfy 1 <= depth <= 64");
  if (levels_needed(*this) > kMaxRenderDepth)
    invalid("flow window needs " + std::to_string(levels_needed(*this)) + " levels, above the render limit");
  if (measure == "spliced" && depth < levels_needed(*this))
    invalid("depth must be >= flow levels + snapshot depth = " + std::to_string(levels_needed(*this)));
  if (measure != "spliced" && measure != "lebesgue" && measure != "plane" && measure.rfind("file:", 0) != 0)
    invalid("measure must be spliced, lebesgue, plane or file:<path> (got " + measure + ")");
  if (!(tolerance >= 0) || !(dimension_tolerance >= 0)) invalid("tolerances must be nonnegative");
  if (!(pass_fraction >= 0 && pass_fraction <= 1)) invalid("pass_fraction must lie in [0,1]");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "d") d = static_cast<int>(parse_integer(key, value));
  else if (key == "k") k = static_cast<int>(parse_integer(key, value));
  else if (key == "s") s = parse_real(key, value);
  else if (key == "theta") theta = parse_real(key, value);
  else if (key == "alpha") alpha = parse_real(key, value);
  else if (key == "eps") eps = parse_real_list(key, value);
  else if (key == "depth") depth = static_cast<int>(parse_integer(key, value));
  else if (key == "T") T = parse_real(key, value);
  else if (key == "dt") dt = parse_real(key, value);
  else if (key == "t_start") t_start = parse_real(key, value);
  else if (key == "points") points = static_cast<int>(parse_integer(key, value));
  else if (key == "snapshot_depth") snapshot_depth = static_cast<int>(parse_integer(key, value));
  else if (key == "growth") growth = static_cast<int>(parse_integer(key, value));
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_integer(key, value));
  else if (key == "sample_seed") sample_seed = static_cast<std::uint64_t>(parse_integer(key, value));
  else if (key == "measure") measure = value;
  else if (key == "tolerance") tolerance = parse_real(key, value);
  else if (key == "dimension_tolerance") dimension_tolerance = parse_real(key, value);
  else if (key == "pass_fraction") pass_fraction = parse_real(key, value);
  else if (key == "output") output = value;
  else invalid("unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv, ExperimentConfig base) {
  for (const auto& [key, value] : kv) base.set(key, value);
  return base;
}

DyadicMeasure experiment_measure(const ExperimentConfig& cfg) {
  if (cfg.measure == "lebesgue") return build_lebesgue(cfg.d, 0);
  if (cfg.measure == "plane") return build_plane(cfg.d, cfg.k, first_axes(cfg.d, cfg.k), 0);
  if (cfg.measure.rfind("file:", 0) == 0) {
    DyadicMeasure mu = restore(cfg.measure.substr(5));
    if (mu.dim() != cfg.d) invalid("measure file dimension differs from d");
    return mu;
  }
  SpliceSchedule sch = schedule_for_theta(cfg.resolved_theta(), cfg.depth, cfg.growth);
  return build_spliced(cfg.d, cfg.k, first_axes(cfg.d, cfg.k), sch, cfg.depth, cfg.seed);
}

std::vector<Point> sample_interior_points(const DyadicMeasure& mu, int n, double margin, int depth,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> out;
  long long attempts = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > 1000LL * n)
      throw Error(ErrorKind::OutOfDomain, "too few sampled points keep B(x, margin) inside the cube");
    Point x = sample_point_with(mu, depth, rng);
    bool inside = true;
    for (int i = 0; i < x.dim; ++i)
      if (x.x[i] - margin < -1.0 || x.x[i] + margin > 1.0) inside = false;
    if (inside) out.push_back(x);
  }
  return out;
}

SharpnessReport verify_sharpness(const ExperimentConfig& cfg) {
  cfg.validate();
  SharpnessReport r;
  r.cfg = cfg;
  r.s = cfg.resolved_s();
  r.theta = cfg.resolved_theta();
  EpsilonResult ec = epsilon_critical(cfg.d, cfg.k, cfg.alpha);
  r.eps_critical = ec.value;
  r.eps_critical_error = ec.error;
  r.snapshot_depth = cfg.resolved_snapshot_depth();
  r.flow_samples = static_cast<int>(flow_times(cfg.t_start, cfg.T, cfg.dt).size());
  DyadicMeasure mu = experiment_measure(cfg);
  r.points = sample_interior_points(mu, cfg.points, flow_scale(cfg.t_start), cfg.depth, cfg.sample_seed);
  ConicalOptions opt;
  opt.k = cfg.k;
  opt.alpha = cfg.alpha;
  opt.eps = cfg.eps;
  opt.dt = cfg.dt;
  opt.m = r.snapshot_depth;
  opt.t_start = cfg.t_start;
  for (const Point& x : r.points) r.statistic.push_back(conical_statistic(mu, x, cfg.T, opt).fraction);
  r.pass = true;
  for (std::size_t j = 0; j < cfg.eps.size(); ++j) {
    EpsRow row;
    row.eps = cfg.eps[j];
    row.below_threshold = cfg.eps[j] < r.eps_critical;
    row.target = row.below_threshold ? r.theta : 0.0;
    std::vector<double> v;
    for (const auto& st : r.statistic) v.push_back(st[j]);
    row.mean = mean_of(v);
    row.sd = sd_of(v);
    row.min = *std::min_element(v.begin(), v.end());
    row.max = *std::max_element(v.begin(), v.end());
    row.pass = row.below_threshold ? std::abs(row.mean - row.target) <= cfg.tolerance
                                   : row.mean <= cfg.tolerance;
    r.pass = r.pass && row.pass;
    r.rows.push_back(row);
  }
  return r;
}

std::string SharpnessReport::to_csv() const {
  std::ostringstream o;
  o << "# verify-sharpness\n" << parameter_line(cfg, s, theta, eps_critical, snapshot_depth);
  o << "# eps_critical_error=" << num(eps_critical_error) << ",flow_samples=" << flow_samples
    << ",result=" << (pass ? "pass" : "fail") << "\n";
  o << "eps,side,target,mean,sd,min,max,tolerance,pass\n";
  for (const auto& r : rows)
    o << num(r.eps) << "," << (r.below_threshold ? "below" : "above") << "," << num(r.target) << ","
      << num(r.mean) << "," << num(r.sd) << "," << num(r.min) << "," << num(r.max) << ","
      << num(cfg.tolerance) << "," << (r.pass ? "pass" : "fail") << "\n";
  o << "\npoint_id";
  for (int i = 0; i < cfg.d; ++i) o << ",x" << i + 1;
  o << ",eps,statistic\n";
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::size_t j = 0; j < cfg.eps.size(); ++j) {
      o << p;
      for (int i = 0; i < cfg.d; ++i) o << "," << num(points[p].x[i]);
      o << "," << num(cfg.eps[j]) << "," << num(statistic[p][j]) << "\n";
    }
  return o.str();
}

std::string SharpnessReport::to_json() const {
  nlohmann::ordered_json j;
  j["report"] = "verify-sharpness";
  j["config"] = config_json(cfg, s, theta, snapshot_depth);
  j["eps_critical"] = eps_critical;
  j["eps_critical_error"] = eps_critical_error;
  j["flow_samples"] = flow_samples;
  j["result"] = pass ? "pass" : "fail";
  for (const auto& r : rows)
    j["rows"].push_back({{"eps", r.eps}, {"side", r.below_threshold ? "below" : "above"},
                         {"target", r.target}, {"mean", r.mean}, {"sd", r.sd}, {"min", r.min},
                         {"max", r.max}, {"pass", r.pass}});
  for (std::size_t p = 0; p < points.size(); ++p)
    j["points"].push_back({{"x", coords(points[p])}, {"statistic", statistic[p]}});
  return j.dump(2) + "\n";
}

std::string to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::Pass: return "pass";
    case BoundStatus::Fail: return "fail";
    case BoundStatus::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

LowerBoundReport verify_lower_bound(const ExperimentConfig& cfg) {
  cfg.validate();
  LowerBoundReport r;
  r.cfg = cfg;
  r.s = cfg.resolved_s();
  r.theta = cfg.resolved_theta();
  r.eps_critical = epsilon_critical(cfg.d, cfg.k, cfg.alpha).value;
  bool have = false;
  for (double e : cfg.eps)
    if (e < r.eps_critical && (!have || e < r.eps_used)) {
      r.eps_used = e;
      have = true;
    }
  if (!have) invalid("lower bound needs an eps below the critical threshold " + num(r.eps_critical));
  r.bound = r.theta - cfg.tolerance;
  r.snapshot_depth = cfg.resolved_snapshot_depth();
  DyadicMeasure mu = experiment_measure(cfg);
  r.r_max = flow_scale(cfg.t_start);
  r.r_min = std::ldexp(1.0, -(levels_needed(cfg) - r.snapshot_depth));
  DimensionAggregate agg =
      local_dimension_aggregate(mu, cfg.points, r.r_min, r.r_max, cfg.depth, cfg.sample_seed);
  r.points = agg.points;
  r.dimension_mean = agg.mean;
  r.dimension_p5 = agg.percentile5;
  if (agg.mean < r.s - cfg.dimension_tolerance) {
    r.status = BoundStatus::NotApplicable;
    return r;
  }
  ConicalOptions opt;
  opt.k = cfg.k;
  opt.alpha = cfg.alpha;
  opt.eps = {r.eps_used};
  opt.dt = cfg.dt;
  opt.m = r.snapshot_depth;
  opt.t_start = cfg.t_start;
  int failing = 0;
  for (const Point& x : r.points) {
    double v = conical_statistic(mu, x, cfg.T, opt).fraction[0];
    r.statistic.push_back(v);
    if (v < r.bound) ++failing;
  }
  r.failing_fraction = failing / static_cast<double>(r.points.size());
  r.status = 1.0 - r.failing_fraction >= cfg.pass_fraction ? BoundStatus::Pass : BoundStatus::Fail;
  return r;
}

std::string LowerBoundReport::to_csv() const {
  std::ostringstream o;
  o << "# verify-lower-bound\n" << parameter_line(cfg, s, theta, eps_critical, snapshot_depth);
  o << "# eps_used=" << num(eps_used) << ",bound=" << num(bound) << ",dimension_mean=" << num(dimension_mean)
    << ",dimension_p5=" << num(dimension_p5) << ",r_min=" << num(r_min) << ",r_max=" << num(r_max)
    << ",failing_fraction=" << num(failing_fraction) << ",result=" << to_string(status) << "\n";
  o << "point_id";
  for (int i = 0; i < cfg.d; ++i) o << ",x" << i + 1;
  o << ",statistic,holds\n";
  for (std::size_t p = 0; p < statistic.size(); ++p) {
    o << p;
    for (int i = 0; i < cfg.d; ++i) o << "," << num(points[p].x[i]);
    o << "," << num(statistic[p]) << "," << (statistic[p] >= bound ? "yes" : "no") << "\n";
  }
  return o.str();
}

std::string LowerBoundReport::to_json() const {
  nlohmann::ordered_json j;
  j["report"] = "verify-lower-bound";
  j["config"] = config_json(cfg, s, theta, snapshot_depth);
  j["eps_critical"] = eps_critical;
  j["eps_used"] = eps_used;
  j["bound"] = bound;
  j["dimension_mean"] = dimension_mean;
  j["dimension_p5"] = dimension_p5;
  j["r_min"] = r_min;
  j["r_max"] = r_max;
  j["failing_fraction"] = failing_fraction;
  j["result"] = to_string(status);
  j["points"] = nlohmann::ordered_json::array();
  for (std::size_t p = 0; p < statistic.size(); ++p)
    j["points"].push_back({{"x", coords(points[p])}, {"statistic", statistic[p]}});
  return j.dump(2) + "\n";
}

}  // namespace sflow
