#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sflow/cascade_rule.hpp"
#include "sflow/cones.hpp"
#include "sflow/config.hpp"
#include "sflow/dyadic_measure.hpp"
#include "sflow/error.hpp"
#include "sflow/experiment.hpp"
#include "sflow/measure_file.hpp"
#include "sflow/rectifiability.hpp"
#include "sflow/scenery.hpp"
#include "sflow/splicing.hpp"
#include "sflow/statistics.hpp"

using namespace sflow;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitFail = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  // Experiment overrides, applied on top of the config file as key = value pairs.
  std::vector<std::pair<std::string, std::string>> overrides;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot write " + g.out);
  f << text;
}

ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig cfg;
  if (!g.config.empty()) cfg = ExperimentConfig::from_key_values(read_key_values(g.config));
  for (const auto& [k, v] : g.overrides) {
    if (k == "measure" && v != "spliced" && v != "lebesgue" && v != "plane" && v.rfind("file:", 0) != 0)
      cfg.set(k, "file:" + v);
    else
      cfg.set(k, v);
  }
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

Point parse_point(const std::string& text, int d) {
  std::vector<double> v = parse_real_list("x", text);
  if (static_cast<int>(v.size()) != d) throw Error(ErrorKind::DimensionMismatch, "x must have d coordinates");
  return Point::from_vector(v);
}

std::vector<Point> chosen_points(const ExperimentConfig& cfg, const DyadicMeasure& mu,
                                 const std::string& x_text, double margin) {
  if (!x_text.empty()) return {parse_point(x_text, mu.dim())};
  return sample_interior_points(mu, cfg.points, margin, cfg.depth, cfg.sample_seed);
}

std::vector<double> coords(const Point& p) { return std::vector<double>(p.x.begin(), p.x.begin() + p.dim); }

std::string point_csv(const Point& p) {
  std::string s;
  for (int i = 0; i < p.dim; ++i) s += "," + num(p.x[i]);
  return s;
}

std::string coord_header(int d) {
  std::string s;
  for (int i = 0; i < d; ++i) s += ",x" + std::to_string(i + 1);
  return s;
}

int cmd_gen(const Globals& g, const std::string& kind, int d, int k, int depth,
            const std::string& subset, double param) {
  std::uint64_t seed = g.seed.value_or(1);
  DyadicMeasure mu = [&] {
    if (kind == "lebesgue") return build_lebesgue(d, depth);
    std::vector<int> axes;
    for (int i = 0; i < k; ++i) axes.push_back(i);
    if (kind == "plane") return build_plane(d, k, Subspace::coordinate(d, axes), depth);
    if (kind == "subset") {
      SubsetRule r;
      for (double c : parse_real_list("subset", subset)) r.children.push_back(static_cast<int>(c));
      return build_cascade(r, d, depth, seed);
    }
    if (kind == "dirichlet") return build_cascade(RandomWeightsRule{WeightLaw::Dirichlet, param}, d, depth, seed);
    if (kind == "lognormal") return build_cascade(RandomWeightsRule{WeightLaw::LogNormal, param}, d, depth, seed);
    throw Error(ErrorKind::InvalidArgument, "unknown kind '" + kind + "'");
  }();
  emit(g, persist_string(mu));
  return 0;
}

int cmd_splice(const Globals& g) {
  ExperimentConfig cfg = resolve_config(g);
  cfg.measure = "spliced";
  cfg.validate();
  emit(g, persist_string(experiment_measure(cfg)));
  return 0;
}

int cmd_flow(const Globals& g, const std::string& x_text, std::optional<double> t) {
  ExperimentConfig cfg = resolve_config(g);
  DyadicMeasure mu = experiment_measure(cfg);
  Point x = x_text.empty() ? Point(mu.dim()) : parse_point(x_text, mu.dim());
  std::vector<double> times = t ? std::vector<double>{*t} : flow_times(cfg.t_start, cfg.T, cfg.dt);
  int m = cfg.resolved_snapshot_depth();
  if (g.format == "json") {
    json doc = json::array();
    for (double ti : times) {
      Snapshot s = scenery_at(mu, x, ti, m);
      json cells = json::array();
      for (std::size_t i = 0; i < s.cells(); ++i)
        if (s.mass(i) > 0) cells.push_back({i, s.mass(i)});
      doc.push_back({{"t", ti}, {"x", coords(x)}, {"m", m}, {"cells", cells}});
    }
    emit(g, doc.dump(1) + "\n");
    return 0;
  }
  std::string out;
  for (double ti : times) out += scenery_at(mu, x, ti, m).to_csv();
  emit(g, out);
  return 0;
}

int cmd_conical(const Globals& g, const std::string& x_text) {
  ExperimentConfig cfg = resolve_config(g);
  DyadicMeasure mu = experiment_measure(cfg);
  ConicalOptions opt;
  opt.k = cfg.k;
  opt.alpha = cfg.alpha;
  opt.eps = cfg.eps;
  opt.dt = cfg.dt;
  opt.m = cfg.resolved_snapshot_depth();
  opt.t_start = cfg.t_start;
  auto pts = chosen_points(cfg, mu, x_text, flow_scale(cfg.t_start));
  std::ostringstream csv;
  json doc = json::array();
  csv << "point_id" << coord_header(mu.dim()) << ",T,eps,alpha,k,statistic,min_over_t,mean_over_t\n";
  for (std::size_t p = 0; p < pts.size(); ++p) {
    ConicalResult r = conical_statistic(mu, pts[p], cfg.T, opt);
    for (std::size_t j = 0; j < r.eps.size(); ++j) {
      csv << p << point_csv(pts[p]) << "," << num(cfg.T) << "," << num(r.eps[j]) << "," << num(cfg.alpha)
          << "," << cfg.k << "," << num(r.fraction[j]) << "," << num(r.min_over_t) << ","
          << num(r.mean_over_t) << "\n";
      doc.push_back({{"point_id", p}, {"x", coords(pts[p])}, {"T", cfg.T}, {"eps", r.eps[j]},
                     {"alpha", cfg.alpha}, {"k", cfg.k}, {"statistic", r.fraction[j]},
                     {"min_over_t", r.min_over_t}, {"mean_over_t", r.mean_over_t}});
    }
  }
  emit(g, g.format == "json" ? doc.dump(2) + "\n" : csv.str());
  return 0;
}

int cmd_epsilon(const Globals& g, int d, int k, const std::string& alphas, const std::string& method,
                std::uint64_t samples) {
  EpsMethod em = method == "monte-carlo" ? EpsMethod::MonteCarlo : EpsMethod::Quadrature;
  if (method != "monte-carlo" && method != "quadrature")
    throw Error(ErrorKind::InvalidArgument, "method must be quadrature or monte-carlo");
  std::ostringstream csv;
  json doc = json::array();
  csv << "d,k,alpha,value,method,error\n";
  for (double a : parse_real_list("alpha", alphas)) {
    EpsilonResult r = epsilon_critical(d, k, a, em, samples, g.seed.value_or(1));
    csv << d << "," << k << "," << num(a) << "," << num(r.value) << "," << to_string(r.method) << ","
        << num(r.error) << "\n";
    doc.push_back({{"d", d}, {"k", k}, {"alpha", a}, {"value", r.value}, {"method", to_string(r.method)},
                   {"error", r.error}});
  }
  emit(g, g.format == "json" ? doc.dump(2) + "\n" : csv.str());
  return 0;
}

int cmd_dim(const Globals& g, std::optional<double> rmin, std::optional<double> rmax) {
  ExperimentConfig cfg = resolve_config(g);
  DyadicMeasure mu = experiment_measure(cfg);
  double hi = rmax.value_or(flow_scale(cfg.t_start));
  double lo = rmin.value_or(std::ldexp(hi, -24));
  DimensionAggregate a = local_dimension_aggregate(mu, cfg.points, lo, hi, cfg.depth, cfg.sample_seed);
  std::ostringstream csv;
  csv << "# r_min=" << num(lo) << ",r_max=" << num(hi) << ",points=" << cfg.points
      << ",sample_seed=" << cfg.sample_seed << ",rejected=" << a.rejected << "\n";
  csv << "point_id" << coord_header(mu.dim()) << ",slope,raw_slope,finest_half_slope,residual\n";
  json pts = json::array();
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const auto& e = a.estimates[i];
    csv << i << point_csv(a.points[i]) << "," << num(e.slope) << "," << num(e.raw_slope) << ","
        << num(e.finest_half_slope) << "," << num(e.residual) << "\n";
    pts.push_back({{"x", coords(a.points[i])}, {"slope", e.slope}, {"raw_slope", e.raw_slope},
                   {"finest_half_slope", e.finest_half_slope}, {"residual", e.residual}});
  }
  csv << "# mean=" << num(a.mean) << ",percentile5=" << num(a.percentile5) << "\n";
  json doc = {{"r_min", lo}, {"r_max", hi}, {"points", pts}, {"mean", a.mean}, {"percentile5", a.percentile5}};
  emit(g, g.format == "json" ? doc.dump(2) + "\n" : csv.str());
  return 0;
}

int cmd_rectify(const Globals& g, const std::string& input, int k, double alpha, std::optional<double> r,
                std::optional<double> rmin) {
  PointCloud E = read_point_cloud_csv(input);
  if (rmin) E.r_min = *rmin;
  double floor = E.scale_floor();
  double radius = r.value_or(floor);
  std::ostringstream csv;
  csv << "# k=" << k << ",alpha=" << num(alpha) << ",r=" << num(radius) << ",r_min=" << num(floor) << "\n";
  csv << "point_id" << coord_header(E.d) << ",vacancy";
  for (int i = 0; i < E.d; ++i) csv << ",v" << i + 1;
  csv << "\n";
  json pts = json::array();
  int hits = 0;
  for (std::size_t i = 0; i < E.points.size(); ++i) {
    auto V = cone_vacancy(E, i, k, alpha, radius);
    if (V) ++hits;
    csv << i << point_csv(E.points[i]) << "," << (V ? "yes" : "no");
    std::vector<double> dir;
    for (int c = 0; c < E.d; ++c) {
      dir.push_back(V ? V->frame()(c, 0) : 0.0);
      csv << "," << (V ? num(dir.back()) : "");
    }
    csv << "\n";
    json row = {{"x", coords(E.points[i])}, {"vacancy", V.has_value()}};
    if (V) row["v"] = dir;
    pts.push_back(row);
  }
  double fraction = hits / static_cast<double>(E.points.size());
  csv << "# fraction=" << num(fraction) << "\n";
  json doc = {{"k", k}, {"alpha", alpha}, {"r", radius}, {"r_min", floor}, {"points", pts}, {"fraction", fraction}};
  emit(g, g.format == "json" ? doc.dump(2) + "\n" : csv.str());
  return 0;
}

int cmd_verify_sharpness(const Globals& g) {
  SharpnessReport r = verify_sharpness(resolve_config(g));
  emit(g, g.format == "json" ? r.to_json() : r.to_csv());
  return r.pass ? 0 : kExitFail;
}

int cmd_verify_lower_bound(const Globals& g) {
  LowerBoundReport r = verify_lower_bound(resolve_config(g));
  emit(g, g.format == "json" ? r.to_json() : r.to_csv());
  return r.status == BoundStatus::Fail ? kExitFail : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenery-flow laboratory: cascades, sceneries, conical densities"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Key-value experiment file");
  app.add_option("--seed", g.seed, "Seed for measure construction");
  app.add_option("--out", g.out, "Output file (default: stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  // Experiment keys shared by the measure-driven verbs.
  std::vector<std::pair<std::string, std::string>> keys = {
      {"d", "Ambient dimension"}, {"k", "Codimension index of the cones"}, {"s", "Target dimension"},
      {"theta", "L-frequency"}, {"alpha", "Cone opening"}, {"eps", "Comma-separated eps values"},
      {"depth", "Measure depth"}, {"growth", "Splice growth"}, {"T", "Flow horizon (numbers or <x>*ln2)"},
      {"dt", "Flow step"}, {"t-start", "First flow time"}, {"points", "Sampled points"},
      {"m", "Snapshot depth"}, {"measure", "spliced, lebesgue, plane or a measure file"},
      {"sample-seed", "Seed for sampled points"}, {"tolerance", "Statistic tolerance"}};
  std::vector<std::string> values(keys.size());
  auto add_keys = [&](CLI::App* sub) {
    for (std::size_t i = 0; i < keys.size(); ++i) sub->add_option("--" + keys[i].first, values[i], keys[i].second);
  };
  auto collect = [&] {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (values[i].empty()) continue;
      std::string key = keys[i].first;
      if (key == "t-start") key = "t_start";
      else if (key == "m") key = "snapshot_depth";
      else if (key == "sample-seed") key = "sample_seed";
      g.overrides.emplace_back(key, values[i]);
    }
  };

  std::string kind = "lebesgue", subset = "0,3";
  int gd = 2, gk = 1, gdepth = 6;
  double gparam = 1.0;
  auto* gen = app.add_subcommand("gen", "Build a cascade measure and write a measure file");
  gen->add_option("--kind", kind, "lebesgue, plane, subset, dirichlet or lognormal");
  gen->add_option("--d", gd, "Ambient dimension");
  gen->add_option("--k", gk, "Plane dimension");
  gen->add_option("--depth", gdepth, "Materialized depth");
  gen->add_option("--subset", subset, "Children kept by the subset rule");
  gen->add_option("--param", gparam, "Weight-law parameter");

  auto* splice = app.add_subcommand("splice", "Build a spliced measure and write a measure file");
  add_keys(splice);

  std::string x_text;
  std::optional<double> flow_t;
  auto* flow = app.add_subcommand("flow", "Scenery snapshots along the flow");
  add_keys(flow);
  flow->add_option("--x", x_text, "Base point, comma separated");
  flow->add_option("--t", flow_t, "Single flow time");

  auto* conical = app.add_subcommand("conical", "Conical statistic per sampled point");
  add_keys(conical);
  conical->add_option("--x", x_text, "Base point instead of sampling");

  int ed = 2, ek = 1;
  std::string alphas = "0.5", method = "quadrature";
  std::uint64_t samples = 1000000;
  auto* eps = app.add_subcommand("epsilon", "Critical threshold table");
  eps->add_option("--d", ed, "Ambient dimension");
  eps->add_option("--k", ek, "Cone index");
  eps->add_option("--alpha", alphas, "Comma-separated openings");
  eps->add_option("--method", method, "quadrature or monte-carlo");
  eps->add_option("--samples", samples, "Monte Carlo samples");

  std::optional<double> rmin, rmax;
  auto* dim = app.add_subcommand("dim", "Local dimension estimates");
  add_keys(dim);
  dim->add_option("--rmin", rmin, "Smallest radius");
  dim->add_option("--rmax", rmax, "Largest radius");

  std::string input;
  int rk = 1;
  double ralpha = 0.5;
  std::optional<double> rr, rrmin;
  auto* rect = app.add_subcommand("rectify", "Cone-vacancy test on a point cloud");
  rect->add_option("--input", input, "CSV point cloud, one point per row")->required();
  rect->add_option("--k", rk, "Cone index");
  rect->add_option("--alpha", ralpha, "Cone opening");
  rect->add_option("--r", rr, "Test radius (default: r_min)");
  rect->add_option("--rmin", rrmin, "Scale floor (default: 3x mean nearest-neighbor distance)");

  auto* vs = app.add_subcommand("verify-sharpness", "Sharpness experiment report");
  add_keys(vs);
  auto* vl = app.add_subcommand("verify-lower-bound", "Lower-bound experiment report");
  add_keys(vl);

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    collect();
    if (gen->parsed()) return cmd_gen(g, kind, gd, gk, gdepth, subset, gparam);
    if (splice->parsed()) return cmd_splice(g);
    if (flow->parsed()) return cmd_flow(g, x_text, flow_t);
    if (conical->parsed()) return cmd_conical(g, x_text);
    if (eps->parsed()) return cmd_epsilon(g, ed, ek, alphas, method, samples);
    if (dim->parsed()) return cmd_dim(g, rmin, rmax);
    if (rect->parsed()) return cmd_rectify(g, input, rk, ralpha, rr, rrmin);
    if (vs->parsed()) return cmd_verify_sharpness(g);
    if (vl->parsed()) return cmd_verify_lower_bound(g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
