#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sflow/config.hpp"
#include "sflow/dyadic_measure.hpp"
#include "sflow/geometry.hpp"

namespace sflow {

struct ExperimentConfig {
  int d = 2;
  int k = 1;
  std::optional<double> s;      // target dimension; default 1.5 when neither s nor theta is set
  std::optional<double> theta;  // L-frequency (s - k) / (d - k)
  double alpha = 0.5;
  std::vector<double> eps = {0.1, 0.5};
  int depth = 48;
  double T = 24 * 0.69314718055994530942;
  double dt = 0.25 * 0.69314718055994530942;
  double t_start = 0.69314718055994530942;
  int points = 50;
  int snapshot_depth = 0;  // 0: default for d
  int growth = 26;
  std::uint64_t seed = 7;         // measure construction
  std::uint64_t sample_seed = 11; // sampled points
  std::string measure = "spliced";  // spliced | lebesgue | plane | file:<path>
  double tolerance = 0.07;
  double dimension_tolerance = 0.05;
  double pass_fraction = 0.9;
  std::string output;

  double resolved_s() const;
  double resolved_theta() const;
  int resolved_snapshot_depth() const;
  // Throws invalid-config naming the violated bound.
  void validate() const;
  // Applies one key = value pair; unknown keys are rejected.
  void set(const std::string& key, const std::string& value);
  static ExperimentConfig from_key_values(const KeyValues& kv, ExperimentConfig base);
  static ExperimentConfig from_key_values(const KeyValues& kv) { return from_key_values(kv, ExperimentConfig()); }
};

struct EpsRow {
  double eps = 0;
  bool below_threshold = true;
  double target = 0;
  double mean = 0;
  double sd = 0;
  double min = 0;
  double max = 0;
  bool pass = false;
};

struct SharpnessReport {
  ExperimentConfig cfg;
  double s = 0, theta = 0;
  double eps_critical = 0, eps_critical_error = 0;
  int snapshot_depth = 0;
  int flow_samples = 0;
  std::vector<Point> points;
  std::vector<std::vector<double>> statistic;  // [point][eps]
  std::vector<EpsRow> rows;
  bool pass = false;

  std::string to_csv() const;
  std::string to_json() const;
};

enum class BoundStatus { Pass, Fail, NotApplicable };
std::string to_string(BoundStatus s);

struct LowerBoundReport {
  ExperimentConfig cfg;
  double s = 0, theta = 0;
  double eps_critical = 0;
  double eps_used = 0;
  double bound = 0;  // theta - tolerance
  int snapshot_depth = 0;
  double dimension_mean = 0;
  double dimension_p5 = 0;
  double r_min = 0, r_max = 0;
  std::vector<Point> points;
  std::vector<double> statistic;
  double failing_fraction = 0;
  BoundStatus status = BoundStatus::Fail;

  std::string to_csv() const;
  std::string to_json() const;
};

// The measure named by cfg.measure (spliced measures use cfg.s / cfg.theta, growth, depth and seed).
DyadicMeasure experiment_measure(const ExperimentConfig& cfg);
// x ~ mu conditioned on B(x, margin) lying inside the cube.
std::vector<Point> sample_interior_points(const DyadicMeasure& mu, int n, double margin, int depth,
                                          std::uint64_t seed);

SharpnessReport verify_sharpness(const ExperimentConfig& cfg);
LowerBoundReport verify_lower_bound(const ExperimentConfig& cfg);

}  // namespace sflow
