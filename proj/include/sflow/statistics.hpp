#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sflow/cones.hpp"
#include "sflow/dyadic_measure.hpp"
#include "sflow/snapshot.hpp"

namespace sflow {

struct Provenance {
  std::string source;  // "flow" or "cp"
  Point x;
  double t_start = 0;
  double T = 0;
  double dt = 0;
  int N = 0;
};

// Weighted finite collection of snapshots.
struct EmpiricalDistribution {
  std::vector<Snapshot> snapshots;
  std::vector<double> weights;
  Provenance provenance;

  std::size_t size() const { return snapshots.size(); }
  void check() const;
};

// Sample times t_start + i dt for i dt <= T.
std::vector<double> flow_times(double t_start, double T, double dt);

EmpiricalDistribution empirical_td(const DyadicMeasure& mu, const Point& x, double T, double dt,
                                   int m, double t_start = 0.0);
EmpiricalDistribution empirical_cp(const DyadicMeasure& mu, const Point& x, int N, int m);

// Projection profile of a snapshot along a fixed family of directions, used by
// the sliced transport distance.
struct SlicedProfile {
  int d = 0;
  std::vector<std::vector<double>> cdf;  // per direction, cumulative mass per bin
  double bin_width = 0;
};
SlicedProfile sliced_profile(const Snapshot& s);
double sliced_distance(const SlicedProfile& a, const SlicedProfile& b);

// Max over directions {e_i, (e_i +- e_j)/sqrt 2} of the 1-d Wasserstein distance
// between projected snapshot masses.
double distribution_distance(const Snapshot& a, const Snapshot& b);
// 1-d transport between the laws of each snapshot's distance to the Lebesgue snapshot.
double distribution_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

struct ConicalResult {
  std::vector<double> eps;
  std::vector<double> fraction;  // share of sample times with min cone mass > eps
  std::vector<double> times;
  std::vector<double> min_per_time;
  double min_over_t = 0;
  double mean_over_t = 0;
};

struct ConicalOptions {
  int k = 1;
  double alpha = 0.5;
  std::vector<double> eps = {0.1};
  double dt = 0.0;  // 0: log 2 / 4
  int m = 0;        // 0: 8 for d=2, 5 for d=3, 3 otherwise
  double t_start = 0.0;
  SearchParams search;
};

int default_snapshot_depth(int d);

ConicalResult conical_statistic(const DyadicMeasure& mu, const Point& x, double T,
                                const ConicalOptions& opt);
ConicalResult conical_statistic(const EmpiricalDistribution& e, const ConicalOptions& opt);

struct DimensionEstimate {
  double slope = 0;  // clamped to [0, d]
  double raw_slope = 0;
  double finest_half_slope = 0;
  double residual = 0;
  double r_min = 0;
  double r_max = 0;
  std::vector<double> radii;
  std::vector<double> masses;
};

DimensionEstimate local_dimension(const DyadicMeasure& mu, const Point& x, double r_min,
                                  double r_max, BallMassOptions ball = {});

struct DimensionAggregate {
  std::vector<Point> points;
  std::vector<DimensionEstimate> estimates;
  double mean = 0;
  double percentile5 = 0;
  int rejected = 0;
};

// Samples x ~ mu (resampling points whose r_max-ball leaves the cube).
DimensionAggregate local_dimension_aggregate(const DyadicMeasure& mu, int points, double r_min,
                                             double r_max, int sample_depth, std::uint64_t seed,
                                             BallMassOptions ball = {});

// Slope of log N_j against j log 2 over depths 2..m, N_j = cells with mass > floor
// inside the central cube [-1/2, 1/2]^d (smaller for d > 4).
double box_counting_dimension(const Snapshot& s, double mass_floor = -1.0, int min_depth = 2);

using SnapshotDimension = std::function<double(const Snapshot&)>;
double dimension_of_distribution(const EmpiricalDistribution& e, const SnapshotDimension& dim = {});

double intensity_measure(const EmpiricalDistribution& e, const std::vector<int>& cell);

struct Clustering {
  std::vector<int> label;  // 0 or 1 per entry
  int medoid[2] = {0, 0};
  double weight[2] = {0, 0};
};
Clustering two_medoids(const EmpiricalDistribution& e);

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y,
                           double* residual = nullptr);
double percentile(std::vector<double> v, double p);

}  // namespace sflow
