#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sflow/snapshot.hpp"
#include "sflow/subspace.hpp"

namespace sflow {

struct SearchParams {
  int net_size = 0;  // 0: 256 angles (d=2), 1024 directions (d=3), 512 random frames otherwise
  int refine_steps = 20;
  std::uint64_t seed = 1;
  std::optional<Subspace> warm_start;
};

struct ConeMin {
  Subspace V;
  double value = 0;
  int probes = 0;
};

// Mass fraction of nu inside X(0,1,V,alpha). Exact cell fractions in d = 2,
// 64 subcell samples per partially covered cell otherwise.
double cone_mass(const Snapshot& nu, const Subspace& V, double alpha);

// Reusable evaluator for one snapshot and opening; cheap per-direction queries in d = 2.
class ConeEvaluator {
 public:
  ConeEvaluator(const Snapshot& nu, double alpha);
  ~ConeEvaluator();
  ConeEvaluator(const ConeEvaluator&) = delete;
  ConeEvaluator& operator=(const ConeEvaluator&) = delete;

  double mass(const Subspace& V) const;
  // d = 2 only: V = line at angle theta.
  double mass_at_angle(double theta) const;
  int dim() const { return nu_->dim(); }
  double alpha() const { return alpha_; }

 private:
  struct Planar;
  const Snapshot* nu_;
  double alpha_;
  std::unique_ptr<Planar> planar_;
};

ConeMin min_cone_mass(const Snapshot& nu, int k, double alpha, const SearchParams& search = {});
ConeMin min_cone_mass(const ConeEvaluator& eval, int k, const SearchParams& search = {});

enum class EpsMethod { Quadrature, MonteCarlo };

struct EpsilonResult {
  double value = 0;
  double error = 0;  // quadrature: panel-halving difference; Monte Carlo: standard error
  EpsMethod method = EpsMethod::Quadrature;
  std::uint64_t samples = 0;
};

// Volume fraction of X(0,1,V,alpha) in B(0,1) for V of dimension d - k.
EpsilonResult epsilon_critical(int d, int k, double alpha, EpsMethod method = EpsMethod::Quadrature,
                               std::uint64_t samples = 1000000, std::uint64_t seed = 1);
// Monte Carlo with an explicit V (used to probe rotation invariance).
EpsilonResult epsilon_monte_carlo(const Subspace& V, double alpha, std::uint64_t samples,
                                  std::uint64_t seed);

std::string to_string(EpsMethod m);

// Fibonacci directions on the upper unit hemisphere of R^3.
std::vector<Eigen::Vector3d> hemisphere_net(int n);

}  // namespace sflow
