#pragma once

#include <cstdint>
#include <vector>

#include "rescon/geometry.hpp"

namespace rescon::adversary {

// What a compromised in-edge presents to its target. Three behaviors:
//   box_random  independent uniform draw per coordinate from [low, high]
//   fixed_point always the same state
//   pursuit     target's own state nudged toward a lure:
//               x_target + gain * (lure - x_target)
struct AdversaryModel {
  enum class Kind { box_random, fixed_point, pursuit };

  Kind kind = Kind::box_random;
  Eigen::VectorXd low, high;  // box_random bounds, low <= high per coordinate
  Eigen::VectorXd point;      // fixed_point value / pursuit lure
  double gain = 0.0;          // pursuit step toward the lure
  std::uint64_t seed = 0;
  std::vector<int> kappa;     // injected states per target agent

  static AdversaryModel box(Eigen::VectorXd low, Eigen::VectorXd high,
                            std::uint64_t seed, std::vector<int> kappa);
  static AdversaryModel fixed(Eigen::VectorXd point, std::vector<int> kappa);
  static AdversaryModel pursuit(Eigen::VectorXd lure, double gain,
                                std::vector<int> kappa);

  int dim() const;
  void validate() const;
};

// The kappa[target] states injected toward `target` at step t. Deterministic
// in (seed, target, t) alone: calls may happen in any order or be repeated
// and always return the same vectors. `observed` carries the genuine states
// the target hears this step (own state included) for the pursuit behavior.
std::vector<Eigen::VectorXd> inject(const AdversaryModel& m, int target,
                                    long t, const geometry::PointSet& observed);

}  // namespace rescon::adversary
