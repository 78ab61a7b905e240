#pragma once

#include <optional>
#include <vector>

#include "rescon/geometry.hpp"

namespace rescon::resilient {

using geometry::ConvexWeights;
using geometry::Point;
using geometry::PointSet;

// One agent's synchronous-round view: its own id, every received state
// (genuine and compromised alike -- the receiver cannot tell them apart),
// the declared per-agent corruption bound kappa, and the subset size sigma
// the combinator enumerates.
struct NeighborObservation {
  int self_id = 0;
  PointSet neighbor_states;  // includes self_id
  int kappa = 0;
  int sigma = 0;

  int dim() const { return neighbor_states.dim(); }
  int degree() const { return neighbor_states.size(); }
  // Throws PreconditionError quoting the violated inequality. Requires
  // degree >= (dim+1)*kappa + 2 and sigma in [dim*kappa + 2, degree - kappa].
  void validate() const;
};

// Per-subset record: the subset, its size-(sigma-kappa) cover sets, the
// fallback point phi, witness weights over the subset minus self, and
// whether phi short-circuited to the agent's own state.
struct SubsetStep {
  std::vector<int> s_subset;
  std::vector<std::vector<int>> b_subsets;
  Point phi;
  ConvexWeights lambda;
  bool self_shortcut = false;
};

struct ResilientCombination {
  Point v;                  // combined value
  int gamma = 0;            // certified count of entries >= alpha
  double alpha = 0.0;       // certified minimum weight level
  long long subset_count = 0;
  std::vector<Point> phis;  // per subset, enumeration order
  // Weights over neighbor_states labels that reproduce v exactly; includes
  // any compromised entries, since the combiner cannot tell them apart.
  ConvexWeights aggregate_weights;
  std::vector<SubsetStep> trace;  // filled only when requested
};

// All size-sigma subsets of ids containing self_id, each sorted ascending,
// enumerated in lexicographic order.
std::vector<std::vector<int>> enumerate_s_subsets(const std::vector<int>& ids,
                                                  int self_id, int sigma);

// All size-(sigma-kappa) subsets of s_subset containing self_id, sorted,
// lexicographic order. kappa = 0 yields s_subset itself.
std::vector<std::vector<int>> enumerate_b_subsets(
    const std::vector<int>& s_subset, int self_id, int kappa);

// The fallback point for one subset: the agent's own state when it already
// lies in the hull of the other subset members, else a point of the
// intersection of that hull with every cover-set hull. The intersection is
// guaranteed nonempty under the validated preconditions; an empty report is
// an InvariantViolation.
SubsetStep compute_phi(const NeighborObservation& obs,
                       const std::vector<int>& s_subset, double tol);

// The certified combination: the average of all subset fallback points and
// the agent's own state. Certifies gamma = degree - kappa - sigma + 2
// genuine in-neighbors carry weight at least alpha = 1/((s+1)(dim+1)).
ResilientCombination resilient_combination(const NeighborObservation& obs,
                                           double tol,
                                           bool want_trace = false);

// Convex weights over `normals` that reproduce v with at least gamma entries
// >= alpha - tol, or nullopt if none exist. Searched over gamma-subset
// supports (a guided candidate first, then exhaustively); ties resolved by
// minimizing the mass placed outside the chosen support.
std::optional<ConvexWeights> recover_weights(const Point& v,
                                             const PointSet& normals,
                                             int gamma, double alpha,
                                             double tol);

// Cost model for one combination step.
struct ComplexityEstimate {
  long long d_v = 0;        // decision variables of one subset program
  long long nz_w = 0;       // nonzeros of its constraint matrix
  double lp_cost = 0.0;     // (nz_w + d_v^2) * sqrt(d_v)
  double total_cost = 0.0;  // subset_count * lp_cost
  long long subset_count = 0;
};

// Throws ArithmeticError when a count overflows 64-bit, PreconditionError
// when the parameters are inconsistent (n >= 1, kappa >= 0,
// sigma >= n*kappa + 2, d >= sigma + kappa).
ComplexityEstimate complexity_estimate(int n, int kappa, int d, int sigma);

}  // namespace rescon::resilient
