#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "rescon/errors.hpp"

namespace rescon::geometry {

using Point = Eigen::VectorXd;

// Weights aligned with a generator list: entries >= -tol, sum 1 within tol.
using ConvexWeights = Eigen::VectorXd;

// Default coordinate tolerance; RESCON_TOL in the environment overrides it
// (read once on first use).
double default_tol();

// Labeled finite point set. One column per point, all sharing a dimension.
struct PointSet {
  std::vector<int> labels;
  Eigen::MatrixXd points;  // dim x count

  int dim() const { return int(points.rows()); }
  int size() const { return int(points.cols()); }
  Point col(int k) const { return points.col(k); }
  // Index of a label, or -1.
  int index_of(int label) const;
  // Throws PreconditionError: duplicate labels, label/point count mismatch,
  // zero dimension, nonfinite coordinates.
  void validate() const;
};

// True iff convex weights over the columns of gens reproduce q within tol
// (Euclidean norm). Decided by a feasibility program whose candidate weights
// are re-checked against the original coordinates, so boundary ties count as
// inside and an accepted witness is always genuine; on badly conditioned
// generator clouds the test errs toward "outside".
bool hull_contains(const Point& q, const Eigen::MatrixXd& gens, double tol);

// Same decision; on success also returns witness weights w with
// |gens w - q| <= tol.
std::optional<ConvexWeights> hull_weights(const Point& q,
                                          const Eigen::MatrixXd& gens,
                                          double tol);

struct IntersectionWitness {
  Point point;
  std::vector<ConvexWeights> weights;  // one per polytope, column-aligned
};

// A point common to the convex hulls of every listed generator matrix,
// found by one joint program over per-polytope convex weights coupled by
// equality of the combined points. Returns nullopt when the hulls do not
// intersect within tol.
std::optional<IntersectionWitness> feasible_point_in_intersection(
    const std::vector<Eigen::MatrixXd>& polytopes, double tol);

// Rewrites witness weights for q over gens using at most dim+1 strictly
// positive entries (iterated null-space support elimination). Throws
// PreconditionError if q is not in the hull within tol.
ConvexWeights caratheodory_decompose(const Point& q,
                                     const Eigen::MatrixXd& gens, double tol);

// Closed convex constraint sets: the whole space, halfspaces a.x >= b with
// |a| = 1 after construction, balls |x - c| <= r, and intersections.
struct ConstraintSet {
  enum class Kind { whole_space, halfspace, ball, intersection };

  Kind kind = Kind::whole_space;
  Eigen::VectorXd normal;  // halfspace
  double offset = 0.0;     // halfspace: a.x >= offset (a unit length)
  Eigen::VectorXd center;  // ball
  double radius = 0.0;     // ball, >= 0
  std::vector<ConstraintSet> members;  // intersection

  static ConstraintSet whole_space();
  static ConstraintSet halfspace(const Eigen::VectorXd& a, double b);
  static ConstraintSet ball(const Eigen::VectorXd& c, double r);
  static ConstraintSet intersection(std::vector<ConstraintSet> sets);

  bool contains(const Point& q, double tol) const;
  // Dimension the set constrains, or 0 when unconstrained in any dimension.
  int dim() const;
};

// Euclidean projection onto c. Halfspaces and balls project in closed form;
// intersections run alternating projections with correction increments until
// the per-cycle change drops below tol. Throws NonConvergence (carrying the
// last iterate) after max_iter cycles.
Point project(const Point& q, const ConstraintSet& c, double tol = 1e-10,
              int max_iter = 10000);

// Euclidean distance from q to c (0 when q is inside).
double distance(const Point& q, const ConstraintSet& c, double tol = 1e-10,
                int max_iter = 10000);

}  // namespace rescon::geometry
