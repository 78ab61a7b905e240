#pragma once

#include <Eigen/Core>

#include <optional>

namespace rescon::lp {

// Linear program in standard equality form:
//   minimize    c . x
//   subject to  A x = b,  x >= 0.
struct Problem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Solution {
  Status status = Status::iteration_limit;
  Eigen::VectorXd x;           // structural variables; valid when optimal
  double objective = 0.0;      // c . x at the returned vertex
  double infeasibility = 0.0;  // phase-1 residual when infeasible
  int iterations = 0;
};

// Deterministic dense two-phase tableau simplex. Most-negative-reduced-cost
// entering rule with fixed index tie-breaks; switches to lowest-index rule
// after a long degenerate stall so every run terminates. Identical inputs
// give bit-identical outputs.
//
// feas_tol: a phase-1 optimum above this declares the program infeasible
//           (it equals the minimum L1 residual of A x = b over x >= 0).
// max_iter: pivot cap; 0 picks a size-based default.
Solution solve(const Problem& p, double feas_tol = 1e-9, int max_iter = 0);

// Rational-arithmetic feasibility decision for {A x = b, x >= 0}; the
// objective in `p` is ignored. The doubles in `p` are converted to exact
// rationals, so the verdict is exact for the coefficients as stored: a basic
// feasible solution rounded back to double, or nullopt when the system is
// infeasible. Orders of magnitude slower than solve(); meant as the final
// authority on instances whose feasible region is too thin for float
// pivoting to certify either way.
std::optional<Eigen::VectorXd> exact_feasible_point(const Problem& p);

}  // namespace rescon::lp
