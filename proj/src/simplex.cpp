#include "rescon/simplex.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "rescon/errors.hpp"

namespace rescon::lp {
namespace {

constexpr double kPivotEps = 1e-9;   // coefficient counted as usable pivot
constexpr double kEnterEps = 1e-9;   // reduced cost counted as improving
constexpr double kCleanEps = 1e-13;  // elimination skip threshold
constexpr double kHarrisSlack = 1e-9;  // ratio-test tie window
constexpr int kRefactorPeriod = 128;   // pivots between exact rebuilds
constexpr int kMaxPolishRounds = 32;   // rebuild-and-resume attempts per phase

}  // namespace

// Dense two-phase tableau method. Tableau layout (row-major, width =
// n + m + 1): rows 0..m-1 are the constraints with nonnegative rhs at the
// start, row m holds the phase-2 reduced costs (rhs cell = -objective), row
// m+1 the phase-1 reduced costs (rhs cell = -(artificial sum)). Columns
// 0..n-1 are structural, n..n+m-1 artificial, n+m the rhs.
//
// Degenerate inputs (nearly coincident generator points) make naive
// pivoting amplify rounding until the tableau lies about optimality, so the
// ratio test prefers the numerically largest pivot among near-ties and the
// tableau is periodically rebuilt exactly from the original data for the
// current basis; each phase only terminates on a verdict confirmed by a
// freshly rebuilt tableau.
Solution solve(const Problem& p, double feas_tol, int max_iter) {
  const int m = int(p.a.rows());
  const int n = int(p.a.cols());
  if (p.b.size() != m || p.c.size() != n) {
    throw PreconditionError("lp: dimension mismatch between a, b, c");
  }
  if (!p.a.allFinite() || !p.b.allFinite() || !p.c.allFinite()) {
    throw PreconditionError("lp: nonfinite coefficient");
  }

  Solution sol;
  if (m == 0) {
    sol.status = Status::optimal;
    sol.x = Eigen::VectorXd::Zero(n);
    // With x = 0 optimal only if no cost is negative (x unbounded above).
    for (int j = 0; j < n; ++j) {
      if (p.c[j] < -kEnterEps) {
        sol.status = Status::unbounded;
        return sol;
      }
    }
    return sol;
  }
  if (max_iter <= 0) max_iter = 400 + 60 * (m + n);

  // Sign-normalized original data: rows flipped so the initial rhs is
  // nonnegative and the all-artificial basis is feasible.
  Eigen::MatrixXd full(m, n + m + 1);
  for (int i = 0; i < m; ++i) {
    const double sign = p.b[i] < 0.0 ? -1.0 : 1.0;
    full.row(i).head(n) = sign * p.a.row(i);
    full.row(i).segment(n, m).setZero();
    full(i, n + i) = 1.0;
    full(i, n + m) = sign * p.b[i];
  }

  const int width = n + m + 1;
  const int rhs = n + m;
  std::vector<double> tab(std::size_t(m + 2) * width, 0.0);
  auto row = [&](int r) { return tab.data() + std::size_t(r) * width; };

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  int iterations = 0;
  int since_refactor = 0;
  bool bland = false;
  double enter_eps = kEnterEps;
  double pivot_eps = kPivotEps;
  double ratio_slack = kHarrisSlack;
  // Plain-rule mode: machine-precision thresholds, no periodic rebuilds and
  // no rebuilt-tableau confirmation. Entered only by the from-scratch
  // restart below, where the usual safeguards themselves are the hazard.
  bool plain = false;
  int stall = 0;
  const int stall_limit = 2 * m + 40;

  // Raised by refactor() after it swaps dependent basis slots for artificial
  // columns; the driver then re-establishes feasibility from phase 1.
  struct RepairSignal {};

  // Rebuilds every tableau row and both cost rows exactly from `full` for
  // the current basis (constraint rows become B^{-1} full). A rank-deficient
  // basis — duplicate received states make exactly parallel columns — is
  // repaired first: each dependent slot is replaced by the artificial column
  // of a row not yet covered by the independent ones, which always yields an
  // invertible basis.
  auto refactor = [&]() {
    Eigen::MatrixXd b_mat(m, m);
    for (int i = 0; i < m; ++i) b_mat.col(i) = full.col(basis[i]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b_mat);
    qr.setThreshold(1e-12);
    const int rank = int(qr.rank());
    const bool repaired = rank < m;
    if (repaired) {
      std::vector<char> independent(m, 0);
      for (int k = 0; k < rank; ++k) {
        independent[qr.colsPermutation().indices()[k]] = 1;
      }
      // Orthonormal basis of the independent columns' range, grown one unit
      // row vector at a time: each dependent slot takes the artificial of
      // the row currently farthest from the range.
      Eigen::MatrixXd span(m, m);
      {
        Eigen::MatrixXd bk(m, std::max(rank, 1));
        int at = 0;
        for (int i = 0; i < m; ++i) {
          if (independent[i]) bk.col(at++) = b_mat.col(i);
        }
        if (rank > 0) {
          Eigen::HouseholderQR<Eigen::MatrixXd> hq(bk.leftCols(rank));
          span.leftCols(rank) =
              hq.householderQ() * Eigen::MatrixXd::Identity(m, rank);
        }
      }
      int covered = rank;
      for (int i = 0; i < m; ++i) {
        if (independent[i]) continue;
        int best_r = -1;
        double best = 0.0;
        for (int r = 0; r < m; ++r) {
          const double res =
              1.0 - span.leftCols(covered).row(r).squaredNorm();
          if (res > best) {
            best = res;
            best_r = r;
          }
        }
        if (best_r < 0 || best <= 1e-8) {
          throw SolverError("lp: basis repair failed", iterations);
        }
        basis[i] = n + best_r;
        Eigen::VectorXd v = Eigen::VectorXd::Unit(m, best_r);
        v -= span.leftCols(covered) * (span.leftCols(covered).transpose() * v);
        span.col(covered++) = v / v.norm();
      }
      for (int i = 0; i < m; ++i) b_mat.col(i) = full.col(basis[i]);
      qr.compute(b_mat);
    }
    Eigen::MatrixXd rebuilt = qr.solve(full);
    rebuilt += qr.solve(full - b_mat * rebuilt);  // one refinement pass
    if (!rebuilt.allFinite()) {
      throw SolverError("lp: basis refactorization failed", iterations);
    }
    for (int i = 0; i < m; ++i) {
      double* t = row(i);
      for (int j = 0; j < width; ++j) t[j] = rebuilt(i, j);
    }
    double* c2 = row(m);
    double* c1 = row(m + 1);
    for (int j = 0; j < width; ++j) {
      c2[j] = j < n ? p.c[j] : 0.0;
      c1[j] = (j >= n && j < n + m) ? 1.0 : 0.0;
    }
    for (int i = 0; i < m; ++i) {
      const double* t = row(i);
      const double c2w = basis[i] < n ? p.c[basis[i]] : 0.0;
      const double c1w = basis[i] >= n ? 1.0 : 0.0;
      if (c2w != 0.0) {
        for (int j = 0; j < width; ++j) c2[j] -= c2w * t[j];
      }
      if (c1w != 0.0) {
        for (int j = 0; j < width; ++j) c1[j] -= c1w * t[j];
      }
    }
    since_refactor = 0;
    if (repaired) throw RepairSignal{};
  };
  refactor();

  auto pivot = [&](int prow_i, int q) {
    double* pr = row(prow_i);
    const double inv = 1.0 / pr[q];
    for (int j = 0; j < width; ++j) pr[j] *= inv;
    pr[q] = 1.0;
    for (int r = 0; r < m + 2; ++r) {
      if (r == prow_i) continue;
      double* t = row(r);
      const double f = t[q];
      // In plain mode entries below the cleaning threshold are meaningful
      // (sliver instances legitimately carry them), so eliminate exactly.
      if (f == 0.0 || (!plain && std::abs(f) <= kCleanEps)) {
        t[q] = 0.0;
        continue;
      }
      for (int j = 0; j < width; ++j) t[j] -= f * pr[j];
      t[q] = 0.0;
    }
    basis[prow_i] = q;
    ++iterations;
    ++since_refactor;
  };

  // Ratio test: smallest step first, then the numerically largest pivot
  // element among rows within the tie window (Harris-style); under Bland's
  // rule exact ties resolve by the lowest basis label instead.
  auto leaving_row = [&](int q) -> int {
    double theta_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double t = row(i)[q];
      if (t <= pivot_eps) continue;
      const double ratio = std::max(row(i)[rhs], 0.0) / t;
      theta_min = std::min(theta_min, ratio);
    }
    if (!std::isfinite(theta_min)) return -1;
    const double limit = theta_min + ratio_slack * (1.0 + theta_min);
    int leave = -1;
    double best_pivot = 0.0;
    for (int i = 0; i < m; ++i) {
      const double t = row(i)[q];
      if (t <= pivot_eps) continue;
      const double ratio = std::max(row(i)[rhs], 0.0) / t;
      if (ratio > limit) continue;
      if (bland) {
        if (leave < 0 || basis[i] < basis[leave]) leave = i;
      } else if (t > best_pivot ||
                 (t == best_pivot && leave >= 0 && basis[i] < basis[leave])) {
        best_pivot = t;
        leave = i;
      }
    }
    if (leave >= 0 && std::max(row(leave)[rhs], 0.0) / row(leave)[q] <=
                          kCleanEps) {
      if (++stall > stall_limit) bland = true;
    } else {
      stall = 0;
    }
    return leave;
  };

  // phase 1: drive the artificial sum to zero; phase 2: optimize c.
  auto iterate = [&](int cost_row, bool phase2) -> Status {
    while (true) {
      if (iterations >= max_iter) return Status::iteration_limit;
      if (!plain && since_refactor >= kRefactorPeriod) refactor();
      const double* cr = row(cost_row);
      int q = -1;
      if (bland) {
        for (int j = 0; j < n; ++j) {
          if (cr[j] < -enter_eps) {
            q = j;
            break;
          }
        }
      } else {
        double best = -enter_eps;
        for (int j = 0; j < n; ++j) {
          if (cr[j] < best) {
            best = cr[j];
            q = j;
          }
        }
      }
      if (q < 0) return Status::optimal;

      int leave = -1;
      if (phase2) {
        // A basic artificial must stay at zero: if the entering column meets
        // such a row, pivot the artificial out first (a zero-length step),
        // choosing the numerically strongest row.
        double best_t = kPivotEps;
        for (int i = 0; i < m; ++i) {
          if (basis[i] >= n && std::abs(row(i)[q]) > best_t) {
            best_t = std::abs(row(i)[q]);
            leave = i;
          }
        }
      }
      if (leave < 0) {
        leave = leaving_row(q);
        if (leave < 0) return phase2 ? Status::unbounded : Status::iteration_limit;
      }
      pivot(leave, q);
    }
  };

  // Runs one phase to a verdict a freshly rebuilt tableau agrees with.
  auto phase_to_confirmed_optimum = [&](int cost_row, bool phase2) -> Status {
    if (plain) return iterate(cost_row, phase2);
    for (int round = 0; round < kMaxPolishRounds; ++round) {
      const Status st = iterate(cost_row, phase2);
      if (st != Status::optimal) return st;
      refactor();
      const double* cr = row(cost_row);
      bool improving = false;
      for (int j = 0; j < n; ++j) {
        if (cr[j] < -enter_eps) {
          improving = true;
          break;
        }
      }
      if (!improving) return Status::optimal;
    }
    return Status::optimal;  // stopped improving measurably; accept
  };

  // A repair mid-phase may park artificials in the basis at nonzero level,
  // so feasibility is re-established from phase 1 each time; repairs are
  // rare and bounded.
  for (int repairs = 0;; ++repairs) {
    try {
      bland = false;
      enter_eps = kEnterEps;
      pivot_eps = kPivotEps;
      ratio_slack = kHarrisSlack;
      plain = false;
      stall = 0;
      Status st = phase_to_confirmed_optimum(m + 1, false);
      sol.iterations = iterations;
      if (st != Status::optimal) {
        sol.status = st;
        return sol;
      }
      // Feasibility verdict on the per-row residual (the largest basic
      // artificial value equals |Ax - b|_inf here): the artificial SUM
      // scales with the row count and its numeric floor can cross tol on
      // instances that satisfy every single constraint within tolerance.
      auto residual = [&]() {
        double worst = 0.0;
        for (int i = 0; i < m; ++i) {
          if (basis[i] >= n) {
            worst = std::max(worst, std::max(row(i)[rhs], 0.0));
          }
        }
        return worst;
      };
      double max_artificial = residual();
      if (max_artificial > feas_tol) {
        // The entering threshold can strand a residual of a few multiples
        // of kEnterEps on a feasible instance; finish the descent under
        // Bland's rule with a much tighter threshold before giving up.
        bland = true;
        enter_eps = 1e-12;
        (void)phase_to_confirmed_optimum(m + 1, false);
        enter_eps = kEnterEps;
        bland = false;
        stall = 0;
        refactor();
        max_artificial = residual();
      }
      if (max_artificial > feas_tol) {
        // A repaired basis can be full-rank for the rank test yet so badly
        // conditioned that the rebuilt reduced costs vouch for a phase-1
        // "optimum" nowhere near one. Before declaring infeasibility, rerun
        // both phases from the all-artificial start under plain lowest-index
        // pivoting with machine-precision thresholds; on thin-sliver
        // instances this stays accurate where the guarded path loses the
        // descent direction.
        plain = true;
        bland = true;
        enter_eps = 1e-15;
        pivot_eps = 1e-15;
        ratio_slack = 0.0;
        stall = 0;
        for (int i = 0; i < m; ++i) basis[i] = n + i;
        refactor();  // identity basis: rebuild is exact and cannot repair
        (void)phase_to_confirmed_optimum(m + 1, false);
        max_artificial = residual();
      }
      if (max_artificial > feas_tol) {
        sol.status = Status::infeasible;
        sol.infeasibility = max_artificial;
        return sol;
      }
      // Remove artificials from the basis where a structural pivot exists;
      // rows without one are redundant and guarded during phase 2.
      for (int i = 0; i < m; ++i) {
        if (basis[i] < n) continue;
        const double* t = row(i);
        int best_j = -1;
        double best_t = kPivotEps;
        for (int j = 0; j < n; ++j) {
          if (std::abs(t[j]) > best_t) {
            best_t = std::abs(t[j]);
            best_j = j;
          }
        }
        if (best_j >= 0) pivot(i, best_j);
      }

      bland = plain;
      stall = 0;
      st = phase_to_confirmed_optimum(m, true);
      sol.iterations = iterations;
      sol.status = st;
      if (st != Status::optimal) return sol;

      sol.x = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < m; ++i) {
        if (basis[i] < n) sol.x[basis[i]] = std::max(row(i)[rhs], 0.0);
      }
      sol.objective = p.c.dot(sol.x);
      sol.infeasibility = (p.a * sol.x - p.b).cwiseAbs().maxCoeff();
      return sol;
    } catch (const RepairSignal&) {
      if (repairs >= 8) {
        throw SolverError("lp: repeated basis repairs", iterations);
      }
    }
  }
}

// Phase 1 only, in exact rational arithmetic with Bland's rule, so the
// verdict cannot be a rounding artifact: cycling is impossible and every
// entering column provably has a pivot. Artificial columns are dropped from
// the entering scan once nonbasic, which preserves the phase-1 optimum.
std::optional<Eigen::VectorXd> exact_feasible_point(const Problem& p) {
  using Rat = boost::multiprecision::cpp_rational;
  const int m = int(p.a.rows());
  const int n = int(p.a.cols());
  if (p.b.size() != m) {
    throw PreconditionError("lp: dimension mismatch between a and b");
  }
  if (!p.a.allFinite() || !p.b.allFinite()) {
    throw PreconditionError("lp: nonfinite coefficient");
  }
  if (m == 0) return Eigen::VectorXd::Zero(n);

  const int rhs = n + m;
  std::vector<std::vector<Rat>> tab(m, std::vector<Rat>(n + m + 1, 0));
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    const int sign = p.b[i] < 0.0 ? -1 : 1;
    for (int j = 0; j < n; ++j) tab[i][j] = sign * Rat(p.a(i, j));
    tab[i][n + i] = 1;
    tab[i][rhs] = sign * Rat(p.b[i]);
    basis[i] = n + i;
  }
  std::vector<Rat> cost(n + m + 1, 0);  // reduced costs of sum(artificials)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= rhs; ++j) cost[j] -= tab[i][j];
  }
  for (int i = 0; i < m; ++i) cost[n + i] = 0;

  for (long guard = 0;; ++guard) {
    if (guard > 200000) {
      throw SolverError("lp: exact pivoting did not terminate", int(guard));
    }
    int q = -1;
    for (int j = 0; j < n; ++j) {
      if (cost[j] < 0) {
        q = j;
        break;
      }
    }
    if (q < 0) break;
    int leave = -1;
    Rat best;
    for (int i = 0; i < m; ++i) {
      if (tab[i][q] <= 0) continue;
      Rat ratio = tab[i][rhs] / tab[i][q];
      if (leave < 0 || ratio < best ||
          (ratio == best && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) {
      // The artificial sum is bounded below by zero, so a descent ray
      // cannot exist.
      throw SolverError("lp: exact phase 1 lost its pivot", int(guard));
    }
    const Rat piv = tab[leave][q];
    for (auto& x : tab[leave]) x /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave || tab[i][q] == 0) continue;
      const Rat f = tab[i][q];
      for (int j = 0; j <= rhs; ++j) tab[i][j] -= f * tab[leave][j];
    }
    if (cost[q] != 0) {
      const Rat f = cost[q];
      for (int j = 0; j <= rhs; ++j) cost[j] -= f * tab[leave][j];
    }
    basis[leave] = q;
  }

  Rat artificial_sum = 0;
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= n) artificial_sum += tab[i][rhs];
  }
  if (artificial_sum != 0) return std::nullopt;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) x[basis[i]] = tab[i][rhs].convert_to<double>();
  }
  return x;
}

}  // namespace rescon::lp
