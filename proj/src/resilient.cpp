#include "rescon/resilient.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rescon/simplex.hpp"

namespace rescon::resilient {
namespace {

// Next k-combination of {0..n-1} in lexicographic order; false when done.
bool next_combination(std::vector<int>& idx, int n) {
  const int k = int(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

long long checked_binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays integral at every step.
    const long long num = n - k + i;
    if (r > std::numeric_limits<long long>::max() / num) {
      throw ArithmeticError("binomial overflow: C(" + std::to_string(n) + "," +
                            std::to_string(k) + ")");
    }
    r = r * num / i;
  }
  return r;
}

}  // namespace

void NeighborObservation::validate() const {
  neighbor_states.validate();
  if (neighbor_states.index_of(self_id) < 0) {
    throw PreconditionError("observation: self state missing from neighbor set");
  }
  if (kappa < 0) throw PreconditionError("observation: kappa must be >= 0");
  const int n = dim();
  const int d = degree();
  const int need = (n + 1) * kappa + 2;
  if (d < need) {
    throw PreconditionError(
        "observation: d_i >= (n+1)*kappa + 2 violated: " + std::to_string(d) +
        " < " + std::to_string(need));
  }
  if (sigma < n * kappa + 2 || sigma > d - kappa) {
    throw PreconditionError(
        "observation: sigma in [n*kappa + 2, d - kappa] violated: sigma = " +
        std::to_string(sigma) + ", range = [" + std::to_string(n * kappa + 2) +
        ", " + std::to_string(d - kappa) + "]");
  }
}

std::vector<std::vector<int>> enumerate_s_subsets(const std::vector<int>& ids,
                                                  int self_id, int sigma) {
  std::vector<int> others;
  bool has_self = false;
  for (int id : ids) {
    if (id == self_id) {
      has_self = true;
    } else {
      others.push_back(id);
    }
  }
  if (!has_self) throw PreconditionError("subsets: self id not in id list");
  if (sigma < 1 || sigma > int(ids.size())) {
    throw PreconditionError("subsets: sigma out of range");
  }
  std::sort(others.begin(), others.end());

  std::vector<std::vector<int>> out;
  const int pick = sigma - 1;
  const int n = int(others.size());
  if (pick == 0) {
    out.push_back({self_id});
    return out;
  }
  std::vector<int> idx(pick);
  std::iota(idx.begin(), idx.end(), 0);
  do {
    std::vector<int> subset;
    subset.reserve(sigma);
    subset.push_back(self_id);
    for (int i : idx) subset.push_back(others[i]);
    std::sort(subset.begin(), subset.end());
    out.push_back(std::move(subset));
  } while (next_combination(idx, n));
  return out;
}

std::vector<std::vector<int>> enumerate_b_subsets(
    const std::vector<int>& s_subset, int self_id, int kappa) {
  std::vector<int> others;
  bool has_self = false;
  for (int id : s_subset) {
    if (id == self_id) {
      has_self = true;
    } else {
      others.push_back(id);
    }
  }
  if (!has_self) throw PreconditionError("cover sets: self id not in subset");
  const int sigma = int(s_subset.size());
  if (kappa < 0 || kappa > sigma - 1) {
    throw PreconditionError("cover sets: kappa out of range");
  }
  std::sort(others.begin(), others.end());
  return [&] {
    std::vector<std::vector<int>> out;
    const int pick = sigma - kappa - 1;  // members besides self
    const int n = int(others.size());
    std::vector<int> idx(std::max(pick, 0));
    std::iota(idx.begin(), idx.end(), 0);
    if (pick == 0) {
      out.push_back({self_id});
      return out;
    }
    do {
      std::vector<int> subset;
      subset.reserve(pick + 1);
      subset.push_back(self_id);
      for (int i : idx) subset.push_back(others[i]);
      std::sort(subset.begin(), subset.end());
      out.push_back(std::move(subset));
    } while (next_combination(idx, n));
    return out;
  }();
}

namespace {

Eigen::MatrixXd columns_for(const PointSet& states, const std::vector<int>& ids) {
  Eigen::MatrixXd m(states.dim(), ids.size());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const int at = states.index_of(ids[j]);
    if (at < 0) throw PreconditionError("subset id missing from states");
    m.col(j) = states.points.col(at);
  }
  return m;
}

}  // namespace

SubsetStep compute_phi(const NeighborObservation& obs,
                       const std::vector<int>& s_subset, double tol) {
  SubsetStep step;
  step.s_subset = s_subset;

  std::vector<int> hat;  // subset minus self
  for (int id : s_subset) {
    if (id != obs.self_id) hat.push_back(id);
  }
  const Eigen::MatrixXd gens_hat = columns_for(obs.neighbor_states, hat);
  const Point self_state =
      obs.neighbor_states.points.col(obs.neighbor_states.index_of(obs.self_id));

  if (auto w = geometry::hull_weights(self_state, gens_hat, tol)) {
    step.phi = self_state;
    step.lambda = *w;
    step.self_shortcut = true;
    return step;
  }

  step.b_subsets = enumerate_b_subsets(s_subset, obs.self_id, obs.kappa);
  std::vector<Eigen::MatrixXd> polytopes;
  polytopes.reserve(step.b_subsets.size() + 1);
  polytopes.push_back(gens_hat);
  for (const auto& b : step.b_subsets) {
    polytopes.push_back(columns_for(obs.neighbor_states, b));
  }
  auto witness = geometry::feasible_point_in_intersection(polytopes, tol);
  if (!witness) {
    // Nonempty by construction whenever at most kappa received states are
    // compromised; reaching this means the input broke that model.
    throw InvariantViolation("fallback-point intersection reported empty");
  }
  step.phi = witness->point;
  step.lambda = witness->weights[0];
  return step;
}

ResilientCombination resilient_combination(const NeighborObservation& obs,
                                           double tol, bool want_trace) {
  obs.validate();
  const int n = obs.dim();
  const int d = obs.degree();

  ResilientCombination out;
  const auto subsets =
      enumerate_s_subsets(obs.neighbor_states.labels, obs.self_id, obs.sigma);
  const long long s = (long long)subsets.size();
  out.subset_count = s;
  out.gamma = d - obs.kappa - obs.sigma + 2;
  out.alpha = 1.0 / (double(s + 1) * double(n + 1));
  out.phis.reserve(subsets.size());
  out.aggregate_weights = ConvexWeights::Zero(d);

  const int self_col = obs.neighbor_states.index_of(obs.self_id);
  Point sum = obs.neighbor_states.points.col(self_col);
  out.aggregate_weights[self_col] += 1.0;

  for (const auto& subset : subsets) {
    SubsetStep step = compute_phi(obs, subset, tol);
    sum += step.phi;
    if (step.self_shortcut) {
      // The fallback point IS the agent's own state; attribute it there so
      // the aggregate weights reproduce v exactly.
      out.aggregate_weights[self_col] += 1.0;
    } else {
      int at = 0;
      for (int id : subset) {
        if (id == obs.self_id) continue;
        out.aggregate_weights[obs.neighbor_states.index_of(id)] +=
            step.lambda[at];
        ++at;
      }
    }
    out.phis.push_back(step.phi);
    if (want_trace) out.trace.push_back(std::move(step));
  }

  out.v = sum / double(s + 1);
  out.aggregate_weights /= double(s + 1);
  return out;
}

std::optional<ConvexWeights> recover_weights(const Point& v,
                                             const PointSet& normals,
                                             int gamma, double alpha,
                                             double tol) {
  normals.validate();
  if (!v.allFinite() || v.size() != normals.dim()) {
    throw PreconditionError("recover: dimension mismatch");
  }
  if (gamma < 1 || !(alpha > 0.0) || alpha > 1.0) {
    throw PreconditionError("recover: need gamma >= 1 and alpha in (0, 1]");
  }
  const int m = normals.size();
  if (gamma > m) return std::nullopt;
  const double lb = std::max(0.0, alpha - tol);

  // Both programs are solved in whitened coordinates: centered on v, each
  // principal axis of the point cloud scaled to unit spread, and axes along
  // which every point agrees with v (to relative 1e-13) dropped. Weights
  // summing to one make this an exact reformulation ("X w = v" becomes
  // "W (X - v 1') w = 0"), and it keeps tight clusters with a remote
  // outlier from stalling the pivoting or breaking the factorizations.
  const Eigen::MatrixXd offset = normals.points.colwise() - v;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(offset, Eigen::ComputeFullU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double s_max = sv.size() > 0 ? sv(0) : 0.0;
  int kept = 0;
  while (kept < sv.size() && sv(kept) > s_max * 1e-13) ++kept;
  if (kept == 0) {  // every normal state coincides with v
    if (double(gamma) * lb > 1.0 + tol) return std::nullopt;
    ConvexWeights w = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < gamma; ++j) w[j] = 1.0 / gamma;
    return w;
  }
  const Eigen::MatrixXd centered = sv.head(kept).cwiseInverse().asDiagonal() *
                                   svd.matrixU().leftCols(kept).transpose() *
                                   offset;
  const int rows = kept;

  // Feasibility over a fixed support T: weights reproduce v, sum to one,
  // and every T entry sits at least at lb. Off-support mass is minimized so
  // the returned weights are deterministic and as concentrated as possible.
  auto try_support = [&](const std::vector<int>& t_set)
      -> std::optional<ConvexWeights> {
    lp::Problem p;
    p.a = Eigen::MatrixXd::Zero(rows + 1, m);
    p.b = Eigen::VectorXd::Zero(rows + 1);
    p.c = Eigen::VectorXd::Ones(m);
    p.a.topRows(rows) = centered;
    p.a.bottomRows(1).setOnes();
    p.b[rows] = 1.0;
    for (int j : t_set) {
      p.b.head(rows) -= lb * centered.col(j);
      p.b[rows] -= lb;
      p.c[j] = 0.0;
    }
    if (p.b[rows] < -tol) return std::nullopt;  // gamma * lb already exceeds 1
    const lp::Solution s = lp::solve(p, tol);
    if (s.status == lp::Status::infeasible) return std::nullopt;
    if (s.status != lp::Status::optimal) {
      throw SolverError("recover lp did not terminate", s.iterations);
    }
    ConvexWeights w = s.x;
    for (int j : t_set) w[j] += lb;
    return w;
  };

  // Guided first candidate: maximize sum_j min(w_j, alpha) over all valid
  // weight vectors, then take the gamma largest entries as the support.
  std::vector<int> guess;
  {
    const int vars = 4 * m;  // w, y, and two slack blocks
    lp::Problem p;
    p.a = Eigen::MatrixXd::Zero(rows + 1 + 2 * m, vars);
    p.b = Eigen::VectorXd::Zero(rows + 1 + 2 * m);
    p.c = Eigen::VectorXd::Zero(vars);
    p.a.block(0, 0, rows, m) = centered;
    p.a.block(rows, 0, 1, m).setOnes();
    p.b[rows] = 1.0;
    for (int j = 0; j < m; ++j) {
      p.a(rows + 1 + j, m + j) = 1.0;       // y_j
      p.a(rows + 1 + j, j) = -1.0;          // - w_j
      p.a(rows + 1 + j, 2 * m + j) = 1.0;   // + slack = 0  => y_j <= w_j
      p.a(rows + 1 + m + j, m + j) = 1.0;   // y_j
      p.a(rows + 1 + m + j, 3 * m + j) = 1.0;
      p.b[rows + 1 + m + j] = alpha;        // y_j <= alpha
      p.c[m + j] = -1.0;
    }
    const lp::Solution s = lp::solve(p, tol);
    if (s.status == lp::Status::infeasible) return std::nullopt;
    if (s.status == lp::Status::optimal) {
      std::vector<int> order(m);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return s.x[a] > s.x[b];
      });
      guess.assign(order.begin(), order.begin() + gamma);
      std::sort(guess.begin(), guess.end());
      if (auto w = try_support(guess)) return w;
    }
  }

  std::vector<int> idx(gamma);
  std::iota(idx.begin(), idx.end(), 0);
  do {
    if (idx == guess) continue;
    if (auto w = try_support(idx)) return w;
  } while (next_combination(idx, m));
  return std::nullopt;
}

ComplexityEstimate complexity_estimate(int n, int kappa, int d, int sigma) {
  if (n < 1 || kappa < 0 || sigma < n * kappa + 2 || d < sigma + kappa) {
    throw PreconditionError(
        "complexity: need n >= 1, kappa >= 0, sigma >= n*kappa + 2, "
        "d >= sigma + kappa");
  }
  ComplexityEstimate e;
  const long long b = checked_binomial(sigma - 1, kappa);
  const long long cover = sigma - kappa;  // points per cover set
  const long long hat = sigma - 1;        // points in subset minus self
  e.d_v = b * cover + hat;
  e.nz_w = 2 * e.d_v + (long long)n * b * (cover + hat);
  e.subset_count = checked_binomial(d - 1, sigma - 1);
  const double dv = double(e.d_v);
  e.lp_cost = (double(e.nz_w) + dv * dv) * std::sqrt(dv);
  e.total_cost = double(e.subset_count) * e.lp_cost;
  return e;
}

}  // namespace rescon::resilient
