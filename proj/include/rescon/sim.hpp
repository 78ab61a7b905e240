#pragma once

#include <functional>
#include <iosfwd>
#include <optional>

#include "rescon/adversary.hpp"
#include "rescon/graph.hpp"
#include "rescon/resilient.hpp"

namespace rescon::sim {

// Scalar regression task shared by all agents: labels are a fixed linear
// functional of features [z; 1] plus Gaussian noise; agents hold private
// sample sets and descend the squared prediction error.
struct LearningProblem {
  double rho = 1.0;                // iterates projected onto |theta| <= rho
  Eigen::VectorXd theta_star;      // generating parameter, |theta_star| <= rho
  int samples_per_agent = 20;
  double noise_std = 0.05;
  std::uint64_t data_seed = 0;

  struct Sample {
    Eigen::VectorXd features;
    double label;
  };
  std::vector<std::vector<Sample>> data;  // per agent

  static Eigen::VectorXd features_of(const Eigen::VectorXd& z);  // [z; 1]
  void synthesize(int agents);
  // Gradient of |features . theta - label|^2 in theta.
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, const Sample& s) const;
  void validate() const;
};

struct RunConfig {
  int dim = 2;
  graph::TopologySchedule schedule;
  std::optional<adversary::AdversaryModel> adversary;
  std::vector<geometry::ConstraintSet> constraints;  // per agent; empty = none
  bool resilient = true;
  int sigma_fixed = 0;  // 0: per-agent dim * kappa_i + 2
  long horizon = 200;
  double stop_v = 1e-12;  // stop once disagreement falls below; 0 disables
  double tol;             // combination tolerance (geometry::default_tol())
  double project_tol = 1e-10;
  int project_iter = 10000;
  std::uint64_t seed = 1;
  Eigen::VectorXd init_low, init_high;  // initial states uniform in the box
  std::optional<LearningProblem> learning;

  RunConfig();
  int agent_count() const;
  int sigma_for(const graph::Topology& topo, int agent) const;
  // Throws ConfigError naming every (schedule entry, agent) whose degree or
  // subset size breaks the resilient-combination preconditions.
  void validate() const;
};

struct SimState {
  long t = 0;
  std::vector<Eigen::VectorXd> x;
};

// Everything one agent saw and produced during one synchronous round.
struct AgentStep {
  resilient::ResilientCombination comb;  // resilient branch only
  Eigen::VectorXd combined;              // combination result (either branch)
  Eigen::VectorXd pre_projection;        // projection argument
  geometry::PointSet observed;           // genuine + injected states
  std::vector<int> genuine;              // labels of the genuine entries
};

struct StepTrace {
  long t = 0;  // time the step started from
  std::vector<AgentStep> agents;
};

using StepObserver = std::function<void(const StepTrace&)>;

SimState initial_state(const RunConfig& cfg);

// One synchronous round; fills *trace when given.
SimState step(const SimState& state, const RunConfig& cfg, StepTrace* trace);

struct MetricsRow {
  long t = 0;
  double v = 0.0;            // sum of squared pairwise state differences
  double w = 0.0;            // sum of squared errors to theta_star (learning)
  double feasibility = 0.0;  // max distance of any agent to its own set
  double rate_window = 0.0;  // trailing-window slope of ln V, NaN when unset
};

struct MetricSeries {
  std::vector<MetricsRow> rows;
};

// Header t,V,W,feasibility,rate_window; 17 significant digits per value.
void write_csv(const MetricSeries& series, std::ostream& out);

struct RunResult {
  MetricSeries metrics;
  SimState final_state;
};

// Executes the schedule until the horizon or until disagreement falls below
// stop_v, recording one metrics row per recorded time (initial state
// included). The observer, when set, receives every step's trace.
RunResult run(const RunConfig& cfg, const StepObserver& observer = nullptr);

double disagreement(const std::vector<Eigen::VectorXd>& x);

struct InfluenceEdge {
  int from = 0;
  double weight = 0.0;
};

// Influence graph reconstructed from one traced resilient round: per agent,
// convex weights over its genuine in-neighbors that reproduce the combined
// value with the certified (gamma, alpha) support; edges at or above
// keep_tol are kept. recovered[i] is false when no certified weights exist.
struct ReconstructedInfluence {
  std::vector<std::vector<InfluenceEdge>> in_edges;
  std::vector<char> recovered;
};

ReconstructedInfluence resilient_subgraph(const StepTrace& trace,
                                          double keep_tol);

struct RateFit {
  double rate = 0.0;  // slope of ln v against t
  double r2 = 0.0;
  long first_t = 0, last_t = 0;
};

// Least-squares slope of ln v over rows from burn_in up to (exclusive) the
// first row at or below `floor`. Throws InsufficientData below 5 usable
// rows.
RateFit fit_exponential_rate(const MetricSeries& series, long burn_in,
                             double floor = 0.0);

}  // namespace rescon::sim
