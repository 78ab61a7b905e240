#include "rescon/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <utility>

#include "rescon/errors.hpp"
#include "rescon/rng.hpp"

namespace rescon::sim {
namespace {

// Stream tags keeping the independent random uses of one master seed apart.
constexpr std::uint64_t kTagInit = 0x696e6974;     // initial states
constexpr std::uint64_t kTagSample = 0x73616d70;   // per-round sample picks
constexpr std::uint64_t kTagData = 0x64617461;     // synthesized data sets

geometry::ConstraintSet constraint_of(const RunConfig& cfg, int agent) {
  if (cfg.constraints.empty()) {
    return geometry::ConstraintSet::whole_space();
  }
  return cfg.constraints[static_cast<std::size_t>(agent)];
}

void append_value(std::string& line, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  line += buf;
}

}  // namespace

Eigen::VectorXd LearningProblem::features_of(const Eigen::VectorXd& z) {
  Eigen::VectorXd f(z.size() + 1);
  f.head(z.size()) = z;
  f(z.size()) = 1.0;
  return f;
}

void LearningProblem::synthesize(int agents) {
  if (agents <= 0) throw PreconditionError("learning: agent count must be positive");
  if (theta_star.size() < 2) {
    throw PreconditionError("learning: parameter needs at least 2 entries");
  }
  const int n = static_cast<int>(theta_star.size());
  data.assign(static_cast<std::size_t>(agents), {});
  for (int i = 0; i < agents; ++i) {
    auto& set = data[static_cast<std::size_t>(i)];
    set.reserve(static_cast<std::size_t>(samples_per_agent));
    for (int k = 0; k < samples_per_agent; ++k) {
      Rng rng(Rng::derive(data_seed, kTagData, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(k)));
      Eigen::VectorXd z(n - 1);
      for (int c = 0; c < n - 1; ++c) z(c) = rng.uniform(-1.0, 1.0);
      Sample s;
      s.features = features_of(z);
      s.label = s.features.dot(theta_star) + rng.gaussian(0.0, noise_std);
      set.push_back(std::move(s));
    }
  }
}

Eigen::VectorXd LearningProblem::gradient(const Eigen::VectorXd& theta,
                                          const Sample& s) const {
  if (theta.size() != s.features.size()) {
    throw PreconditionError("learning: parameter/feature size mismatch");
  }
  const double residual = s.features.dot(theta) - s.label;
  return 2.0 * residual * s.features;
}

void LearningProblem::validate() const {
  if (rho <= 0.0) throw ConfigError("learning: radius must be positive");
  if (theta_star.size() < 2) {
    throw ConfigError("learning: parameter needs at least 2 entries");
  }
  if (theta_star.norm() > rho + 1e-12) {
    throw ConfigError("learning: generating parameter lies outside the radius");
  }
  if (samples_per_agent < 1) {
    throw ConfigError("learning: need at least one sample per agent");
  }
  if (noise_std < 0.0) throw ConfigError("learning: noise level must be >= 0");
}

RunConfig::RunConfig() : tol(geometry::default_tol()) {}

int RunConfig::agent_count() const {
  if (schedule.entries.empty()) return 0;
  return schedule.entries.front().topology.m;
}

int RunConfig::sigma_for(const graph::Topology& topo, int agent) const {
  if (sigma_fixed > 0) return sigma_fixed;
  return dim * topo.byzantine_in[static_cast<std::size_t>(agent)] + 2;
}

void RunConfig::validate() const {
  if (dim < 1) throw ConfigError("run: dimension must be >= 1");
  if (horizon < 1) throw ConfigError("run: horizon must be >= 1");
  schedule.validate();
  const int m = agent_count();
  if (init_low.size() != dim || init_high.size() != dim) {
    throw ConfigError("run: initial box must match the state dimension");
  }
  for (int c = 0; c < dim; ++c) {
    if (!(init_low(c) <= init_high(c))) {
      throw ConfigError("run: initial box has low > high");
    }
  }
  if (!constraints.empty()) {
    if (static_cast<int>(constraints.size()) != m) {
      throw ConfigError("run: constraint list must cover every agent");
    }
    for (const auto& set : constraints) {
      if (set.dim() != 0 && set.dim() != dim) {
        throw ConfigError("run: constraint dimension mismatch");
      }
    }
  }
  if (adversary) {
    adversary->validate();
    if (static_cast<int>(adversary->kappa.size()) != m) {
      throw ConfigError("run: adversary target list must cover every agent");
    }
  }
  if (learning) learning->validate();

  if (resilient) {
    std::string bad;
    for (std::size_t e = 0; e < schedule.entries.size(); ++e) {
      const auto& topo = schedule.entries[e].topology;
      for (int i = 0; i < topo.m; ++i) {
        const int kappa = topo.byzantine_in[static_cast<std::size_t>(i)];
        const int d = topo.degree(i);
        const int sigma = sigma_for(topo, i);
        const bool deg_ok = d >= (dim + 1) * kappa + 2;
        const bool sig_ok =
            sigma >= dim * kappa + 2 && sigma <= d - kappa;
        if (deg_ok && sig_ok) continue;
        if (!bad.empty()) bad += ", ";
        bad += "entry " + std::to_string(e + 1) + " agent " +
               std::to_string(i + 1) + " (degree " + std::to_string(d) +
               ", kappa " + std::to_string(kappa) + ", sigma " +
               std::to_string(sigma) + ")";
      }
    }
    if (!bad.empty()) {
      throw ConfigError(
          "run: degree/subset-size preconditions violated for " + bad);
    }
  }
}

SimState initial_state(const RunConfig& cfg) {
  const int m = cfg.agent_count();
  SimState state;
  state.t = 0;
  state.x.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    Rng rng(Rng::derive(cfg.seed, kTagInit, static_cast<std::uint64_t>(i)));
    Eigen::VectorXd v(cfg.dim);
    for (int c = 0; c < cfg.dim; ++c) {
      v(c) = rng.uniform(cfg.init_low(c), cfg.init_high(c));
    }
    state.x.push_back(std::move(v));
  }
  return state;
}

SimState step(const SimState& state, const RunConfig& cfg, StepTrace* trace) {
  const int m = cfg.agent_count();
  const auto& topo = cfg.schedule.at(state.t);
  SimState next;
  next.t = state.t + 1;
  next.x.resize(static_cast<std::size_t>(m));
  if (trace) {
    trace->t = state.t;
    trace->agents.assign(static_cast<std::size_t>(m), {});
  }

  for (int i = 0; i < m; ++i) {
    const auto& nbrs = topo.in_neighbors[static_cast<std::size_t>(i)];
    geometry::PointSet genuine;
    genuine.labels = nbrs;
    genuine.points.resize(cfg.dim, static_cast<Eigen::Index>(nbrs.size()));
    for (std::size_t c = 0; c < nbrs.size(); ++c) {
      genuine.points.col(static_cast<Eigen::Index>(c)) =
          state.x[static_cast<std::size_t>(nbrs[c])];
    }

    geometry::PointSet observed = genuine;
    if (cfg.adversary) {
      const auto injected =
          adversary::inject(*cfg.adversary, i, state.t, genuine);
      const std::size_t extra = injected.size();
      observed.points.conservativeResize(
          cfg.dim, observed.points.cols() + static_cast<Eigen::Index>(extra));
      for (std::size_t k = 0; k < extra; ++k) {
        observed.labels.push_back(m + static_cast<int>(k));
        observed.points.col(observed.points.cols() -
                            static_cast<Eigen::Index>(extra - k)) = injected[k];
      }
    }

    Eigen::VectorXd combined;
    resilient::ResilientCombination comb;
    if (cfg.resilient) {
      resilient::NeighborObservation obs;
      obs.self_id = i;
      obs.neighbor_states = observed;
      obs.kappa = topo.byzantine_in[static_cast<std::size_t>(i)];
      obs.sigma = cfg.sigma_for(topo, i);
      comb = resilient::resilient_combination(obs, cfg.tol, false);
      combined = comb.v;
    } else {
      combined = observed.points.rowwise().mean();
    }

    Eigen::VectorXd pre = combined;
    if (cfg.learning) {
      const auto& set = cfg.learning->data[static_cast<std::size_t>(i)];
      Rng rng(Rng::derive(cfg.seed, kTagSample, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(state.t)));
      const auto& sample =
          set[static_cast<std::size_t>(rng.uniform_int(
              0, static_cast<int>(set.size()) - 1))];
      const double eta = 1.0 / static_cast<double>(state.t + 1);
      pre -= eta * cfg.learning->gradient(state.x[static_cast<std::size_t>(i)],
                                          sample);
    }

    next.x[static_cast<std::size_t>(i)] = geometry::project(
        pre, constraint_of(cfg, i), cfg.project_tol, cfg.project_iter);

    if (trace) {
      auto& rec = trace->agents[static_cast<std::size_t>(i)];
      rec.comb = std::move(comb);
      rec.combined = std::move(combined);
      rec.pre_projection = std::move(pre);
      rec.observed = std::move(observed);
      rec.genuine = nbrs;
    }
  }
  return next;
}

double disagreement(const std::vector<Eigen::VectorXd>& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      total += (x[i] - x[j]).squaredNorm();
    }
  }
  return total;
}

namespace {

double learning_error(const RunConfig& cfg, const SimState& state) {
  double total = 0.0;
  for (const auto& xi : state.x) {
    total += (xi - cfg.learning->theta_star).squaredNorm();
  }
  return total;
}

double max_constraint_distance(const RunConfig& cfg, const SimState& state) {
  if (cfg.constraints.empty()) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    worst = std::max(worst,
                     geometry::distance(state.x[i], cfg.constraints[i]));
  }
  return worst;
}

// Trailing-window slope of ln v over the last up-to-10 rows; NaN until two
// strictly positive values are available.
double window_rate(const std::vector<MetricsRow>& rows) {
  const std::size_t window = 10;
  const std::size_t begin = rows.size() > window ? rows.size() - window : 0;
  double st = 0, sy = 0, stt = 0, sty = 0;
  int count = 0;
  for (std::size_t r = begin; r < rows.size(); ++r) {
    if (!(rows[r].v > 0.0)) continue;
    const double t = static_cast<double>(rows[r].t);
    const double y = std::log(rows[r].v);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = count * stt - st * st;
  if (std::abs(denom) < 1e-30) return std::numeric_limits<double>::quiet_NaN();
  return (count * sty - st * sy) / denom;
}

}  // namespace

void write_csv(const MetricSeries& series, std::ostream& out) {
  out << "t,V,W,feasibility,rate_window\n";
  for (const auto& row : series.rows) {
    std::string line = std::to_string(row.t);
    line += ',';
    append_value(line, row.v);
    line += ',';
    append_value(line, row.w);
    line += ',';
    append_value(line, row.feasibility);
    line += ',';
    append_value(line, row.rate_window);
    line += '\n';
    out << line;
  }
}

RunResult run(const RunConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  RunResult result;
  result.final_state = initial_state(cfg);

  auto record = [&](const SimState& s) {
    MetricsRow row;
    row.t = s.t;
    row.v = disagreement(s.x);
    row.w = cfg.learning ? learning_error(cfg, s)
                         : std::numeric_limits<double>::quiet_NaN();
    row.feasibility = max_constraint_distance(cfg, s);
    result.metrics.rows.push_back(row);
    result.metrics.rows.back().rate_window = window_rate(result.metrics.rows);
  };

  record(result.final_state);
  while (result.final_state.t < cfg.horizon) {
    if (cfg.stop_v > 0.0 && result.metrics.rows.back().v < cfg.stop_v) break;
    StepTrace trace;
    StepTrace* tp = observer ? &trace : nullptr;
    result.final_state = step(result.final_state, cfg, tp);
    if (observer) observer(trace);
    record(result.final_state);
  }
  return result;
}

ReconstructedInfluence resilient_subgraph(const StepTrace& trace,
                                          double keep_tol) {
  ReconstructedInfluence out;
  const std::size_t m = trace.agents.size();
  out.in_edges.resize(m);
  out.recovered.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& rec = trace.agents[i];
    if (rec.comb.v.size() == 0) {
      throw PreconditionError(
          "influence reconstruction needs a traced resilient round");
    }
    geometry::PointSet normals;
    normals.labels = rec.genuine;
    normals.points.resize(rec.observed.points.rows(),
                          static_cast<Eigen::Index>(rec.genuine.size()));
    for (std::size_t c = 0; c < rec.genuine.size(); ++c) {
      const int idx = rec.observed.index_of(rec.genuine[c]);
      normals.points.col(static_cast<Eigen::Index>(c)) =
          rec.observed.points.col(idx);
    }
    const auto weights = resilient::recover_weights(
        rec.comb.v, normals, rec.comb.gamma, rec.comb.alpha, 1e-7);
    if (!weights) continue;
    out.recovered[i] = 1;
    for (std::size_t c = 0; c < rec.genuine.size(); ++c) {
      const double w = (*weights)(static_cast<Eigen::Index>(c));
      if (w >= keep_tol) {
        out.in_edges[i].push_back({rec.genuine[c], w});
      }
    }
  }
  return out;
}

RateFit fit_exponential_rate(const MetricSeries& series, long burn_in,
                             double floor) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : series.rows) {
    if (row.t < burn_in) continue;
    if (row.v <= floor || !(row.v > 0.0)) break;
    pts.emplace_back(static_cast<double>(row.t), std::log(row.v));
  }
  if (pts.size() < 5) {
    throw InsufficientData("rate fit needs at least 5 usable rows, have " +
                           std::to_string(pts.size()));
  }
  double st = 0, sy = 0;
  for (const auto& [t, y] : pts) {
    st += t;
    sy += y;
  }
  const double mt = st / static_cast<double>(pts.size());
  const double my = sy / static_cast<double>(pts.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [t, y] : pts) {
    sxx += (t - mt) * (t - mt);
    sxy += (t - mt) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx < 1e-30) {
    throw InsufficientData("rate fit needs rows at distinct times");
  }
  RateFit fit;
  fit.rate = sxy / sxx;
  fit.first_t = static_cast<long>(pts.front().first);
  fit.last_t = static_cast<long>(pts.back().first);
  const double ss_res = syy - fit.rate * sxy;
  fit.r2 = syy < 1e-30 ? 1.0 : std::max(0.0, 1.0 - ss_res / syy);
  return fit;
}

}  // namespace rescon::sim
