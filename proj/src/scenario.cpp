#include "rescon/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rescon/errors.hpp"
#include "rescon/rng.hpp"
#include "rescon/svg.hpp"

namespace rescon::scenario {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_point(const Eigen::VectorXd& p) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i) s += ", ";
    s += fmt6(p(i));
  }
  return s + ")";
}

std::string fmt_ids(const std::vector<int>& zero_based) {
  std::string s = "{";
  for (std::size_t i = 0; i < zero_based.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(zero_based[i] + 1);
  }
  return s + "}";
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("scenario " + where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& el : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (el.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) fail(where, "unknown key \"" + el.key() + "\"");
  }
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json& member(const json& j, const std::string& where, const char* key) {
  const json* p = find(j, key);
  if (!p) fail(where, std::string("missing key \"") + key + "\"");
  return *p;
}

long get_int(const json& j, const std::string& where, const char* key,
             long lo, long hi) {
  const json& v = member(j, where, key);
  if (!v.is_number_integer()) {
    fail(where, std::string("\"") + key + "\" must be an integer");
  }
  const long x = v.get<long>();
  if (x < lo || x > hi) {
    fail(where, std::string("\"") + key + "\" must lie in [" +
                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return x;
}

long get_int_or(const json& j, const std::string& where, const char* key,
                long def, long lo, long hi) {
  return find(j, key) ? get_int(j, where, key, lo, hi) : def;
}

double get_num(const json& j, const std::string& where, const char* key) {
  const json& v = member(j, where, key);
  if (!v.is_number()) {
    fail(where, std::string("\"") + key + "\" must be a number");
  }
  return v.get<double>();
}

double get_num_or(const json& j, const std::string& where, const char* key,
                  double def) {
  return find(j, key) ? get_num(j, where, key) : def;
}

bool get_bool_or(const json& j, const std::string& where, const char* key,
                 bool def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_boolean()) {
    fail(where, std::string("\"") + key + "\" must be a boolean");
  }
  return v->get<bool>();
}

std::string get_str(const json& j, const std::string& where, const char* key) {
  const json& v = member(j, where, key);
  if (!v.is_string()) {
    fail(where, std::string("\"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

std::uint64_t get_seed_or(const json& j, const std::string& where,
                          const char* key, std::uint64_t def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number_integer() || (v->is_number_integer() && v->get<long long>() < 0)) {
    fail(where, std::string("\"") + key + "\" must be a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

Eigen::VectorXd get_vec(const json& j, const std::string& where,
                        const char* key, int expected) {
  const json& v = member(j, where, key);
  if (!v.is_array() || v.empty()) {
    fail(where, std::string("\"") + key + "\" must be a non-empty array");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      fail(where, std::string("\"") + key + "\" must hold numbers");
    }
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  if (expected > 0 && out.size() != expected) {
    fail(where, std::string("\"") + key + "\" must have " +
                    std::to_string(expected) + " entries");
  }
  return out;
}

// "3", 3, "2..7", or [1, 4, 5]; returns sorted unique 1-based ids.
std::vector<int> parse_agent_list(const json& v, int m,
                                  const std::string& where) {
  std::vector<int> ids;
  auto push = [&](long id) {
    if (id < 1 || id > m) {
      fail(where, "agent id " + std::to_string(id) + " out of range 1.." +
                      std::to_string(m));
    }
    ids.push_back(static_cast<int>(id));
  };
  if (v.is_number_integer()) {
    push(v.get<long>());
  } else if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto dots = s.find("..");
    try {
      if (dots == std::string::npos) {
        push(std::stol(s));
      } else {
        const long a = std::stol(s.substr(0, dots));
        const long b = std::stol(s.substr(dots + 2));
        if (a > b) fail(where, "agent range \"" + s + "\" has start > end");
        for (long id = a; id <= b; ++id) push(id);
      }
    } catch (const std::invalid_argument&) {
      fail(where, "cannot parse agent list \"" + s + "\"");
    } catch (const std::out_of_range&) {
      fail(where, "cannot parse agent list \"" + s + "\"");
    }
  } else if (v.is_array()) {
    for (const auto& el : v) {
      if (!el.is_number_integer()) fail(where, "agent list must hold integers");
      push(el.get<long>());
    }
  } else {
    fail(where, "agent list must be an integer, a \"a..b\" string, or an array");
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

geometry::ConstraintSet parse_set(const json& j, int dim,
                                  const std::string& where) {
  if (!j.is_object()) fail(where, "constraint set must be an object");
  const std::string type = get_str(j, where, "type");
  try {
    if (type == "whole_space") {
      check_keys(j, where, {"type"});
      return geometry::ConstraintSet::whole_space();
    }
    if (type == "halfspace") {
      check_keys(j, where, {"type", "normal", "offset"});
      return geometry::ConstraintSet::halfspace(
          get_vec(j, where, "normal", dim), get_num(j, where, "offset"));
    }
    if (type == "ball") {
      check_keys(j, where, {"type", "center", "radius"});
      return geometry::ConstraintSet::ball(get_vec(j, where, "center", dim),
                                           get_num(j, where, "radius"));
    }
    if (type == "intersection") {
      check_keys(j, where, {"type", "members"});
      const json& members = member(j, where, "members");
      if (!members.is_array() || members.empty()) {
        fail(where, "\"members\" must be a non-empty array");
      }
      std::vector<geometry::ConstraintSet> sets;
      for (std::size_t i = 0; i < members.size(); ++i) {
        sets.push_back(parse_set(members[i],
                                 dim, where + ".members[" + std::to_string(i) + "]"));
      }
      return geometry::ConstraintSet::intersection(std::move(sets));
    }
  } catch (const PreconditionError& e) {
    fail(where, e.what());
  }
  fail(where, "unknown constraint type \"" + type + "\"");
}

graph::Topology parse_topology(const json& j, int dim,
                               const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string type = get_str(j, where, "type");
  try {
    if (type == "inline") {
      check_keys(j, where, {"type", "lines"});
      const json& lines = member(j, where, "lines");
      if (!lines.is_array()) fail(where, "\"lines\" must be an array");
      std::string text;
      for (const auto& line : lines) {
        if (!line.is_string()) fail(where, "\"lines\" must hold strings");
        text += line.get<std::string>();
        text += '\n';
      }
      std::istringstream in(text);
      return graph::load_topology(in);
    }
    if (type == "file") {
      check_keys(j, where, {"type", "path"});
      return graph::load_topology_file(get_str(j, where, "path"));
    }
    if (type == "preferential_attachment") {
      check_keys(j, where, {"type", "agents", "attach", "in_edges_only", "seed"});
      graph::PaParams params;
      params.attach = static_cast<int>(get_int(j, where, "attach", 1, 1000));
      params.in_edges_only = get_bool_or(j, where, "in_edges_only", false);
      return graph::generate_preferential_attachment(
          static_cast<int>(get_int(j, where, "agents", 1, 100000)),
          get_seed_or(j, where, "seed", 0), params);
    }
    if (type == "corollary1") {
      check_keys(j, where,
                 {"type", "agents", "core", "kappa_bar", "min_links", "seed"});
      return graph::generate_corollary1_graph(
          static_cast<int>(get_int(j, where, "agents", 1, 100000)), dim,
          static_cast<int>(get_int(j, where, "kappa_bar", 0, 1000)),
          static_cast<int>(get_int(j, where, "core", 1, 100000)),
          static_cast<int>(get_int(j, where, "min_links", 1, 100000)),
          get_seed_or(j, where, "seed", 0));
    }
  } catch (const PreconditionError& e) {
    fail(where, e.what());
  }
  fail(where, "unknown topology type \"" + type + "\"");
}

graph::TopologySchedule parse_schedule(const json* j,
                                       const graph::Topology& base,
                                       const std::string& where) {
  graph::TopologySchedule schedule;
  if (!j) {
    schedule.entries.push_back({base, 1});
    return schedule;
  }
  const std::string type = get_str(*j, where, "type");
  if (type == "static") {
    check_keys(*j, where, {"type"});
    schedule.entries.push_back({base, 1});
    return schedule;
  }
  if (type == "sparse_cycle") {
    check_keys(*j, where, {"type", "period", "drop", "seed"});
    const int period = static_cast<int>(get_int(*j, where, "period", 1, 1000));
    const int drop = static_cast<int>(get_int(*j, where, "drop", 0, 1000));
    const std::uint64_t seed = get_seed_or(*j, where, "seed", 0);
    schedule.entries.push_back({base, 1});
    for (int k = 1; k < period; ++k) {
      schedule.entries.push_back(
          {graph::remove_random_in_edges(
               base, drop, Rng::mix(seed, static_cast<std::uint64_t>(k))),
           1});
    }
    return schedule;
  }
  fail(where, "unknown schedule type \"" + type + "\"");
}

std::vector<int> parse_kappa(const json& v, int m, const std::string& where) {
  std::vector<int> kv(static_cast<std::size_t>(m), 0);
  if (v.is_number_integer()) {
    const long k = v.get<long>();
    if (k < 0 || k > 1000) fail(where, "\"kappa\" must lie in [0, 1000]");
    std::fill(kv.begin(), kv.end(), static_cast<int>(k));
    return kv;
  }
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != m) {
      fail(where, "\"kappa\" array must have one entry per agent");
    }
    for (int i = 0; i < m; ++i) {
      const auto& el = v[static_cast<std::size_t>(i)];
      if (!el.is_number_integer() || el.get<long>() < 0) {
        fail(where, "\"kappa\" entries must be non-negative integers");
      }
      kv[static_cast<std::size_t>(i)] = static_cast<int>(el.get<long>());
    }
    return kv;
  }
  fail(where, "\"kappa\" must be an integer or an array");
}

// Parses the adversary block; the block seed (mixed with the run seed later)
// is returned through block_seed.
adversary::AdversaryModel parse_adversary(const json& j, int dim,
                                          std::vector<int> kappa,
                                          const std::string& where,
                                          std::uint64_t* block_seed) {
  const std::string kind = get_str(j, where, "kind");
  try {
    if (kind == "box_random") {
      check_keys(j, where, {"kind", "low", "high", "seed"});
      *block_seed = get_seed_or(j, where, "seed", 0);
      return adversary::AdversaryModel::box(get_vec(j, where, "low", dim),
                                            get_vec(j, where, "high", dim),
                                            *block_seed, std::move(kappa));
    }
    if (kind == "fixed_point") {
      check_keys(j, where, {"kind", "point"});
      *block_seed = 0;
      return adversary::AdversaryModel::fixed(get_vec(j, where, "point", dim),
                                              std::move(kappa));
    }
    if (kind == "pursuit") {
      check_keys(j, where, {"kind", "lure", "gain"});
      *block_seed = 0;
      return adversary::AdversaryModel::pursuit(get_vec(j, where, "lure", dim),
                                                get_num(j, where, "gain"),
                                                std::move(kappa));
    }
  } catch (const PreconditionError& e) {
    fail(where, e.what());
  }
  fail(where, "unknown adversary kind \"" + kind + "\"");
}

sim::LearningProblem parse_learning(const json& j, int dim,
                                    const std::string& where,
                                    std::uint64_t* data_seed) {
  check_keys(j, where,
             {"rho", "theta_star", "samples_per_agent", "noise_std", "seed"});
  sim::LearningProblem lp;
  lp.rho = get_num(j, where, "rho");
  lp.theta_star = get_vec(j, where, "theta_star", dim);
  lp.samples_per_agent =
      static_cast<int>(get_int_or(j, where, "samples_per_agent", 20, 1, 100000));
  lp.noise_std = get_num_or(j, where, "noise_std", 0.0);
  *data_seed = get_seed_or(j, where, "seed", 0);
  return lp;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
  }
  const std::string top = "(top level)";
  check_keys(j, top,
             {"schema_version", "name", "description", "dim", "protocol",
              "kappa", "sigma", "horizon", "stop_v", "seed", "seeds",
              "topology", "schedule", "adversary", "constraints", "init",
              "learning"});
  if (get_int(j, top, "schema_version", 1, 1) != 1) {
    fail(top, "unsupported schema_version");
  }

  Scenario sc;
  sc.name = get_str(j, top, "name");
  if (sc.name.empty()) fail(top, "\"name\" must not be empty");
  if (find(j, "description")) sc.description = get_str(j, top, "description");

  sim::RunConfig& cfg = sc.base;
  cfg.dim = static_cast<int>(get_int(j, top, "dim", 1, 16));

  if (find(j, "protocol")) {
    const std::string protocol = get_str(j, top, "protocol");
    if (protocol == "resilient") {
      cfg.resilient = true;
    } else if (protocol == "naive") {
      cfg.resilient = false;
    } else {
      fail(top, "\"protocol\" must be \"resilient\" or \"naive\"");
    }
  }

  graph::Topology base_topology =
      parse_topology(member(j, top, "topology"), cfg.dim, "topology");
  const int m = base_topology.m;
  cfg.schedule =
      parse_schedule(find(j, "schedule"), base_topology, "schedule");

  if (const json* p = find(j, "kappa")) {
    const std::vector<int> kv = parse_kappa(*p, m, top);
    for (auto& entry : cfg.schedule.entries) {
      entry.topology.byzantine_in = kv;
    }
  }
  const std::vector<int>& kappa_vec =
      cfg.schedule.entries.front().topology.byzantine_in;

  cfg.sigma_fixed = static_cast<int>(get_int_or(j, top, "sigma", 0, 0, 1000));
  cfg.horizon = get_int_or(j, top, "horizon", 200, 1, 100000000);
  cfg.stop_v = get_num_or(j, top, "stop_v", 1e-12);
  if (cfg.stop_v < 0.0) fail(top, "\"stop_v\" must be >= 0");

  if (find(j, "seed") && find(j, "seeds")) {
    fail(top, "give either \"seed\" or \"seeds\", not both");
  }
  if (const json* p = find(j, "seeds")) {
    if (!p->is_array() || p->empty()) {
      fail(top, "\"seeds\" must be a non-empty array");
    }
    for (const auto& el : *p) {
      if (!el.is_number_integer() || el.get<long long>() < 0) {
        fail(top, "\"seeds\" must hold non-negative integers");
      }
      sc.seeds.push_back(el.get<std::uint64_t>());
    }
  } else {
    sc.seeds.push_back(get_seed_or(j, top, "seed", 1));
  }

  const bool any_kappa =
      std::any_of(kappa_vec.begin(), kappa_vec.end(), [](int k) { return k > 0; });
  if (const json* p = find(j, "adversary")) {
    cfg.adversary = parse_adversary(*p, cfg.dim, kappa_vec, "adversary",
                                    &sc.adversary_seed);
  } else if (any_kappa) {
    fail(top, "agents declare hostile in-edges but no adversary block is given");
  }

  if (const json* p = find(j, "constraints")) {
    if (!p->is_array() || p->empty()) {
      fail(top, "\"constraints\" must be a non-empty array");
    }
    cfg.constraints.assign(static_cast<std::size_t>(m),
                           geometry::ConstraintSet::whole_space());
    std::vector<char> covered(static_cast<std::size_t>(m), 0);
    for (std::size_t g = 0; g < p->size(); ++g) {
      const std::string where = "constraints[" + std::to_string(g) + "]";
      const json& group = (*p)[g];
      check_keys(group, where, {"agents", "set"});
      const auto ids =
          parse_agent_list(member(group, where, "agents"), m, where);
      const auto set = parse_set(member(group, where, "set"), cfg.dim, where);
      for (int id : ids) {
        if (covered[static_cast<std::size_t>(id - 1)]) {
          fail(where, "agent " + std::to_string(id) +
                          " appears in more than one group");
        }
        covered[static_cast<std::size_t>(id - 1)] = 1;
        cfg.constraints[static_cast<std::size_t>(id - 1)] = set;
      }
    }
  }

  const json& init = member(j, top, "init");
  check_keys(init, "init", {"low", "high"});
  cfg.init_low = get_vec(init, "init", "low", cfg.dim);
  cfg.init_high = get_vec(init, "init", "high", cfg.dim);

  if (const json* p = find(j, "learning")) {
    cfg.learning = parse_learning(*p, cfg.dim, "learning", &sc.data_seed);
  }

  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return sc;
}

namespace {

// Built-in run descriptions, representative of the experiments the
// simulator is meant to reproduce.
const std::map<std::string, const char*>& preset_map() {
  static const std::map<std::string, const char*> presets = {
      {"unconstrained-8", R"json({
  "schema_version": 1,
  "name": "unconstrained-8",
  "description": "Eight agents on a grown 5-in-regular network, one declared hostile in-edge each, box-random injections, time-varying subgraph cycle, resilient protocol.",
  "dim": 2,
  "protocol": "resilient",
  "kappa": 1,
  "sigma": 4,
  "horizon": 200,
  "seed": 1,
  "topology": {"type": "preferential_attachment", "agents": 8, "attach": 4, "in_edges_only": true, "seed": 12},
  "schedule": {"type": "sparse_cycle", "period": 3, "drop": 1, "seed": 5},
  "adversary": {"kind": "box_random", "low": [-4.0, -5.0], "high": [4.0, 5.0], "seed": 99},
  "init": {"low": [-2.0, -2.0], "high": [2.0, 2.0]}
})json"},
      {"unconstrained-8-naive", R"json({
  "schema_version": 1,
  "name": "unconstrained-8-naive",
  "description": "Same network, injections, and schedule as unconstrained-8, but agents average every received state uniformly instead of filtering.",
  "dim": 2,
  "protocol": "naive",
  "kappa": 1,
  "sigma": 4,
  "horizon": 200,
  "seed": 1,
  "topology": {"type": "preferential_attachment", "agents": 8, "attach": 4, "in_edges_only": true, "seed": 12},
  "schedule": {"type": "sparse_cycle", "period": 3, "drop": 1, "seed": 5},
  "adversary": {"kind": "box_random", "low": [-4.0, -5.0], "high": [4.0, 5.0], "seed": 99},
  "init": {"low": [-2.0, -2.0], "high": [2.0, 2.0]}
})json"},
      {"constrained-30", R"json({
  "schema_version": 1,
  "name": "constrained-30",
  "description": "Thirty agents, complete core of 15 with redundant outside links, two declared hostile in-edges each, fixed-point injections, three local constraint groups whose intersection is the target set.",
  "dim": 2,
  "protocol": "resilient",
  "kappa": 2,
  "sigma": 6,
  "horizon": 400,
  "seed": 1,
  "topology": {"type": "corollary1", "agents": 30, "core": 15, "kappa_bar": 2, "min_links": 6, "seed": 7},
  "schedule": {"type": "static"},
  "adversary": {"kind": "fixed_point", "point": [3.0, 3.0]},
  "constraints": [
    {"agents": "1..10", "set": {"type": "intersection", "members": [
      {"type": "ball", "center": [0.0, 0.0], "radius": 1.0},
      {"type": "halfspace", "normal": [1.0, -1.0], "offset": 0.0}]}},
    {"agents": "11..20", "set": {"type": "intersection", "members": [
      {"type": "halfspace", "normal": [1.0, -1.0], "offset": 0.0},
      {"type": "halfspace", "normal": [1.0, 0.0], "offset": 0.0}]}},
    {"agents": "21..30", "set": {"type": "intersection", "members": [
      {"type": "halfspace", "normal": [1.0, 0.0], "offset": 0.0},
      {"type": "ball", "center": [0.0, 0.0], "radius": 1.0}]}}
  ],
  "init": {"low": [-3.0, -3.0], "high": [3.0, 3.0]}
})json"},
      {"learning-8", R"json({
  "schema_version": 1,
  "name": "learning-8",
  "description": "Eight agents fit a shared linear model from private noisy samples; one declared hostile in-edge each sends box-random parameters; iterates stay inside a norm ball.",
  "dim": 3,
  "protocol": "resilient",
  "kappa": 1,
  "sigma": 5,
  "horizon": 500,
  "stop_v": 0.0,
  "seed": 1,
  "topology": {"type": "preferential_attachment", "agents": 8, "attach": 4, "in_edges_only": true, "seed": 12},
  "schedule": {"type": "static"},
  "adversary": {"kind": "box_random", "low": [-1.0, -1.0, -1.0], "high": [1.0, 1.0, 1.0], "seed": 7},
  "constraints": [
    {"agents": "1..8", "set": {"type": "ball", "center": [0.0, 0.0, 0.0], "radius": 1.0}}
  ],
  "init": {"low": [-0.5, -0.5, -0.5], "high": [0.5, 0.5, 0.5]},
  "learning": {"rho": 1.0, "theta_star": [0.6, -0.3, 0.4], "samples_per_agent": 20, "noise_std": 0.05, "seed": 11}
})json"}};
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : preset_map()) names.push_back(name);
  return names;
}

bool is_preset(const std::string& name) {
  return preset_map().count(name) > 0;
}

std::string preset_text(const std::string& name) {
  const auto it = preset_map().find(name);
  if (it == preset_map().end()) {
    throw ConfigError("no preset named \"" + name + "\"");
  }
  return it->second;
}

Scenario load_scenario(const std::string& source) {
  std::error_code ec;
  if (fs::is_regular_file(source, ec)) {
    std::ifstream in(source);
    if (!in) throw ConfigError("cannot open scenario file " + source);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
  }
  if (is_preset(source)) return parse_scenario(preset_text(source));
  throw ConfigError("\"" + source +
                    "\" is neither a scenario file nor a preset; presets: " +
                    [] {
                      std::string all;
                      for (const auto& n : preset_names()) {
                        if (!all.empty()) all += ", ";
                        all += n;
                      }
                      return all;
                    }());
}

sim::RunConfig config_for_seed(const Scenario& sc, std::uint64_t seed) {
  sim::RunConfig cfg = sc.base;
  cfg.seed = seed;
  if (cfg.adversary) {
    cfg.adversary->seed = Rng::mix(sc.adversary_seed, seed);
  }
  if (cfg.learning) {
    cfg.learning->data_seed = Rng::mix(sc.data_seed, seed);
    cfg.learning->synthesize(cfg.agent_count());
  }
  return cfg;
}

geometry::PointSet load_states_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open states file " + path);
  std::vector<Eigen::VectorXd> rows;
  std::vector<int> ids;
  std::string line;
  bool first_data = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::vector<double> values;
    bool parse_ok = true;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(field, &pos);
        while (pos < field.size() &&
               (field[pos] == ' ' || field[pos] == '\t' || field[pos] == '\r')) {
          ++pos;
        }
        if (pos != field.size()) throw std::invalid_argument(field);
        values.push_back(v);
      } catch (const std::exception&) {
        parse_ok = false;
        break;
      }
    }
    if (!parse_ok) {
      if (first_data) {  // header line
        first_data = false;
        continue;
      }
      throw ConfigError("states file " + path + ": line " +
                        std::to_string(line_no) + " is not numeric");
    }
    first_data = false;
    // Row layout matches the header id,x1,...,xn: an integer label first,
    // then the coordinates.
    if (values.size() < 2) {
      throw ConfigError("states file " + path + ": line " +
                        std::to_string(line_no) +
                        " needs an id and at least one coordinate");
    }
    const int id = static_cast<int>(std::llround(values.front()));
    if (static_cast<double>(id) != values.front()) {
      throw ConfigError("states file " + path + ": line " +
                        std::to_string(line_no) + " has a non-integer id");
    }
    if (!rows.empty() &&
        values.size() - 1 != static_cast<std::size_t>(rows.front().size())) {
      throw ConfigError("states file " + path + ": line " +
                        std::to_string(line_no) +
                        " has an inconsistent column count");
    }
    ids.push_back(id);
    rows.push_back(Eigen::Map<Eigen::VectorXd>(
        values.data() + 1, static_cast<Eigen::Index>(values.size()) - 1));
  }
  if (rows.empty()) throw ConfigError("states file " + path + " holds no states");
  geometry::PointSet set;
  set.labels = ids;
  set.points.resize(rows.front().size(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    set.points.col(static_cast<Eigen::Index>(i)) = rows[i];
  }
  set.validate();
  return set;
}

namespace {

void write_final_states(const fs::path& path, const sim::SimState& state) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "id";
  const Eigen::Index dim = state.x.empty() ? 0 : state.x.front().size();
  for (Eigen::Index c = 0; c < dim; ++c) out << ",x" << (c + 1);
  out << "\n";
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    out << (i + 1);
    for (Eigen::Index c = 0; c < dim; ++c) {
      out << ',' << fmt17(state.x[i](c));
    }
    out << "\n";
  }
}

void write_chart(const fs::path& path, const std::string& title,
                 const std::string& y_label, const sim::MetricSeries& series,
                 double sim::MetricsRow::*field, bool log_y) {
  svg::Series line;
  line.name = y_label;
  for (const auto& row : series.rows) {
    line.points.emplace_back(static_cast<double>(row.t), row.*field);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  svg::write_line_chart(out, title, "step", y_label, {line}, log_y);
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  long steps = 0;
  double final_v = 0.0;
  double final_w = 0.0;
  double final_feasibility = 0.0;
  std::string rate_text;
  Eigen::VectorXd mean_point;
};

std::string describe_rate(const sim::MetricSeries& series) {
  try {
    const auto fit = sim::fit_exponential_rate(series, 5, 1e-13);
    return fmt6(fit.rate) + " (r2=" + fmt6(fit.r2) + ")";
  } catch (const InsufficientData&) {
    return "n/a";
  }
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

int cmd_run(const std::string& source, const RunOptions& opt,
            std::ostream& out, std::ostream& err) {
  Scenario sc;
  try {
    sc = load_scenario(source);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::vector<std::uint64_t> seeds =
      opt.seeds_override ? *opt.seeds_override : sc.seeds;
  if (seeds.empty()) {
    err << "error: empty seed list\n";
    return kExitConfig;
  }

  const sim::RunConfig& base = sc.base;
  out << "scenario: " << sc.name << "\n";
  out << "agents: " << base.agent_count() << ", dimension: " << base.dim
      << ", protocol: " << (base.resilient ? "resilient" : "naive") << "\n";
  out << "horizon: " << base.horizon << ", schedule period: "
      << base.schedule.period() << "\n";
  out << "seeds: " << seeds.size() << "\n";

  std::vector<SeedOutcome> outcomes(seeds.size());
  std::vector<std::exception_ptr> failures(seeds.size());
  try {
    fs::create_directories(opt.out_dir);
    // Seeds are independent runs: fan them out across worker threads. Each
    // run stays internally single-threaded and writes only its own seed
    // directory, so the artifacts — and the console report, emitted in seed
    // order after the join — do not depend on scheduling.
    auto run_one = [&](std::size_t idx) {
      const std::uint64_t seed = seeds[idx];
      const sim::RunConfig cfg = config_for_seed(sc, seed);
      const sim::RunResult res = sim::run(cfg);

      const fs::path dir = fs::path(opt.out_dir) / ("seed-" + std::to_string(seed));
      fs::create_directories(dir);
      {
        std::ofstream metrics(dir / "metrics.csv");
        if (!metrics) {
          throw std::runtime_error("cannot write " + (dir / "metrics.csv").string());
        }
        sim::write_csv(res.metrics, metrics);
      }
      write_final_states(dir / "final_states.csv", res.final_state);
      write_chart(dir / "disagreement.svg", sc.name + ": disagreement",
                  "V", res.metrics, &sim::MetricsRow::v, true);
      if (!cfg.constraints.empty()) {
        write_chart(dir / "feasibility.svg", sc.name + ": constraint distance",
                    "feasibility", res.metrics, &sim::MetricsRow::feasibility,
                    false);
      }
      if (cfg.learning) {
        write_chart(dir / "learning_error.svg", sc.name + ": parameter error",
                    "W", res.metrics, &sim::MetricsRow::w, true);
      }

      SeedOutcome oc;
      oc.seed = seed;
      oc.steps = res.final_state.t;
      oc.final_v = res.metrics.rows.back().v;
      oc.final_w = res.metrics.rows.back().w;
      oc.final_feasibility = res.metrics.rows.back().feasibility;
      oc.rate_text = describe_rate(res.metrics);
      oc.mean_point = Eigen::VectorXd::Zero(cfg.dim);
      for (const auto& xi : res.final_state.x) oc.mean_point += xi;
      oc.mean_point /= static_cast<double>(res.final_state.x.size());
      outcomes[idx] = oc;
    };
    {
      const std::size_t workers = std::min<std::size_t>(
          seeds.size(),
          std::max(1u, std::thread::hardware_concurrency()));
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t idx; (idx = next.fetch_add(1)) < seeds.size();) {
            try {
              run_one(idx);
            } catch (...) {
              failures[idx] = std::current_exception();
            }
          }
        });
      }
      for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }

    for (const SeedOutcome& oc : outcomes) {
      out << "seed " << oc.seed << ": steps=" << oc.steps
          << ", final V=" << fmt6(oc.final_v);
      if (base.learning) out << ", final W=" << fmt6(oc.final_w);
      if (!base.constraints.empty()) {
        out << ", feasibility=" << fmt6(oc.final_feasibility);
      }
      out << "\n";
    }

    std::ofstream summary(fs::path(opt.out_dir) / "summary.txt");
    if (!summary) {
      throw std::runtime_error("cannot write " +
                               (fs::path(opt.out_dir) / "summary.txt").string());
    }
    summary << "scenario: " << sc.name << "\n";
    if (!sc.description.empty()) summary << "description: " << sc.description << "\n";
    summary << "agents: " << base.agent_count() << "\n";
    summary << "dimension: " << base.dim << "\n";
    summary << "protocol: " << (base.resilient ? "resilient" : "naive") << "\n";
    summary << "schedule period: " << base.schedule.period() << "\n";
    summary << "horizon: " << base.horizon << "\n";
    summary << "seed count: " << seeds.size() << "\n";
    summary << "--\n";
    std::vector<double> final_vs;
    double worst_feas = 0.0;
    for (const auto& oc : outcomes) {
      summary << "seed " << oc.seed << ": steps=" << oc.steps
              << " final_V=" << fmt17(oc.final_v);
      if (base.learning) summary << " final_W=" << fmt17(oc.final_w);
      if (!base.constraints.empty()) {
        summary << " feasibility=" << fmt17(oc.final_feasibility);
      }
      summary << " rate=" << oc.rate_text
              << " mean_state=" << fmt_point(oc.mean_point) << "\n";
      final_vs.push_back(oc.final_v);
      worst_feas = std::max(worst_feas, oc.final_feasibility);
    }
    summary << "--\n";
    summary << "median final V: " << fmt17(median(final_vs)) << "\n";
    if (!base.constraints.empty()) {
      summary << "max final feasibility: " << fmt17(worst_feas) << "\n";
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  out << "summary: " << (fs::path(opt.out_dir) / "summary.txt").string() << "\n";
  return kExitOk;
}

int cmd_verify_robust(const std::string& graph_path, int r, std::ostream& out,
                      std::ostream& err) {
  graph::Topology topo;
  try {
    topo = graph::load_topology_file(graph_path);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (r < 1) {
    err << "error: the robustness level must be >= 1\n";
    return kExitConfig;
  }
  try {
    const auto cert = graph::is_r_robust(topo, r);
    if (cert.verdict) {
      out << "robust: every pair of disjoint nonempty subsets of the "
          << topo.m << " agents has a " << r << "-reachable side\n";
      return kExitOk;
    }
    out << "not robust: witness pair " << fmt_ids(cert.witness_pair->first)
        << " / " << fmt_ids(cert.witness_pair->second)
        << " has no " << r << "-reachable side\n";
    return kExitVerdictFalse;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << "\n";
    return kExitCapacity;
  }
}

int cmd_verify_corollary1(const std::string& graph_path, int n, int kappa_bar,
                          const std::vector<int>& f_set_one_based,
                          std::ostream& out, std::ostream& err) {
  graph::Topology topo;
  try {
    topo = graph::load_topology_file(graph_path);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (n < 1 || kappa_bar < 0) {
    err << "error: need dimension >= 1 and kappa >= 0\n";
    return kExitConfig;
  }
  std::vector<int> f_set;
  for (int id : f_set_one_based) {
    if (id < 1 || id > topo.m) {
      err << "error: core id " << id << " out of range 1.." << topo.m << "\n";
      return kExitConfig;
    }
    f_set.push_back(id - 1);
  }
  std::sort(f_set.begin(), f_set.end());
  f_set.erase(std::unique(f_set.begin(), f_set.end()), f_set.end());
  try {
    const auto cert = graph::check_corollary1(topo, n, kappa_bar, f_set);
    if (cert.verdict) {
      out << "satisfied: " << cert.detail << "\n";
      return kExitOk;
    }
    out << "not satisfied: " << cert.detail << "\n";
    if (cert.witness_subset) {
      out << "witness subset: " << fmt_ids(*cert.witness_subset) << "\n";
    }
    return kExitVerdictFalse;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << "\n";
    return kExitCapacity;
  }
}

int cmd_combine(const std::string& states_csv, const CombineOptions& opt,
                std::ostream& out, std::ostream& err) {
  try {
    const geometry::PointSet states = load_states_csv(states_csv);
    const int count = static_cast<int>(states.labels.size());
    const int dim = static_cast<int>(states.dim());
    if (states.index_of(opt.self_id) < 0) {
      throw ConfigError("self id " + std::to_string(opt.self_id) +
                        " is not among the states' ids");
    }
    if (opt.kappa < 0) throw ConfigError("kappa must be >= 0");

    resilient::NeighborObservation obs;
    obs.self_id = opt.self_id;
    obs.neighbor_states = states;
    obs.kappa = opt.kappa;
    obs.sigma = opt.sigma > 0 ? opt.sigma : dim * opt.kappa + 2;
    obs.validate();

    const auto comb =
        resilient::resilient_combination(obs, geometry::default_tol(), opt.trace);

    out << "states: " << count << " (dimension " << dim << ")\n";
    out << "self: " << opt.self_id << ", kappa: " << obs.kappa
        << ", sigma: " << obs.sigma << "\n";
    out << "subsets: " << comb.subset_count << "\n";
    out << "gamma: " << comb.gamma << ", alpha: " << fmt6(comb.alpha) << "\n";
    if (opt.trace) {
      auto fmt_labels = [](const std::vector<int>& labels) {
        std::string s = "{";
        for (std::size_t i = 0; i < labels.size(); ++i) {
          if (i) s += ", ";
          s += std::to_string(labels[i]);
        }
        return s + "}";
      };
      for (const auto& step : comb.trace) {
        out << "subset " << fmt_labels(step.s_subset);
        if (step.self_shortcut) {
          out << ": own state already lies in the others' hull, phi = "
              << fmt_point(step.phi) << "\n";
        } else {
          out << ": phi = " << fmt_point(step.phi) << "\n";
          for (const auto& b : step.b_subsets) {
            out << "  cover " << fmt_labels(b) << "\n";
          }
        }
      }
    }
    out << "v: " << fmt_point(comb.v) << "\n";
    out << "weights:\n";
    for (std::size_t k = 0; k < states.labels.size(); ++k) {
      out << "  id " << states.labels[k] << ": "
          << fmt6(comb.aggregate_weights(static_cast<Eigen::Index>(k))) << "\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace rescon::scenario
