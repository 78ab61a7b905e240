#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rescon/errors.hpp"

namespace rescon::graph {

// Directed communication topology over agents 0..m-1. in_neighbors[i] lists
// the agents i hears from, sorted ascending, always including i itself.
// byzantine_in[i] is the declared bound on compromised in-edges of agent i.
struct Topology {
  int m = 0;
  std::vector<std::vector<int>> in_neighbors;
  std::vector<int> byzantine_in;

  // Total in-degree d_i: genuine in-neighbors (self included) plus the
  // declared compromised slots.
  int degree(int i) const {
    return int(in_neighbors[i].size()) + byzantine_in[i];
  }
  // Throws PreconditionError: bad sizes, ids out of range, unsorted or
  // duplicate lists, missing self-loops, negative bounds.
  void validate() const;
};

// One period of a repeating topology sequence.
struct ScheduleEntry {
  Topology topology;
  int duration = 1;
};

struct TopologySchedule {
  std::vector<ScheduleEntry> entries;

  int period() const;
  const Topology& at(long t) const;  // cyclic, t >= 0
  void validate() const;             // consistent m across entries, durations >= 1
};

// True iff some member of subset has at least r in-neighbors outside it.
bool is_r_reachable(const Topology& g, const std::vector<int>& subset, int r);

struct RobustnessCertificate {
  bool verdict = false;
  int phi = 0;  // redundancy margin from the complete-core check
  // Disjoint pair with neither side r-reachable (robustness failure).
  std::optional<std::pair<std::vector<int>, std::vector<int>>> witness_pair;
  // Outside subset lacking the required reach (core-check failure).
  std::optional<std::vector<int>> witness_subset;
  std::string detail;
};

// Exhaustive robustness decision: every pair of disjoint nonempty subsets
// has at least one r-reachable side. Throws CapacityError when
// m > exhaustive_limit (the check enumerates 3^m assignments).
RobustnessCertificate is_r_robust(const Topology& g, int r,
                                  int exhaustive_limit = 10);

// Certifies the complete-core redundancy condition: f_set induces a complete
// subgraph (self-loops included), |f_set| >= 2*n*kappa_bar + 1, and every
// nonempty subset of the remaining agents is (n*kappa_bar + 1)-reachable.
// On success phi = |f_set| - n*kappa_bar. Throws CapacityError when the
// outside-agent count exceeds exhaustive_limit.
RobustnessCertificate check_corollary1(const Topology& g, int n, int kappa_bar,
                                       const std::vector<int>& f_set,
                                       int exhaustive_limit = 20);

// Random topology with a complete core {0..f-1}; every outside agent hears
// from min_links random core members, itself, and a few random outside
// peers. Satisfies check_corollary1 by construction (verified before
// returning). Requires f >= 2*n*kappa_bar + 1 and min_links >= n*kappa_bar+1.
Topology generate_corollary1_graph(int m, int n, int kappa_bar, int f,
                                   int min_links, std::uint64_t seed);

struct PaParams {
  int attach = 2;             // edges each newcomer creates
  bool in_edges_only = false; // newcomers only listen; keeps in-degree exact
};

// Growth-by-attachment topology: complete seed on attach+1 nodes, then each
// newcomer connects to `attach` distinct existing nodes picked with
// probability proportional to degree+1. Default mode symmetrizes every edge;
// in_edges_only leaves the new links one-way (newcomer listening), which
// makes every agent's genuine in-degree exactly attach+1 (self included).
Topology generate_preferential_attachment(int m, std::uint64_t seed,
                                          const PaParams& params);

// Strongly connected components in a deterministic order.
std::vector<std::vector<int>> strongly_connected_components(const Topology& g);

// The unique source component of the condensation when the graph is rooted
// (some agent reaches every other); nullopt otherwise.
std::optional<std::vector<int>> root_component(const Topology& g);

// Removes up to max_per_node random non-self in-edges from every node
// (count drawn uniformly in [0, max_per_node] per node).
Topology remove_random_in_edges(const Topology& g, int max_per_node,
                                std::uint64_t seed);

// Text format, one agent per line, ids 1-based:
//   id: n1 n2 ... | kappa
// Every agent must list itself. '#' starts a comment line.
Topology load_topology(std::istream& in);
Topology load_topology_file(const std::string& path);
void save_topology(const Topology& g, std::ostream& out);

}  // namespace rescon::graph
