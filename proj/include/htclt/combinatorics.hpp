#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace htclt {

using CSequence = std::vector<double>;

/// Set partition of {0, ..., K-1}. Blocks are sorted and ordered by their
/// smallest element, so equal partitions compare equal.
struct Partition {
  int K = 0;
  std::vector<std::vector<int>> blocks;

  /// Index of the block holding element n.
  std::vector<int> block_of() const;
  std::string to_string() const;  // 1-based, e.g. {{1,3},{2},{4}}
  bool operator==(const Partition&) const = default;
};

/// Undirected multigraph with loops on vertices 0..n-1.
class MultiGraph {
 public:
  using Edge = std::pair<int, int>;  // first <= second

  MultiGraph() = default;
  explicit MultiGraph(int vertex_count) : n_(vertex_count) {}

  int vertex_count() const noexcept { return n_; }
  const std::map<Edge, int>& edges() const noexcept { return edges_; }

  void add_edge(int a, int b, int multiplicity = 1);
  int multiplicity(int a, int b) const;
  int total_multiplicity() const;

  bool has_loop() const;
  bool has_isolated_vertex() const;
  bool is_connected() const;
  /// Skeleton (multiplicities forgotten) is a tree without loops.
  bool skeleton_is_tree() const;

  /// Graph with vertex v renamed perm[v].
  MultiGraph relabeled(const std::vector<int>& perm) const;

  std::string to_string() const;
  auto operator<=>(const MultiGraph&) const = default;

 private:
  int n_ = 0;
  std::map<Edge, int> edges_;
};

inline constexpr int kMaxPartitionSize = 10;

/// All set partitions of {0..K-1} in restricted-growth order, 1 <= K <= 10.
std::vector<Partition> partitions(int K);

/// Bell numbers by the Bell-triangle recurrence.
long long bell_number(int n);

/// Quotient of the K-cycle 0→1→…→K−1→0 by π: one edge block(n)–block(n+1) per n.
MultiGraph quotient_cycle_graph(const Partition& pi);

/// Limiting injective trace: Π_k C_k^{q_k} when T is a fat tree with all
/// multiplicities even and no loops, otherwise 0.
double tau0(const MultiGraph& t, const CSequence& c);

/// Quotients of the disjoint union T1 ⊔ T2 by partitions whose blocks hold at
/// most one vertex of each graph, keeping those where both graphs put an edge
/// between the same merged endpoints. Vertices of T1 keep their labels.
std::vector<MultiGraph> gluings(const MultiGraph& t1, const MultiGraph& t2);

/// lim E[(1/N) Tr A^K] = Σ_{π ∈ P(K)} τ⁰[T^π], K <= 10.
double limiting_moment_mean(int K, const CSequence& c);

/// Limiting Cov of N^{-1/2} Tr A^{K1} and N^{-1/2} Tr A^{K2}, K1, K2 <= 7.
double limiting_moment_covariance(int K1, int K2, const CSequence& c);

}  // namespace htclt
