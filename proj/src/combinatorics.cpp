#include "htclt/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "htclt/errors.hpp"

namespace htclt {

namespace {

constexpr int kMaxGluingVertices = 10;
constexpr int kMaxCovarianceOrder = 7;

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<int> parent_;
};

// T^π graphs that can appear in a nonzero gluing, with how many partitions give each.
std::map<MultiGraph, long long> tree_quotients(int K) {
  std::map<MultiGraph, long long> out;
  for (const Partition& pi : partitions(K)) {
    MultiGraph t = quotient_cycle_graph(pi);
    // A gluing embeds T^π injectively, so a cycle or loop in T^π survives.
    if (t.skeleton_is_tree()) ++out[t];
  }
  return out;
}

}  // namespace

std::vector<int> Partition::block_of() const {
  std::vector<int> idx(static_cast<std::size_t>(K), -1);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (int e : blocks[b]) idx[static_cast<std::size_t>(e)] = static_cast<int>(b);
  return idx;
}

std::string Partition::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b) os << ',';
    os << '{';
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      if (i) os << ',';
      os << blocks[b][i] + 1;
    }
    os << '}';
  }
  os << '}';
  return os.str();
}

void MultiGraph::add_edge(int a, int b, int multiplicity) {
  if (a < 0 || b < 0 || a >= n_ || b >= n_) throw DomainError("add_edge: vertex out of range");
  if (multiplicity < 1) throw DomainError("add_edge: multiplicity must be positive");
  edges_[{std::min(a, b), std::max(a, b)}] += multiplicity;
}

int MultiGraph::multiplicity(int a, int b) const {
  const auto it = edges_.find({std::min(a, b), std::max(a, b)});
  return it == edges_.end() ? 0 : it->second;
}

int MultiGraph::total_multiplicity() const {
  int s = 0;
  for (const auto& [e, m] : edges_) s += m;
  return s;
}

bool MultiGraph::has_loop() const {
  return std::any_of(edges_.begin(), edges_.end(),
                     [](const auto& kv) { return kv.first.first == kv.first.second; });
}

bool MultiGraph::has_isolated_vertex() const {
  std::vector<bool> seen(static_cast<std::size_t>(n_), false);
  for (const auto& [e, m] : edges_) {
    seen[static_cast<std::size_t>(e.first)] = true;
    seen[static_cast<std::size_t>(e.second)] = true;
  }
  return std::find(seen.begin(), seen.end(), false) != seen.end();
}

bool MultiGraph::is_connected() const {
  if (n_ <= 1) return true;
  DisjointSets ds(n_);
  int components = n_;
  for (const auto& [e, m] : edges_)
    if (ds.unite(e.first, e.second)) --components;
  return components == 1;
}

bool MultiGraph::skeleton_is_tree() const {
  if (has_loop()) return false;
  if (static_cast<int>(edges_.size()) != n_ - 1) return false;
  return is_connected();
}

MultiGraph MultiGraph::relabeled(const std::vector<int>& perm) const {
  MultiGraph g(n_);
  for (const auto& [e, m] : edges_) g.add_edge(perm[e.first], perm[e.second], m);
  return g;
}

std::string MultiGraph::to_string() const {
  std::ostringstream os;
  os << "V=" << n_ << " E={";
  bool first = true;
  for (const auto& [e, m] : edges_) {
    if (!first) os << ',';
    first = false;
    os << e.first << '-' << e.second << 'x' << m;
  }
  os << '}';
  return os.str();
}

std::vector<Partition> partitions(int K) {
  if (K < 1 || K > kMaxPartitionSize)
    throw CapacityError("partitions: K must lie in [1, " + std::to_string(kMaxPartitionSize) + "]");
  std::vector<Partition> out;
  // restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[0..i-1])
  std::vector<int> a(static_cast<std::size_t>(K), 0);
  std::vector<int> mx(static_cast<std::size_t>(K), 0);
  while (true) {
    Partition p;
    p.K = K;
    p.blocks.resize(static_cast<std::size_t>(mx[K - 1] + 1));
    for (int i = 0; i < K; ++i) p.blocks[static_cast<std::size_t>(a[i])].push_back(i);
    out.push_back(std::move(p));

    int i = K - 1;
    while (i > 0 && a[i] == mx[i - 1] + 1) --i;
    if (i == 0) break;
    ++a[i];
    mx[i] = std::max(mx[i - 1], a[i]);
    for (int j = i + 1; j < K; ++j) {
      a[j] = 0;
      mx[j] = mx[i];
    }
  }
  return out;
}

long long bell_number(int n) {
  if (n < 0) throw DomainError("bell_number: negative argument");
  std::vector<long long> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<long long> next{row.back()};
    for (long long v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

MultiGraph quotient_cycle_graph(const Partition& pi) {
  const std::vector<int> idx = pi.block_of();
  MultiGraph g(static_cast<int>(pi.blocks.size()));
  for (int n = 0; n < pi.K; ++n) g.add_edge(idx[n], idx[(n + 1) % pi.K]);
  return g;
}

double tau0(const MultiGraph& t, const CSequence& c) {
  if (!t.skeleton_is_tree()) return 0.0;
  double prod = 1.0;
  for (const auto& [e, m] : t.edges()) {
    if (m % 2 != 0) return 0.0;
    const std::size_t k = static_cast<std::size_t>(m / 2);
    if (k > c.size())
      throw ConfigError("tau0: C_" + std::to_string(k) + " required but sequence has length " +
                        std::to_string(c.size()));
    prod *= c[k - 1];
  }
  return prod;
}

std::vector<MultiGraph> gluings(const MultiGraph& t1, const MultiGraph& t2) {
  const int n1 = t1.vertex_count();
  const int n2 = t2.vertex_count();
  if (n1 + n2 > kMaxGluingVertices)
    throw CapacityError("gluings: more than " + std::to_string(kMaxGluingVertices) + " vertices");

  std::vector<MultiGraph> out;
  // match[v2] = vertex of T1 that v2 merges with, or -1
  std::vector<int> match(static_cast<std::size_t>(n2), -1);
  std::vector<bool> used(static_cast<std::size_t>(n1), false);

  auto emit = [&]() {
    std::vector<int> label(static_cast<std::size_t>(n2));
    int next = n1;
    for (int v = 0; v < n2; ++v) label[v] = match[v] >= 0 ? match[v] : next++;
    bool shared = false;
    for (const auto& [e, m] : t2.edges()) {
      if (t1.multiplicity(label[e.first], label[e.second]) > 0) {
        shared = true;
        break;
      }
    }
    if (!shared) return;
    MultiGraph g(next);
    for (const auto& [e, m] : t1.edges()) g.add_edge(e.first, e.second, m);
    for (const auto& [e, m] : t2.edges()) g.add_edge(label[e.first], label[e.second], m);
    out.push_back(std::move(g));
  };

  auto recurse = [&](auto&& self, int v) -> void {
    if (v == n2) {
      emit();
      return;
    }
    match[v] = -1;
    self(self, v + 1);
    for (int u = 0; u < n1; ++u) {
      if (used[u]) continue;
      used[u] = true;
      match[v] = u;
      self(self, v + 1);
      used[u] = false;
    }
    match[v] = -1;
  };
  recurse(recurse, 0);
  return out;
}

double limiting_moment_mean(int K, const CSequence& c) {
  double s = 0.0;
  for (const Partition& pi : partitions(K)) s += tau0(quotient_cycle_graph(pi), c);
  return s;
}

double limiting_moment_covariance(int K1, int K2, const CSequence& c) {
  if (K1 < 1 || K2 < 1 || K1 > kMaxCovarianceOrder || K2 > kMaxCovarianceOrder)
    throw CapacityError("limiting_moment_covariance: orders must lie in [1, 7]");
  const auto q1 = tree_quotients(K1);
  const auto q2 = K1 == K2 ? q1 : tree_quotients(K2);
  double total = 0.0;
  for (const auto& [g1, n1] : q1) {
    for (const auto& [g2, n2] : q2) {
      double s = 0.0;
      for (const MultiGraph& g : gluings(g1, g2)) s += tau0(g, c);
      total += static_cast<double>(n1 * n2) * s;
    }
  }
  return total;
}

}  // namespace htclt
