#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "detlab/ensembles.hpp"
#include "detlab/error.hpp"

namespace detlab {

namespace {

// Multigraph on N vertices stored as an edge list plus adjacency lists
// (with repetition) so that multiplicities can be counted in O(d).
class Multigraph {
 public:
  explicit Multigraph(std::size_t n) : adj_(n) {}

  void add(std::size_t u, std::size_t v) {
    edges_.emplace_back(u, v);
    adj_[u].push_back(v);
    if (u != v) adj_[v].push_back(u);
  }

  std::size_t multiplicity(std::size_t u, std::size_t v) const {
    return static_cast<std::size_t>(std::count(adj_[u].begin(), adj_[u].end(), v));
  }

  bool is_bad(std::size_t e) const {
    const auto [u, v] = edges_[e];
    return u == v || multiplicity(u, v) > 1;
  }

  // Replace edges e=(a,b), f=(c,d) with (a,c), (b,d).
  void swap(std::size_t e, std::size_t f, bool flip) {
    auto [a, b] = edges_[e];
    auto [c, d] = edges_[f];
    if (flip) std::swap(c, d);
    erase_adj(a, b);
    erase_adj(c, d);
    edges_[e] = {a, c};
    edges_[f] = {b, d};
    adj_[a].push_back(c);
    if (a != c) adj_[c].push_back(a);
    adj_[b].push_back(d);
    if (b != d) adj_[d].push_back(b);
  }

  std::size_t edge_count() const { return edges_.size(); }
  const std::pair<std::size_t, std::size_t>& edge(std::size_t e) const { return edges_[e]; }

  bool simple() const {
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (is_bad(e)) return false;
    return true;
  }

 private:
  void erase_adj(std::size_t u, std::size_t v) {
    auto drop = [](std::vector<std::size_t>& list, std::size_t x) {
      auto it = std::find(list.begin(), list.end(), x);
      if (it != list.end()) list.erase(it);
    };
    drop(adj_[u], v);
    if (u != v) drop(adj_[v], u);
  }

  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

Multigraph random_pairing(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<std::size_t> stubs;
  stubs.reserve(n * d);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t k = 0; k < d; ++k) stubs.push_back(v);
  for (std::size_t i = stubs.size(); i > 1; --i) std::swap(stubs[i - 1], stubs[rng.below(i)]);
  Multigraph g(n);
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) g.add(stubs[i], stubs[i + 1]);
  return g;
}

// Each accepted swap removes one loop or surplus parallel edge and creates
// neither, so a single pass with bounded retries per edge suffices.
bool repair(Multigraph& g, Rng& rng, std::size_t tries_per_edge) {
  const std::size_t m = g.edge_count();
  for (std::size_t e = 0; e < m; ++e) {
    for (std::size_t tries = 0; tries < tries_per_edge && g.is_bad(e); ++tries) {
      const std::size_t f = rng.below(m);
      const bool flip = rng.uniform() < 0.5;
      if (f == e) continue;
      auto [a, b] = g.edge(e);
      auto [c, d] = g.edge(f);
      if (flip) std::swap(c, d);
      if (a == c || b == d) continue;
      if (g.multiplicity(a, c) > 0 || g.multiplicity(b, d) > 0) continue;
      g.swap(e, f, flip);
    }
  }
  return g.simple();
}

void randomize(Multigraph& g, Rng& rng, std::size_t swaps) {
  const std::size_t m = g.edge_count();
  if (m < 2) return;
  for (std::size_t s = 0; s < swaps; ++s) {
    const std::size_t e = rng.below(m);
    const std::size_t f = rng.below(m);
    const bool flip = rng.uniform() < 0.5;
    if (e == f) continue;
    auto [a, b] = g.edge(e);
    auto [c, d] = g.edge(f);
    if (flip) std::swap(c, d);
    if (a == c || b == d) continue;
    if (g.multiplicity(a, c) > 0 || g.multiplicity(b, d) > 0) continue;
    g.swap(e, f, flip);
  }
}

}  // namespace

SymMatrix sample_dregular_adjacency(std::size_t N, std::size_t d, std::uint64_t seed) {
  if (d == 0 || d >= N) throw Error(ErrorCode::invalid_spec, "d-regular requires 0 < d < N");
  if ((N * d) % 2 != 0) throw Error(ErrorCode::invalid_spec, "d-regular requires N*d even");
  Rng rng(seed);
  constexpr int kRestarts = 10;
  for (int restart = 0; restart < kRestarts; ++restart) {
    Multigraph g = random_pairing(N, d, rng);
    if (!repair(g, rng, 10 * N * d + 100)) continue;
    randomize(g, rng, 10 * N * d);
    SymMatrix adj(N);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      const auto [u, v] = g.edge(e);
      adj.set(u, v, 1.0);
    }
    return adj;
  }
  throw Error(ErrorCode::dregular_generation_failure,
              "no simple graph after " + std::to_string(kRestarts) + " restarts (N=" +
                  std::to_string(N) + ", d=" + std::to_string(d) + ")");
}

}  // namespace detlab
