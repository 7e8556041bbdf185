#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "cklemap/error.hpp"
#include "cklemap/sparse_cholesky.hpp"

namespace cklemap {

// Exact minimum degree on the explicit elimination graph. Quadratic in the
// worst case, which is fine for the mesh sizes this library targets.
std::vector<Index> minimum_degree_ordering(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("minimum_degree_ordering: matrix must be square");
  const Index n = a.rows();
  std::vector<std::vector<Index>> adj(n);
  for (Index j = 0; j < a.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
      const Index i = it.row();
      if (i == j) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }

  std::set<std::pair<Index, Index>> queue;
  for (Index v = 0; v < n; ++v) queue.emplace(static_cast<Index>(adj[v].size()), v);

  std::vector<char> eliminated(n, 0);
  std::vector<Index> order;
  order.reserve(n);
  std::vector<Index> merged;
  while (!queue.empty()) {
    const Index v = queue.begin()->second;
    queue.erase(queue.begin());
    eliminated[v] = 1;
    order.push_back(v);

    const std::vector<Index> clique = std::move(adj[v]);
    adj[v].clear();
    for (const Index u : clique) {
      queue.erase({static_cast<Index>(adj[u].size()), u});
      merged.clear();
      std::set_union(adj[u].begin(), adj[u].end(), clique.begin(), clique.end(),
                     std::back_inserter(merged));
      std::erase_if(merged, [&](Index w) { return w == u || w == v; });
      adj[u] = merged;
      queue.emplace(static_cast<Index>(adj[u].size()), u);
    }
  }
  return order;
}

}  // namespace cklemap
