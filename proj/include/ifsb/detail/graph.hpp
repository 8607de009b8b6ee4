#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

namespace ifsb::detail {

/// Adjacency lists of a directed graph on n vertices.
using Digraph = std::vector<std::vector<std::size_t>>;

/// Strongly connected components (iterative Tarjan). Returns the component
/// id of every vertex; ids are in reverse topological order.
inline std::vector<std::size_t> strong_components(const Digraph& g, std::size_t* count = nullptr) {
  const std::size_t n = g.size();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (vertex, next edge)
  std::size_t next_index = 0, ncomp = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [v, e] = call.back();
      if (e == 0 && index[v] == kUnset) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (e < g[v].size()) {
        const std::size_t w = g[v][e++];
        if (index[w] == kUnset) {
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  if (count) *count = ncomp;
  return comp;
}

/// Closed classes are components with no edge leaving them. Returns their
/// number and, if asked, which vertices belong to one.
inline std::size_t closed_class_count(const Digraph& g, std::vector<bool>* members = nullptr) {
  std::size_t ncomp = 0;
  const auto comp = strong_components(g, &ncomp);
  std::vector<bool> leaks(ncomp, false);
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::size_t w : g[v])
      if (comp[w] != comp[v]) leaks[comp[v]] = true;
  if (members) {
    members->assign(g.size(), false);
    for (std::size_t v = 0; v < g.size(); ++v) (*members)[v] = !leaks[comp[v]];
  }
  return static_cast<std::size_t>(std::count(leaks.begin(), leaks.end(), false));
}

}  // namespace ifsb::detail
