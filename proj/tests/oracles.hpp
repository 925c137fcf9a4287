#pragma once

// Independent reference computations. None of these call into the solver or
// trainer they are used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "collatio/corpus.hpp"

namespace oracles {

// Every basic feasible solution of the balanced transportation problem:
// subsets of m+n-1 cells forming a spanning tree of the bipartite row/column
// graph, solved by peeling leaves, kept when all flows are non-negative.
inline std::vector<double> vertex_plan_costs(const std::vector<double>& supply, const std::vector<double>& demand,
                                             const Eigen::MatrixXd& cost) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand.size());
  const int cells = m * n;
  const int basis = m + n - 1;
  std::vector<double> costs;

  std::vector<int> choice(static_cast<std::size_t>(basis));
  std::iota(choice.begin(), choice.end(), 0);
  for (;;) {
    // Acyclic check by union-find over m + n nodes.
    std::vector<int> parent(static_cast<std::size_t>(m + n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      return x;
    };
    bool tree = true;
    for (int c : choice) {
      int r = find(c / n), k = find(m + c % n);
      if (r == k) {
        tree = false;
        break;
      }
      parent[static_cast<std::size_t>(r)] = k;
    }
    if (tree) {
      std::vector<double> rs(supply), cs(demand);
      std::vector<bool> used(static_cast<std::size_t>(basis), false);
      std::vector<double> flow(static_cast<std::size_t>(basis), 0.0);
      bool progress = true;
      int remaining = basis;
      while (remaining > 0 && progress) {
        progress = false;
        for (int node = 0; node < m + n; ++node) {
          int only = -1, degree = 0;
          for (int k = 0; k < basis; ++k) {
            if (used[static_cast<std::size_t>(k)]) continue;
            const int c = choice[static_cast<std::size_t>(k)];
            if ((node < m && c / n == node) || (node >= m && c % n == node - m)) {
              ++degree;
              only = k;
            }
          }
          if (degree != 1) continue;
          const int c = choice[static_cast<std::size_t>(only)];
          const int i = c / n, j = c % n;
          const double x = node < m ? rs[static_cast<std::size_t>(i)] : cs[static_cast<std::size_t>(j)];
          flow[static_cast<std::size_t>(only)] = x;
          rs[static_cast<std::size_t>(i)] -= x;
          cs[static_cast<std::size_t>(j)] -= x;
          used[static_cast<std::size_t>(only)] = true;
          --remaining;
          progress = true;
        }
      }
      bool feasible = remaining == 0;
      double total = 0;
      for (int k = 0; k < basis && feasible; ++k) {
        if (flow[static_cast<std::size_t>(k)] < -1e-12) feasible = false;
        const int c = choice[static_cast<std::size_t>(k)];
        total += flow[static_cast<std::size_t>(k)] * cost(c / n, c % n);
      }
      if (feasible) costs.push_back(total);
    }
    // next combination
    int k = basis - 1;
    while (k >= 0 && choice[static_cast<std::size_t>(k)] == cells - basis + k) --k;
    if (k < 0) break;
    ++choice[static_cast<std::size_t>(k)];
    for (int r = k + 1; r < basis; ++r) choice[static_cast<std::size_t>(r)] = choice[static_cast<std::size_t>(r - 1)] + 1;
  }
  return costs;
}

inline double vertex_plan_min(const std::vector<double>& supply, const std::vector<double>& demand,
                              const Eigen::MatrixXd& cost) {
  const auto costs = vertex_plan_costs(supply, demand, cost);
  return costs.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::min_element(costs.begin(), costs.end());
}

// Minimum over all permutations: the uniform square case reduces to assignment.
inline double assignment_min(const Eigen::MatrixXd& cost) {
  std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) total += cost(static_cast<Eigen::Index>(i), perm[i]);
    best = std::min(best, total / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Ordered position pairs (p, q), p != q, |p - q| <= window, distinct tokens, same line.
inline Eigen::MatrixXd brute_force_cooccurrence(const std::vector<collatio::Edition>& editions, std::size_t v,
                                                int window) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v));
  for (const auto& e : editions)
    for (const auto& l : e.lines)
      for (std::size_t p = 0; p < l.tokens.size(); ++p)
        for (std::size_t q = 0; q < l.tokens.size(); ++q) {
          if (p == q || l.tokens[p] == l.tokens[q]) continue;
          const long gap = static_cast<long>(p) - static_cast<long>(q);
          if (std::labs(gap) <= window) c(l.tokens[p], l.tokens[q]) += 1;
        }
  return c;
}

}  // namespace oracles
