#include "collatio/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "collatio/error.hpp"

namespace collatio {

void BagOfWords::validate() const {
  if (entries.empty()) throw ValidationError("bag of words is empty");
  double total = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (!(entries[k].second > 0)) throw ValidationError("bag weights must be strictly positive");
    if (k > 0 && entries[k - 1].first >= entries[k].first)
      throw ValidationError("bag tokens must be distinct and sorted");
    total += entries[k].second;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("bag weights must sum to 1");
}

BagOfWords nbow(std::span<const TokenId> tokens, LineId source) {
  if (tokens.empty()) throw ValidationError("cannot build a bag of words from an empty line");
  std::map<TokenId, std::size_t> counts;
  for (TokenId t : tokens) ++counts[t];
  BagOfWords bag;
  bag.source_line = std::move(source);
  const auto n = static_cast<double>(tokens.size());
  for (auto [t, c] : counts) bag.entries.emplace_back(t, static_cast<double>(c) / n);
  return bag;
}

BagOfWords nbow(const Line& line) { return nbow(line.tokens, line.id); }

double ground_distance(const EmbeddingState& state, TokenId i, TokenId j) {
  if (i == j) {
    state.check_token(i);
    return 0.0;
  }
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * cosine(state, i, j)));
}

namespace {

struct Cell {
  int i;
  int j;
};

// Potentials u (rows) and v (columns) with u_i + v_j = c_ij on every basic cell.
void compute_potentials(const std::vector<std::vector<int>>& row_adj, const std::vector<std::vector<int>>& col_adj,
                        const Eigen::MatrixXd& cost, std::vector<double>& u, std::vector<double>& v) {
  const int m = static_cast<int>(row_adj.size());
  const int n = static_cast<int>(col_adj.size());
  constexpr double unset = std::numeric_limits<double>::quiet_NaN();
  std::fill(u.begin(), u.end(), unset);
  std::fill(v.begin(), v.end(), unset);
  // Nodes 0..m-1 are rows, m..m+n-1 columns.
  std::vector<int> stack{0};
  u[0] = 0;
  while (!stack.empty()) {
    int node = stack.back();
    stack.pop_back();
    if (node < m) {
      for (int j : row_adj[static_cast<std::size_t>(node)])
        if (std::isnan(v[static_cast<std::size_t>(j)])) {
          v[static_cast<std::size_t>(j)] = cost(node, j) - u[static_cast<std::size_t>(node)];
          stack.push_back(m + j);
        }
    } else {
      int j = node - m;
      for (int i : col_adj[static_cast<std::size_t>(j)])
        if (std::isnan(u[static_cast<std::size_t>(i)])) {
          u[static_cast<std::size_t>(i)] = cost(i, j) - v[static_cast<std::size_t>(j)];
          stack.push_back(i);
        }
    }
  }
  (void)n;
}

// Tree path from row node `from_row` to column node `to_col`, as the list of basic cells traversed.
std::vector<Cell> tree_path(const std::vector<std::vector<int>>& row_adj, const std::vector<std::vector<int>>& col_adj,
                            int from_row, int to_col) {
  const int m = static_cast<int>(row_adj.size());
  const int n = static_cast<int>(col_adj.size());
  std::vector<int> parent(static_cast<std::size_t>(m + n), -2);
  std::vector<int> queue{from_row};
  parent[static_cast<std::size_t>(from_row)] = -1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int node = queue[head];
    if (node == m + to_col) break;
    if (node < m) {
      for (int j : row_adj[static_cast<std::size_t>(node)])
        if (parent[static_cast<std::size_t>(m + j)] == -2) {
          parent[static_cast<std::size_t>(m + j)] = node;
          queue.push_back(m + j);
        }
    } else {
      for (int i : col_adj[static_cast<std::size_t>(node - m)])
        if (parent[static_cast<std::size_t>(i)] == -2) {
          parent[static_cast<std::size_t>(i)] = node;
          queue.push_back(i);
        }
    }
  }
  if (parent[static_cast<std::size_t>(m + to_col)] == -2) throw std::logic_error("transport basis is not a spanning tree");

  // Walk back from the column to the row; cells come out ordered from the column side.
  std::vector<Cell> path;
  int node = m + to_col;
  while (node != from_row) {
    int prev = parent[static_cast<std::size_t>(node)];
    if (node >= m)
      path.push_back({prev, node - m});
    else
      path.push_back({node, prev - m});
    node = prev;
  }
  return path;
}

void erase_edge(std::vector<std::vector<int>>& row_adj, std::vector<std::vector<int>>& col_adj, Cell c) {
  auto& r = row_adj[static_cast<std::size_t>(c.i)];
  r.erase(std::find(r.begin(), r.end(), c.j));
  auto& col = col_adj[static_cast<std::size_t>(c.j)];
  col.erase(std::find(col.begin(), col.end(), c.i));
}

}  // namespace

TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                  const Eigen::MatrixXd& cost) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand.size());
  if (m == 0 || n == 0) throw ValidationError("transport problem needs non-empty supply and demand");
  if (cost.rows() != m || cost.cols() != n) throw ValidationError("cost matrix shape mismatch");
  double total_supply = 0, total_demand = 0;
  for (double x : supply) {
    if (!(x >= 0)) throw ValidationError("supply must be non-negative");
    total_supply += x;
  }
  for (double x : demand) {
    if (!(x >= 0)) throw ValidationError("demand must be non-negative");
    total_demand += x;
  }
  if (std::abs(total_supply - total_demand) > 1e-9 * std::max(1.0, total_supply))
    throw ValidationError("transport problem is unbalanced");

  TransportSolution sol;
  sol.flow = Eigen::MatrixXd::Zero(m, n);
  std::vector<std::vector<int>> row_adj(static_cast<std::size_t>(m));
  std::vector<std::vector<int>> col_adj(static_cast<std::size_t>(n));
  std::vector<std::vector<char>> basic(static_cast<std::size_t>(m), std::vector<char>(static_cast<std::size_t>(n), 0));

  // North-west corner start: exactly m + n - 1 basic cells, zero-mass ones where degenerate.
  {
    std::vector<double> ra(supply.begin(), supply.end());
    std::vector<double> rb(demand.begin(), demand.end());
    int i = 0, j = 0;
    while (true) {
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      const double x = std::min(ra[si], rb[sj]);
      sol.flow(i, j) = x;
      basic[si][sj] = 1;
      row_adj[si].push_back(j);
      col_adj[sj].push_back(i);
      ra[si] -= x;
      rb[sj] -= x;
      if (i == m - 1 && j == n - 1) break;
      if (i == m - 1)
        ++j;
      else if (j == n - 1)
        ++i;
      else if (ra[si] <= rb[sj])
        ++i;
      else
        ++j;
    }
  }

  constexpr double kReducedCostTol = 1e-12;
  std::vector<double> u(static_cast<std::size_t>(m));
  std::vector<double> v(static_cast<std::size_t>(n));
  const int max_pivots = 50 * (m + n) * (m + n) + 100;

  for (;;) {
    compute_potentials(row_adj, col_adj, cost, u, v);

    // Bland's rule: first improving cell in (i, j) order.
    Cell enter{-1, -1};
    for (int i = 0; i < m && enter.i < 0; ++i)
      for (int j = 0; j < n; ++j) {
        if (basic[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
        if (cost(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)] < -kReducedCostTol) {
          enter = {i, j};
          break;
        }
      }
    if (enter.i < 0) break;
    if (++sol.pivots > max_pivots) throw std::runtime_error("transport simplex failed to converge");

    // Cycle: entering cell (+), then alternating -, +, ... along the tree path from its column back to its row.
    std::vector<Cell> path = tree_path(row_adj, col_adj, enter.i, enter.j);
    Cell leave{-1, -1};
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Cell c = path[k];
      const double x = sol.flow(c.i, c.j);
      if (x < theta || (x == theta && (c.i < leave.i || (c.i == leave.i && c.j < leave.j)))) {
        theta = x;
        leave = c;
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Cell c = path[k];
      sol.flow(c.i, c.j) += (k % 2 == 0) ? -theta : theta;
    }
    sol.flow(enter.i, enter.j) = theta;
    sol.flow(leave.i, leave.j) = 0.0;

    erase_edge(row_adj, col_adj, leave);
    basic[static_cast<std::size_t>(leave.i)][static_cast<std::size_t>(leave.j)] = 0;
    basic[static_cast<std::size_t>(enter.i)][static_cast<std::size_t>(enter.j)] = 1;
    row_adj[static_cast<std::size_t>(enter.i)].push_back(enter.j);
    col_adj[static_cast<std::size_t>(enter.j)].push_back(enter.i);
  }

  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      if (sol.flow(i, j) < 0) sol.flow(i, j) = 0;
      sol.cost += sol.flow(i, j) * cost(i, j);
    }
  return sol;
}

namespace {

TransportPlan solve_oriented(const EmbeddingState& state, const BagOfWords& a, const BagOfWords& b) {
  TransportPlan plan;
  plan.iteration = state.iteration;
  if (a.entries == b.entries) {
    for (const auto& [t, w] : a.entries) plan.flows.push_back({t, t, w});
    return plan;
  }
  const auto m = static_cast<Eigen::Index>(a.size());
  const auto n = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd cost(m, n);
  std::vector<double> supply, demand;
  for (Eigen::Index i = 0; i < m; ++i) supply.push_back(a.entries[static_cast<std::size_t>(i)].second);
  for (Eigen::Index j = 0; j < n; ++j) demand.push_back(b.entries[static_cast<std::size_t>(j)].second);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cost(i, j) = ground_distance(state, a.entries[static_cast<std::size_t>(i)].first,
                                   b.entries[static_cast<std::size_t>(j)].first);

  TransportSolution sol = solve_transport(supply, demand, cost);
  plan.cost = sol.cost;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (sol.flow(i, j) > 0)
        plan.flows.push_back({a.entries[static_cast<std::size_t>(i)].first,
                              b.entries[static_cast<std::size_t>(j)].first, sol.flow(i, j)});
  return plan;
}

}  // namespace

TransportPlan wmd(const EmbeddingState& state, const BagOfWords& a, const BagOfWords& b) {
  a.validate();
  b.validate();
  for (const auto& e : a.entries) state.check_token(e.first);
  for (const auto& e : b.entries) state.check_token(e.first);

  // Solve in a canonical orientation so wmd(a, b) and wmd(b, a) agree bit for bit.
  if (b.entries < a.entries) {
    TransportPlan plan = solve_oriented(state, b, a);
    for (auto& f : plan.flows) std::swap(f.from, f.to);
    std::sort(plan.flows.begin(), plan.flows.end(),
              [](const Flow& x, const Flow& y) { return std::tie(x.from, x.to) < std::tie(y.from, y.to); });
    return plan;
  }
  return solve_oriented(state, a, b);
}

double relaxed_lower_bound(const EmbeddingState& state, const BagOfWords& a, const BagOfWords& b) {
  a.validate();
  b.validate();
  double from_a = 0;
  for (const auto& [i, wi] : a.entries) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [j, wj] : b.entries) best = std::min(best, ground_distance(state, i, j));
    from_a += wi * best;
  }
  double from_b = 0;
  for (const auto& [j, wj] : b.entries) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [i, wi] : a.entries) best = std::min(best, ground_distance(state, i, j));
    from_b += wj * best;
  }
  // Round down: when the relaxation is tight its sum and the exact plan's sum
  // differ only in rounding, and a bound must never land above the optimum.
  return std::max(from_a, from_b) * (1.0 - 1e-12);
}

HeatmapData pair_heatmap(const EmbeddingState& state, const Line& a, const Line& b) {
  if (a.tokens.empty() || b.tokens.empty()) throw ValidationError("heatmap needs two non-empty lines");
  HeatmapData h;
  h.rows = a.forms;
  h.cols = b.forms;
  const auto m = a.tokens.size();
  const auto n = b.tokens.size();
  h.sim.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < m; ++p) {
    std::size_t best = 0;
    for (std::size_t q = 0; q < n; ++q) {
      const double c = cosine(state, a.tokens[p], b.tokens[q]);
      h.sim(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = c;
      if (c > h.sim(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(best))) best = q;
    }
    h.nn.emplace_back(p, best);
  }

  const TransportPlan plan = wmd(state, nbow(a), nbow(b));
  std::map<TokenId, std::vector<std::size_t>> pos_a, pos_b;
  for (std::size_t p = 0; p < m; ++p) pos_a[a.tokens[p]].push_back(p);
  for (std::size_t q = 0; q < n; ++q) pos_b[b.tokens[q]].push_back(q);
  for (const auto& f : plan.flows) {
    const auto& rows = pos_a.at(f.from);
    const auto& cols = pos_b.at(f.to);
    const double share = f.mass / static_cast<double>(rows.size() * cols.size());
    if (share <= 1e-9) continue;
    for (std::size_t p : rows)
      for (std::size_t q : cols) h.flows.push_back({p, q, share});
  }
  std::sort(h.flows.begin(), h.flows.end(),
            [](const PositionFlow& x, const PositionFlow& y) { return std::tie(x.row, x.col) < std::tie(y.row, y.col); });
  return h;
}

}  // namespace collatio
