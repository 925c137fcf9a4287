#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "collatio/corpus.hpp"
#include "collatio/embedding.hpp"

namespace collatio {

// Normalized bag of words: distinct tokens sorted by id, positive weights summing to one.
struct BagOfWords {
  std::vector<std::pair<TokenId, double>> entries;
  LineId source_line;

  std::size_t size() const { return entries.size(); }
  void validate() const;
};

struct Flow {
  TokenId from = 0;  // token of the source bag
  TokenId to = 0;    // token of the target bag
  double mass = 0;

  bool operator==(const Flow&) const = default;
};

inline constexpr const char* kGroundEuclideanUnit = "euclidean-unit";

struct TransportPlan {
  double cost = 0;
  std::vector<Flow> flows;  // strictly positive masses, sorted by (from, to)
  std::uint64_t iteration = 0;  // snapshot the plan was computed under
  std::string ground = kGroundEuclideanUnit;

  bool operator==(const TransportPlan&) const = default;
};

BagOfWords nbow(const Line& line);
BagOfWords nbow(std::span<const TokenId> tokens, LineId source = {});

// Euclidean distance between unit rows: sqrt(2 - 2 cos).
double ground_distance(const EmbeddingState& state, TokenId i, TokenId j);

// Dense solution of a balanced transportation problem.
struct TransportSolution {
  Eigen::MatrixXd flow;
  double cost = 0;
  int pivots = 0;
};

// Exact minimum-cost transport (transportation simplex, Bland pivoting on (i, j) order).
// `supply` and `demand` must each sum to the same total.
TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                  const Eigen::MatrixXd& cost);

// Word Mover's Distance with the plan realizing it.
TransportPlan wmd(const EmbeddingState& state, const BagOfWords& a, const BagOfWords& b);

// max of the two one-sided relaxations; never exceeds wmd(a, b).cost.
double relaxed_lower_bound(const EmbeddingState& state, const BagOfWords& a, const BagOfWords& b);

inline double similarity_from_cost(double cost) { return 1.0 / (1.0 + cost); }

struct PositionFlow {
  std::size_t row = 0;
  std::size_t col = 0;
  double mass = 0;
};

struct HeatmapData {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  Eigen::MatrixXd sim;
  std::vector<std::pair<std::size_t, std::size_t>> nn;
  std::vector<PositionFlow> flows;
};

// Token-position view of a line pair. Token-level flows are spread evenly over
// the positions holding each token, so position marginals are 1/|line|.
HeatmapData pair_heatmap(const EmbeddingState& state, const Line& a, const Line& b);

}  // namespace collatio
