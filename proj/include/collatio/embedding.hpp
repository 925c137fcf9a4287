#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "collatio/corpus.hpp"

namespace collatio {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One immutable snapshot of the word space. Rows are unit length.
struct EmbeddingState {
  std::uint64_t iteration = 0;
  RowMatrix vectors;
  // Empty for the trained snapshot, otherwise the feedback event that produced it.
  std::optional<std::uint64_t> source_event;

  std::size_t vocab_size() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
  void check_token(TokenId id) const;
};

struct EmbeddingConfig {
  int dim = 50;
  int window = 5;
  std::uint64_t seed = 0;
};

struct CooccurrenceMatrix {
  Eigen::MatrixXd counts;  // symmetric, zero diagonal
  int window = 0;
};

CooccurrenceMatrix build_cooccurrence(const std::vector<Edition>& editions, std::size_t vocab_size, int window);

Eigen::MatrixXd compute_ppmi(const CooccurrenceMatrix& cooc);

// Rank-d factors of the PPMI matrix before row normalization:
// words = U_d sqrt(S_d), contexts = V_d sqrt(S_d), so words * contexts^T approximates ppmi.
struct Factors {
  Eigen::MatrixXd words;
  Eigen::MatrixXd contexts;
  Eigen::VectorXd singular_values;
};

Factors factor_ppmi(const Eigen::MatrixXd& ppmi, int dim);

// Iteration-0 snapshot: factor rows normalized; all-zero rows get a seeded unit vector.
EmbeddingState factorize(const Eigen::MatrixXd& ppmi, int dim, std::uint64_t seed);

EmbeddingState train(const Corpus& corpus, const EmbeddingConfig& config);

// Deterministic unit vector for (seed, row), independent of the standard library's distributions.
Eigen::VectorXd seeded_unit_vector(std::uint64_t seed, std::uint64_t row, int dim);

double cosine(const EmbeddingState& state, TokenId i, TokenId j);

std::vector<std::pair<TokenId, double>> nearest_neighbors(const EmbeddingState& state, TokenId i, std::size_t k);

// Renormalizes `row` in place; zero rows are left untouched.
void normalize_row(RowMatrix& m, Eigen::Index row);

// `iter_<n>.vec`: header "V d iteration", then "token_id v_1 ... v_d" per row,
// shortest round-trip decimal for every float.
void write_snapshot(std::ostream& out, const EmbeddingState& state);
EmbeddingState read_snapshot(std::istream& in);

}  // namespace collatio
