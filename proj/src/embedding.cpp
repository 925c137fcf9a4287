#include "collatio/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "collatio/error.hpp"

namespace collatio {

void EmbeddingState::check_token(TokenId id) const {
  if (id >= vocab_size()) throw NotFoundError("unknown token id " + std::to_string(id));
}

CooccurrenceMatrix build_cooccurrence(const std::vector<Edition>& editions, std::size_t vocab_size, int window) {
  if (window < 1) throw ValidationError("co-occurrence window must be >= 1");
  if (editions.empty() || vocab_size == 0) throw ValidationError("empty corpus");

  CooccurrenceMatrix m;
  m.window = window;
  m.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(vocab_size));
  const auto w = static_cast<std::size_t>(window);
  for (const auto& e : editions)
    for (const auto& line : e.lines) {
      const auto& t = line.tokens;
      for (std::size_t p = 0; p < t.size(); ++p)
        for (std::size_t q = p + 1; q < t.size() && q - p <= w; ++q) {
          if (t[p] == t[q]) continue;
          if (t[p] >= vocab_size || t[q] >= vocab_size) throw ValidationError("token id outside vocabulary");
          m.counts(t[p], t[q]) += 1.0;
          m.counts(t[q], t[p]) += 1.0;
        }
    }
  return m;
}

Eigen::MatrixXd compute_ppmi(const CooccurrenceMatrix& cooc) {
  const auto& c = cooc.counts;
  const double total = c.sum();
  if (!(total > 0)) throw ValidationError("co-occurrence table has no events");
  const Eigen::VectorXd marginal = c.rowwise().sum();

  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(c.rows(), c.cols());
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (c(i, j) <= 0) continue;
      ppmi(i, j) = std::max(0.0, std::log(c(i, j) * total / (marginal(i) * marginal(j))));
    }
  return ppmi;
}

Factors factor_ppmi(const Eigen::MatrixXd& ppmi, int dim) {
  const auto v = ppmi.rows();
  if (ppmi.cols() != v) throw ValidationError("PPMI matrix must be square");
  if (dim < 1 || dim > v) throw ValidationError("dimension must satisfy 1 <= d <= V (d=" + std::to_string(dim) +
                                                ", V=" + std::to_string(v) + ")");

  // PPMI is symmetric, so its SVD follows from the eigendecomposition:
  // singular values |lambda|, U = Q, V = Q sign(lambda).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ppmi);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const Eigen::MatrixXd& q = eig.eigenvectors();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(v));
  for (Eigen::Index i = 0; i < v; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(lambda(a)) > std::abs(lambda(b)); });

  Factors f;
  f.words.resize(v, dim);
  f.contexts.resize(v, dim);
  f.singular_values.resize(dim);
  for (int k = 0; k < dim; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    const double sigma = std::abs(lambda(src));
    Eigen::VectorXd u = q.col(src);
    Eigen::VectorXd right = lambda(src) < 0 ? Eigen::VectorXd(-u) : u;

    Eigen::Index peak = 0;
    for (Eigen::Index r = 1; r < v; ++r)
      if (std::abs(right(r)) > std::abs(right(peak))) peak = r;
    if (right(peak) < 0) {
      u = -u;
      right = -right;
    }
    const double root = std::sqrt(sigma);
    f.words.col(k) = u * root;
    f.contexts.col(k) = right * root;
    f.singular_values(k) = sigma;
  }
  return f;
}

Eigen::VectorXd seeded_unit_vector(std::uint64_t seed, std::uint64_t row, int dim) {
  std::mt19937_64 gen(seed ^ (0x9E3779B97F4A7C15ULL * (row + 1)));
  auto uniform = [&] { return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53; };
  Eigen::VectorXd v(dim);
  for (int k = 0; k < dim; ++k) {
    // Box-Muller, one normal per pair of uniforms
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    v(k) = r * std::cos(2.0 * std::numbers::pi * uniform());
  }
  const double n = v.norm();
  if (n == 0) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / n;
}

void normalize_row(RowMatrix& m, Eigen::Index row) {
  const double n = m.row(row).norm();
  if (n > 0) m.row(row) /= n;
}

EmbeddingState factorize(const Eigen::MatrixXd& ppmi, int dim, std::uint64_t seed) {
  Factors f = factor_ppmi(ppmi, dim);
  EmbeddingState s;
  s.iteration = 0;
  s.vectors = f.words;
  for (Eigen::Index r = 0; r < s.vectors.rows(); ++r) {
    const double n = s.vectors.row(r).norm();
    if (n < 1e-12)
      s.vectors.row(r) = seeded_unit_vector(seed, static_cast<std::uint64_t>(r), dim).transpose();
    else
      s.vectors.row(r) /= n;
  }
  return s;
}

EmbeddingState train(const Corpus& corpus, const EmbeddingConfig& config) {
  auto cooc = build_cooccurrence(corpus.editions(), corpus.vocabulary().size(), config.window);
  return factorize(compute_ppmi(cooc), config.dim, config.seed);
}

double cosine(const EmbeddingState& state, TokenId i, TokenId j) {
  state.check_token(i);
  state.check_token(j);
  if (i == j) return 1.0;
  const double c = state.vectors.row(i).dot(state.vectors.row(j));
  return std::clamp(c, -1.0, 1.0);
}

std::vector<std::pair<TokenId, double>> nearest_neighbors(const EmbeddingState& state, TokenId i, std::size_t k) {
  state.check_token(i);
  const std::size_t v = state.vocab_size();
  if (k < 1 || k >= v) throw ValidationError("k must satisfy 1 <= k < V");
  std::vector<std::pair<TokenId, double>> all;
  all.reserve(v - 1);
  for (TokenId j = 0; j < v; ++j)
    if (j != i) all.emplace_back(j, cosine(state, i, j));
  auto better = [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

void write_snapshot(std::ostream& out, const EmbeddingState& state) {
  out << state.vocab_size() << ' ' << state.dim() << ' ' << state.iteration << '\n';
  char buf[64];
  std::string line;
  for (Eigen::Index r = 0; r < state.vectors.rows(); ++r) {
    line = std::to_string(r);
    for (Eigen::Index c = 0; c < state.vectors.cols(); ++c) {
      auto res = std::to_chars(buf, buf + sizeof buf, state.vectors(r, c));
      line.push_back(' ');
      line.append(buf, res.ptr);
    }
    line.push_back('\n');
    out << line;
  }
}

EmbeddingState read_snapshot(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ValidationError("snapshot: missing header");
  std::istringstream hs(header);
  std::size_t v = 0, d = 0;
  std::uint64_t iteration = 0;
  if (!(hs >> v >> d >> iteration) || d == 0) throw ValidationError("snapshot: malformed header");

  EmbeddingState s;
  s.iteration = iteration;
  if (iteration > 0) s.source_event = iteration - 1;
  s.vectors.resize(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(d));
  std::string line;
  for (std::size_t r = 0; r < v; ++r) {
    if (!std::getline(in, line)) throw ValidationError("snapshot: truncated at row " + std::to_string(r));
    const char* p = line.data();
    const char* end = p + line.size();
    std::size_t id = 0;
    auto res = std::from_chars(p, end, id);
    if (res.ec != std::errc{} || id != r) throw ValidationError("snapshot: bad token id on row " + std::to_string(r));
    p = res.ptr;
    for (std::size_t c = 0; c < d; ++c) {
      while (p < end && *p == ' ') ++p;
      double x = 0;
      auto fr = std::from_chars(p, end, x);
      if (fr.ec != std::errc{}) throw ValidationError("snapshot: bad value on row " + std::to_string(r));
      s.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x;
      p = fr.ptr;
    }
  }
  return s;
}

}  // namespace collatio
