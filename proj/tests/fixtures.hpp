#pragma once

// Deterministic fixtures shared by the unit and acceptance suites.

#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "collatio/corpus.hpp"
#include "collatio/embedding.hpp"
#include "collatio/transport.hpp"

namespace fixtures {

using namespace collatio;

inline double uniform01(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

inline double normal(std::mt19937_64& rng) {
  return std::sqrt(-2.0 * std::log(uniform01(rng))) * std::cos(6.283185307179586 * uniform01(rng));
}

// V random unit vectors in d dimensions.
inline EmbeddingState random_state(std::size_t v, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EmbeddingState s;
  s.vectors.resize(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < s.vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.vectors.cols(); ++c) s.vectors(r, c) = normal(rng);
    s.vectors.row(r).normalize();
  }
  return s;
}

// Explicit rows, normalized.
inline EmbeddingState state_from_rows(const std::vector<std::vector<double>>& rows) {
  EmbeddingState s;
  s.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      s.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    s.vectors.row(static_cast<Eigen::Index>(r)).normalize();
  }
  return s;
}

// Bag with 1..max_tokens distinct tokens from [0, v) and random positive weights.
inline BagOfWords random_bag(std::mt19937_64& rng, std::size_t v, std::size_t max_tokens) {
  const std::size_t n = 1 + rng() % max_tokens;
  std::set<TokenId> ids;
  while (ids.size() < n) ids.insert(static_cast<TokenId>(rng() % v));
  std::vector<double> w;
  double total = 0;
  for (std::size_t k = 0; k < n; ++k) {
    w.push_back(0.05 + uniform01(rng));
    total += w.back();
  }
  BagOfWords bag;
  std::size_t k = 0;
  for (TokenId t : ids) bag.entries.emplace_back(t, w[k++] / total);
  return bag;
}

inline Line make_line(std::vector<TokenId> tokens, std::string edition = "T", std::size_t index = 0) {
  Line l;
  l.id = {std::move(edition), index};
  for (TokenId t : tokens) l.forms.push_back("w" + std::to_string(t));
  l.tokens = std::move(tokens);
  return l;
}

inline std::string pseudo_word(std::mt19937_64& rng) {
  static const char* syllables[] = {"ro", "lant", "car", "les", "reis", "mar", "sil", "ie", "ben", "ol", "li", "ver",
                                    "pa", "gan", "de", "fran", "ce", "du", "ne", "sa", "ra", "gos", "tur", "pin"};
  const std::size_t n = 1 + rng() % 3;
  std::string w;
  for (std::size_t k = 0; k < n; ++k) w += syllables[rng() % 24];
  return w;
}

inline std::vector<std::string> word_pool(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::string> pool;
  for (std::size_t i = 0; i < n; ++i) pool.push_back(pseudo_word(rng) + std::to_string(i));
  return pool;
}

// Skewed draw from the pool: low indices are frequent.
inline const std::string& draw(std::mt19937_64& rng, const std::vector<std::string>& pool) {
  const double u = uniform01(rng);
  return pool[static_cast<std::size_t>(static_cast<double>(pool.size()) * u * u)];
}

inline std::string join(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
  std::string s;
  for (std::size_t k = begin; k < end; ++k) {
    if (k > begin) s.push_back(' ');
    s += words[k];
  }
  return s;
}

// A base edition and a dialect variant: each word is respelled (suffix "e") with probability `variation`.
struct Tradition {
  std::vector<std::vector<std::string>> base_lines;
  std::string base;
  std::string variant;
};

inline Tradition make_tradition(std::uint64_t seed, std::size_t lines, std::size_t pool_size, double variation) {
  std::mt19937_64 rng(seed);
  const auto pool = word_pool(rng, pool_size);
  Tradition t;
  for (std::size_t i = 0; i < lines; ++i) {
    const std::size_t len = 8 + rng() % 5;
    std::vector<std::string> words;
    for (std::size_t k = 0; k < len; ++k) words.push_back(draw(rng, pool));
    t.base += join(words, 0, words.size()) + "\n";
    std::vector<std::string> varied = words;
    for (auto& w : varied)
      if (uniform01(rng) < variation) w += "e";
    t.variant += join(varied, 0, varied.size()) + "\n";
    t.base_lines.push_back(std::move(words));
  }
  return t;
}

struct ScratchDir {
  std::filesystem::path path;
  explicit ScratchDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("collatio_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~ScratchDir() { std::filesystem::remove_all(path); }
};

}  // namespace fixtures
