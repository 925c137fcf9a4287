#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "collatio/aligner.hpp"
#include "collatio/corpus.hpp"
#include "collatio/embedding.hpp"

namespace collatio {

struct WordChange {
  TokenId token = 0;
  double displacement = 0;  // in [0, 2]
  double churn = 0;         // 1 - Jaccard of top-k neighbor sets, in [0, 1]
};

WordChange word_change(const EmbeddingState& from, const EmbeddingState& to, TokenId token, std::size_t k);

enum class HeatmapMode { Displacement, Churn };

HeatmapMode heatmap_mode_from_string(const std::string& s);

// Per-position intensity in [0, 1]; displacement is divided by 2, the unit-sphere diameter.
std::vector<double> line_heatmap(const EmbeddingState& from, const EmbeddingState& to, const Line& line,
                                 HeatmapMode mode, std::size_t k);

enum class Verdict { X, Y };

Verdict verdict_from_string(const std::string& s);

struct BlindBundle {
  std::string bundle_id;
  std::array<AlignmentSet, 2> presented;  // X, Y
  std::array<std::string, 2> truth;       // "before" / "after" for X, Y
  std::uint64_t seed = 0;
};

// True when the seed keeps [before, after] order.
bool keeps_order(std::uint64_t seed);

BlindBundle make_blind_bundle(const AlignmentSet& before, const AlignmentSet& after, std::uint64_t seed);

struct Evaluation {
  std::string bundle_id;
  std::string verdict;    // "X" or "Y"
  std::string preferred;  // "before" or "after"
  std::string timestamp;
};

// Payloads under <root>, sealed keys under <root>/sealed, verdicts in <root>/evaluations.jsonl.
class BundleStore {
 public:
  explicit BundleStore(std::filesystem::path root);

  // Writes both files; returns the payload path.
  std::filesystem::path save(const BlindBundle& bundle) const;
  Evaluation unseal(const std::string& bundle_id, Verdict verdict) const;
  std::vector<Evaluation> evaluations() const;

  std::filesystem::path payload_path(const std::string& bundle_id) const;
  std::filesystem::path key_path(const std::string& bundle_id) const;

 private:
  std::filesystem::path root_;
};

}  // namespace collatio
