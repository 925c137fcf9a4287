#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "collatio/corpus.hpp"
#include "collatio/embedding.hpp"
#include "collatio/transport.hpp"

namespace collatio {

enum class Bin { Full, HalfA, HalfB };

std::string to_string(Bin bin);
Bin bin_from_string(const std::string& s);

// Half-open token range [begin, end) on the longer line of a half-line pair.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  auto operator<=>(const Span&) const = default;
};

struct AlignmentKey {
  LineId a;
  LineId b;
  Bin bin = Bin::Full;

  auto operator<=>(const AlignmentKey&) const = default;
};

struct AlignmentPair {
  LineId a;
  LineId b;
  double similarity = 0;
  Bin bin = Bin::Full;
  std::optional<Span> span;

  AlignmentKey key() const { return {a, b, bin}; }
};

struct AlignerConfig {
  double band_width = 0.15;
  double theta_full = 0.7;
  double theta_half = 0.5;
  double half_ratio = 0.65;
  bool mutual_best = false;
  // Off: every candidate is scored as a Full pair by whole-line WMD.
  bool binning = true;
  // Skip candidates whose relaxed lower bound already rules them out.
  bool prune = true;

  void validate() const;
  double threshold(Bin bin) const { return bin == Bin::Full ? theta_full : theta_half; }
};

struct AlignmentSet {
  std::uint64_t iteration = 0;
  std::string edition_a;
  std::string edition_b;
  AlignerConfig config;
  std::string config_hash;
  std::vector<AlignmentPair> pairs;  // sorted by key, no duplicate keys

  std::set<AlignmentKey> keys() const;
};

struct AlignmentDiff {
  std::set<AlignmentKey> added;
  std::set<AlignmentKey> removed;
  std::set<AlignmentKey> retained;
};

// Digest of the fields that affect the result of align.
std::string config_hash(const AlignerConfig& config);

std::vector<std::pair<std::size_t, std::size_t>> candidate_window(const Edition& a, const Edition& b,
                                                                  double band_width);

Bin classify_bin(const Line& a, const Line& b, double half_ratio);
Bin classify_bin(std::size_t len_a, std::size_t len_b, double half_ratio);

struct SubspanMatch {
  Span span;
  TransportPlan plan;
};

// Contiguous spans of `long_line` with length within one token of |short_line|.
std::vector<Span> candidate_spans(std::size_t short_len, std::size_t long_len);

// Span minimizing WMD to the short line; ties go to the earliest start, then the shortest span.
SubspanMatch best_subspan(const EmbeddingState& state, const Line& short_line, const Line& long_line,
                          bool prune = true);

// Plan backing a scored pair: whole-line WMD for Full, sub-span WMD for the half bins.
TransportPlan pair_plan(const EmbeddingState& state, const Line& a, const Line& b, Bin bin,
                        std::optional<Span>* span_out = nullptr);

AlignmentSet align(const EmbeddingState& state, const Edition& a, const Edition& b, const AlignerConfig& config,
                   unsigned threads = 0);

AlignmentDiff diff(const AlignmentSet& prev, const AlignmentSet& next);

}  // namespace collatio
