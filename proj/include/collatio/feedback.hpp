#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "collatio/aligner.hpp"
#include "collatio/embedding.hpp"
#include "collatio/transport.hpp"

namespace collatio {

struct Rating {
  AlignmentKey pair;
  int rating = 3;  // Likert 1..5, 3 neutral
};

struct Drag {
  TokenId i = 0;
  TokenId j = 0;
  double target_similarity = 0;  // (-1, 1]
};

struct FeedbackEvent {
  std::uint64_t event_id = 0;
  std::variant<Rating, Drag> kind;
  std::uint64_t base_iteration = 0;
  std::string timestamp;     // ISO-8601 UTC; informational only
  std::string plan_digest;   // Rating events: digest of the stored transport plan

  bool is_rating() const { return std::holds_alternative<Rating>(kind); }
  void validate() const;
};

struct FeedbackConfig {
  double eta = 0.1;
  double flow_floor = 0.0;
  double max_step = 0.5;

  void validate() const;
};

// Rating strength (rating - 3) / 2.
double rating_strength(int rating);

// Mass-weighted mean cosine over the pairs a rating moves: flows between distinct
// tokens with mass >= flow_floor. Empty when there are none.
std::optional<double> mean_flow_cosine(const EmbeddingState& state, const TransportPlan& plan, double flow_floor);

// Moves each qualifying flow pair along its difference vector by eta * s * (mass / max mass),
// clipping each word's accumulated displacement to max_step, then renormalizes moved rows.
EmbeddingState apply_rating(const EmbeddingState& state, const Rating& event, const TransportPlan& plan,
                            const FeedbackConfig& config);

// Rotates the pair symmetrically in its common plane so that the cosine moves from c
// toward t by min(eta * |t - c|, max_step).
EmbeddingState apply_drag(const EmbeddingState& state, const Drag& event, const FeedbackConfig& config);

// Rows that differ bitwise between two snapshots of the same shape.
std::vector<TokenId> changed_rows(const EmbeddingState& before, const EmbeddingState& after);

// Folds events over `initial`. Rating events look their plan up by digest.
EmbeddingState replay(const EmbeddingState& initial, const std::vector<FeedbackEvent>& events,
                      const std::map<std::string, TransportPlan>& stored_plans, const FeedbackConfig& config,
                      std::vector<EmbeddingState>* trail = nullptr);

// One event applied to `state`; the event's event_id and base_iteration must match state.iteration.
EmbeddingState apply_event(const EmbeddingState& state, const FeedbackEvent& event, const TransportPlan* plan,
                           const FeedbackConfig& config);

}  // namespace collatio
