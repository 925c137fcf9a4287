#include "collatio/feedback.hpp"

#include <algorithm>
#include <cmath>

#include "collatio/error.hpp"

namespace collatio {

void FeedbackEvent::validate() const {
  if (const auto* r = std::get_if<Rating>(&kind)) {
    if (r->rating < 1 || r->rating > 5) throw ValidationError("rating must be in 1..5");
  } else {
    const auto& d = std::get<Drag>(kind);
    if (d.i == d.j) throw ValidationError("drag needs two distinct tokens");
    if (!(d.target_similarity > -1.0 && d.target_similarity <= 1.0))
      throw ValidationError("drag target similarity must be in (-1, 1]");
  }
}

void FeedbackConfig::validate() const {
  if (!(eta > 0 && eta <= 1)) throw ValidationError("eta must be in (0, 1]");
  if (!(flow_floor >= 0)) throw ValidationError("flow_floor must be >= 0");
  if (!(max_step > 0 && max_step <= 1)) throw ValidationError("max_step must be in (0, 1]");
}

double rating_strength(int rating) {
  if (rating < 1 || rating > 5) throw ValidationError("rating must be in 1..5");
  return (rating - 3) / 2.0;
}

std::optional<double> mean_flow_cosine(const EmbeddingState& state, const TransportPlan& plan, double flow_floor) {
  double num = 0, den = 0;
  for (const auto& f : plan.flows) {
    if (f.mass < flow_floor || f.from == f.to) continue;
    num += f.mass * cosine(state, f.from, f.to);
    den += f.mass;
  }
  if (!(den > 0)) return std::nullopt;
  return num / den;
}

EmbeddingState apply_rating(const EmbeddingState& state, const Rating& event, const TransportPlan& plan,
                            const FeedbackConfig& config) {
  config.validate();
  const double s = rating_strength(event.rating);
  if (plan.iteration != state.iteration)
    throw ValidationError("stale transport plan: computed at iteration " + std::to_string(plan.iteration) +
                          ", state is at " + std::to_string(state.iteration));
  for (const auto& f : plan.flows) {
    state.check_token(f.from);
    state.check_token(f.to);
  }

  EmbeddingState next = state;
  next.iteration = state.iteration + 1;
  next.source_event = state.iteration;
  if (s == 0) return next;

  double max_mass = 0;
  for (const auto& f : plan.flows)
    if (f.mass >= config.flow_floor) max_mass = std::max(max_mass, f.mass);
  if (!(max_mass > 0)) return next;

  const auto& v = state.vectors;
  std::map<TokenId, Eigen::VectorXd> delta;
  for (const auto& f : plan.flows) {
    if (f.mass < config.flow_floor || f.from == f.to) continue;
    const double coef = config.eta * s * (f.mass / max_mass);
    const Eigen::VectorXd towards = (v.row(f.to) - v.row(f.from)).transpose();
    auto add = [&](TokenId t, const Eigen::VectorXd& d) {
      auto it = delta.find(t);
      if (it == delta.end())
        delta.emplace(t, d);
      else
        it->second += d;
    };
    add(f.from, coef * towards);
    add(f.to, -coef * towards);
  }

  for (auto& [t, d] : delta) {
    const double n = d.norm();
    if (n == 0) continue;
    if (n > config.max_step) d *= config.max_step / n;
    Eigen::RowVectorXd moved = v.row(t) + d.transpose();
    const double len = moved.norm();
    if (len < 1e-12) continue;
    next.vectors.row(t) = moved / len;
  }
  return next;
}

EmbeddingState apply_drag(const EmbeddingState& state, const Drag& event, const FeedbackConfig& config) {
  config.validate();
  if (event.i == event.j) throw ValidationError("drag needs two distinct tokens");
  if (!(event.target_similarity > -1.0 && event.target_similarity <= 1.0))
    throw ValidationError("drag target similarity must be in (-1, 1]");
  state.check_token(event.i);
  state.check_token(event.j);

  EmbeddingState next = state;
  next.iteration = state.iteration + 1;
  next.source_event = state.iteration;

  const double c = cosine(state, event.i, event.j);
  const double t = event.target_similarity;
  if (t == c) return next;

  const double step = std::min(config.eta * std::abs(t - c), config.max_step);
  const double target_cos = std::clamp(t > c ? c + step : c - step, -1.0, 1.0);

  const Eigen::RowVectorXd vi = state.vectors.row(event.i);
  const Eigen::RowVectorXd vj = state.vectors.row(event.j);
  const Eigen::RowVectorXd sum = vi + vj;
  const Eigen::RowVectorXd gap = vj - vi;
  if (sum.norm() < 1e-12 || gap.norm() < 1e-12)
    throw ValidationError("tokens are collinear; the drag direction is undefined");
  const Eigen::RowVectorXd bisector = sum / sum.norm();
  const Eigen::RowVectorXd across = gap / gap.norm();

  // Same plane, same bisector: equivalent to sliding both along (vj - vi) and renormalizing.
  const double half = std::acos(target_cos) / 2.0;
  next.vectors.row(event.i) = std::cos(half) * bisector - std::sin(half) * across;
  next.vectors.row(event.j) = std::cos(half) * bisector + std::sin(half) * across;
  normalize_row(next.vectors, event.i);
  normalize_row(next.vectors, event.j);
  return next;
}

std::vector<TokenId> changed_rows(const EmbeddingState& before, const EmbeddingState& after) {
  if (before.vectors.rows() != after.vectors.rows() || before.vectors.cols() != after.vectors.cols())
    throw ValidationError("snapshot shapes differ");
  std::vector<TokenId> out;
  for (Eigen::Index r = 0; r < before.vectors.rows(); ++r)
    for (Eigen::Index c = 0; c < before.vectors.cols(); ++c)
      if (before.vectors(r, c) != after.vectors(r, c)) {
        out.push_back(static_cast<TokenId>(r));
        break;
      }
  return out;
}

EmbeddingState apply_event(const EmbeddingState& state, const FeedbackEvent& event, const TransportPlan* plan,
                           const FeedbackConfig& config) {
  event.validate();
  if (event.event_id != state.iteration || event.base_iteration != state.iteration)
    throw ValidationError("event " + std::to_string(event.event_id) + " does not follow snapshot " +
                          std::to_string(state.iteration));
  EmbeddingState next;
  if (const auto* r = std::get_if<Rating>(&event.kind)) {
    if (!plan) throw NotFoundError("missing transport plan for rating event " + std::to_string(event.event_id));
    next = apply_rating(state, *r, *plan, config);
  } else {
    next = apply_drag(state, std::get<Drag>(event.kind), config);
  }
  next.source_event = event.event_id;
  return next;
}

EmbeddingState replay(const EmbeddingState& initial, const std::vector<FeedbackEvent>& events,
                      const std::map<std::string, TransportPlan>& stored_plans, const FeedbackConfig& config,
                      std::vector<EmbeddingState>* trail) {
  EmbeddingState state = initial;
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& e = events[k];
    if (e.event_id != initial.iteration + k)
      throw ValidationError("event log has a gap or reorder at position " + std::to_string(k) + " (event id " +
                            std::to_string(e.event_id) + ")");
    const TransportPlan* plan = nullptr;
    if (e.is_rating()) {
      auto it = stored_plans.find(e.plan_digest);
      if (it == stored_plans.end()) throw NotFoundError("missing stored plan " + e.plan_digest);
      plan = &it->second;
    }
    state = apply_event(state, e, plan, config);
    if (trail) trail->push_back(state);
  }
  return state;
}

}  // namespace collatio
