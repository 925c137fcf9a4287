#include "collatio/aligner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <thread>

#include "collatio/util.hpp"
#include "collatio/error.hpp"

namespace collatio {

namespace {

constexpr double kTieTol = 1e-12;
// Bounds are compared with this slack so pruning never drops a pair the exact solver would keep.
constexpr double kPruneSlack = 1e-9;

double cost_threshold(double theta) { return 1.0 / theta - 1.0; }

}  // namespace

std::string to_string(Bin bin) {
  switch (bin) {
    case Bin::Full: return "full";
    case Bin::HalfA: return "half_a";
    case Bin::HalfB: return "half_b";
  }
  return "full";
}

Bin bin_from_string(const std::string& s) {
  if (s == "full") return Bin::Full;
  if (s == "half_a") return Bin::HalfA;
  if (s == "half_b") return Bin::HalfB;
  throw ValidationError("unknown bin '" + s + "'");
}

void AlignerConfig::validate() const {
  auto open01 = [](double x) { return x > 0 && x < 1; };
  if (!(band_width > 0 && band_width <= 1)) throw ValidationError("band_width must be in (0, 1]");
  if (!open01(theta_full)) throw ValidationError("theta_full must be in (0, 1)");
  if (!open01(theta_half)) throw ValidationError("theta_half must be in (0, 1)");
  if (!open01(half_ratio)) throw ValidationError("half_ratio must be in (0, 1)");
}

std::set<AlignmentKey> AlignmentSet::keys() const {
  std::set<AlignmentKey> out;
  for (const auto& p : pairs) out.insert(p.key());
  return out;
}

std::string config_hash(const AlignerConfig& c) {
  std::string canonical = "band_width=" + format_double(c.band_width) + ";theta_full=" + format_double(c.theta_full) +
                          ";theta_half=" + format_double(c.theta_half) + ";half_ratio=" + format_double(c.half_ratio) +
                          ";mutual_best=" + (c.mutual_best ? "1" : "0") + ";binning=" + (c.binning ? "1" : "0");
  return sha256_hex(canonical);
}

std::vector<std::pair<std::size_t, std::size_t>> candidate_window(const Edition& a, const Edition& b,
                                                                  double band_width) {
  if (a.lines.empty() || b.lines.empty()) throw ValidationError("candidate window needs non-empty editions");
  const auto na = static_cast<long long>(a.lines.size());
  const auto nb = static_cast<long long>(b.lines.size());
  // |i/na - j/nb| <= band  <=>  |i*nb - j*na| <= band*na*nb, evaluated on integers.
  const double limit = band_width * static_cast<double>(na) * static_cast<double>(nb) * (1 + 1e-12);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (long long i = 0; i < na; ++i)
    for (long long j = 0; j < nb; ++j)
      if (static_cast<double>(std::llabs(i * nb - j * na)) <= limit)
        out.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return out;
}

Bin classify_bin(std::size_t len_a, std::size_t len_b, double half_ratio) {
  if (len_a == 0 || len_b == 0) throw ValidationError("cannot classify an empty line");
  const double ratio = static_cast<double>(std::min(len_a, len_b)) / static_cast<double>(std::max(len_a, len_b));
  if (ratio < half_ratio) return len_a < len_b ? Bin::HalfA : Bin::HalfB;
  return Bin::Full;
}

Bin classify_bin(const Line& a, const Line& b, double half_ratio) {
  return classify_bin(a.size(), b.size(), half_ratio);
}

std::vector<Span> candidate_spans(std::size_t short_len, std::size_t long_len) {
  const std::size_t lo = std::max<std::size_t>(1, short_len > 0 ? short_len - 1 : 1);
  const std::size_t hi = std::min(long_len, short_len + 1);
  std::vector<Span> spans;
  for (std::size_t start = 0; start < long_len; ++start)
    for (std::size_t len = lo; len <= hi && start + len <= long_len; ++len) spans.push_back({start, start + len});
  return spans;
}

SubspanMatch best_subspan(const EmbeddingState& state, const Line& short_line, const Line& long_line, bool prune) {
  if (short_line.tokens.empty() || short_line.size() >= long_line.size())
    throw ValidationError("best_subspan needs a non-empty short line strictly shorter than the long line");
  const BagOfWords target = nbow(short_line);
  const std::span<const TokenId> tokens(long_line.tokens);

  std::optional<SubspanMatch> best;
  for (const Span& span : candidate_spans(short_line.size(), long_line.size())) {
    BagOfWords bag = nbow(tokens.subspan(span.begin, span.length()), long_line.id);
    if (best && prune && relaxed_lower_bound(state, target, bag) - kPruneSlack > best->plan.cost - kTieTol) continue;
    TransportPlan plan = wmd(state, target, bag);
    if (!best || plan.cost < best->plan.cost - kTieTol) best = SubspanMatch{span, std::move(plan)};
  }
  return *best;
}

TransportPlan pair_plan(const EmbeddingState& state, const Line& a, const Line& b, Bin bin,
                        std::optional<Span>* span_out) {
  std::optional<Span> span;
  TransportPlan plan;
  switch (bin) {
    case Bin::Full:
      plan = wmd(state, nbow(a), nbow(b));
      break;
    case Bin::HalfA: {
      auto m = best_subspan(state, a, b);
      span = m.span;
      plan = std::move(m.plan);
      break;
    }
    case Bin::HalfB: {
      // Orient the plan from line a to line b.
      auto m = best_subspan(state, b, a);
      span = m.span;
      plan = std::move(m.plan);
      for (auto& f : plan.flows) std::swap(f.from, f.to);
      std::sort(plan.flows.begin(), plan.flows.end(),
                [](const Flow& x, const Flow& y) { return std::tie(x.from, x.to) < std::tie(y.from, y.to); });
      break;
    }
  }
  if (span_out) *span_out = span;
  return plan;
}

namespace {

struct Scored {
  bool accepted = false;
  AlignmentPair pair;
};

double min_span_bound(const EmbeddingState& state, const Line& short_line, const Line& long_line) {
  const BagOfWords target = nbow(short_line);
  const std::span<const TokenId> tokens(long_line.tokens);
  double best = std::numeric_limits<double>::infinity();
  for (const Span& span : candidate_spans(short_line.size(), long_line.size()))
    best = std::min(best, relaxed_lower_bound(state, target, nbow(tokens.subspan(span.begin, span.length()))));
  return best;
}

Scored score_candidate(const EmbeddingState& state, const Line& la, const Line& lb, const AlignerConfig& config) {
  Scored out;
  const Bin bin = config.binning ? classify_bin(la, lb, config.half_ratio) : Bin::Full;
  const double theta = config.threshold(bin);
  const double max_cost = cost_threshold(theta);

  double cost = 0;
  std::optional<Span> span;
  if (bin == Bin::Full) {
    const BagOfWords ba = nbow(la), bb = nbow(lb);
    if (config.prune && relaxed_lower_bound(state, ba, bb) > max_cost + kPruneSlack) return out;
    cost = wmd(state, ba, bb).cost;
  } else {
    const Line& short_line = bin == Bin::HalfA ? la : lb;
    const Line& long_line = bin == Bin::HalfA ? lb : la;
    if (config.prune && min_span_bound(state, short_line, long_line) > max_cost + kPruneSlack) return out;
    auto match = best_subspan(state, short_line, long_line, config.prune);
    cost = match.plan.cost;
    span = match.span;
  }
  const double sim = similarity_from_cost(cost);
  if (sim < theta) return out;
  out.accepted = true;
  out.pair = AlignmentPair{la.id, lb.id, sim, bin, span};
  return out;
}

// Keeps pairs that are each other's best accepted match within their bin class.
std::vector<AlignmentPair> mutual_best(const std::vector<AlignmentPair>& pairs) {
  auto better = [](const AlignmentPair& x, const AlignmentPair* cur, bool by_b) {
    if (!cur) return true;
    if (x.similarity != cur->similarity) return x.similarity > cur->similarity;
    return by_b ? x.b.index < cur->b.index : x.a.index < cur->a.index;
  };
  std::map<std::pair<Bin, std::size_t>, const AlignmentPair*> best_for_a, best_for_b;
  for (const auto& p : pairs) {
    auto& ba = best_for_a[{p.bin, p.a.index}];
    if (better(p, ba, true)) ba = &p;
    auto& bb = best_for_b[{p.bin, p.b.index}];
    if (better(p, bb, false)) bb = &p;
  }
  std::vector<AlignmentPair> kept;
  for (const auto& p : pairs)
    if (best_for_a[{p.bin, p.a.index}] == &p && best_for_b[{p.bin, p.b.index}] == &p) kept.push_back(p);
  return kept;
}

}  // namespace

AlignmentSet align(const EmbeddingState& state, const Edition& a, const Edition& b, const AlignerConfig& config,
                   unsigned threads) {
  config.validate();
  const auto candidates = candidate_window(a, b, config.band_width);

  std::vector<Scored> results(candidates.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, candidates.size() / 16)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < candidates.size(); k = next++) {
      const auto [i, j] = candidates[k];
      results[k] = score_candidate(state, a.lines[i], b.lines[j], config);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<AlignmentPair> accepted;
  for (auto& r : results)
    if (r.accepted) accepted.push_back(std::move(r.pair));
  if (config.mutual_best) accepted = mutual_best(accepted);
  std::sort(accepted.begin(), accepted.end(),
            [](const AlignmentPair& x, const AlignmentPair& y) { return x.key() < y.key(); });

  AlignmentSet set;
  set.iteration = state.iteration;
  set.edition_a = a.edition_id;
  set.edition_b = b.edition_id;
  set.config = config;
  set.config_hash = config_hash(config);
  set.pairs = std::move(accepted);
  return set;
}

AlignmentDiff diff(const AlignmentSet& prev, const AlignmentSet& next) {
  if (prev.edition_a != next.edition_a || prev.edition_b != next.edition_b)
    throw ValidationError("cannot diff alignment sets of different edition pairs");
  const auto p = prev.keys();
  const auto n = next.keys();
  AlignmentDiff d;
  std::set_difference(n.begin(), n.end(), p.begin(), p.end(), std::inserter(d.added, d.added.end()));
  std::set_difference(p.begin(), p.end(), n.begin(), n.end(), std::inserter(d.removed, d.removed.end()));
  std::set_intersection(p.begin(), p.end(), n.begin(), n.end(), std::inserter(d.retained, d.retained.end()));
  return d;
}

}  // namespace collatio
