#include <cstring>
#include <map>

#include "doctest.h"
#include "collatio/aligner.hpp"
#include "collatio/embedding.hpp"
#include "collatio/error.hpp"
#include "fixtures.hpp"

using namespace collatio;

namespace {

Edition edition_with_lengths(const std::string& id, const std::vector<std::size_t>& lengths) {
  Edition e;
  e.edition_id = id;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    std::vector<TokenId> t(lengths[i], 0);
    e.lines.push_back(fixtures::make_line(t, id, i));
  }
  return e;
}

struct TwoEditions {
  Corpus corpus;
  EmbeddingState state;
};

TwoEditions trained_tradition(std::uint64_t seed, std::size_t lines, double variation) {
  auto t = fixtures::make_tradition(seed, lines, 120, variation);
  TwoEditions out;
  out.corpus.ingest(t.base, "A");
  out.corpus.ingest(t.variant, "B");
  EmbeddingConfig cfg;
  cfg.dim = 24;
  out.state = train(out.corpus, cfg);
  return out;
}

bool same_sets(const AlignmentSet& x, const AlignmentSet& y) {
  if (x.pairs.size() != y.pairs.size() || x.config_hash != y.config_hash) return false;
  for (std::size_t k = 0; k < x.pairs.size(); ++k) {
    const auto& p = x.pairs[k];
    const auto& q = y.pairs[k];
    if (p.key() != q.key() || p.span != q.span) return false;
    if (std::memcmp(&p.similarity, &q.similarity, sizeof(double)) != 0) return false;
  }
  return true;
}

AlignmentSet set_of(std::vector<AlignmentKey> keys) {
  AlignmentSet s;
  s.edition_a = "A";
  s.edition_b = "B";
  for (auto& k : keys) {
    AlignmentPair p;
    p.a = k.a;
    p.b = k.b;
    p.bin = k.bin;
    p.similarity = 1.0;
    s.pairs.push_back(p);
  }
  return s;
}

}  // namespace

TEST_CASE("candidate window examples") {
  const auto a10 = edition_with_lengths("A", std::vector<std::size_t>(10, 3));
  const auto b10 = edition_with_lengths("B", std::vector<std::size_t>(10, 3));
  const auto w = candidate_window(a10, b10, 0.1);
  for (const auto& [i, j] : w) CHECK(std::abs(static_cast<long>(i) - static_cast<long>(j)) <= 1);
  CHECK(w.size() == 10 + 9 + 9);
  CHECK(candidate_window(a10, b10, 1.0).size() == 100);

  const auto a1 = edition_with_lengths("A", {3});
  const auto b7 = edition_with_lengths("B", std::vector<std::size_t>(7, 3));
  const auto w1 = candidate_window(a1, b7, 0.3);
  // j/7 <= 0.3 -> j in {0, 1, 2}
  REQUIRE(w1.size() == 3);
  CHECK(w1.back() == std::pair<std::size_t, std::size_t>{0, 2});

  const Edition empty{"E", "", {}};
  CHECK_THROWS_AS(candidate_window(empty, b7, 0.5), ValidationError);
}

TEST_CASE("classify_bin examples") {
  CHECK(classify_bin(10, 10, 0.65) == Bin::Full);
  CHECK(classify_bin(4, 10, 0.65) == Bin::HalfA);
  CHECK(classify_bin(10, 4, 0.65) == Bin::HalfB);
  CHECK(classify_bin(9, 10, 0.65) == Bin::Full);
  CHECK(bin_from_string(to_string(Bin::HalfB)) == Bin::HalfB);
  CHECK_THROWS_AS(bin_from_string("quarter"), ValidationError);
}

TEST_CASE("config validation") {
  AlignerConfig c;
  CHECK_NOTHROW(c.validate());
  c.band_width = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.theta_full = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.half_ratio = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  AlignerConfig p;
  p.prune = false;
  CHECK(config_hash(p) == config_hash(AlignerConfig{}));
  p.theta_half = 0.4;
  CHECK(config_hash(p) != config_hash(AlignerConfig{}));
}

TEST_CASE("candidate spans keep lengths within one of the short line") {
  const auto spans = candidate_spans(2, 4);
  CHECK(spans.size() == 9);  // 4 of length 1, 3 of length 2, 2 of length 3
  for (const auto& s : spans) {
    CHECK(s.length() >= 1);
    CHECK(s.length() <= 3);
    CHECK(s.end <= 4);
  }
  CHECK(candidate_spans(5, 6).size() == 3 + 2 + 1);  // lengths 4..6 on a line of 6
}

TEST_CASE("best_subspan agrees with brute force over all spans") {
  std::mt19937_64 rng(4);
  const auto s = fixtures::random_state(8, 4, 12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenId> sh(2), lg(4);
    for (auto& t : sh) t = static_cast<TokenId>(rng() % 8);
    for (auto& t : lg) t = static_cast<TokenId>(rng() % 8);
    const auto short_line = fixtures::make_line(sh);
    const auto long_line = fixtures::make_line(lg);
    const auto got = best_subspan(s, short_line, long_line);

    // enumerate every span of lengths 1..3 independently, earliest start then shortest on ties
    double best = 1e300;
    Span best_span;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t len = 1; len <= 3 && b + len <= 4; ++len) {
        const std::span<const TokenId> piece(lg.data() + b, len);
        const double c = wmd(s, nbow(short_line), nbow(piece)).cost;
        if (c < best - 1e-12) {
          best = c;
          best_span = {b, b + len};
        }
      }
    CHECK(std::abs(got.plan.cost - best) < 1e-12);
    CHECK(got.span == best_span);
    CHECK(best_subspan(s, short_line, long_line, false).span == got.span);
  }
}

TEST_CASE("best_subspan examples") {
  const auto s = fixtures::random_state(10, 5, 1);
  const auto long_line = fixtures::make_line({3, 4, 5, 6, 7, 8});
  const auto first_half = fixtures::make_line({3, 4, 5});
  const auto m = best_subspan(s, first_half, long_line);
  CHECK(m.span == Span{0, 3});
  CHECK(m.plan.cost == 0.0);

  // every length-2 span of [1 2 1 2] carries the bag {1, 2}: earliest start wins
  const auto tie = best_subspan(s, fixtures::make_line({1, 2}), fixtures::make_line({1, 2, 1, 2}));
  CHECK(tie.span == Span{0, 2});
  // equal cost at one start: the shorter span wins
  const auto shorter = best_subspan(s, fixtures::make_line({1}), fixtures::make_line({1, 1, 2}));
  CHECK(shorter.span == Span{0, 1});
  CHECK_THROWS_AS(best_subspan(s, long_line, first_half), ValidationError);
}

TEST_CASE("identical editions align to the identity") {
  auto t = fixtures::make_tradition(2, 40, 120, 0.0);
  Corpus c;
  c.ingest(t.base, "A");
  c.ingest(t.base, "B");
  EmbeddingConfig ec;
  ec.dim = 16;
  const auto s = train(c, ec);
  AlignerConfig cfg;
  cfg.theta_full = 0.9;
  cfg.mutual_best = true;
  const auto set = align(s, c.edition("A"), c.edition("B"), cfg);
  REQUIRE(set.pairs.size() == 40);
  for (const auto& p : set.pairs) {
    CHECK(p.a.index == p.b.index);
    CHECK(p.similarity == 1.0);
    CHECK(p.bin == Bin::Full);
    CHECK_FALSE(p.span.has_value());
  }
  CHECK(set.edition_a == "A");
  CHECK(set.config_hash == config_hash(cfg));
}

TEST_CASE("disjoint vocabularies with orthogonal vectors align to nothing") {
  Corpus c;
  c.ingest("a b c\nd e f\ng h", "A");
  c.ingest("p q r\ns t u\nv w", "B");
  const auto v = c.vocabulary().size();
  EmbeddingState s;
  s.vectors = RowMatrix::Identity(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v));
  // best attainable similarity is 1 / (1 + min cross ground distance)
  double min_d = 1e9;
  for (const auto& la : c.edition("A").lines)
    for (const auto& lb : c.edition("B").lines)
      for (auto x : la.tokens)
        for (auto y : lb.tokens) min_d = std::min(min_d, (s.vectors.row(x) - s.vectors.row(y)).norm());
  REQUIRE(1.0 / (1.0 + min_d) < 0.9);
  AlignerConfig cfg;
  cfg.theta_full = 0.9;
  cfg.band_width = 1.0;
  CHECK(align(s, c.edition("A"), c.edition("B"), cfg).pairs.empty());
}

TEST_CASE("pruning, thread count and repetition do not change the result") {
  auto f = trained_tradition(6, 80, 0.2);
  for (double theta : {0.55, 0.7}) {
    AlignerConfig on;
    on.theta_full = theta;
    on.band_width = 0.3;
    AlignerConfig off = on;
    off.prune = false;
    const auto x = align(f.state, f.corpus.edition("A"), f.corpus.edition("B"), on, 1);
    const auto y = align(f.state, f.corpus.edition("A"), f.corpus.edition("B"), off, 4);
    const auto z = align(f.state, f.corpus.edition("A"), f.corpus.edition("B"), on, 8);
    CHECK_FALSE(x.pairs.empty());
    CHECK(same_sets(x, y));
    CHECK(same_sets(x, z));
  }
}

TEST_CASE("alignment invariants: thresholds, spans, unique keys, monotone theta, mutual best") {
  auto t = fixtures::make_tradition(10, 60, 120, 0.0);
  // B splits every third line of A into two halves
  std::string b;
  for (std::size_t i = 0; i < t.base_lines.size(); ++i) {
    const auto& w = t.base_lines[i];
    if (i % 3 == 0)
      b += fixtures::join(w, 0, w.size() / 2) + "\n" + fixtures::join(w, w.size() / 2, w.size()) + "\n";
    else
      b += fixtures::join(w, 0, w.size()) + "\n";
  }
  Corpus c;
  c.ingest(t.base, "A");
  c.ingest(b, "B");
  EmbeddingConfig ec;
  ec.dim = 20;
  const auto s = train(c, ec);

  AlignmentSet prev;
  for (double theta : {0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    AlignerConfig cfg;
    cfg.theta_full = theta;
    cfg.theta_half = 0.45;
    const auto set = align(s, c.edition("A"), c.edition("B"), cfg);
    std::set<AlignmentKey> keys;
    bool halves = false;
    for (const auto& p : set.pairs) {
      CHECK(keys.insert(p.key()).second);
      CHECK(p.similarity >= cfg.threshold(p.bin));
      CHECK(p.similarity <= 1.0);
      CHECK(p.span.has_value() == (p.bin != Bin::Full));
      if (p.span) {
        halves = true;
        CHECK(p.span->length() > 0);
        const auto& longer = p.bin == Bin::HalfA ? c.line(p.b) : c.line(p.a);
        CHECK(p.span->end <= longer.size());
      }
    }
    CHECK(halves);
    if (!prev.pairs.empty()) {
      std::set<AlignmentKey> prev_full;
      for (const auto& p : prev.pairs)
        if (p.bin == Bin::Full) prev_full.insert(p.key());
      for (const auto& p : set.pairs)
        if (p.bin == Bin::Full) CHECK(prev_full.count(p.key()) == 1);
    }
    prev = set;

    cfg.mutual_best = true;
    const auto mb = align(s, c.edition("A"), c.edition("B"), cfg);
    std::map<std::pair<int, LineId>, int> seen;
    for (const auto& p : mb.pairs) {
      const int cls = p.bin == Bin::Full ? 0 : 1;
      CHECK(++seen[{cls, p.a}] == 1);
      CHECK(++seen[{cls, p.b}] == 1);
    }
  }
}

TEST_CASE("diff examples and algebra") {
  const AlignmentKey p{{"A", 0}, {"B", 0}, Bin::Full};
  const AlignmentKey q{{"A", 1}, {"B", 2}, Bin::HalfA};
  const AlignmentKey r{{"A", 1}, {"B", 2}, Bin::Full};
  const auto s = set_of({p, q});
  const auto same = diff(s, s);
  CHECK(same.added.empty());
  CHECK(same.removed.empty());
  CHECK(same.retained == s.keys());

  const auto from_empty = diff(set_of({}), s);
  CHECK(from_empty.added == s.keys());
  CHECK(from_empty.removed.empty());

  const auto swap = diff(set_of({p}), set_of({q}));
  CHECK(swap.removed == std::set<AlignmentKey>{p});
  CHECK(swap.added == std::set<AlignmentKey>{q});

  // the bin is part of the key
  const auto rebinned = diff(set_of({q}), set_of({r}));
  CHECK(rebinned.removed.size() == 1);
  CHECK(rebinned.added.size() == 1);

  auto other = set_of({p});
  other.edition_b = "C";
  CHECK_THROWS_AS(diff(s, other), ValidationError);
}
