#include "collatio/analytics.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "collatio/error.hpp"
#include "collatio/serialize.hpp"
#include "collatio/util.hpp"

namespace collatio {

namespace {

void check_compatible(const EmbeddingState& a, const EmbeddingState& b) {
  if (a.vocab_size() != b.vocab_size() || a.dim() != b.dim())
    throw ValidationError("snapshots differ in vocabulary size or dimension");
}

std::set<TokenId> neighbor_set(const EmbeddingState& s, TokenId t, std::size_t k) {
  std::set<TokenId> out;
  for (const auto& [id, c] : nearest_neighbors(s, t, k)) out.insert(id);
  return out;
}

}  // namespace

WordChange word_change(const EmbeddingState& from, const EmbeddingState& to, TokenId token, std::size_t k) {
  check_compatible(from, to);
  from.check_token(token);
  if (k < 1 || k >= from.vocab_size()) throw ValidationError("k must satisfy 1 <= k < V");

  WordChange w;
  w.token = token;
  w.displacement = std::min(2.0, (from.vectors.row(token) - to.vectors.row(token)).norm());

  const auto na = neighbor_set(from, token, k);
  const auto nb = neighbor_set(to, token, k);
  std::size_t common = 0;
  for (TokenId t : na) common += nb.count(t);
  const std::size_t uni = na.size() + nb.size() - common;
  w.churn = 1.0 - static_cast<double>(common) / static_cast<double>(uni);
  return w;
}

HeatmapMode heatmap_mode_from_string(const std::string& s) {
  if (s == "displacement") return HeatmapMode::Displacement;
  if (s == "churn") return HeatmapMode::Churn;
  throw ValidationError("unknown heatmap mode '" + s + "'");
}

std::vector<double> line_heatmap(const EmbeddingState& from, const EmbeddingState& to, const Line& line,
                                 HeatmapMode mode, std::size_t k) {
  std::map<TokenId, double> per_token;
  std::vector<double> out;
  out.reserve(line.tokens.size());
  for (TokenId t : line.tokens) {
    auto it = per_token.find(t);
    if (it == per_token.end()) {
      const WordChange w = word_change(from, to, t, k);
      const double v = mode == HeatmapMode::Displacement ? w.displacement / 2.0 : w.churn;
      it = per_token.emplace(t, std::clamp(v, 0.0, 1.0)).first;
    }
    out.push_back(it->second);
  }
  return out;
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "X" || s == "x") return Verdict::X;
  if (s == "Y" || s == "y") return Verdict::Y;
  throw ValidationError("verdict must be X or Y");
}

bool keeps_order(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return (gen() >> 63) == 0;
}

BlindBundle make_blind_bundle(const AlignmentSet& before, const AlignmentSet& after, std::uint64_t seed) {
  if (before.edition_a != after.edition_a || before.edition_b != after.edition_b)
    throw ValidationError("blind bundle needs two alignment sets of the same edition pair");
  BlindBundle b;
  b.seed = seed;
  if (keeps_order(seed)) {
    b.presented = {before, after};
    b.truth = {"before", "after"};
  } else {
    b.presented = {after, before};
    b.truth = {"after", "before"};
  }
  std::ostringstream id_src;
  id_src << seed << '\n' << alignment_set_to_jsonl(before) << alignment_set_to_jsonl(after);
  b.bundle_id = sha256_hex(id_src.str()).substr(0, 16);
  return b;
}

BundleStore::BundleStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path BundleStore::payload_path(const std::string& bundle_id) const {
  return root_ / ("bundle_" + bundle_id + ".json");
}

std::filesystem::path BundleStore::key_path(const std::string& bundle_id) const {
  return root_ / "sealed" / ("bundle_" + bundle_id + ".key");
}

std::filesystem::path BundleStore::save(const BlindBundle& bundle) const {
  std::filesystem::create_directories(root_ / "sealed");
  write_file_atomic(key_path(bundle.bundle_id), bundle_key_json(bundle).dump(2) + "\n");
  const auto path = payload_path(bundle.bundle_id);
  write_file_atomic(path, bundle_payload_json(bundle).dump(2) + "\n");
  return path;
}

std::vector<Evaluation> BundleStore::evaluations() const {
  std::vector<Evaluation> out;
  const auto path = root_ / "evaluations.jsonl";
  if (!std::filesystem::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    out.push_back({j.at("bundle_id"), j.at("verdict"), j.at("preferred"), j.at("timestamp")});
  }
  return out;
}

Evaluation BundleStore::unseal(const std::string& bundle_id, Verdict verdict) const {
  const auto key = key_path(bundle_id);
  if (!std::filesystem::exists(key)) throw NotFoundError("unknown bundle '" + bundle_id + "'");
  const json k = json::parse(read_file(key));

  Evaluation e;
  e.bundle_id = bundle_id;
  e.verdict = verdict == Verdict::X ? "X" : "Y";
  e.preferred = k.at(e.verdict).get<std::string>();

  // Timestamps in the log are strictly increasing.
  std::int64_t now = unix_micros_now();
  const auto path = root_ / "evaluations.jsonl";
  if (std::filesystem::exists(path)) {
    std::istringstream in(read_file(path));
    std::string line, last;
    while (std::getline(in, line))
      if (!line.empty()) last = line;
    if (!last.empty()) now = std::max(now, json::parse(last).at("unix_micros").get<std::int64_t>() + 1);
  }
  e.timestamp = iso_utc(now);
  json rec = to_json(e);
  rec["unix_micros"] = now;
  append_line_durable(path, rec.dump());
  return e;
}

}  // namespace collatio
